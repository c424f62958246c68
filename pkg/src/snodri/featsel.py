"""Random-forest regression, impurity importances and union-of-top-k selection.

Splits maximise the reduction in squared error over midpoints between sorted
distinct values of ``features_per_split`` randomly drawn candidate features.
Importance of a feature is the total squared-error decrease of the splits
using it, divided by the tree's root sample count, averaged over trees and
normalised to sum to one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import _backend
from .errors import DimensionMismatch, InsufficientData


@dataclass(frozen=True)
class ForestHyperparams:
    n_trees: int = 200
    max_depth: int = 12
    min_samples_leaf: int = 5
    features_per_split: int | None = None  # None -> ceil(d / 3)
    bootstrap: bool = True
    seed: int = 0

    def __post_init__(self):
        for name in ("n_trees", "max_depth", "min_samples_leaf"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.features_per_split is not None and self.features_per_split < 1:
            raise ValueError("features_per_split must be positive")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit in 64 unsigned bits")

    def resolved_features(self, d: int) -> int:
        m = self.features_per_split if self.features_per_split is not None else math.ceil(d / 3)
        if m > d:
            raise ValueError(f"features_per_split={m} exceeds the number of features {d}")
        return m


@dataclass(frozen=True)
class Tree:
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    n_node_samples: np.ndarray
    impurity_decrease: np.ndarray

    @property
    def n_nodes(self) -> int:
        return self.feature.shape[0]

    def is_leaf_only(self) -> bool:
        return self.n_nodes == 1

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = np.ascontiguousarray(X, dtype=np.float64)
        return _backend.tree_kernels.predict_tree(
            X, self.feature, self.threshold, self.left, self.right, self.value
        )

    def same_structure(self, other: "Tree") -> bool:
        return all(
            np.array_equal(getattr(self, k), getattr(other, k))
            for k in ("feature", "threshold", "left", "right", "value")
        )


@dataclass(frozen=True)
class Forest:
    trees: tuple[Tree, ...]
    hyperparams: ForestHyperparams
    feature_ids: tuple[str, ...]
    backend: str = field(default="", compare=False)

    def predict(self, X) -> np.ndarray:
        X = np.ascontiguousarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != len(self.feature_ids):
            raise DimensionMismatch(f"expected {len(self.feature_ids)} columns")
        acc = np.zeros(X.shape[0])
        for t in self.trees:
            acc += t.predict(X)
        return acc / len(self.trees)


@dataclass(frozen=True)
class ImportanceVector:
    feature_ids: tuple[str, ...]
    importances: np.ndarray

    def __post_init__(self):
        imp = np.array(self.importances, dtype=float)
        if imp.shape != (len(self.feature_ids),):
            raise DimensionMismatch("one importance per feature id required")
        if np.any(imp < 0) or not np.all(np.isfinite(imp)):
            raise ValueError("importances must be finite and nonnegative")
        imp.setflags(write=False)
        object.__setattr__(self, "feature_ids", tuple(self.feature_ids))
        object.__setattr__(self, "importances", imp)

    def as_dict(self) -> dict[str, float]:
        return dict(zip(self.feature_ids, self.importances.tolist()))

    def ranking(self) -> list[str]:
        """Feature ids by descending importance; ties by feature id."""
        return sorted(self.feature_ids, key=lambda f: (-self.as_dict()[f], f))


def tree_seeds(seed: int, n_trees: int) -> list[tuple[np.random.Generator, int]]:
    out = []
    for i in range(n_trees):
        rng = np.random.default_rng(np.random.SeedSequence([seed, i]))
        out.append((rng, int(rng.integers(0, 2**63))))
    return out


def train_forest(X, y, hp: ForestHyperparams = ForestHyperparams(), feature_ids: Sequence[str] | None = None,
                 kernels=None) -> Forest:
    """Grow ``hp.n_trees`` regression trees.

    ``kernels`` selects a tree-kernel module explicitly (used by tests and the
    benchmark); by default the backend chosen at import is used.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64).ravel()
    if X.ndim != 2:
        raise DimensionMismatch("X must be two-dimensional")
    n, d = X.shape
    if y.shape[0] != n:
        raise DimensionMismatch(f"X has {n} rows but y has {y.shape[0]} values")
    if n < 2 * hp.min_samples_leaf:
        raise InsufficientData(f"need at least {2 * hp.min_samples_leaf} rows, got {n}")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise InsufficientData("training data contains missing or non-finite values")
    if feature_ids is None:
        feature_ids = [f"x{i}" for i in range(d)]
    if len(feature_ids) != d:
        raise DimensionMismatch("one feature id per column required")
    m = hp.resolved_features(d)
    kern = kernels if kernels is not None else _backend.tree_kernels

    trees = []
    for rng, feature_seed in tree_seeds(hp.seed, hp.n_trees):
        samples = rng.integers(0, n, size=n) if hp.bootstrap else np.arange(n)
        arrays = kern.build_tree(X, y, samples, hp.max_depth, hp.min_samples_leaf, m, feature_seed)
        trees.append(Tree(*(np.asarray(a) for a in arrays)))
    backend = "cython" if kern.__name__.endswith("_tree") else "python"
    return Forest(tuple(trees), hp, tuple(feature_ids), backend)


def forest_importance(forest: Forest) -> ImportanceVector:
    d = len(forest.feature_ids)
    acc = np.zeros(d)
    for t in forest.trees:
        per_tree = np.zeros(d)
        internal = t.feature >= 0
        np.add.at(per_tree, t.feature[internal], t.impurity_decrease[internal])
        acc += per_tree / t.n_node_samples[0]
    acc /= len(forest.trees)
    total = acc.sum()
    if total > 0:
        acc = acc / total
    return ImportanceVector(forest.feature_ids, acc)


def average_importance(per_basin: Sequence[ImportanceVector]) -> ImportanceVector:
    if not per_basin:
        raise ValueError("no importance vectors to average")
    ids = per_basin[0].feature_ids
    for v in per_basin[1:]:
        if v.feature_ids != ids:
            raise DimensionMismatch("importance vectors list different features")
    mean = np.mean([v.importances for v in per_basin], axis=0)
    total = mean.sum()
    return ImportanceVector(ids, mean / total if total > 0 else mean)


def top_k(imp: ImportanceVector, k: int) -> list[str]:
    return imp.ranking()[:k]


def select_features(imp_swe: ImportanceVector, imp_q: ImportanceVector, k: int = 3) -> list[str]:
    """Union of the top-``k`` features for both targets.

    Ordered by the larger of a feature's two importances, descending, with
    ties broken by feature id.
    """
    if imp_swe.feature_ids != imp_q.feature_ids:
        raise DimensionMismatch("importance vectors list different features")
    d = len(imp_swe.feature_ids)
    if not 1 <= k <= d:
        raise ValueError(f"k must be in 1..{d}, got {k}")
    chosen = set(top_k(imp_swe, k)) | set(top_k(imp_q, k))
    a, b = imp_swe.as_dict(), imp_q.as_dict()
    return sorted(chosen, key=lambda f: (-max(a[f], b[f]), f))
