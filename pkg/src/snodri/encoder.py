"""Fully connected autoencoder ``d -> 15 -> 1 -> 15 -> d``.

Hidden layers and the single-unit bottleneck use tanh; the output layer is
linear because standardized targets are unbounded. Training is full batch:
every epoch is one Adam step on the mean Huber reconstruction loss, with
gradients from hand-written backpropagation.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .errors import DimensionMismatch, InsufficientData, NonFiniteLoss
from .timeseries import DesignMatrix, MonthlySeries, ZScoreParams

MODEL_FORMAT = "snodri-encoder"
MODEL_VERSION = 1
MIN_ROWS = 24


@dataclass(frozen=True)
class NetworkSpec:
    input_dim: int
    hidden_width: int = 15
    bottleneck_width: int = 1
    activation: str = "tanh"
    output_activation: str = "identity"

    def __post_init__(self):
        if self.input_dim < 1:
            raise ValueError("input_dim must be >= 1")

    @property
    def layer_sizes(self) -> list[int]:
        return [self.input_dim, self.hidden_width, self.bottleneck_width, self.hidden_width, self.input_dim]


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 3000
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    huber_delta: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if not self.huber_delta > 0:
            raise ValueError("huber_delta must be positive")


class NetworkWeights:
    """Per-layer ``W`` (out x in) and ``b`` (out) arrays."""

    def __init__(self, Ws: Sequence[np.ndarray], bs: Sequence[np.ndarray]):
        self.Ws = [np.array(W, dtype=float) for W in Ws]
        self.bs = [np.array(b, dtype=float) for b in bs]
        if len(self.Ws) != 4 or len(self.bs) != 4:
            raise DimensionMismatch("expected four layers")
        for W, b in zip(self.Ws, self.bs):
            if W.ndim != 2 or b.shape != (W.shape[0],):
                raise DimensionMismatch("inconsistent layer shapes")
        for a, b in zip(self.Ws[:-1], self.Ws[1:]):
            if b.shape[1] != a.shape[0]:
                raise DimensionMismatch("consecutive layers do not connect")

    @property
    def input_dim(self) -> int:
        return self.Ws[0].shape[1]

    @classmethod
    def zeros(cls, spec: NetworkSpec) -> "NetworkWeights":
        sizes = spec.layer_sizes
        return cls([np.zeros((o, i)) for i, o in zip(sizes[:-1], sizes[1:])], [np.zeros(o) for o in sizes[1:]])

    @classmethod
    def init_uniform(cls, spec: NetworkSpec, rng: np.random.Generator) -> "NetworkWeights":
        """Weights and biases ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in))."""
        sizes = spec.layer_sizes
        Ws, bs = [], []
        for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
            bound = 1.0 / np.sqrt(fan_in)
            Ws.append(rng.uniform(-bound, bound, size=(fan_out, fan_in)))
            bs.append(rng.uniform(-bound, bound, size=fan_out))
        return cls(Ws, bs)

    def params(self) -> list[np.ndarray]:
        return [p for pair in zip(self.Ws, self.bs) for p in pair]

    def copy(self) -> "NetworkWeights":
        return NetworkWeights([W.copy() for W in self.Ws], [b.copy() for b in self.bs])

    def all_finite(self) -> bool:
        return all(np.all(np.isfinite(p)) for p in self.params())

    def equals(self, other: "NetworkWeights") -> bool:
        return all(np.array_equal(a, b) for a, b in zip(self.params(), other.params()))


def _check_batch(w: NetworkWeights, batch) -> np.ndarray:
    X = np.asarray(batch, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2 or X.shape[1] != w.input_dim:
        raise DimensionMismatch(f"batch width {X.shape[-1]} does not match network input {w.input_dim}")
    return X


def _forward_all(w: NetworkWeights, X: np.ndarray):
    W1, W2, W3, W4 = w.Ws
    b1, b2, b3, b4 = w.bs
    h1 = np.tanh(X @ W1.T + b1)
    z = np.tanh(h1 @ W2.T + b2)
    h3 = np.tanh(z @ W3.T + b3)
    out = h3 @ W4.T + b4
    return h1, z, h3, out


def forward(w: NetworkWeights, batch) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(reconstruction, bottleneck)`` for a rows x d batch."""
    X = _check_batch(w, batch)
    _, z, _, out = _forward_all(w, X)
    return out, z


def huber_loss(residual, delta: float = 1.0):
    """Huber loss; the mean over all entries when ``residual`` is an array."""
    r = np.abs(np.asarray(residual, dtype=float))
    per = np.where(r <= delta, 0.5 * r * r, delta * (r - 0.5 * delta))
    return float(per) if per.ndim == 0 else float(np.mean(per))


def loss_and_grads(w: NetworkWeights, X: np.ndarray, delta: float = 1.0):
    """Mean Huber reconstruction loss and its gradient for every parameter.

    Gradients come back in the order of :meth:`NetworkWeights.params`.
    """
    W1, W2, W3, W4 = w.Ws
    h1, z, h3, out = _forward_all(w, X)
    r = out - X
    loss = huber_loss(r, delta)

    g_out = np.clip(r, -delta, delta) / r.size
    gW4 = g_out.T @ h3
    gb4 = g_out.sum(axis=0)
    g_a3 = (g_out @ W4) * (1.0 - h3 * h3)
    gW3 = g_a3.T @ z
    gb3 = g_a3.sum(axis=0)
    g_a2 = (g_a3 @ W3) * (1.0 - z * z)
    gW2 = g_a2.T @ h1
    gb2 = g_a2.sum(axis=0)
    g_a1 = (g_a2 @ W2) * (1.0 - h1 * h1)
    gW1 = g_a1.T @ X
    gb1 = g_a1.sum(axis=0)
    return loss, [gW1, gb1, gW2, gb2, gW3, gb3, gW4, gb4]


@dataclass
class TrainedEncoder:
    spec: NetworkSpec
    weights: NetworkWeights
    column_ids: tuple[str, ...]
    column_params: tuple[ZScoreParams, ...]
    config: TrainConfig
    loss_history: np.ndarray
    metadata: dict = field(default_factory=dict)

    @property
    def seed(self) -> int:
        return self.config.seed

    def to_dict(self) -> dict:
        return {
            "format": MODEL_FORMAT,
            "version": MODEL_VERSION,
            "spec": asdict(self.spec),
            "columns": [
                {"id": c, "mean": p.mean, "std": p.std} for c, p in zip(self.column_ids, self.column_params)
            ],
            "config": asdict(self.config),
            "seed": self.config.seed,
            "layers": [
                {"shape": list(W.shape), "weights": W.ravel(order="C").tolist(), "bias": b.tolist()}
                for W, b in zip(self.weights.Ws, self.weights.bs)
            ],
            "loss_history": self.loss_history.tolist(),
            "metadata": self.metadata,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "TrainedEncoder":
        if doc.get("format") != MODEL_FORMAT:
            raise ValueError("not an encoder model document")
        if doc.get("version") != MODEL_VERSION:
            raise ValueError(f"unsupported model version {doc.get('version')}")
        Ws = [np.array(l["weights"], dtype=float).reshape(l["shape"]) for l in doc["layers"]]
        bs = [np.array(l["bias"], dtype=float) for l in doc["layers"]]
        return cls(
            spec=NetworkSpec(**doc["spec"]),
            weights=NetworkWeights(Ws, bs),
            column_ids=tuple(c["id"] for c in doc["columns"]),
            column_params=tuple(ZScoreParams(c["mean"], c["std"]) for c in doc["columns"]),
            config=TrainConfig(**doc["config"]),
            loss_history=np.array(doc["loss_history"], dtype=float),
            metadata=doc.get("metadata", {}),
        )

    def dumps(self) -> str:
        # json writes floats with repr(), which round-trips float64 exactly
        return json.dumps(self.to_dict(), indent=1, sort_keys=True) + "\n"

    @classmethod
    def loads(cls, text: str) -> "TrainedEncoder":
        return cls.from_dict(json.loads(text))

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(self.dumps())

    @classmethod
    def load(cls, path) -> "TrainedEncoder":
        with open(path, encoding="utf-8") as fh:
            return cls.loads(fh.read())


def train_autoencoder(data: DesignMatrix, cfg: TrainConfig = TrainConfig()) -> TrainedEncoder:
    X = np.ascontiguousarray(data.values, dtype=float)
    if X.shape[0] < MIN_ROWS:
        raise InsufficientData(f"need at least {MIN_ROWS} rows to train, got {X.shape[0]}")
    spec = NetworkSpec(input_dim=X.shape[1])
    rng = np.random.default_rng(cfg.seed)
    w = NetworkWeights.init_uniform(spec, rng)
    params = w.params()
    m = [np.zeros_like(p) for p in params]
    v = [np.zeros_like(p) for p in params]
    history = np.empty(cfg.epochs)
    b1, b2 = cfg.beta1, cfg.beta2

    for epoch in range(cfg.epochs):
        loss, grads = loss_and_grads(w, X, cfg.huber_delta)
        if not np.isfinite(loss):
            raise NonFiniteLoss(f"loss became {loss} at epoch {epoch}")
        history[epoch] = loss
        t = epoch + 1
        corr1 = 1.0 - b1**t
        corr2 = 1.0 - b2**t
        for p, g, mi, vi in zip(params, grads, m, v):
            mi *= b1
            mi += (1.0 - b1) * g
            vi *= b2
            vi += (1.0 - b2) * (g * g)
            p -= cfg.learning_rate * (mi / corr1) / (np.sqrt(vi / corr2) + cfg.eps)

    if not w.all_finite():
        raise NonFiniteLoss("training produced non-finite weights")
    return TrainedEncoder(
        spec=spec,
        weights=w,
        column_ids=data.column_ids,
        column_params=data.params,
        config=cfg,
        loss_history=history,
    )


def encode(model: TrainedEncoder, data) -> MonthlySeries | np.ndarray:
    """Bottleneck value per row, using only the encoder half.

    Given a :class:`DesignMatrix` the result is a monthly series named
    ``BOTTLENECK``; given a plain array it is a 1-D array.
    """
    if isinstance(data, DesignMatrix):
        if data.column_ids != model.column_ids:
            raise DimensionMismatch(f"columns {data.column_ids} do not match model columns {model.column_ids}")
        X = data.values
    else:
        X = np.asarray(data, dtype=float)
    X = _check_batch(model.weights, X)
    if X.shape[0] >= 12:
        mu = X.mean(axis=0)
        sd = X.std(axis=0)
        if np.any(np.abs(mu) > 3.0) or np.any((sd < 0.2) | (sd > 5.0)):
            warnings.warn("input columns do not look standardized with the model's parameters", stacklevel=2)
    W1, W2 = model.weights.Ws[:2]
    b1, b2 = model.weights.bs[:2]
    z = np.tanh(np.tanh(X @ W1.T + b1) @ W2.T + b2)[:, 0]
    if isinstance(data, DesignMatrix):
        return MonthlySeries("BOTTLENECK", "1", data.start, z)
    return z
