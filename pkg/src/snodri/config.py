"""Pipeline configuration: a TOML document plus ``key=value`` overrides.

Every run is stamped with a hash of the resolved configuration (output
directory excluded) so artifacts of different experiments never collide.
"""

from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .encoder import TrainConfig
from .errors import ConfigError
from .featsel import ForestHyperparams
from .snowpart import SigmoidParams
from .timeseries import MonthStamp

DEFAULTS: dict[str, Any] = {
    "seed": 0,
    "output_dir": "snodri-out",
    "inputs": {
        "basins": [],
        "index_basin": "",
        "missing_policy": "reject",
        "aggregation": {},
    },
    "variables": {
        "candidates": ["APCP", "TMP", "DSWRF", "SPFH", "UGRD", "VGRD"],
        "precipitation": "APCP",
        "temperature": "TMP",
        "humidity": "SPFH",
        "pressure": "PRES",
        "swe": "SWE",
        "discharge": "Q",
    },
    "split": {"train_start": "", "train_end": ""},
    "spi": {"timescales": [3, 4, 6, 12, 60]},
    "snowfrac": {"midpoint_tw": 273.65, "steepness": 1.2},
    "features": {
        "top_k": 3,
        "n_trees": 200,
        "max_depth": 12,
        "min_samples_leaf": 5,
        "features_per_split": 0,
        "bootstrap": True,
    },
    "encoder": {
        "epochs": 3000,
        "learning_rate": 1e-3,
        "beta1": 0.9,
        "beta2": 0.999,
        "eps": 1e-8,
        "huber_delta": 1.0,
    },
    "weights": {"bins": 0},
    "index": {"standardization": "global"},
    "evaluate": {"event_windows": []},
}


def _merge(base: dict, over: dict, path: str = "") -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        where = f"{path}{k}"
        if k not in base:
            raise ConfigError(f"unknown config key {where!r}")
        if isinstance(base[k], dict) and k != "aggregation":
            if not isinstance(v, dict):
                raise ConfigError(f"config key {where!r} must be a table")
            out[k] = _merge(base[k], v, where + ".")
        else:
            out[k] = copy.deepcopy(v)
    return out


def _parse_value(text: str):
    try:
        return tomllib.loads(f"v = {text}")["v"]
    except tomllib.TOMLDecodeError:
        return text


def apply_overrides(doc: dict, overrides: Sequence[str]) -> dict:
    """Apply ``a.b.c=value`` strings; values are parsed as TOML literals when possible."""
    doc = copy.deepcopy(doc)
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not key=value")
        key, text = item.split("=", 1)
        parts = key.strip().split(".")
        node = doc
        for p in parts[:-1]:
            node = node.setdefault(p, {})
            if not isinstance(node, dict):
                raise ConfigError(f"override {key!r} descends into a non-table")
        node[parts[-1]] = _parse_value(text.strip())
    return doc


@dataclass(frozen=True)
class PipelineConfig:
    doc: dict
    base_dir: Path = field(default=Path("."))

    # -- construction -------------------------------------------------
    @classmethod
    def from_dict(cls, doc: dict, base_dir=".") -> "PipelineConfig":
        cfg = cls(_merge(DEFAULTS, doc), Path(base_dir))
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path, overrides: Sequence[str] = ()) -> "PipelineConfig":
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        try:
            doc = tomllib.loads(path.read_text(encoding="utf-8"))
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from None
        return cls.from_dict(apply_overrides(doc, overrides), path.parent)

    def validate(self) -> None:
        d = self.doc
        if not d["inputs"]["basins"]:
            raise ConfigError("inputs.basins lists no basin files")
        if d["inputs"]["missing_policy"] not in ("reject", "skip"):
            raise ConfigError("inputs.missing_policy must be 'reject' or 'skip'")
        for var, method in d["inputs"]["aggregation"].items():
            if method not in ("sum", "mean"):
                raise ConfigError(f"inputs.aggregation.{var} must be 'sum' or 'mean'")
        if not d["split"]["train_end"]:
            raise ConfigError("split.train_end is required (the training period is never defaulted)")
        self.train_window  # parse check
        ts = d["spi"]["timescales"]
        if not ts or any((not isinstance(k, int)) or k < 1 for k in ts):
            raise ConfigError("spi.timescales must be positive integers")
        if d["index"]["standardization"] not in ("global", "climatological"):
            raise ConfigError("index.standardization must be 'global' or 'climatological'")
        try:
            self.sigmoid, self.train_config, self.forest_hyperparams(0)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from None
        self.event_windows

    # -- typed views ---------------------------------------------------
    @property
    def seed(self) -> int:
        return int(self.doc["seed"])

    @property
    def output_dir(self) -> Path:
        return self.resolve(self.doc["output_dir"])

    def resolve(self, p) -> Path:
        p = Path(p)
        return p if p.is_absolute() else self.base_dir / p

    @property
    def basin_paths(self) -> list[Path]:
        return [self.resolve(p) for p in self.doc["inputs"]["basins"]]

    @property
    def index_basin(self) -> str:
        return self.doc["inputs"]["index_basin"] or self.basin_paths[0].stem

    @property
    def variables(self) -> dict:
        return self.doc["variables"]

    @property
    def train_window(self) -> tuple[MonthStamp | None, MonthStamp]:
        s = self.doc["split"]
        try:
            start = MonthStamp.parse(s["train_start"]) if s["train_start"] else None
            end = MonthStamp.parse(s["train_end"])
        except ValueError as exc:
            raise ConfigError(f"bad split stamp: {exc}") from None
        if start is not None and end < start:
            raise ConfigError("split.train_end precedes split.train_start")
        return start, end

    @property
    def sigmoid(self) -> SigmoidParams:
        s = self.doc["snowfrac"]
        return SigmoidParams(float(s["midpoint_tw"]), float(s["steepness"]))

    @property
    def train_config(self) -> TrainConfig:
        return TrainConfig(**{k: v for k, v in self.doc["encoder"].items()}, seed=stage_seed(self.seed, "train"))

    def forest_hyperparams(self, seed: int) -> ForestHyperparams:
        f = self.doc["features"]
        return ForestHyperparams(
            n_trees=int(f["n_trees"]),
            max_depth=int(f["max_depth"]),
            min_samples_leaf=int(f["min_samples_leaf"]),
            features_per_split=int(f["features_per_split"]) or None,
            bootstrap=bool(f["bootstrap"]),
            seed=seed,
        )

    @property
    def event_windows(self) -> list[tuple[MonthStamp, MonthStamp]]:
        out = []
        for w in self.doc["evaluate"]["event_windows"]:
            try:
                a, b = (MonthStamp.parse(x) for x in w)
            except (TypeError, ValueError):
                raise ConfigError(f"bad event window {w!r}; expected [\"YYYY-MM\", \"YYYY-MM\"]") from None
            out.append((a, b))
        return out

    # -- identity ------------------------------------------------------
    def canonical(self) -> dict:
        doc = copy.deepcopy(self.doc)
        doc.pop("output_dir", None)
        return doc

    @property
    def hash(self) -> str:
        text = json.dumps(self.canonical(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()[:12]


def stage_seed(global_seed: int, stage: str) -> int:
    """Seed for one stage, derived from the global seed and the stage name."""
    digest = hashlib.sha256(f"{int(global_seed)}:{stage}".encode()).digest()
    return int.from_bytes(digest[:8], "little") >> 1


def render_toml(doc: dict) -> str:
    """Minimal TOML writer for configuration documents (tables, scalars, lists)."""
    lines: list[str] = []

    def scalar(v) -> str:
        if isinstance(v, bool):
            return "true" if v else "false"
        if isinstance(v, (int, float)):
            return repr(v)
        if isinstance(v, str):
            return json.dumps(v)
        if isinstance(v, (list, tuple)):
            return "[" + ", ".join(scalar(x) for x in v) + "]"
        raise TypeError(f"cannot render {type(v).__name__}")

    def table(prefix: str, d: dict):
        plain = {k: v for k, v in d.items() if not isinstance(v, dict)}
        nested = {k: v for k, v in d.items() if isinstance(v, dict)}
        if prefix:
            lines.append(f"[{prefix}]")
        for k, v in plain.items():
            lines.append(f"{k} = {scalar(v)}")
        lines.append("")
        for k, v in nested.items():
            table(f"{prefix}.{k}" if prefix else k, v)

    table("", doc)
    return "\n".join(lines).rstrip() + "\n"
