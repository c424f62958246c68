"""End-to-end index computation.

Stages, in order: ingest -> derive (SPI, snow fraction) -> select-features ->
train -> weights -> index -> evaluate -> plot. Everything that is *fitted*
(SPI distributions, z-score and climatology parameters, forests, the
autoencoder, MI weights, the final index z-score) only sees months inside
the training window; evaluation months are transformed with stored
parameters.
"""

from __future__ import annotations

import contextlib
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import io
from .config import PipelineConfig, stage_seed
from .encoder import TrainedEncoder, encode, train_autoencoder
from .errors import IncompleteMonth, MissingVariable, SnodriError, StageError
from .featsel import ImportanceVector, average_importance, forest_importance, select_features, train_forest
from .index import EvaluationReport, IndexSeries, compose_index, evaluate_index
from .mi import WeightVector, compute_weights
from .plotting import plot_emit
from .snowpart import monthly_snow_fraction, wet_bulb_temperature
from .spi import compute_spi
from .timeseries import (
    BasinTable,
    ClimatologyParams,
    DatedValues,
    DesignMatrix,
    MonthStamp,
    ZScoreParams,
    align,
    climatological_zscore,
    monthly_climatology_anomaly,
)

_logger = logging.getLogger(__name__)

SNOWFRAC_ID = "SNOWFRAC"


@contextlib.contextmanager
def stage(name: str, basin: str | None = None, variable: str | None = None):
    try:
        yield
    except StageError:
        raise
    except (SnodriError, ValueError, ArithmeticError) as exc:
        raise StageError(name, exc, basin, variable) from exc


def spi_ids(cfg: PipelineConfig) -> list[str]:
    return [f"SPI{k}" for k in cfg.doc["spi"]["timescales"]]


# -- ingest / derive ---------------------------------------------------------

def ingest(cfg: PipelineConfig) -> dict[str, tuple[io.NativeTable, BasinTable]]:
    out = {}
    for path in cfg.basin_paths:
        with stage("ingest", path.stem):
            native = io.read_native(path)
            table = io.to_basin_table(native, cfg.doc["inputs"]["aggregation"], cfg.doc["inputs"]["missing_policy"])
        if native.basin_id in out:
            raise StageError("ingest", ValueError(f"duplicate basin id {native.basin_id!r}"), native.basin_id)
        out[native.basin_id] = (native, table)
    return out


def derive_snow_fraction(cfg: PipelineConfig, native: io.NativeTable):
    v = cfg.variables
    names = [v["precipitation"], v["temperature"], v["humidity"], v["pressure"]]
    for n in names:
        if n not in native.columns:
            raise MissingVariable(f"snow fraction needs column {n!r}")
    p, t, q, pres = (native.columns[n] for n in names)
    ok = np.isfinite(p) & np.isfinite(t) & np.isfinite(q) & np.isfinite(pres)
    if not ok.all() and cfg.doc["inputs"]["missing_policy"] == "reject":
        first = native.dates[int(np.argmin(ok))]
        raise IncompleteMonth(f"missing forcing value at {first}")
    dates = tuple(d for d, keep in zip(native.dates, ok) if keep)
    tw = wet_bulb_temperature(t[ok], q[ok], pres[ok])
    series, flagged = monthly_snow_fraction(DatedValues(dates, p[ok]), DatedValues(dates, tw), cfg.sigmoid, SNOWFRAC_ID)
    if flagged:
        _logger.info("%d month(s) without precipitation use the unweighted snow fraction", len(flagged))
    return series


def derive(cfg: PipelineConfig, native: io.NativeTable, table: BasinTable) -> BasinTable:
    """Add SPI-k and snow-fraction series; distributions are fitted on the training window."""
    precip_id = cfg.variables["precipitation"]
    extra = []
    for k in cfg.doc["spi"]["timescales"]:
        with stage("spi", table.basin_id, precip_id):
            extra.append(compute_spi(table[precip_id], k, fit_window=cfg.train_window).as_monthly())
    with stage("snowfrac", table.basin_id, SNOWFRAC_ID):
        extra.append(derive_snow_fraction(cfg, native))
    return table.with_series(*extra)


def prepare(cfg: PipelineConfig) -> dict[str, BasinTable]:
    return {b: derive(cfg, native, table) for b, (native, table) in ingest(cfg).items()}


# -- feature selection -------------------------------------------------------

@dataclass(frozen=True)
class FeatureReport:
    per_basin: dict
    swe: ImportanceVector
    discharge: ImportanceVector
    top_k: int
    selected: list[str]

    def render(self, header: str = "") -> str:
        lines = [header] if header else []
        lines.append(f"top_k = {self.top_k}")
        for title, imp in (("SWE", self.swe), ("discharge", self.discharge)):
            lines.append(f"\n[{title}] mean importance over {len(self.per_basin)} basin(s)")
            for rank, f in enumerate(imp.ranking(), start=1):
                lines.append(f"{rank:3d}  {f:<10s} {imp.as_dict()[f]:.6f}")
        lines.append("\n[selected]")
        lines.append(", ".join(self.selected))
        return "\n".join(lines) + "\n"


def parse_feature_report(path) -> list[str]:
    text = Path(path).read_text(encoding="utf-8").splitlines()
    try:
        i = text.index("[selected]")
    except ValueError:
        raise StageError("select-features", ValueError(f"{path}: no [selected] section")) from None
    return [s.strip() for s in text[i + 1].split(",") if s.strip()]


def run_feature_selection(cfg: PipelineConfig, tables: dict[str, BasinTable]) -> FeatureReport:
    v = cfg.variables
    cands = list(v["candidates"])
    per_basin = {}
    for basin, table in tables.items():
        imps = []
        for target in (v["swe"], v["discharge"]):
            with stage("select-features", basin, target):
                dm = align(table, cands + [target], window=cfg.train_window, trim_edges=True)
                hp = cfg.forest_hyperparams(stage_seed(cfg.seed, f"select-features:{basin}:{target}"))
                forest = train_forest(dm.values[:, :-1], dm.values[:, -1], hp, cands)
                imps.append(forest_importance(forest))
        per_basin[basin] = tuple(imps)
    with stage("select-features"):
        swe = average_importance([p[0] for p in per_basin.values()])
        dis = average_importance([p[1] for p in per_basin.values()])
        k = int(cfg.doc["features"]["top_k"])
        selected = select_features(swe, dis, k)
    return FeatureReport(per_basin, swe, dis, k, selected)


# -- design matrices -----------------------------------------------------------

def design_columns(cfg: PipelineConfig, selected: list[str]) -> list[str]:
    cols = list(selected)
    for c in spi_ids(cfg) + [SNOWFRAC_ID]:
        if c not in cols:
            cols.append(c)
    return cols


def _climatology_to_doc(p: ClimatologyParams) -> list[list[float]]:
    return [[z.mean, z.std] for z in p.monthly]


def _climatology_from_doc(rows) -> ClimatologyParams:
    return ClimatologyParams(tuple(ZScoreParams(m, s) for m, s in rows))


def preprocess(table: BasinTable, columns: list[str], mode: str, window, stored: dict | None = None):
    """Optionally replace columns by their calendar-month z-scores.

    Returns the transformed table and the climatology parameters used.
    """
    if mode != "climatological":
        return table, {}
    used = {}
    out = []
    for c in columns:
        z, p = climatological_zscore(table[c], (stored or {}).get(c), window)
        used[c] = p
        out.append(z)
    return table.with_series(*out), used


def training_design(cfg: PipelineConfig, table: BasinTable, columns: list[str]):
    mode = cfg.doc["index"]["standardization"]
    with stage("train", table.basin_id):
        prepped, clim = preprocess(table, columns, mode, cfg.train_window)
        dm = align(prepped, columns, window=cfg.train_window, trim_edges=True)
    return dm, clim


def model_design(model: TrainedEncoder, table: BasinTable, window) -> DesignMatrix:
    """Design matrix for any window, transformed with the model's stored parameters."""
    meta = model.metadata
    cols = list(model.column_ids)
    stored = {c: _climatology_from_doc(r) for c, r in meta.get("climatology", {}).items()}
    prepped, _ = preprocess(table, cols, meta.get("standardization", "global"), None, stored)
    return align(prepped, cols, standardize_with=model.column_params, window=window, trim_edges=True)


def train_model(cfg: PipelineConfig, table: BasinTable, selected: list[str]) -> TrainedEncoder:
    columns = design_columns(cfg, selected)
    dm, clim = training_design(cfg, table, columns)
    with stage("train", table.basin_id):
        model = train_autoencoder(dm, cfg.train_config)
    model.metadata.update(
        {
            "config_hash": cfg.hash,
            "global_seed": cfg.seed,
            "basin": table.basin_id,
            "selected_features": list(selected),
            "standardization": cfg.doc["index"]["standardization"],
            "climatology": {c: _climatology_to_doc(p) for c, p in clim.items()},
            "train_rows": [str(dm.start), str(dm.end)],
            "spi_fit_window": [str(s) if s else "" for s in cfg.train_window],
        }
    )
    return model


def train_window_of(model: TrainedEncoder) -> tuple[MonthStamp, MonthStamp]:
    a, b = model.metadata["train_rows"]
    return MonthStamp.parse(a), MonthStamp.parse(b)


# -- weights / index / evaluation ----------------------------------------------

def run_weights(cfg: PipelineConfig, model: TrainedEncoder, table: BasinTable) -> WeightVector:
    with stage("weights", table.basin_id):
        dm = model_design(model, table, train_window_of(model))
        bottleneck = encode(model, dm)
        return compute_weights(dm, bottleneck, int(cfg.doc["weights"]["bins"]) or None)


def run_index(model: TrainedEncoder, weights: WeightVector, table: BasinTable) -> IndexSeries:
    lo, hi = train_window_of(model)
    with stage("index", table.basin_id):
        train = compose_index(model_design(model, table, (lo, hi)), weights)
        try:
            later = model_design(model, table, (hi + 1, None))
        except SnodriError:
            return train
        return train.concat(compose_index(later, weights, params=train.params))


def indicator_series(cfg: PipelineConfig, table: BasinTable):
    v = cfg.variables
    return monthly_climatology_anomaly(table[v["swe"]]), table[v["discharge"]]


def run_evaluation(cfg: PipelineConfig, idx: IndexSeries, table: BasinTable) -> dict[str, EvaluationReport]:
    with stage("evaluate", table.basin_id):
        anom, q = indicator_series(cfg, table)
        reports = {"all": evaluate_index(idx, anom, q, cfg.event_windows)}
        _, train_end = cfg.train_window
        if idx.end.ordinal - train_end.ordinal >= 12:
            later = [(a, b) for a, b in cfg.event_windows if b > train_end]
            reports["evaluation"] = evaluate_index(idx.as_monthly().slice(train_end + 1, None), anom, q, later)
    return reports


def write_evaluation(path_csv, path_txt, reports: dict[str, EvaluationReport], header: str) -> None:
    rows = [["period", "metric", "value"]]
    text = [header, ""]
    for period, r in reports.items():
        metrics = [
            ("start", str(r.start)),
            ("end", str(r.end)),
            ("n_months", str(r.n_months)),
            ("pearson_corr_swe_anomaly", repr(r.pearson_corr_swe_anomaly)),
            ("pearson_corr_discharge", repr(r.pearson_corr_discharge)),
            ("sign_coincidence", repr(r.sign_coincidence)),
            ("n_sign_months", str(r.n_sign_months)),
            ("mean_inside_events", repr(r.mean_inside_events)),
            ("mean_outside_events", repr(r.mean_outside_events)),
        ]
        for a, b, mean, n in r.events:
            metrics.append((f"event_mean:{a}..{b}", repr(mean)))
        rows += [[period, m, v] for m, v in metrics]
        text.append(f"[{period}] {r.start} .. {r.end} ({r.n_months} months)")
        text.append(f"  corr(SnoDRI, SWE anomaly) = {r.pearson_corr_swe_anomaly:.3f}")
        text.append(f"  corr(SnoDRI, discharge)   = {r.pearson_corr_discharge:.3f}")
        text.append(f"  sign coincidence          = {r.sign_coincidence:.3f} over {r.n_sign_months} months")
        if r.events:
            text.append(f"  mean SnoDRI inside events = {r.mean_inside_events:.3f}, outside = {r.mean_outside_events:.3f}")
            for a, b, mean, n in r.events:
                text.append(f"    {a} .. {b}: {mean:.3f} ({n} months)")
        text.append("")
    Path(path_csv).parent.mkdir(parents=True, exist_ok=True)
    with open(path_csv, "w", encoding="utf-8", newline="") as fh:
        fh.write(f"# {header}\n")
        for row in rows:
            fh.write(",".join(row) + "\n")
    Path(path_txt).write_text("\n".join(text), encoding="utf-8")


# -- artifacts -------------------------------------------------------------------

def artifact_paths(cfg: PipelineConfig) -> dict[str, Path]:
    out, h = cfg.output_dir, cfg.hash
    return {
        "features": out / f"features-{h}.txt",
        "model": out / f"model-{h}.json",
        "weights": out / f"weights-{h}.csv",
        "index": out / f"index-{h}.csv",
        "evaluation": out / f"evaluation-{h}.csv",
        "summary": out / f"evaluation-{h}.txt",
        "plot": out / f"plot-{h}.svg",
    }


def stamp(cfg: PipelineConfig) -> str:
    return f"snodri config_hash={cfg.hash} seed={cfg.seed}"


def index_comments(cfg: PipelineConfig, idx: IndexSeries) -> list[str]:
    return [
        f"{stamp(cfg)} weight_hash={idx.provenance.get('weight_hash', '')} "
        f"raw_mean={idx.params.mean!r} raw_std={idx.params.std!r}"
    ]


@dataclass(frozen=True)
class RunResult:
    paths: dict
    features: FeatureReport
    model: TrainedEncoder
    weights: WeightVector
    index: IndexSeries
    reports: dict


def pipeline_run(cfg: PipelineConfig) -> RunResult:
    """Execute every stage and write all artifacts into ``cfg.output_dir``."""
    paths = artifact_paths(cfg)
    tables = prepare(cfg)
    basin = cfg.index_basin
    if basin not in tables:
        raise StageError("train", MissingVariable(f"index basin {basin!r} is not among the inputs"), basin)
    features = run_feature_selection(cfg, tables)
    table = tables[basin]
    model = train_model(cfg, table, features.selected)
    weights = run_weights(cfg, model, table)
    idx = run_index(model, weights, table)
    reports = run_evaluation(cfg, idx, table)

    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    paths["features"].write_text(features.render(f"# {stamp(cfg)}"), encoding="utf-8")
    model.save(paths["model"])
    io.write_weights_csv(paths["weights"], weights, [f"{stamp(cfg)} bins={weights.bins}"])
    io.write_index_csv(paths["index"], idx, index_comments(cfg, idx))
    write_evaluation(paths["evaluation"], paths["summary"], reports, stamp(cfg))
    with stage("plot", basin):
        anom, q = indicator_series(cfg, table)
        plot_emit(idx, [anom, table[cfg.variables["swe"]], q], paths["plot"],
                  title=f"SnoDRI - {basin}", description=stamp(cfg))
    _logger.info("wrote artifacts to %s", cfg.output_dir)
    return RunResult(paths, features, model, weights, idx, reports)
