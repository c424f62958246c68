"""Command-line entry point.

Every stage reads its inputs from the configured basin files plus the
artifacts of earlier stages in ``output_dir`` and writes its own artifact
there, so partial pipelines compose. ``run`` executes everything at once.

Exit codes: 0 success, 1 usage or configuration error, 2 data error,
3 numeric failure. ``SNODRI_LOG_LEVEL`` sets log verbosity (default WARNING).
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from . import io, pipeline
from .config import DEFAULTS, PipelineConfig, render_toml
from .encoder import TrainedEncoder
from .errors import ConfigError, SnodriError
from .synth import SynthConfig, drought_window, generate_synthetic_basin

_logger = logging.getLogger("snodri")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _load(args) -> PipelineConfig:
    return PipelineConfig.load(args.config, args.set)


def _need(path: Path, made_by: str) -> Path:
    if not path.exists():
        raise ConfigError(f"{path} not found; run `snodri {made_by}` first")
    return path


def _derived_path(cfg: PipelineConfig, kind: str, basin: str) -> Path:
    return cfg.output_dir / f"{kind}-{basin}-{cfg.hash}.csv"


# -- subcommands -----------------------------------------------------------------

def cmd_synth(args) -> list[Path]:
    winters = []
    for item in args.drought:
        year, _, sev = item.partition(":")
        try:
            winters.append((int(year), float(sev) if sev else 1.0))
        except ValueError:
            raise ConfigError(f"--drought expects YEAR[:SEVERITY], got {item!r}") from None
    try:
        scfg = SynthConfig(
            n_years=args.years, seed=args.seed, drought_winters=tuple(winters),
            noise_std=args.noise, start_year=args.start_year, basin_id=args.basin_id,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    table, mask = generate_synthetic_basin(scfg)
    out = Path(args.out)
    basin_csv = out / f"{scfg.basin_id}.csv"
    mask_csv = out / f"{scfg.basin_id}-mask.csv"
    note = [f"synthetic basin seed={scfg.seed} years={scfg.n_years} noise_std={scfg.noise_std!r}"]
    io.write_basin_csv(basin_csv, table, note)
    io.write_monthly_csv(mask_csv, [mask], note)

    split = args.train_end or f"{scfg.start_year + (2 * scfg.n_years) // 3 - 1}-12"
    doc = {
        "seed": 0,
        "output_dir": "snodri-out",
        "inputs": {"basins": [basin_csv.name], "index_basin": scfg.basin_id},
        "split": {"train_start": "", "train_end": split},
        "spi": DEFAULTS["spi"],
        "snowfrac": DEFAULTS["snowfrac"],
        "features": DEFAULTS["features"],
        "encoder": DEFAULTS["encoder"],
        "evaluate": {"event_windows": [[str(a), str(b)] for a, b in (drought_window(y) for y, _ in scfg.drought_winters)]},
    }
    cfg_path = out / "config.toml"
    cfg_path.write_text(render_toml(doc), encoding="utf-8")
    return [basin_csv, mask_csv, cfg_path]


def cmd_ingest(args) -> list[Path]:
    cfg = _load(args)
    written = []
    for basin, (_, table) in pipeline.ingest(cfg).items():
        path = _derived_path(cfg, "monthly", basin)
        io.write_basin_csv(path, table, [pipeline.stamp(cfg)])
        written.append(path)
    return written


def cmd_spi(args) -> list[Path]:
    cfg = _load(args)
    ks = [args.k] if args.k else list(cfg.doc["spi"]["timescales"])
    if any(k < 1 for k in ks):
        raise ConfigError("--k must be >= 1")
    written = []
    for basin, (_, table) in pipeline.ingest(cfg).items():
        series = []
        for k in ks:
            with pipeline.stage("spi", basin, cfg.variables["precipitation"]):
                s = pipeline.compute_spi(table[cfg.variables["precipitation"]], k, fit_window=cfg.train_window)
            series.append(s.as_monthly())
        path = _derived_path(cfg, "spi", basin)
        io.write_monthly_csv(path, series, [pipeline.stamp(cfg)])
        written.append(path)
    return written


def cmd_snowfrac(args) -> list[Path]:
    cfg = _load(args)
    written = []
    for basin, (native, _) in pipeline.ingest(cfg).items():
        with pipeline.stage("snowfrac", basin, pipeline.SNOWFRAC_ID):
            s = pipeline.derive_snow_fraction(cfg, native)
        path = _derived_path(cfg, "snowfrac", basin)
        io.write_monthly_csv(path, [s], [pipeline.stamp(cfg)])
        written.append(path)
    return written


def cmd_select_features(args) -> list[Path]:
    cfg = _load(args)
    report = pipeline.run_feature_selection(cfg, pipeline.prepare(cfg))
    path = pipeline.artifact_paths(cfg)["features"]
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(report.render(f"# {pipeline.stamp(cfg)}"), encoding="utf-8")
    return [path]


def _index_table(cfg: PipelineConfig):
    tables = pipeline.prepare(cfg)
    if cfg.index_basin not in tables:
        raise ConfigError(f"index basin {cfg.index_basin!r} is not among the inputs")
    return tables[cfg.index_basin]


def _model(cfg: PipelineConfig) -> TrainedEncoder:
    return TrainedEncoder.load(_need(pipeline.artifact_paths(cfg)["model"], "train"))


def cmd_train(args) -> list[Path]:
    cfg = _load(args)
    paths = pipeline.artifact_paths(cfg)
    selected = pipeline.parse_feature_report(_need(paths["features"], "select-features"))
    model = pipeline.train_model(cfg, _index_table(cfg), selected)
    model.save(paths["model"])
    return [paths["model"]]


def cmd_weights(args) -> list[Path]:
    cfg = _load(args)
    paths = pipeline.artifact_paths(cfg)
    w = pipeline.run_weights(cfg, _model(cfg), _index_table(cfg))
    io.write_weights_csv(paths["weights"], w, [f"{pipeline.stamp(cfg)} bins={w.bins}"])
    return [paths["weights"]]


def cmd_index(args) -> list[Path]:
    cfg = _load(args)
    paths = pipeline.artifact_paths(cfg)
    w = io.read_weights_csv(_need(paths["weights"], "weights"))
    idx = pipeline.run_index(_model(cfg), w, _index_table(cfg))
    io.write_index_csv(paths["index"], idx, pipeline.index_comments(cfg, idx))
    return [paths["index"]]


def cmd_evaluate(args) -> list[Path]:
    cfg = _load(args)
    paths = pipeline.artifact_paths(cfg)
    idx = io.read_index_csv(_need(paths["index"], "index"))
    reports = pipeline.run_evaluation(cfg, idx, _index_table(cfg))
    pipeline.write_evaluation(paths["evaluation"], paths["summary"], reports, pipeline.stamp(cfg))
    print(paths["summary"].read_text(encoding="utf-8"), end="")
    return [paths["evaluation"], paths["summary"]]


def cmd_plot(args) -> list[Path]:
    cfg = _load(args)
    paths = pipeline.artifact_paths(cfg)
    idx = io.read_index_csv(_need(paths["index"], "index"))
    table = _index_table(cfg)
    with pipeline.stage("plot", table.basin_id):
        anom, q = pipeline.indicator_series(cfg, table)
        pipeline.plot_emit(idx, [anom, table[cfg.variables["swe"]], q], paths["plot"],
                           title=f"SnoDRI - {table.basin_id}", description=pipeline.stamp(cfg))
    return [paths["plot"]]


def cmd_run(args) -> list[Path]:
    result = pipeline.pipeline_run(_load(args))
    return list(result.paths.values())


COMMANDS = {
    "synth": (cmd_synth, "generate a synthetic basin, its drought mask and a sample config"),
    "ingest": (cmd_ingest, "aggregate basin files to monthly tables"),
    "spi": (cmd_spi, "compute SPI series"),
    "snowfrac": (cmd_snowfrac, "compute monthly snow fraction from wet-bulb temperature"),
    "select-features": (cmd_select_features, "rank candidate inputs with random forests"),
    "train": (cmd_train, "train the autoencoder on the training window"),
    "weights": (cmd_weights, "mutual-information weights from the trained bottleneck"),
    "index": (cmd_index, "compose the index series"),
    "evaluate": (cmd_evaluate, "compare the index with SWE anomaly, discharge and event windows"),
    "plot": (cmd_plot, "stacked SVG of the index and indicators"),
    "run": (cmd_run, "run every stage"),
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", "-c", required=True, help="TOML configuration file")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override a config key (repeatable), e.g. --set features.top_k=4")

    parser = _Parser(prog="snodri", description="Composite snow-drought index toolkit.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, (_, help_text) in COMMANDS.items():
        if name == "synth":
            p = sub.add_parser(name, help=help_text)
            p.add_argument("--out", required=True, help="output directory")
            p.add_argument("--years", type=int, default=30)
            p.add_argument("--seed", type=int, default=0)
            p.add_argument("--start-year", type=int, default=1981)
            p.add_argument("--noise", type=float, default=1.0)
            p.add_argument("--basin-id", default="synthetic")
            p.add_argument("--drought", action="append", default=[], metavar="YEAR[:SEVERITY]",
                           help="drought winter ending in YEAR (repeatable)")
            p.add_argument("--train-end", default="", help="training split for the sample config (YYYY-MM)")
        else:
            p = sub.add_parser(name, help=help_text, parents=[common])
            if name == "spi":
                p.add_argument("--k", type=int, default=0, help="single timescale (default: all configured)")
    return parser


def main(argv=None) -> int:
    level = os.environ.get("SNODRI_LOG_LEVEL", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    func = COMMANDS[args.command][0]
    try:
        written = func(args)
    except SnodriError as exc:
        print(f"snodri {args.command}: {exc}", file=sys.stderr)
        return exc.exit_code
    for path in written:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
