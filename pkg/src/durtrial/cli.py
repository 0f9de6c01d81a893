"""Command-line entry point.

    durtrial run --experiment table2 --seed 42 --out results/
    durtrial run --config run.cfg --n-sims 200
    durtrial presets

Exit codes: 0 success, 1 runtime failure (failed cells are listed), 2 usage
error.
"""
from __future__ import annotations

import argparse
import configparser
import json
import logging
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

from . import _backend
from .design import custom_label
from .errors import DomainError
from .fitters import EXTRA_METHODS, METHODS
from .harness import PRESETS, ExperimentCell, run_sweep
from .metrics import DEFAULT_STEP
from .report import (cell_stem, emit_curve_dump, emit_persim_csv, emit_summary_csv,
                     emit_svg_plots, render_report, write_metadata)

log = logging.getLogger("durtrial")

EXPERIMENTS = tuple(PRESETS) + ("custom",)
DEFAULT_CURVE_SAMPLE = 100


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    experiment: str
    master_seed: int
    n_sims: int = 1000
    output_dir: str = "results"
    emit_curves: bool = False
    curve_sample: int = DEFAULT_CURVE_SAMPLE
    step: float = DEFAULT_STEP
    svg: bool = False
    workers: int = 1
    # custom experiments only
    scenarios: list[int] = field(default_factory=lambda: list(range(1, 9)))
    design: str | None = "ED7"
    total_n: int = 504
    methods: list[str] = field(default_factory=lambda: ["FP"])
    arms: list[float] | None = None


_ALIASES = {"seed": "master_seed", "out": "output_dir", "method": "methods"}
_FIELDS = set(RunConfig.__dataclass_fields__)


def _parse_value(raw: str):
    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        low = raw.strip().lower()
        if low in ("true", "yes", "on"):
            return True
        if low in ("false", "no", "off"):
            return False
        return raw.strip().strip('"')


def read_config_file(path) -> dict:
    """Flat ``key = value`` file; values are JSON where possible (lists, numbers)."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc.strerror}") from exc
    parser = configparser.ConfigParser(interpolation=None, comment_prefixes=("#", ";"))
    parser.optionxform = str
    if not text.lstrip().startswith("["):
        text = "[run]\n" + text
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise UsageError(f"malformed config file {path}: {exc}") from exc
    values = {}
    for section in parser.sections():
        for key, raw in parser.items(section):
            key = _ALIASES.get(key.replace("-", "_"), key.replace("-", "_"))
            if key not in _FIELDS:
                raise UsageError(f"unknown config key {key!r} in {path}")
            values[key] = _parse_value(raw)
    return values


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="durtrial",
                                     description="Duration-response trial design simulations")
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run an experiment and write CSV/SVG outputs")
    run.add_argument("--experiment", help=f"one of {', '.join(EXPERIMENTS)}")
    run.add_argument("--seed", type=int, dest="master_seed", help="master seed (required)")
    run.add_argument("--n-sims", type=int, dest="n_sims")
    run.add_argument("--out", dest="output_dir")
    run.add_argument("--emit-curves", action="store_true", default=None, dest="emit_curves")
    run.add_argument("--curve-sample", type=int, dest="curve_sample")
    run.add_argument("--step", type=float)
    run.add_argument("--svg", action="store_true", default=None)
    run.add_argument("--workers", type=int)
    run.add_argument("--config", help="flat key = value configuration file")
    run.add_argument("-v", "--verbose", action="store_true")
    sub.add_parser("presets", help="list preset experiments")
    return parser


def parse_config(args: argparse.Namespace) -> RunConfig:
    """Merge a config file (if any) with flags; flags win."""
    values = read_config_file(args.config) if getattr(args, "config", None) else {}
    for key in ("experiment", "master_seed", "n_sims", "output_dir", "emit_curves",
                "curve_sample", "step", "svg", "workers"):
        v = getattr(args, key, None)
        if v is not None:
            values[key] = v
    if values.get("master_seed") is None:
        raise UsageError("a master seed is required (--seed or master_seed in the config file)")
    experiment = values.get("experiment")
    if experiment not in EXPERIMENTS:
        raise UsageError(f"unknown experiment {experiment!r}; choose from {', '.join(EXPERIMENTS)}")
    if "curve_sample" not in values:
        values["curve_sample"] = min(DEFAULT_CURVE_SAMPLE, int(values.get("n_sims", 1000)))
    for key in ("scenarios", "methods"):
        if key in values and not isinstance(values[key], list):
            values[key] = [values[key]]
    try:
        config = RunConfig(**values)
        config.master_seed = int(config.master_seed)
        config.n_sims = int(config.n_sims)
        config.curve_sample = int(config.curve_sample)
        config.step = float(config.step)
        config.workers = int(config.workers)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"invalid configuration: {exc}") from exc
    if config.master_seed < 0:
        raise UsageError("the master seed must be non-negative")
    if config.n_sims < 1:
        raise UsageError("n_sims must be at least 1")
    if not 0 <= config.curve_sample <= config.n_sims:
        raise UsageError("curve_sample must lie between 0 and n_sims")
    return config


def build_cells(config: RunConfig) -> list[ExperimentCell]:
    if config.experiment != "custom":
        return PRESETS[config.experiment](config.n_sims, config.master_seed)
    if not config.scenarios:
        raise UsageError("custom experiment needs at least one scenario")
    unknown = [m for m in config.methods if m not in METHODS + EXTRA_METHODS]
    if unknown or not config.methods:
        raise UsageError(f"unknown methods {unknown}; choose from {METHODS + EXTRA_METHODS}")
    arms = tuple(float(a) for a in config.arms) if config.arms is not None else None
    label = config.design if arms is None else custom_label(arms)
    try:
        return [ExperimentCell(int(s), label, int(config.total_n), m,
                               config.n_sims, config.master_seed, arms)
                for m in config.methods for s in config.scenarios]
    except DomainError as exc:
        raise UsageError(str(exc)) from exc


def execute(config: RunConfig, stream=None) -> int:
    stream = stream or sys.stdout
    cells = build_cells(config)
    out = Path(config.output_dir)
    keep = config.curve_sample if (config.emit_curves or config.svg) else 0
    log.info("running %d cells x %d sims (%s kernel)", len(cells), config.n_sims, _backend.BACKEND)
    sweep = run_sweep(cells, step=config.step, curve_sample=keep, workers=config.workers)
    if sweep.results:
        emit_summary_csv(sweep.results, out / "summary.csv")
        emit_persim_csv(sweep.results, out / "persim.csv")
        run_meta = {k: v for k, v in asdict(config).items() if k != "output_dir"}
        write_metadata(sweep.results, out / "metadata.json", run_meta)
        if config.emit_curves:
            for r in sweep.results:
                emit_curve_dump(r, out / "curves" / f"{cell_stem(r)}.csv", config.step)
        if config.svg:
            emit_svg_plots(sweep.results, out / "plots", config.step)
        stream.write(render_report(sweep.rows))
    if sweep.failed:
        for cell, message in sweep.failed:
            stream.write(f"FAILED {cell.method} {cell.design_label} N={cell.total_n} "
                         f"scenario {cell.scenario_id}: {message}\n")
        return 1
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "presets":
        for name, make in PRESETS.items():
            print(f"{name:10s} {len(make(1, 0)):4d} cells")
        print("custom     cells from config keys: scenarios, design|arms, total_n, methods")
        return 0
    try:
        config = parse_config(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"durtrial: error: {exc}", file=sys.stderr)
        return 2
    try:
        return execute(config)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"durtrial: error: {exc}", file=sys.stderr)
        return 2
    except (OSError, DomainError, RuntimeError) as exc:
        print(f"durtrial: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
