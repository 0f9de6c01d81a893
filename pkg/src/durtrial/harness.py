"""Experiment cells, sweeps over them, and the preset experiment catalogue."""
from __future__ import annotations

import logging
import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _backend
from .design import TrialDesign, make_design
from .errors import DomainError
from .fitters import EXTRA_METHODS, GCV_PENALTY, METHODS, fit_method
from .metrics import (DEFAULT_STEP, PERCENTILE_RULE, SabcSummary, integration_grid,
                      sabc_from_values, summarize)
from .scenarios import SCENARIOS, get_scenario
from .simulate import derive_stream, simulate_trial

log = logging.getLogger(__name__)

N_GRID = (252, 301, 350, 406, 455, 504, 602, 756, 1001)
ARMS_VARIANTS = (3, 5, 7, 9, 20)
BASE_N = 504
ARMS_N = 500
CHUNK = 250


class CellError(RuntimeError):
    pass


@dataclass(frozen=True)
class ExperimentCell:
    scenario_id: int
    design_label: str
    total_n: int
    method: str
    n_sims: int = 1000
    master_seed: int = 0
    arms: tuple[float, ...] | None = None

    def __post_init__(self):
        get_scenario(self.scenario_id)
        if self.method not in METHODS + EXTRA_METHODS:
            raise DomainError(f"unknown method {self.method!r}; "
                              f"expected one of {METHODS + EXTRA_METHODS}")
        if self.n_sims < 1:
            raise DomainError("n_sims must be >= 1")
        self.design()

    def design(self) -> TrialDesign:
        return make_design(self.design_label, self.total_n, self.arms)

    @property
    def group(self) -> tuple[str, str, int]:
        return (self.method, self.design_label, self.total_n)


@dataclass
class CellResult:
    cell: ExperimentCell
    per_sim_sabc: np.ndarray
    summary: SabcSummary
    convergence_counts: dict
    metadata: dict
    curves: np.ndarray | None = field(default=None, repr=False)


def cell_metadata(cell: ExperimentCell, step: float) -> dict:
    design = cell.design()
    return {
        "scenario_id": cell.scenario_id,
        "design": cell.design_label,
        "arms": list(design.arms),
        "allocation": list(design.allocation),
        "total_n": cell.total_n,
        "method": cell.method,
        "n_sims": cell.n_sims,
        "master_seed": cell.master_seed,
        "integration_step": step,
        "percentile_rule": PERCENTILE_RULE,
        "mars_gcv_penalty": GCV_PENALTY,
        "mars_selection_scale": "weighted least squares on proportions, logistic refit",
        "fp_selection": ("closed test vs linear and FP1" if cell.method == "FP-FSP"
                         else "minimum deviance over 36 pairs, lexicographic tie-break"),
        "kernel_backend": _backend.BACKEND,
    }


def _run_chunk(cell: ExperimentCell, start: int, stop: int, step: float, curve_sample: int):
    scenario = get_scenario(cell.scenario_id)
    design = cell.design()
    grid = integration_grid(step=step)
    truth = scenario(grid)
    m = stop - start
    values = np.empty(m)
    flags = np.zeros((m, 3), dtype=np.int64)
    curves = []
    for j, i in enumerate(range(start, stop)):
        data = simulate_trial(design, scenario,
                              derive_stream(cell.master_seed, cell.scenario_id, design.key, i))
        try:
            fitted = fit_method(cell.method, data)
        except Exception as exc:
            raise CellError(f"{cell} failed at sim_index {i}: {exc}") from exc
        pred = fitted.predict(grid)
        values[j] = sabc_from_values(truth, pred, grid)
        g = fitted.glm_fit
        flags[j] = (g.converged, g.ridged, g.hit_max_iter)
        if i < curve_sample:
            curves.append(pred)
    return values, flags, curves


def _chunks(n_sims: int):
    return [(s, min(s + CHUNK, n_sims)) for s in range(0, n_sims, CHUNK)]


def _assemble(cell, step, curve_sample, parts) -> CellResult:
    values = np.concatenate([p[0] for p in parts])
    flags = np.concatenate([p[1] for p in parts])
    curves = [c for p in parts for c in p[2]]
    counts = {"converged": int(flags[:, 0].sum()), "ridged": int(flags[:, 1].sum()),
              "max_iter": int(flags[:, 2].sum())}
    meta = cell_metadata(cell, step)
    meta["convergence_counts"] = counts
    return CellResult(cell, values, summarize(values), counts, meta,
                      np.array(curves) if curve_sample else None)


def run_cell(cell: ExperimentCell, step: float = DEFAULT_STEP, curve_sample: int = 0) -> CellResult:
    """Simulate, fit and score ``cell.n_sims`` replicates of one cell.

    Replicate ``i`` draws from its own derived stream, so the result does not
    depend on how replicates are scheduled. The first ``curve_sample`` fitted
    curves are kept on the integration grid.
    """
    parts = [_run_chunk(cell, a, b, step, curve_sample) for a, b in _chunks(cell.n_sims)]
    return _assemble(cell, step, curve_sample, parts)


@dataclass
class SweepResult:
    results: list[CellResult]
    rows: list[dict]
    failed: list[tuple[ExperimentCell, str]]


_NATURAL = re.compile(r"(\d+)")


def _natural_key(label: str):
    return [int(t) if t.isdigit() else t for t in _NATURAL.split(label)]


def _row(scenario, group, summary: SabcSummary, counts) -> dict:
    method, design, total_n = group
    return {"scenario": scenario, "design": design, "method": method, "total_n": total_n,
            "n_sims": summary.n_sims, "min": summary.min, "p5": summary.p5,
            "median": summary.median, "p95": summary.p95, "max": summary.max,
            "mean": summary.mean, "converged": counts["converged"], "ridged": counts["ridged"]}


_METHOD_ORDER = {m: i for i, m in enumerate(METHODS + EXTRA_METHODS)}


def group_sort_key(group):
    method, design, total_n = group
    return (_METHOD_ORDER[method], _natural_key(design), total_n)


def ordered_results(results: list[CellResult]) -> list[CellResult]:
    """Results sorted by (method, design, total_n, scenario)."""
    return sorted(results, key=lambda r: (group_sort_key(r.cell.group), r.cell.scenario_id))


def summary_rows(results: list[CellResult]) -> list[dict]:
    """One row per cell plus a pooled ``Overall`` row per (method, design, N) group."""
    groups: dict[tuple, list[CellResult]] = {}
    for r in results:
        groups.setdefault(r.cell.group, []).append(r)
    rows = []
    for g in sorted(groups, key=group_sort_key):
        members = sorted(groups[g], key=lambda r: r.cell.scenario_id)
        for r in members:
            rows.append(_row(str(r.cell.scenario_id), g, r.summary, r.convergence_counts))
        pooled = np.concatenate([r.per_sim_sabc for r in members])
        counts = {k: sum(r.convergence_counts[k] for r in members)
                  for k in ("converged", "ridged")}
        rows.append(_row("Overall", g, summarize(pooled), counts))
    return rows


def run_sweep(cells: list[ExperimentCell], step: float = DEFAULT_STEP, curve_sample: int = 0,
              workers: int = 1) -> SweepResult:
    """Run every cell; failed cells are reported rather than aborting the sweep."""
    if not cells:
        raise DomainError("no experiment cells to run")
    tasks = [(ci, a, b) for ci, c in enumerate(cells) for a, b in _chunks(c.n_sims)]
    outputs: dict[tuple[int, int], object] = {}
    if workers <= 1:
        for ci, a, b in tasks:
            try:
                outputs[ci, a] = _run_chunk(cells[ci], a, b, step, curve_sample)
            except CellError as exc:
                outputs[ci, a] = exc
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = {(ci, a): pool.submit(_run_chunk, cells[ci], a, b, step, curve_sample)
                       for ci, a, b in tasks}
            for key, fut in futures.items():
                try:
                    outputs[key] = fut.result()
                except CellError as exc:
                    outputs[key] = exc
    results, failed = [], []
    for ci, cell in enumerate(cells):
        parts = [outputs[ci, a] for a, _ in _chunks(cell.n_sims)]
        errors = [p for p in parts if isinstance(p, Exception)]
        if errors:
            log.error("%s", errors[0])
            failed.append((cell, str(errors[0])))
            continue
        results.append(_assemble(cell, step, curve_sample, parts))
    return SweepResult(results, summary_rows(results) if results else [], failed)


# -- presets ------------------------------------------------------------------

def _cells(scenarios, designs, methods, n_sims, seed):
    return [ExperimentCell(s, d, n, m, n_sims, seed)
            for m in methods for d, n in designs for s in scenarios]


def _all_scenarios():
    return sorted(SCENARIOS)


def table2_cells(n_sims=1000, seed=0):
    return _cells(_all_scenarios(), [("ED7", BASE_N)], ["FP"], n_sims, seed)


def methods_cells(n_sims=1000, seed=0):
    return _cells(_all_scenarios(), [("ED7", BASE_N)], list(METHODS), n_sims, seed)


def nsweep_cells(n_sims=1000, seed=0):
    return _cells(_all_scenarios(), [("ED7", n) for n in N_GRID], ["FP"], n_sims, seed)


def arms_cells(n_sims=1000, seed=0):
    return _cells(_all_scenarios(), [(f"ED{k}", ARMS_N) for k in ARMS_VARIANTS], ["FP"],
                  n_sims, seed)


def placement_cells(n_sims=1000, seed=0):
    return _cells(_all_scenarios(), [("ED7", BASE_N), ("NED5", BASE_N)],
                  ["FP", "LS3", "LSNE", "MARS"], n_sims, seed)


PRESETS = {
    "table2": table2_cells,
    "methods": methods_cells,
    "nsweep": nsweep_cells,
    "arms": arms_cells,
    "placement": placement_cells,
}


def preset_paper_experiments(n_sims: int = 1000, seed: int = 0) -> list[ExperimentCell]:
    """Every cell behind the method, sample-size, arm-count and placement comparisons."""
    return (methods_cells(n_sims, seed) + nsweep_cells(n_sims, seed)
            + arms_cells(n_sims, seed) + placement_cells(n_sims, seed))
