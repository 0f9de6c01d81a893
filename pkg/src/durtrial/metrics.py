"""Curve discrepancy metrics and their distributional summaries."""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .errors import DomainError
from .scenarios import D_MAX, D_MIN

DEFAULT_STEP = 0.01
PERCENTILE_RULE = "linear interpolation of order statistics at 1 + q(n-1)"
QUANTILES = (0.05, 0.5, 0.95)


def integration_grid(d_min: float = D_MIN, d_max: float = D_MAX,
                     step: float = DEFAULT_STEP) -> np.ndarray:
    """Uniform grid from ``d_min`` to ``d_max`` inclusive with spacing ``step``."""
    if not step > 0:
        raise DomainError("step must be positive")
    if not d_min < d_max:
        raise DomainError("d_min must be smaller than d_max")
    intervals = (d_max - d_min) / step
    m = int(round(intervals))
    if m < 1 or abs(intervals - m) > 1e-9 * max(1.0, intervals):
        raise DomainError(f"step {step} does not divide [{d_min}, {d_max}] into whole intervals")
    return np.linspace(d_min, d_max, m + 1)


def sabc_from_values(truth_values, fitted_values, grid) -> float:
    """Trapezoid-rule mean absolute gap between two curves sampled on ``grid``."""
    gap = np.abs(np.asarray(truth_values, float) - np.asarray(fitted_values, float))
    return float(np.trapezoid(gap, grid) / (grid[-1] - grid[0]))


def sabc(truth, fitted, d_min: float = D_MIN, d_max: float = D_MAX,
         step: float = DEFAULT_STEP) -> float:
    """Scaled area between two curves, as a fraction.

    ``truth`` and ``fitted`` are callables taking an array of durations.
    """
    grid = integration_grid(d_min, d_max, step)
    return sabc_from_values(truth(grid), fitted(grid), grid)


def to_percent(fraction):
    return 100.0 * np.asarray(fraction) if np.ndim(fraction) else 100.0 * fraction


def expected_error(truth, fitted, durations, distance: str = "absolute") -> float:
    d = np.atleast_1d(np.asarray(durations, dtype=float))
    if d.size == 0:
        raise DomainError("need at least one duration")
    diff = np.asarray(truth(d), float) - np.asarray(fitted(d), float)
    if distance == "absolute":
        return float(np.mean(np.abs(diff)))
    if distance == "squared":
        return float(np.mean(diff * diff))
    raise DomainError(f"unknown distance {distance!r}")


@dataclass(frozen=True)
class SabcSummary:
    min: float
    p5: float
    median: float
    p95: float
    max: float
    mean: float
    n_sims: int

    def as_dict(self) -> dict:
        return asdict(self)


def summarize(values) -> SabcSummary:
    v = np.asarray(values, dtype=float).ravel()
    if v.size == 0:
        raise DomainError("cannot summarise an empty list")
    p5, med, p95 = np.percentile(v, [100 * q for q in QUANTILES], method="linear")
    return SabcSummary(float(v.min()), float(p5), float(med), float(p95), float(v.max()),
                       float(v.mean()), int(v.size))
