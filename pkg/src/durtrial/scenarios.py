"""Closed-form data-generating duration-response curves.

Eight fixed scenarios, each mapping a treatment duration in days (10 to 20)
to a probability of cure.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from .errors import DomainError

D_MIN = 10.0
D_MAX = 20.0


def _logistic_growth(d, p):
    return p["floor"] + p["height"] / (1.0 + np.exp(-p["rate"] * d + p["shift"]))


def _gompertz(d, p):
    return p["asymptote"] * np.exp(-p["scale"] * np.exp(-p["rate"] * (d - p["centre"])))


def _logit_linear(d, p):
    eta = p["intercept"] + p["slope"] * (d - D_MIN)
    return 1.0 / (1.0 + np.exp(-eta))


def _quadratic(d, p):
    x = d - D_MIN
    return p["base"] + p["linear"] * x + p["quadratic"] * x * x


def _piecewise(d, p):
    # Segments [10, 12), [12, 15), [15, 20]; the value drops by 0.01 at 15.
    first = 0.5 + 0.15 * (d - 10.0)
    second = 0.8 + 0.05 * (d - 12.0)
    third = 0.94 + 0.01 * (d - 15.0)
    return np.where(d < p["break1"], first, np.where(d < p["break2"], second, third))


@dataclass(frozen=True)
class ScenarioCurve:
    """A true duration-response curve ``f(D)``.

    Instances are callable on scalars or arrays of durations.
    """

    id: int
    name: str
    parameters: Mapping[str, float]
    _func: Callable = field(repr=False, compare=False)

    def __call__(self, duration):
        return true_curve_values(self, duration)


SCENARIOS: dict[int, ScenarioCurve] = {
    1: ScenarioCurve(1, "Logistic growth curve",
                     {"floor": 0.05, "height": 0.9, "rate": 2.0, "shift": 25.0},
                     _logistic_growth),
    2: ScenarioCurve(2, "Gompertz curve A",
                     {"asymptote": 0.9, "scale": 1.0, "rate": 0.5, "centre": 11.0},
                     _gompertz),
    3: ScenarioCurve(3, "Gompertz curve B",
                     {"asymptote": 0.9, "scale": 1.0, "rate": 1.0, "centre": 11.0},
                     _gompertz),
    4: ScenarioCurve(4, "Gompertz curve C",
                     {"asymptote": 0.9, "scale": 2.0, "rate": 1.0, "centre": 9.0},
                     _gompertz),
    5: ScenarioCurve(5, "Linear on log-odds scale",
                     {"intercept": 0.847, "slope": 0.210},
                     _logit_linear),
    6: ScenarioCurve(6, "Quadratic, positive curvature",
                     {"base": 0.7, "linear": 0.0, "quadratic": 0.0015},
                     _quadratic),
    7: ScenarioCurve(7, "Quadratic, negative curvature",
                     {"base": 0.7, "linear": 0.03, "quadratic": -0.0015},
                     _quadratic),
    8: ScenarioCurve(8, "Piecewise linear",
                     {"break1": 12.0, "break2": 15.0},
                     _piecewise),
}


def get_scenario(scenario_id: int) -> ScenarioCurve:
    try:
        return SCENARIOS[int(scenario_id)]
    except (KeyError, TypeError, ValueError):
        raise DomainError(f"unknown scenario id {scenario_id!r}; expected 1..8") from None


def _resolve(scenario) -> ScenarioCurve:
    return scenario if isinstance(scenario, ScenarioCurve) else get_scenario(scenario)


def true_curve_values(scenario, duration) -> np.ndarray:
    """Vectorised evaluation without the empty-grid check."""
    curve = _resolve(scenario)
    d = np.asarray(duration, dtype=float)
    if not np.all(np.isfinite(d)) or np.any(d < D_MIN) or np.any(d > D_MAX):
        raise DomainError(f"durations must lie in [{D_MIN:g}, {D_MAX:g}]")
    out = curve._func(d, curve.parameters)
    return out if d.ndim else float(out)


def true_probability(scenario, duration: float) -> float:
    """Probability of cure under ``scenario`` at a single ``duration``."""
    return float(true_curve_values(scenario, float(duration)))


def true_curve_grid(scenario, grid) -> np.ndarray:
    """Evaluate ``scenario`` at every point of ``grid``."""
    g = np.asarray(grid, dtype=float).ravel()
    if g.size == 0:
        raise DomainError("grid must contain at least one duration")
    return true_curve_values(scenario, g)
