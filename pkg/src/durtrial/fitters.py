"""Flexible duration-response regression: FP2, linear splines and MARS.

Every fitter returns a :class:`FittedCurve` whose predictions come from a
logistic fit, so they are probabilities on the whole duration range.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .design import equidistant_arms
from .errors import DomainError
from .glm import DesignMatrix, GlmFit, column_transform, fit_logistic, fit_subsets, predict_many
from .scenarios import D_MAX, D_MIN
from .simulate import TrialData

FP_POWERS = (-2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0, 3.0)
DEVIANCE_TIE_TOL = 1e-7

LS3_KNOTS = (12.5, 15.0, 17.5)
LS5_KNOTS = tuple(equidistant_arms(7)[1:-1])
LSNE_KNOTS = (11.0, 13.0, 15.0)
SPLINE_KNOTS = {"LS3": LS3_KNOTS, "LS5": LS5_KNOTS, "LSNE": LSNE_KNOTS}

METHODS = ("FP", "LS3", "LS5", "LSNE", "MARS")
# Closed-test FP variant (FP2 vs linear, then vs best FP1); not part of the presets.
EXTRA_METHODS = ("FP-FSP",)
FSP_ALPHA = 0.05

MARS_MAX_TERMS = 11
MARS_MIN_RSS_GAIN = 1e-10
GCV_PENALTY = 2.0


def _power(d, p):
    return np.log(d) if p == 0 else d ** p


def fp_pairs() -> list[tuple[float, float]]:
    """All 36 FP2 power pairs (p1 <= p2) in lexicographic order."""
    return [(p1, p2) for i, p1 in enumerate(FP_POWERS) for p2 in FP_POWERS[i:]]


def _check_power(p):
    if p not in FP_POWERS:
        raise DomainError(f"power {p!r} is not in {FP_POWERS}")


def fp_columns(duration, p1: float, p2: float) -> np.ndarray:
    """FP2 columns without the intercept; repeated powers add a log factor."""
    _check_power(p1)
    _check_power(p2)
    if p1 > p2:
        raise DomainError("need p1 <= p2")
    d = np.atleast_1d(np.asarray(duration, dtype=float))
    if np.any(d <= 0):
        raise DomainError("durations must be positive")
    first = _power(d, p1)
    second = first * np.log(d) if p1 == p2 else _power(d, p2)
    return np.column_stack([first, second])


def fp_basis(duration: float, p1: float, p2: float) -> np.ndarray:
    return np.concatenate([[1.0], fp_columns(duration, p1, p2)[0]])


def _check_knots(knots):
    k = np.asarray(knots, dtype=float)
    if np.any(np.diff(k) <= 0):
        raise DomainError("knots must be strictly ascending")
    if k.size and (k[0] <= D_MIN or k[-1] >= D_MAX):
        raise DomainError(f"knots must lie strictly inside ({D_MIN:g}, {D_MAX:g})")
    return k


def spline_columns(duration, knots) -> np.ndarray:
    d = np.atleast_1d(np.asarray(duration, dtype=float))
    k = _check_knots(knots)
    return np.column_stack([d, np.maximum(d[:, None] - k[None, :], 0.0)])


def spline_basis(duration: float, knots) -> np.ndarray:
    return np.concatenate([[1.0], spline_columns(duration, knots)[0]])


class Term(NamedTuple):
    """A MARS basis term: intercept (sign 0), ``max(0, D-K)`` (+1) or ``max(0, K-D)`` (-1)."""

    knot: float | None
    sign: int

    def __call__(self, d):
        d = np.asarray(d, dtype=float)
        if self.sign == 0:
            return np.ones_like(d)
        if self.sign > 0:
            return np.maximum(d - self.knot, 0.0)
        return np.maximum(self.knot - d, 0.0)


INTERCEPT = Term(None, 0)


def hinge_matrix(duration, terms) -> np.ndarray:
    d = np.atleast_1d(np.asarray(duration, dtype=float))
    return np.column_stack([t(d) for t in terms])


@dataclass(frozen=True)
class FittedCurve:
    """A fitted duration-response curve.

    ``basis_description`` is ``(p1, p2)`` for FP, the knot tuple for linear
    splines and the tuple of :class:`Term` for MARS; together with
    ``glm_fit.coefficients`` it fully determines :meth:`predict`.
    """

    method: str
    basis_description: tuple
    glm_fit: GlmFit

    def basis(self, duration) -> np.ndarray:
        d = np.atleast_1d(np.asarray(duration, dtype=float))
        if self.method.startswith("FP"):
            powers = self.basis_description
            cols = fp_columns(d, *powers) if len(powers) == 2 else _power(d, powers[0])[:, None]
            return np.column_stack([np.ones_like(d), cols])
        if self.method == "MARS":
            return hinge_matrix(d, self.basis_description)
        return np.column_stack([np.ones_like(d), spline_columns(d, self.basis_description)])

    def log_odds(self, duration) -> np.ndarray:
        return self.basis(duration) @ self.glm_fit.coefficients

    def predict(self, duration):
        out = predict_many(self.glm_fit.coefficients, self.basis(duration))
        return out if np.ndim(duration) else float(out[0])

    __call__ = predict


# -- fractional polynomials -------------------------------------------------

def _fp_column_bank(d):
    base = np.column_stack([_power(d, p) for p in FP_POWERS])
    return np.column_stack([base, base * np.log(d)[:, None]])


def _fp_subsets():
    m = len(FP_POWERS)
    return np.array([(i, j if j != i else m + i)
                     for i in range(m) for j in range(i, m)], dtype=np.intp)


_FP_SUBSETS = _fp_subsets()


def fp2_candidates(data: TrialData):
    """Fit all 36 FP2 models; returns ``(pairs, coefficients, deviance, converged, ridged, iterations)``."""
    if data.n_arms < 3:
        raise DomainError(f"FP2 has 3 parameters but the trial has {data.n_arms} arms")
    bank = _fp_column_bank(data.durations)
    return (fp_pairs(), *fit_subsets(bank, _FP_SUBSETS, data.cures, data.n))


def fit_fp2(data: TrialData) -> FittedCurve:
    """Best-deviance FP2 model; ties go to the lexicographically smallest pair."""
    pairs, beta, dev, conv, ridged, iters = fp2_candidates(data)
    best = 0
    for i in range(1, len(pairs)):
        if dev[i] < dev[best] - DEVIANCE_TIE_TOL:
            best = i
    bank = _fp_column_bank(data.durations)[:, _FP_SUBSETS[best]]
    fit = GlmFit(beta[best], float(dev[best]), bool(conv[best]), int(iters[best]),
                 bool(ridged[best]), column_transform(bank))
    return FittedCurve("FP", pairs[best], fit)


def fit_fp_fsp(data: TrialData, alpha: float = FSP_ALPHA) -> FittedCurve:
    """FP with the closed-test function selection procedure.

    The best FP2 model is kept only if it beats the linear model (3 df) and
    the best FP1 model (2 df) in likelihood-ratio tests at level ``alpha``.
    """
    from scipy.stats import chi2

    fp2 = fit_fp2(data)
    bank = np.column_stack([_power(data.durations, p) for p in FP_POWERS])
    subsets = np.arange(len(FP_POWERS), dtype=np.intp)[:, None]
    beta, dev, conv, ridged, iters = fit_subsets(bank, subsets, data.cures, data.n)
    linear = FP_POWERS.index(1.0)
    best1 = int(np.argmin(dev))
    if dev[linear] - fp2.glm_fit.deviance < chi2.ppf(1.0 - alpha, 3):
        pick = linear
    elif dev[best1] - fp2.glm_fit.deviance < chi2.ppf(1.0 - alpha, 2):
        pick = best1
    else:
        return FittedCurve("FP-FSP", fp2.basis_description, fp2.glm_fit)
    fit = GlmFit(beta[pick], float(dev[pick]), bool(conv[pick]), int(iters[pick]),
                 bool(ridged[pick]), column_transform(bank[:, [pick]]))
    return FittedCurve("FP-FSP", (FP_POWERS[pick],), fit)


# -- linear splines ---------------------------------------------------------

def fit_linear_spline(data: TrialData, knots, method: str = "LS") -> FittedCurve:
    knots = tuple(float(k) for k in _check_knots(knots))
    X = np.column_stack([np.ones(data.n_arms), spline_columns(data.durations, knots)])
    fit = fit_logistic(DesignMatrix(X, data.n, data.cures))
    return FittedCurve(method, knots, fit)


# -- MARS -------------------------------------------------------------------

def _wls_rss(B, p, w):
    sw = np.sqrt(w)
    coef, *_ = np.linalg.lstsq(B * sw[:, None], p * sw, rcond=None)
    r = p - B @ coef
    return float(np.sum(w * r * r))


def _full_rank(B) -> bool:
    return np.linalg.matrix_rank(B) == B.shape[1]


def mars_forward(data: TrialData, max_terms: int) -> list[Term]:
    """Greedy forward pass over hinge pairs with knots at the arm durations.

    Hinges that are linearly dependent on the current basis at the observed
    arms are dropped from a candidate pair; a knot contributing nothing is
    skipped. The pass stops at ``max_terms`` terms, when the best weighted
    RSS reduction falls below ``MARS_MIN_RSS_GAIN`` or when every candidate
    is dependent.
    """
    if max_terms < 1 or max_terms % 2 == 0:
        raise DomainError("max_terms must be odd and >= 1")
    d, p, w = data.durations, data.proportions, data.n
    terms = [INTERCEPT]
    B = hinge_matrix(d, terms)
    rss = _wls_rss(B, p, w)
    while len(terms) < max_terms:
        best = None
        for knot in d:
            added = []
            trial = B
            for sign in (1, -1):
                t = Term(float(knot), sign)
                if t in terms:
                    continue
                cand = np.column_stack([trial, t(d)])
                if _full_rank(cand):
                    added.append(t)
                    trial = cand
            if not added or len(terms) + len(added) > max_terms:
                continue
            cand_rss = _wls_rss(trial, p, w)
            if best is None or cand_rss < best[0]:
                best = (cand_rss, added, trial)
        if best is None or rss - best[0] < MARS_MIN_RSS_GAIN:
            break
        rss, added, B = best
        terms.extend(added)
    return terms


def effective_parameters(n_terms: int, penalty: float = GCV_PENALTY) -> float:
    return n_terms + penalty * (n_terms - 1) / 2.0


def gcv(terms, data: TrialData, penalty: float = GCV_PENALTY) -> float:
    B = hinge_matrix(data.durations, terms)
    rss = _wls_rss(B, data.proportions, data.n)
    N = float(np.sum(data.n))
    c = effective_parameters(len(terms), penalty)
    return (rss / N) / (1.0 - c / N) ** 2


def mars_prune(terms, data: TrialData) -> list[Term]:
    """Backward elimination keeping the visited subset with the lowest GCV."""
    current = list(terms)
    best, best_score = list(current), gcv(current, data)
    while len(current) > 1:
        scored = []
        for i, t in enumerate(current):
            if t == INTERCEPT:
                continue
            subset = current[:i] + current[i + 1:]
            scored.append((gcv(subset, data), subset))
        score, current = min(scored, key=lambda s: s[0])
        if score <= best_score:
            best, best_score = list(current), score
    return best


def fit_mars(data: TrialData) -> FittedCurve:
    max_terms = min(2 * data.n_arms - 1, MARS_MAX_TERMS)
    terms = mars_prune(mars_forward(data, max_terms), data)
    X = hinge_matrix(data.durations, terms)
    fit = fit_logistic(DesignMatrix(X, data.n, data.cures))
    return FittedCurve("MARS", tuple(terms), fit)


def fit_method(method: str, data: TrialData) -> FittedCurve:
    if method == "FP":
        return fit_fp2(data)
    if method in SPLINE_KNOTS:
        return fit_linear_spline(data, SPLINE_KNOTS[method], method)
    if method == "MARS":
        return fit_mars(data)
    if method == "FP-FSP":
        return fit_fp_fsp(data)
    raise DomainError(f"unknown method {method!r}; expected one of {METHODS + EXTRA_METHODS}")
