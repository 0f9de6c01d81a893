import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from durtrial.design import make_design
from durtrial.errors import DomainError
from durtrial.fitters import (INTERCEPT, FittedCurve, LS3_KNOTS, LS5_KNOTS, LSNE_KNOTS, METHODS, Term,
                              effective_parameters, fit_fp2, fit_fp_fsp, fit_linear_spline,
                              fit_mars, fit_method, fp2_candidates, fp_basis, fp_pairs, gcv,
                              mars_forward, mars_prune, spline_basis)
from durtrial.glm import DesignMatrix, GlmFit, fit_logistic
from durtrial.metrics import integration_grid, sabc
from durtrial.scenarios import get_scenario, true_curve_grid
from durtrial.simulate import TrialData, derive_stream, simulate_trial

ED7 = make_design("ED7", 504)


def _noise_free(sid, design=ED7):
    n = np.asarray(design.allocation, float)
    cures = np.round(n * true_curve_grid(sid, design.arms))
    return TrialData(np.asarray(design.arms, float), n, cures)


def _simulated(sid=1, i=0, design=ED7):
    return simulate_trial(design, sid, derive_stream(7, sid, design.key, i))


def test_fp_basis_examples():
    np.testing.assert_allclose(fp_basis(10, 0, 0), [1, math.log(10), math.log(10) ** 2])
    np.testing.assert_allclose(fp_basis(4, -0.5, 2), [1, 0.5, 16])
    np.testing.assert_allclose(fp_basis(12, 1, 1), [1, 12, 12 * math.log(12)])
    with pytest.raises(DomainError):
        fp_basis(12, 1.5, 2)
    with pytest.raises(DomainError):
        fp_basis(12, 2, 1)


def test_fp_enumeration():
    pairs = fp_pairs()
    assert len(pairs) == 36 and len(set(pairs)) == 36
    assert pairs == sorted(pairs)
    assert pairs[0] == (-2, -2) and pairs[-1] == (3, 3)


def test_fp2_search_is_exhaustive():
    data = _simulated(3)
    pairs, _, dev, *_ = fp2_candidates(data)
    oracle = []
    for p1, p2 in pairs:
        X = np.array([fp_basis(d, p1, p2) for d in data.durations])
        oracle.append(fit_logistic(DesignMatrix(X, data.n, data.cures)).deviance)
    np.testing.assert_allclose(dev, oracle, atol=1e-7)
    best = fit_fp2(data)
    assert best.glm_fit.deviance <= min(oracle) + 1e-7


def test_fp2_tie_break_on_saturated_data():
    data = TrialData.from_rows([(10, 50, 30), (15, 50, 40), (20, 50, 45)])
    assert fit_fp2(data).basis_description == (-2.0, -2.0)


def test_fp2_needs_three_arms():
    with pytest.raises(DomainError):
        fit_fp2(TrialData.from_rows([(10, 50, 30), (20, 50, 45)]))


def test_fp2_noise_free_scenario5():
    assert sabc(get_scenario(5), fit_fp2(_noise_free(5))) < 0.01


def _power(d, p):
    return math.log(d) if p == 0 else d ** p


def _dpower(d, p):
    return 1 / d if p == 0 else p * d ** (p - 1)


@pytest.mark.parametrize("p1, p2", fp_pairs())
def test_fp_log_odds_derivative_matches_finite_differences(p1, p2):
    b = np.array([0.3, -0.7, 0.2])
    fit = FittedCurve("FP", (p1, p2), GlmFit(b, 0.0, True, 1, False, None))
    d, h = 13.3, 1e-5
    if p1 == p2:
        second = _dpower(d, p1) * math.log(d) + _power(d, p1) / d
    else:
        second = _dpower(d, p2)
    analytic = b[1] * _dpower(d, p1) + b[2] * second
    numeric = (fit.log_odds(d + h)[0] - fit.log_odds(d - h)[0]) / (2 * h)
    assert numeric == pytest.approx(analytic, rel=1e-6, abs=1e-8)


def test_spline_basis_examples():
    np.testing.assert_allclose(spline_basis(16, LS3_KNOTS), [1, 16, 3.5, 1, 0])
    np.testing.assert_allclose(spline_basis(10, LSNE_KNOTS), [1, 10, 0, 0, 0])
    np.testing.assert_allclose(LS5_KNOTS, [35 / 3, 40 / 3, 15, 50 / 3, 55 / 3])
    with pytest.raises(DomainError):
        spline_basis(12, (15, 12.5))
    with pytest.raises(DomainError):
        spline_basis(12, (10, 12.5))


@pytest.mark.parametrize("method, knots", [("LS3", LS3_KNOTS), ("LS5", LS5_KNOTS),
                                           ("LSNE", LSNE_KNOTS)])
def test_spline_log_odds_piecewise_linear(method, knots):
    fit = fit_linear_spline(_simulated(4), knots, method)
    grid = integration_grid()
    eta = fit.log_odds(grid)
    second = eta[2:] - 2 * eta[1:-1] + eta[:-2]
    lo, hi = grid[:-2], grid[2:]
    clean = np.ones_like(second, bool)
    for k in knots:
        clean &= ~((lo < k + 1e-9) & (hi > k - 1e-9))
    assert np.max(np.abs(second[clean])) < 1e-8


def test_mars_single_term_is_intercept():
    assert mars_forward(_simulated(1), 1) == [INTERCEPT]


def test_mars_effective_parameters():
    assert effective_parameters(1) == 1
    assert effective_parameters(5) == 9


def test_mars_gcv_formula():
    data = _simulated(6)
    terms = [INTERCEPT, Term(15.0, 1)]
    B = np.column_stack([t(data.durations) for t in terms])
    w = data.n
    coef = np.linalg.lstsq(B * np.sqrt(w)[:, None], data.proportions * np.sqrt(w), rcond=None)[0]
    rss = np.sum(w * (data.proportions - B @ coef) ** 2)
    N = w.sum()
    assert gcv(terms, data) == pytest.approx((rss / N) / (1 - 3 / N) ** 2, rel=1e-12)


@given(st.integers(1, 8), st.integers(0, 50))
@settings(max_examples=25, deadline=None)
def test_mars_prune_and_knots(sid, i):
    data = _simulated(sid, i)
    forward = mars_forward(data, 11)
    pruned = mars_prune(forward, data)
    assert INTERCEPT in pruned
    assert gcv(pruned, data) <= gcv(forward, data) + 1e-15
    assert {t.knot for t in pruned if t.sign} <= set(data.durations.tolist())
    assert len(forward) <= min(2 * data.n_arms - 1, 11)


def test_mars_recovers_piecewise_linear_truth():
    data = _noise_free(6)
    fit = fit_mars(data)
    assert sabc(get_scenario(6), fit) < 0.01


@pytest.mark.parametrize("method", METHODS + ("FP-FSP",))
def test_methods_deterministic_and_consistent(method):
    data = _simulated(5, 3)
    a, b = fit_method(method, data), fit_method(method, data)
    grid = integration_grid()
    assert np.array_equal(a(grid), b(grid))
    eta = a.basis(grid) @ a.glm_fit.coefficients
    np.testing.assert_allclose(a(grid), 1 / (1 + np.exp(-eta)), atol=1e-12)
    assert np.all((a(grid) > 0) & (a(grid) < 1))


def test_unknown_method():
    with pytest.raises(DomainError):
        fit_method("GAM", _simulated())


def test_fsp_falls_back_to_linear_on_linear_truth():
    d = np.linspace(10, 20, 7)
    n = np.full(7, 72.0)
    p = 1 / (1 + np.exp(-(-3 + 0.25 * d)))
    fit = fit_fp_fsp(TrialData(d, n, np.round(n * p)))
    assert fit.basis_description == (1.0,)
