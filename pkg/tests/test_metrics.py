import numpy as np
import pytest
from hypothesis import given, strategies as st

from durtrial.errors import DomainError
from durtrial.metrics import (expected_error, integration_grid, sabc, summarize, to_percent)
from durtrial.scenarios import get_scenario


def _const(c):
    return lambda d: np.full(np.shape(d), c, dtype=float)


def test_sabc_identical_curves_is_zero():
    s1 = get_scenario(1)
    assert sabc(s1, s1) == 0.0


def test_sabc_constant_offset():
    s3 = get_scenario(3)
    assert sabc(s3, lambda d: s3(d) + 0.02) == pytest.approx(0.02, abs=1e-12)


def test_sabc_closed_form_scenario6():
    # (1/10) * integral_10^20 0.0015 (D-10)^2 dD = 0.0015 * 1000/3 / 10
    assert sabc(get_scenario(6), _const(0.7)) == pytest.approx(0.05, abs=1e-6)


def test_grid_shape_and_errors():
    g = integration_grid()
    assert g.size == 1001 and g[0] == 10 and g[-1] == 20
    with pytest.raises(DomainError):
        integration_grid(step=0)
    with pytest.raises(DomainError):
        integration_grid(step=0.03)
    with pytest.raises(DomainError):
        integration_grid(20, 10)


def test_sabc_symmetric_and_grid_converged():
    f, g = get_scenario(1), get_scenario(4)
    assert sabc(f, g) == sabc(g, f)
    assert abs(sabc(f, g, step=0.01) - sabc(f, g, step=0.005)) < 1e-5


def test_percent_scale():
    v = sabc(get_scenario(6), _const(0.7))
    assert to_percent(v) == 100.0 * v


def test_expected_error():
    s = get_scenario(2)
    assert expected_error(s, s, [10, 12, 20]) == 0.0
    assert expected_error(s, _const(0.3), [11.0]) == pytest.approx(abs(s(11.0) - 0.3), abs=1e-15)
    assert expected_error(s, lambda d: s(d) + 0.02, [10, 14, 20]) == pytest.approx(0.02, abs=1e-12)
    assert expected_error(s, lambda d: s(d) + 0.02, [12], "squared") == pytest.approx(4e-4)
    with pytest.raises(DomainError):
        expected_error(s, s, [])


def test_summarize_examples():
    s = summarize([1, 2, 3, 4, 5])
    assert (s.min, s.p5, s.median, s.p95, s.max) == pytest.approx((1, 1.2, 3, 4.8, 5))
    one = summarize([0.3])
    assert one.min == one.p5 == one.median == one.p95 == one.max == one.mean == 0.3
    with pytest.raises(DomainError):
        summarize([])


def _oracle_quantile(values, q):
    v = sorted(values)
    h = q * (len(v) - 1)
    lo = int(h)
    return v[lo] + (h - lo) * (v[min(lo + 1, len(v) - 1)] - v[lo])


@given(st.lists(st.floats(0, 1), min_size=1, max_size=200))
def test_summarize_ordering_and_oracle(values):
    s = summarize(values)
    assert s.min <= s.p5 <= s.median <= s.p95 <= s.max
    for q, got in [(0.05, s.p5), (0.5, s.median), (0.95, s.p95)]:
        assert got == pytest.approx(_oracle_quantile(values, q), abs=1e-12)
