import numpy as np
import pytest

from durtrial.design import make_design
from durtrial.errors import DomainError
from durtrial.scenarios import true_curve_grid
from durtrial.simulate import TrialData, derive_stream, simulate_trial

ED7 = make_design("ED7", 504)


def _trial(seed=1, sid=5, label=ED7.key, i=0):
    return simulate_trial(ED7, sid, derive_stream(seed, sid, label, i))


def test_same_inputs_same_data():
    a, b = _trial(), _trial()
    assert a.rows == b.rows


def test_stream_sensitivity():
    base = _trial()
    assert _trial(i=1).rows != base.rows
    assert _trial(seed=2).rows != base.rows
    assert _trial(label="ED7:505").rows != base.rows


def test_degenerate_certain_cure():
    data = simulate_trial(ED7, lambda d: np.ones_like(d), derive_stream(0, 1, "x", 0))
    assert np.array_equal(data.cures, data.n)


def test_rows_follow_design():
    data = _trial()
    assert np.array_equal(data.durations, np.asarray(ED7.arms))
    assert np.all(data.cures <= data.n) and data.cures.sum() <= data.n.sum()


def test_empirical_rates_converge():
    reps = 10_000
    props = np.array([_trial(seed=99, i=i).proportions for i in range(reps)])
    f = true_curve_grid(5, ED7.arms)
    n = np.asarray(ED7.allocation, float)
    mean = props.mean(axis=0)
    assert abs(mean[0] - 0.700) < 0.01
    assert np.all(np.abs(mean - f) < 4 * np.sqrt(f * (1 - f) / (n * reps)))


def test_trialdata_invariants():
    with pytest.raises(DomainError):
        TrialData.from_rows([(10, 5, 6), (20, 5, 1)])
    with pytest.raises(DomainError):
        TrialData.from_rows([(20, 5, 1), (10, 5, 1)])
    with pytest.raises(DomainError):
        derive_stream(1, 1, "ED7:504", -1)
