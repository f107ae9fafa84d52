import numpy as np
import pytest

from conftest import make_sample, make_session
from oracles import quantile_bruteforce
from vrsaccade.errors import EmptyInput
from vrsaccade.preprocess import filter_invalid, filter_outliers, iqr_fences, quantile


def test_all_valid_is_identity():
    s = make_session([make_sample(t=k / 90) for k in range(5)])
    clean, removed = filter_invalid(s)
    assert clean == s
    assert removed == 0


def test_one_invalid_eye_dropped():
    samples = [make_sample(t=k / 90) for k in range(5)]
    samples[2] = make_sample(t=2 / 90, flags=(True, False, True))
    clean, removed = filter_invalid(make_session(samples))
    assert removed == 1
    assert [s.timestamp_s for s in clean.samples] == [0, 1 / 90, 3 / 90, 4 / 90]


def test_all_invalid():
    s = make_session([make_sample(t=k / 90, flags=(False, True, True)) for k in range(4)])
    clean, removed = filter_invalid(s)
    assert len(clean) == 0
    assert removed == 4


def test_fences_one_to_eight():
    f = iqr_fences(range(1, 9), 3)
    assert (f.q1, f.q3, f.lo, f.hi) == (2.75, 6.25, -7.75, 16.75)


def test_constant_list_zero_width():
    f = iqr_fences([5, 5, 5], 10)
    assert f.lo == f.hi == 5


def test_k_zero():
    f = iqr_fences([0, 10], 0)
    assert (f.lo, f.hi) == (2.5, 7.5)


def test_empty_rejected():
    with pytest.raises(EmptyInput):
        iqr_fences([])


def test_quantile_matches_oracles():
    rng = np.random.default_rng(5)
    for _ in range(50):
        xs = rng.normal(size=int(rng.integers(1, 40))).tolist()
        for p in (0.0, 0.1, 0.25, 0.5, 0.75, 1.0):
            got = quantile(sorted(xs), p)
            assert abs(got - quantile_bruteforce(xs, p)) < 1e-12
            assert abs(got - np.percentile(xs, 100 * p)) < 1e-12


def test_all_inside():
    vals = [1.0, 2.0, 3.0]
    kept, removed = filter_outliers(vals, iqr_fences(vals, 3))
    assert kept == vals
    assert removed == []


def test_value_on_fence_retained():
    f = iqr_fences([0, 10], 0)
    kept, removed = filter_outliers([2.5, 7.5, 7.5000001], f)
    assert kept == [2.5, 7.5]
    assert removed == [2]


def test_hundred_removed():
    vals = list(range(1, 9)) + [100]
    f = iqr_fences(vals, 3)
    # oracle fences: n=9 -> q1 at position 2, q3 at position 6
    assert (f.q1, f.q3, f.hi) == (3, 7, 19)
    _, removed = filter_outliers(vals, f)
    assert removed == [8]
