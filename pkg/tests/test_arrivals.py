import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from slqlab import arrivals as arr
from slqlab.errors import UnsupportedDistribution
from slqlab.model import ModelData, derive


@pytest.fixture
def p100():
    return derive(ModelData(mu=(2, 2), lam=(1, 1), beta1=1.0), 100, 0.5)


def brute_force_count(cls, t, n, m, k, periods=200):
    """Enumerate the arrival list period by period and count those <= t."""
    tau = m / n
    count = 0
    for j in range(periods):
        if cls == k - 1:
            times = [(j + 1) * tau] * m
        else:
            times = [j * tau + tau / 2 + l / (2 * n) for l in range(m)]
        count += sum(1 for s in times if s <= t + 1e-12)
    return count


def test_pattern_count_examples(p100):
    assert arr.pattern_count(0, 0.05, p100, 1) == 0
    assert arr.pattern_count(0, 0.1, p100, 1) == 10
    assert arr.pattern_count(1, 0.05, p100, 1) == 1
    assert arr.pattern_count(0, 0.25, p100, 1) == 20


def test_pattern_count_k2_swaps_roles(p100):
    for t in np.linspace(0, 0.5, 37):
        assert arr.pattern_count(1, t, p100, 2) == arr.pattern_count(0, t, p100, 1)
        assert arr.pattern_count(0, t, p100, 2) == arr.pattern_count(1, t, p100, 1)


@given(st.integers(2, 400), st.floats(0.05, 0.5), st.floats(0, 3), st.sampled_from([0, 1]))
def test_pattern_count_matches_enumeration(n, a, t, cls):
    p = derive(ModelData(mu=(2, 2), lam=(1, 1), beta1=1.0), n, a)
    periods = int(t / p.tau) + 2
    assert arr.pattern_count(cls, t, p, 1) == brute_force_count(cls, t, n, p.m, 1, periods)


def test_next_events_pattern_window(p100):
    ev = arr.next_events(arr.pattern_source(p100, 1), 0.0, p100.tau)
    singles = [e for e in ev if e.cls == 1]
    assert [e.time for e in singles] == pytest.approx([0.05 + 0.005 * j for j in range(10)])
    assert all(e.multiplicity == 1 for e in singles)
    batch = [e for e in ev if e.cls == 0]
    assert len(batch) == 1 and batch[0].time == pytest.approx(0.1) and batch[0].multiplicity == 10
    assert ev[-1] == batch[0]


def test_next_events_poisson_zero_rate():
    assert arr.next_events(arr.poisson_source(0, 0.0), 0.0, 5.0, np.random.default_rng(0)) == []


def test_next_events_renewal_deterministic():
    src = arr.renewal_source(0, "deterministic", mean=1.0, accel=2.0)
    ev = arr.next_events(src, 0.0, 1.0, np.random.default_rng(0))
    assert [e.time for e in ev] == [0.5, 1.0]


def test_unknown_renewal_tag():
    with pytest.raises(UnsupportedDistribution):
        arr.renewal_source(0, "pareto")


def test_pattern_is_deterministic(p100):
    a = arr.event_arrays(arr.pattern_source(p100, 1), 0.0, 3.0)
    b = arr.event_arrays(arr.pattern_source(p100, 1), 0.0, 3.0, np.random.default_rng(1))
    for x, y in zip(a, b):
        assert np.array_equal(x, y)


@settings(max_examples=50, deadline=None)
@given(st.integers(4, 2000), st.sampled_from([1, 2]), st.lists(st.floats(0, 2), min_size=1, max_size=20))
def test_counting_consistency(n, k, ts):
    p = derive(ModelData(mu=(2, 2), lam=(1, 1), beta1=1.0), n, 0.3)
    times, cls, mult = arr.event_arrays(arr.pattern_source(p, k), 0.0, 2.0)
    assert np.all(np.diff(times) > 0)
    assert np.all(mult >= 1)
    for t in ts:
        for c in (0, 1):
            sel = (cls == c) & (times <= t)
            assert int(mult[sel].sum()) == arr.pattern_count(c, t, p, k)


def test_period_identity_and_totals():
    p = derive(ModelData(mu=(2, 2), lam=(1, 1)), 6400, 0.3)
    tau = p.tau
    ts = np.linspace(tau / 97, tau, 41)
    for c in (0, 1):
        base = arr.pattern_count_array(c, ts, p, 1)
        for j in (1, 7, 250, 1000):
            shifted = arr.pattern_count_array(c, ts + j * tau, p, 1)
            assert np.array_equal(shifted - j * p.m, base)
            assert arr.pattern_count(c, j * tau, p, 1) == j * p.m
    grid = np.linspace(0, 1, 5001)
    for c in (0, 1):
        assert np.all(np.diff(arr.pattern_count_array(c, grid, p, 1)) >= 0)


def test_scaling_check_pattern_bounds():
    n, a = 10**4, 0.3
    p = derive(ModelData(mu=(2, 2), lam=(1, 1)), n, a)
    lln, clt = arr.scaling_check(arr.pattern_source(p, 1), n, 1.0, 1e-5, cls=0)
    assert lln <= n ** (a - 1) + 1e-12
    assert clt <= n ** (a - 0.5) + 1e-12


def test_pattern_clt_deviation_vanishes():
    devs = []
    for n in (10**2, 10**3, 10**4, 10**5):
        p = derive(ModelData(mu=(2, 2), lam=(1, 1)), n, 0.3)
        devs.append(arr.scaling_check(arr.pattern_source(p, 1), n, 1.0, 1 / (2 * n), cls=0)[1])
    assert all(b < a for a, b in zip(devs, devs[1:]))


def test_scaling_check_poisson():
    n = 10**4
    fails = 0
    for seed in range(100):
        lln, _ = arr.scaling_check(arr.poisson_source(0, float(n)), n, 1.0, 1e-3, rng=np.random.default_rng(seed))
        fails += lln > 0.05
    assert fails <= 1


def test_renewal_rate_and_scv():
    rng = np.random.default_rng(3)
    src = arr.renewal_source(0, "gamma", mean=1.0, scv=0.25, accel=500.0)
    t, _, _ = arr.event_arrays(src, 0.0, 20.0, rng)
    gaps = np.diff(t)
    assert t.size / 20.0 == pytest.approx(500.0, rel=0.02)
    assert gaps.var() / gaps.mean() ** 2 == pytest.approx(0.25, rel=0.05)


def test_merge_streams_sorted():
    rng = np.random.default_rng(0)
    t, c, m = arr.merge_streams([arr.poisson_source(0, 50.0), arr.poisson_source(1, 80.0)], 2.0, rng)
    assert np.all(np.diff(t) >= 0)
    assert set(np.unique(c)) == {0, 1}
    assert math.isclose(t.size / 2.0, 130.0, rel_tol=0.2)
