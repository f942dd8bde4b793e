import math

import numpy as np
import pytest
from scipy import stats as sps

from slqlab.errors import NonPositiveStep
from slqlab.limits import (
    ConvLimitParams,
    HwLimitParams,
    clamp_recursion,
    conv_limit_terminal,
    drift_b,
    euler_hw,
    gamma_halfspace,
    gamma_interval,
    hw_limit_params,
    hw_limit_terminal,
    modulus,
    simulate_conv_limit,
    simulate_hw_limit,
    sup_distance,
)
from slqlab.model import symmetric_two_class
from slqlab.scaling import GridPath

C = 1 + math.sqrt(2)


def test_drift_examples():
    assert list(drift_b([0.0, 0.0], (2, 2))) == [0.0, 0.0]
    assert list(drift_b([1.0, 1.0], (2, 2))) == [0.0, 0.0]
    assert list(drift_b([1.0, -1.0], (2, 2))) == [-2.0, 2.0]


def test_halfspace_interior():
    g = np.linspace(0, 1, 11)
    f = GridPath(g, np.stack([0.2 * g, -g], axis=1))
    y, reg = gamma_halfspace(f, 1.0)
    assert np.array_equal(y.values, f.values)
    assert not reg.values.any()


def test_halfspace_diagonal():
    g = np.linspace(0, 1, 101)
    f = GridPath(g, np.stack([g, g], axis=1))
    y, reg = gamma_halfspace(f, 1.0, k=0)
    expect = np.maximum(2 * g - 1, 0)
    assert np.allclose(reg.values[:, 0], expect, atol=1e-12)
    assert np.allclose(y.values[:, 0], g - expect, atol=1e-12)
    assert np.array_equal(y.values[:, 1], g)


def test_halfspace_constant_overshoot():
    f = GridPath([0.0, 0.5, 1.0], np.ones((3, 2)))
    y, reg = gamma_halfspace(f, 1.0)
    assert np.all(reg.values == 1.0)
    assert np.all(y.values.sum(axis=1) == 1.0)


def test_interval_examples():
    g = np.linspace(0, 1, 101)
    assert np.all(gamma_interval(GridPath(g, np.full(101, 0.5)), 1.0).values == 0.5)
    assert np.allclose(gamma_interval(GridPath(g, 2 * g), 1.0).values[:, 0], np.minimum(2 * g, 1), atol=1e-12)
    assert np.all(gamma_interval(GridPath(g, -g), 1.0).values == 0.0)


def test_hw_limit_fixed_point():
    p = HwLimitParams((0.0, 0.0), (0.0, 0.0), (2.0, 2.0), 0.5, 0, (0.0, 0.0))
    path, L = simulate_hw_limit(p, dt=0.01, T=1.0, seed=1, with_regulator=True)
    assert not path.values.any()
    assert not L.values.any()


def test_hw_limit_ode_slide_against_finer_run():
    p = HwLimitParams((3.0, 3.0), (0.0, 0.0), (2.0, 2.0), 0.25, 0, (0.0, 0.0))
    dt = 1e-3
    coarse, L = simulate_hw_limit(p, dt=dt, T=1.0, seed=0, with_regulator=True)
    fine = simulate_hw_limit(p, dt=dt / 10, T=1.0, seed=0)
    assert np.max(np.abs(coarse.at_end() - fine.at_end())) < 5 * dt
    assert L.at_end() > 0
    assert np.all(coarse.values.sum(axis=1) <= 0.5 + 1e-12)
    assert coarse.at_end().sum() == pytest.approx(0.5)


def test_hw_limit_determinism_and_bad_step():
    p = hw_limit_params(symmetric_two_class())
    a = simulate_hw_limit(p, dt=1e-3, T=0.5, seed=7)
    b = simulate_hw_limit(p, dt=1e-3, T=0.5, seed=7)
    assert np.array_equal(a.values, b.values)
    with pytest.raises(NonPositiveStep):
        simulate_hw_limit(p, dt=0.0)
    with pytest.raises(NonPositiveStep):
        simulate_conv_limit(ConvLimitParams(0.0, 1.0, 1.0), dt=-1.0)


def test_hw_limit_complementarity():
    p = HwLimitParams((2.0, 2.0), (1.0, 1.0), (2.0, 2.0), 0.1, 1, (0.0, 0.0))
    path, L = simulate_hw_limit(p, dt=1e-3, T=1.0, seed=3, with_regulator=True)
    dl = np.diff(L.values[:, 0])
    assert np.all(dl >= 0)
    assert np.all(path.values.sum(axis=1) <= p.boundary + 1e-12)
    on = np.isclose(path.values[1:].sum(axis=1), p.boundary, atol=1e-12)
    assert dl.max() > 0
    assert np.all(on[dl > 0])


def test_conv_limit_examples():
    g = np.arange(1001) * 1e-3
    assert not simulate_conv_limit(ConvLimitParams(0.0, 0.0, 1.0), dt=1e-3, T=1.0).values.any()
    drift = simulate_conv_limit(ConvLimitParams(1.0, 0.0, 0.5), dt=1e-3, T=1.0)
    assert np.allclose(drift.values[:, 0], np.minimum(g, 0.5), atol=1e-12)
    a = simulate_conv_limit(ConvLimitParams(0.3, 1.0, 1.0), dt=1e-3, seed=5)
    b = simulate_conv_limit(ConvLimitParams(0.3, 1.0, 1.0), dt=1e-3, seed=5)
    assert np.array_equal(a.values, b.values)


def rbm_cdf(y, T, beta=1.0, A=1.0, terms=200):
    """Exact CDF at time T of driftless reflected BM on [0, beta] started at 0."""
    y = np.asarray(y, dtype=float)
    k = np.arange(1, terms + 1)[:, None]
    series = 2 / (k * np.pi) * np.sin(k * np.pi * y / beta) * np.exp(-A * (k * np.pi / beta) ** 2 * T / 2)
    return np.clip(y / beta + series.sum(axis=0), 0, 1)


def test_conv_limit_terminal_matches_exact_law():
    x = conv_limit_terminal(ConvLimitParams(0.0, 1.0, 1.0), dt=1e-4, T=0.5, paths=10_000, seed=2)
    assert sps.kstest(x, lambda y: rbm_cdf(y, 0.5)).statistic < 0.02


def test_euler_self_convergence():
    p = hw_limit_params(symmetric_two_class())
    dt, T, paths = 0.01, 1.0, 10_000
    rng = np.random.default_rng(11)
    steps = int(T / dt)
    fine = [np.asarray(p.lambda_hat) * dt / 2 + np.sqrt(np.asarray(p.A_diag) * dt / 2) * rng.standard_normal((paths, 2))
            for _ in range(2 * steps)]
    coarse = [fine[2 * j] + fine[2 * j + 1] for j in range(steps)]
    xf, _ = euler_hw(p, dt / 2, iter(fine))
    xc, _ = euler_hw(p, dt, iter(coarse))
    assert np.all(np.abs(xf.mean(axis=0) - xc.mean(axis=0)) < 3 * dt)


def test_hw_limit_terminal_in_state_space():
    p = hw_limit_params(symmetric_two_class())
    x, L = hw_limit_terminal(p, 1e-3, 1.0, 500, seed=1)
    assert x.shape == (500, 2)
    assert np.all(x.sum(axis=1) <= p.boundary + 1e-12)
    assert np.all(L >= 0)


def random_paths(rng, steps=128):
    grid = np.linspace(0, 1, steps + 1)
    inc = rng.standard_normal((steps, 2)) / math.sqrt(steps) + rng.normal(0, 1, 2) / steps
    return grid, np.vstack([np.zeros(2), np.cumsum(inc, axis=0)]) + rng.normal(0, 0.5, 2)


def test_halfspace_lipschitz_and_modulus():
    rng = np.random.default_rng(0)
    for _ in range(1000):
        grid, f = random_paths(rng)
        _, h = random_paths(rng)
        h = f + 0.3 * (h - h[0])
        yf = gamma_halfspace(GridPath(grid, f), 1.0)[0].values
        yh = gamma_halfspace(GridPath(grid, h), 1.0)[0].values
        assert sup_distance(yf, yh) <= C * sup_distance(f, h) + 1e-12
    for _ in range(100):
        grid, f = random_paths(rng)
        y = gamma_halfspace(GridPath(grid, f), 1.0, k=1)[0].values
        for theta in (1 / 8, 1 / 4):
            assert modulus(y, grid, theta) <= C * modulus(f, grid, theta) + 1e-12


def test_halfspace_complementarity():
    rng = np.random.default_rng(1)
    for _ in range(200):
        grid, f = random_paths(rng)
        y, g = gamma_halfspace(GridPath(grid, f), 0.5)
        dg = np.diff(g.values[:, 0])
        assert np.all(dg >= 0)
        assert np.all(y.values.sum(axis=1) <= 0.5 + 1e-12)
        assert np.allclose(y.values[1:][dg > 0].sum(axis=1), 0.5, atol=1e-12)


def test_interval_comparison_and_complementarity():
    rng = np.random.default_rng(2)
    for _ in range(1000):
        walk = np.concatenate([[0], np.cumsum(rng.integers(-3, 4, 200))]).astype(float)
        a1, a2 = sorted(rng.choice(np.arange(1, 30), 2, replace=False))
        p1, lo, hi = clamp_recursion(walk, float(a1))
        p2, _, _ = clamp_recursion(walk, float(a2))
        assert np.max(np.abs(p1 - p2)) <= a2 - a1
        assert np.array_equal(p1, walk + lo - hi)
        dlo, dhi = np.diff(lo), np.diff(hi)
        assert np.all(dlo >= 0) and np.all(dhi >= 0)
        assert np.all(p1[1:][dlo > 0] == 0)
        assert np.all(p1[1:][dhi > 0] == a1)
