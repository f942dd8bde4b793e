"""Limit objects: the SLQ drift, reflection maps and Euler schemes for the limit diffusions.

Reflection in the half-space {1 . x <= N beta} pushes along -e_k; the
regulator is the running maximum of the overshoot, so a step-and-project
Euler scheme reproduces the Skorohod solution at step resolution. The
one-dimensional map onto [0, a] is computed by the clamp recursion
phi_{j+1} = clamp(phi_j + psi_{j+1} - psi_j, 0, a).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from slqlab.errors import NonPositiveStep
from slqlab.model import ModelData
from slqlab.rng import make_rng
from slqlab.scaling import GridPath


def drift_b(x, mu, N: int | None = None) -> np.ndarray:
    """b(x)_i = -mu_i (x_i - (1 . x)^+ / N); works on stacked states (..., N)."""
    x = np.asarray(x, dtype=float)
    mu = np.asarray(mu, dtype=float)
    N = x.shape[-1] if N is None else N
    share = np.maximum(x.sum(axis=-1, keepdims=True), 0.0) / N
    return -mu * (x - share)


def gamma_halfspace(f: GridPath, beta_total: float, k: int = 0) -> tuple[GridPath, GridPath]:
    """Half-space reflection: y = f - g e_k with g(t) = max_{u<=t} (1 . f(u) - beta_total)^+."""
    over = np.maximum(f.values.sum(axis=1) - beta_total, 0.0)
    g = np.maximum.accumulate(over)
    y = f.values.copy()
    y[:, k] -= g
    return GridPath(f.grid, y), GridPath(f.grid, g)


def clamp_recursion(psi: np.ndarray, a: float):
    """Two-sided reflection of ``psi`` (time along axis 0) onto [0, a].

    Returns ``(phi, eta_lower, eta_upper)`` with phi = psi + eta_lower - eta_upper.
    """
    psi = np.asarray(psi, dtype=float)
    phi = np.empty_like(psi)
    lo = np.empty_like(psi)
    hi = np.empty_like(psi)
    cur = psi[0]
    lo_acc = np.maximum(-cur, 0.0)
    hi_acc = np.maximum(cur - a, 0.0)
    cur = np.clip(cur, 0.0, a)
    phi[0], lo[0], hi[0] = cur, lo_acc, hi_acc
    for j in range(1, psi.shape[0]):
        prop = cur + (psi[j] - psi[j - 1])
        lo_acc = lo_acc + np.maximum(-prop, 0.0)
        hi_acc = hi_acc + np.maximum(prop - a, 0.0)
        cur = np.clip(prop, 0.0, a)
        phi[j], lo[j], hi[j] = cur, lo_acc, hi_acc
    return phi, lo, hi


def gamma_interval(psi: GridPath, a: float) -> GridPath:
    """Skorohod map of a scalar grid path onto [0, a]."""
    if not a > 0:
        raise ValueError("a must be > 0")
    phi, _, _ = clamp_recursion(psi.values[:, 0], a)
    return GridPath(psi.grid, phi)


def sup_distance(y1: np.ndarray, y2: np.ndarray) -> float:
    """sup over time of the Euclidean distance between two (M, d) paths."""
    d = np.asarray(y1) - np.asarray(y2)
    d = d.reshape(d.shape[0], -1)
    return float(np.max(np.sqrt((d ** 2).sum(axis=1))))


def modulus(values: np.ndarray, grid: np.ndarray, theta: float) -> float:
    """Grid version of w_T(f, theta) = sup_{s < u <= s + theta} |f(u) - f(s)|."""
    v = np.asarray(values, dtype=float).reshape(len(grid), -1)
    best = 0.0
    for lag in range(1, len(grid)):
        ok = grid[lag:] - grid[:-lag] <= theta * (1 + 1e-12)
        if not ok.any():
            break
        d = np.sqrt(((v[lag:] - v[:-lag]) ** 2).sum(axis=1))
        best = max(best, float(d[ok].max()))
    return best


@dataclass(frozen=True)
class HwLimitParams:
    """Data of the reflected SDE in {1 . x <= N beta_k} with reflection along -e_k (k zero-based)."""

    lambda_hat: tuple[float, ...]
    A_diag: tuple[float, ...]
    mu: tuple[float, ...]
    beta_k: float
    k: int
    X0: tuple[float, ...]

    def __post_init__(self):
        if any(a < 0 for a in self.A_diag):
            raise ValueError("A_diag must be >= 0")
        if not self.beta_k > 0:
            raise ValueError("beta_k must be > 0")
        if sum(self.X0) > self.N * self.beta_k + 1e-12:
            raise ValueError("X0 outside the state space")

    @property
    def N(self) -> int:
        return len(self.mu)

    @property
    def boundary(self) -> float:
        return self.N * self.beta_k


def hw_limit_params(model: ModelData, k: int = 0) -> HwLimitParams:
    """A = diag(lambda_i (sigma_i^2 + 1)), X0 = mean of the initial law."""
    x0 = model.m0.mean if model.m0.mean is not None else (0.0,) * model.num_classes
    a = tuple(l * (s2 + 1.0) for l, s2 in zip(model.lam, model.sigma_sq))
    return HwLimitParams(model.lam_hat, a, model.mu, model.beta1, k, tuple(x0))


@dataclass(frozen=True)
class ConvLimitParams:
    m_tilde: float
    A_tilde: float
    beta: float

    def __post_init__(self):
        if self.A_tilde < 0:
            raise ValueError("A_tilde must be >= 0")
        if not self.beta > 0:
            raise ValueError("beta must be > 0")


def _steps(dt: float, T: float) -> int:
    if not dt > 0:
        raise NonPositiveStep("dt must be > 0")
    return max(1, int(round(T / dt)))


def euler_hw(p: HwLimitParams, dt: float, increments: Iterable[np.ndarray], x0=None, record: bool = False):
    """Step-and-project Euler scheme driven by given Brownian increments.

    Each element of ``increments`` is a (paths, N) array of W increments
    (drift included). Returns ``(x, L)`` at the end, or the full stacks
    (steps + 1, paths, N) and (steps + 1, paths) when ``record``.
    """
    mu = np.asarray(p.mu, dtype=float)
    x = None if x0 is None else np.array(x0, dtype=float)
    xs, ls = [], []
    L = None
    for dw in increments:
        if x is None:
            x = np.broadcast_to(np.asarray(p.X0, dtype=float), dw.shape).copy()
        if L is None:
            L = np.zeros(dw.shape[0])
            if record:
                xs.append(x.copy())
                ls.append(L.copy())
        x = x + drift_b(x, mu, p.N) * dt + dw
        ell = np.maximum(x.sum(axis=1) - p.boundary, 0.0)
        x[:, p.k] -= ell
        L = L + ell
        if record:
            xs.append(x.copy())
            ls.append(L.copy())
    if record:
        return np.stack(xs), np.stack(ls)
    return x, L


def _bm_increments(p: HwLimitParams, dt: float, steps: int, paths: int, rng: np.random.Generator):
    drift = np.asarray(p.lambda_hat, dtype=float) * dt
    scale = np.sqrt(np.asarray(p.A_diag, dtype=float) * dt)
    for _ in range(steps):
        yield drift + scale * rng.standard_normal((paths, p.N))


def simulate_hw_limit(p: HwLimitParams, dt: float = 1e-4, T: float = 1.0, seed: int | None = None,
                      with_regulator: bool = False):
    """One path of the reflected SDE on the step grid."""
    steps = _steps(dt, T)
    rng = make_rng(seed)
    xs, ls = euler_hw(p, dt, _bm_increments(p, dt, steps, 1, rng), record=True)
    grid = np.arange(steps + 1) * dt
    path = GridPath(grid, xs[:, 0, :])
    if with_regulator:
        return path, GridPath(grid, ls[:, 0])
    return path


def hw_limit_terminal(p: HwLimitParams, dt: float, T: float, paths: int, seed: int | None = None):
    """Terminal values (paths, N) and regulators (paths,) of independent Euler paths."""
    steps = _steps(dt, T)
    rng = make_rng(seed)
    return euler_hw(p, dt, _bm_increments(p, dt, steps, paths, rng))


def _conv_increments(p: ConvLimitParams, dt: float, steps: int, paths: int, rng: np.random.Generator):
    scale = math.sqrt(p.A_tilde * dt)
    for _ in range(steps):
        yield p.m_tilde * dt + scale * rng.standard_normal(paths)


def simulate_conv_limit(p: ConvLimitParams, dt: float = 1e-4, T: float = 1.0, seed: int | None = None) -> GridPath:
    """Reflected (m_tilde, A_tilde)-BM on [0, beta] started at 0."""
    steps = _steps(dt, T)
    rng = make_rng(seed)
    inc = np.array([d[0] for d in _conv_increments(p, dt, steps, 1, rng)])
    psi = np.concatenate([[0.0], np.cumsum(inc)])
    grid = np.arange(steps + 1) * dt
    return gamma_interval(GridPath(grid, psi), p.beta)


def conv_limit_terminal(p: ConvLimitParams, dt: float, T: float, paths: int, seed: int | None = None) -> np.ndarray:
    steps = _steps(dt, T)
    rng = make_rng(seed)
    phi = np.zeros(paths)
    for dpsi in _conv_increments(p, dt, steps, paths, rng):
        phi = np.clip(phi + dpsi, 0.0, p.beta)
    return phi
