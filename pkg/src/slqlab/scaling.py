"""Diffusion scaling of simulated trajectories and state-space-collapse diagnostics."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from slqlab.conv_sim import ConvTrajectory, X as CONV_X
from slqlab.errors import GridMismatch, GridOutOfRange
from slqlab.hw_sim import PSI, Q, R, HwTrajectory
from slqlab.model import DerivedParams, ModelData

DEFAULT_GRID_POINTS = 2048


@dataclass
class GridPath:
    """Vector path sampled on a strictly increasing time grid; ``values`` is (M, d)."""

    grid: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if v.ndim == 1:
            v = v[:, None]
        self.values = v
        if self.grid.ndim != 1 or v.shape[0] != self.grid.size:
            raise ValueError("grid and values disagree in length")
        if np.any(np.diff(self.grid) <= 0):
            raise ValueError("grid must be strictly increasing")
        if not np.all(np.isfinite(v)):
            raise ValueError("path values must be finite")

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    def at_end(self) -> np.ndarray:
        return self.values[-1]

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values))) if self.values.size else 0.0


def default_grid(T: float, points: int = DEFAULT_GRID_POINTS) -> np.ndarray:
    return np.linspace(0.0, T, points)


def _check_grid(grid, horizon: float) -> np.ndarray:
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0 or grid[0] < 0 or grid[-1] > horizon * (1 + 1e-12):
        raise GridOutOfRange(f"grid must lie in [0, {horizon}]")
    return grid


def diffusion_scale_hw(traj: HwTrajectory, params: DerivedParams, grid):
    """Scaled (X, Q, Psi, R) on ``grid``; X is formed as Q + Psi so the identity is exact."""
    grid = _check_grid(grid, traj.horizon)
    s = traj.sample(grid)
    rn = math.sqrt(params.n)
    centre = params.n * np.asarray(params.rho)
    qhat = s[:, Q, :] / rn
    psihat = (s[:, PSI, :] - centre) / rn
    xhat = qhat + psihat
    rhat = s[:, R, :] / rn
    return GridPath(grid, xhat), GridPath(grid, qhat), GridPath(grid, psihat), GridPath(grid, rhat)


def ssc_deviation_hw(xhat: GridPath, qhat: GridPath, N: int | None = None) -> float:
    """max_i sup_t |Qhat_i - (1 . Xhat)^+ / N| over the shared grid."""
    if xhat.grid.shape != qhat.grid.shape or np.any(xhat.grid != qhat.grid):
        raise GridMismatch("paths live on different grids")
    N = xhat.dim if N is None else N
    share = np.maximum(xhat.values.sum(axis=1), 0.0) / N
    return float(np.max(np.abs(qhat.values - share[:, None])))


def conv_combine(xhat: np.ndarray, mu) -> np.ndarray:
    """alpha-weighted average sum_i alpha Xhat_i / mu_i (rows are grid points)."""
    inv = 1.0 / np.asarray(mu, dtype=float)
    alpha = 1.0 / inv.sum()
    return alpha * (np.asarray(xhat) @ inv)


def max_pairwise_gap(xhat: np.ndarray) -> float:
    x = np.asarray(xhat)
    if x.size == 0:
        return 0.0
    return float(np.max(x.max(axis=1) - x.min(axis=1)))


def conv_scale(traj: ConvTrajectory, model: ModelData, n: int, grid):
    """Per-class scaled counts, their alpha-weighted combination and the collapse gap."""
    grid = _check_grid(grid, traj.horizon)
    counts, _ = traj.sample(grid)
    xhat = counts[:, CONV_X, :] / math.sqrt(n)
    xt = conv_combine(xhat, model.mu)
    return GridPath(grid, xhat), GridPath(grid, xt), max_pairwise_gap(xhat)
