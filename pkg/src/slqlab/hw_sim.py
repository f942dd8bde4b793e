"""n-server, N-class SLQ system with equal finite buffers (many-server regime).

Departures follow the time-changed Poisson representation: one unit
exponential is consumed per departure, and the hazard accrues at rate
sum_i mu_i^n Psi_i(t) between events. The departing class is drawn
proportionally to mu_i^n Psi_i at the departure instant. By memorylessness
this is the same law as independent exponential service clocks.

A state is a (6, N) integer array with rows Q, Psi, E, B, R, D.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numba
import numpy as np

from slqlab import arrivals as arr
from slqlab.errors import InvariantViolation, NoSuchCustomer
from slqlab.model import DerivedParams, ModelData, derive, slq_pick
from slqlab.rng import make_rng

Q, PSI, E, B, R, D = range(6)
ROWS = ("Q", "Psi", "E", "B", "R", "D")
ARRIVAL, DEPARTURE = 0, 1


@numba.njit(cache=True)
def _arrive(s, c, mult, n, beta):
    for _ in range(mult):
        busy = 0
        for i in range(s.shape[1]):
            busy += s[PSI, i]
        if busy < n:
            s[PSI, c] += 1
            s[B, c] += 1
        elif s[Q, c] < beta:
            s[Q, c] += 1
        else:
            s[R, c] += 1
    s[E, c] += mult


@numba.njit(cache=True)
def _depart(s, c, u):
    s[PSI, c] -= 1
    s[D, c] += 1
    j = slq_pick(s[Q], u)
    if j >= 0:
        s[Q, j] -= 1
        s[PSI, j] += 1
        s[B, j] += 1


@numba.njit(cache=True)
def _kernel(n, beta, mu, psi0, arr_t, arr_c, arr_m, horizon, exp_draws, cls_u, tie_u):
    N = mu.shape[0]
    max_ev = arr_t.shape[0] + exp_draws.shape[0]
    log_t = np.empty(max_ev)
    log_kind = np.empty(max_ev, np.int8)
    log_c = np.empty(max_ev, np.int64)
    log_s = np.empty((max_ev, 6, N), np.int64)
    s = np.zeros((6, N), np.int64)
    s[PSI, :] = psi0
    t = 0.0
    ka = 0
    kd = 0
    nd = exp_draws.shape[0]
    hz = exp_draws[0] if nd > 0 else np.inf
    ev = 0
    while True:
        rate = 0.0
        for i in range(N):
            rate += mu[i] * s[PSI, i]
        t_arr = arr_t[ka] if ka < arr_t.shape[0] else np.inf
        t_dep = t + hz / rate if rate > 0.0 else np.inf
        if t_arr <= t_dep:
            if t_arr > horizon:
                break
            if rate > 0.0:
                hz = max(hz - rate * (t_arr - t), 0.0)
            t = t_arr
            c = arr_c[ka]
            _arrive(s, c, arr_m[ka], n, beta)
            log_kind[ev] = ARRIVAL
            ka += 1
        else:
            if t_dep > horizon:
                break
            t = t_dep
            x = cls_u[kd] * rate
            c = -1
            acc = 0.0
            for i in range(N):
                if s[PSI, i] > 0:
                    c = i
                    acc += mu[i] * s[PSI, i]
                    if x < acc:
                        break
            _depart(s, c, tie_u[kd])
            log_kind[ev] = DEPARTURE
            kd += 1
            hz = exp_draws[kd] if kd < nd else np.inf
        log_t[ev] = t
        log_c[ev] = c
        log_s[ev] = s
        ev += 1
    return log_t[:ev], log_kind[:ev], log_c[:ev], log_s[:ev]


@dataclass
class HwState:
    """Instantaneous state; counters are cumulative since time 0."""

    t: float
    Q: np.ndarray
    Psi: np.ndarray
    E: np.ndarray
    B: np.ndarray
    R: np.ndarray
    D: np.ndarray

    @classmethod
    def empty(cls, num_classes: int, psi: Sequence[int] | None = None) -> "HwState":
        z = np.zeros(num_classes, dtype=np.int64)
        p = z.copy() if psi is None else np.asarray(psi, dtype=np.int64).copy()
        return cls(0.0, z.copy(), p, z.copy(), z.copy(), z.copy(), z.copy())

    def as_array(self) -> np.ndarray:
        return np.array([self.Q, self.Psi, self.E, self.B, self.R, self.D], dtype=np.int64)

    @classmethod
    def from_array(cls, t: float, s: np.ndarray) -> "HwState":
        return cls(t, *(np.array(row, dtype=np.int64) for row in s))

    @property
    def X(self) -> np.ndarray:
        return self.Q + self.Psi


def handle_arrival(state: HwState, cls: int, multiplicity: int, params: DerivedParams,
                   rng: np.random.Generator | None = None) -> HwState:
    """Admit a batch customer by customer: free server, else buffer, else loss."""
    if multiplicity < 1:
        raise ValueError("multiplicity must be >= 1")
    s = state.as_array()
    _arrive(s, cls, multiplicity, params.n, params.beta_n[0])
    return HwState.from_array(state.t, s)


def handle_departure(state: HwState, cls: int, params: DerivedParams,
                     rng: np.random.Generator | None = None, draw: float | None = None) -> HwState:
    """Finish a class-``cls`` service, then refill the server from the longest buffer.

    The tie-break uniform is ``draw`` if given, else taken from ``rng``.
    """
    if state.Psi[cls] < 1:
        raise NoSuchCustomer(f"no class-{cls} customer in service")
    if draw is None:
        draw = rng.random() if rng is not None else 0.0
    s = state.as_array()
    _depart(s, cls, float(draw))
    return HwState.from_array(state.t, s)


@dataclass
class HwTrajectory:
    """Event log of one run; ``states[j]`` is the state right after event ``j``."""

    params: DerivedParams
    horizon: float
    initial: np.ndarray
    times: np.ndarray
    kinds: np.ndarray
    classes: np.ndarray
    states: np.ndarray

    @property
    def num_events(self) -> int:
        return self.times.size

    @property
    def terminal(self) -> HwState:
        s = self.states[-1] if self.num_events else self.initial
        return HwState.from_array(self.horizon, s)

    def sample(self, grid) -> np.ndarray:
        """Right-continuous states on ``grid``, shape (len(grid), 6, N)."""
        idx = np.searchsorted(self.times, np.asarray(grid, dtype=float), side="right") - 1
        full = np.concatenate([self.initial[None], self.states])
        return full[idx + 1]

    def loss_times(self, cls: int) -> np.ndarray:
        r = np.concatenate([[self.initial[R, cls]], self.states[:, R, cls]])
        return self.times[np.diff(r) > 0]


def initial_psi(params: DerivedParams, x0: Sequence[float]) -> np.ndarray:
    """Servers busy per class at time 0 so that the scaled state starts near ``x0``.

    Psi_i(0) = clamp(round(n rho_i + sqrt(n) x0_i), 0, n), truncated
    proportionally if the total exceeds n.
    """
    n = params.n
    raw = np.floor(n * np.asarray(params.rho) + math.sqrt(n) * np.asarray(x0, dtype=float) + 0.5)
    psi = np.clip(raw, 0, n).astype(np.int64)
    tot = int(psi.sum())
    if tot > n:
        psi = (psi * n) // tot
    return psi


def simulate_hw(params: DerivedParams, arrivals, horizon: float, psi0, draws) -> HwTrajectory:
    """Run the event loop on explicit inputs.

    ``arrivals`` is ``(times, classes, multiplicities)``; ``draws`` is
    ``(unit_exponentials, class_uniforms, tie_uniforms)``, one entry of each
    per departure, at least ``sum(psi0) + sum(multiplicities)`` long.
    """
    at, ac, am = (np.ascontiguousarray(x) for x in arrivals)
    psi0 = np.asarray(psi0, dtype=np.int64)
    ex, cu, tu = (np.ascontiguousarray(x, dtype=float) for x in draws)
    # short stubs are allowed: departures beyond the supplied draws never happen
    n_draws = min(ex.size, cu.size, tu.size)
    mu = np.asarray(params.mu_n, dtype=float)
    t, k, c, s = _kernel(params.n, params.beta_n[0], mu, psi0, at.astype(float), ac.astype(np.int64),
                         am.astype(np.int64), float(horizon), ex[:n_draws], cu[:n_draws], tu[:n_draws])
    init = np.zeros((6, mu.size), dtype=np.int64)
    init[PSI] = psi0
    return HwTrajectory(params, float(horizon), init, t, k, c, s)


def run_hw(model: ModelData, n: int, a: float = 0.3, k: int = 1, T: float = 1.0, seed: int | None = None,
           sources: Sequence[arr.ArrivalSource] | None = None, psi0=None,
           rng: np.random.Generator | None = None) -> HwTrajectory:
    """Simulate the n-th system on [0, T] with queues starting empty.

    Arrivals come from the k-pattern unless ``sources`` overrides them.
    ``psi0`` overrides the initial service occupancy built from ``model.m0``.
    """
    params = derive(model, n, a, regime="hw")
    if rng is None:
        rng = make_rng(seed)
    if psi0 is None:
        psi0 = initial_psi(params, model.m0.sample(model.num_classes, rng))
    psi0 = np.asarray(psi0, dtype=np.int64)
    if sources is None:
        sources = [arr.pattern_source(params, k)]
    times, cls, mult = arr.merge_streams(sources, T, rng)
    size = int(psi0.sum() + mult.sum()) + 1
    draws = (rng.standard_exponential(size), rng.random(size), rng.random(size))
    return simulate_hw(params, (times, cls, mult), T, psi0, draws)


def check_invariants(traj: HwTrajectory, strict_times: bool = False) -> list[str]:
    """All violated state invariants of a trajectory (empty list when clean)."""
    p = traj.params
    full = np.concatenate([traj.initial[None], traj.states])
    q, psi, e, b, r, d = (full[:, i, :] for i in range(6))
    q0, psi0 = traj.initial[Q], traj.initial[PSI]
    bad = []
    if np.any(q < 0) or np.any(psi < 0):
        bad.append("negative Q or Psi")
    if np.any(q > p.beta_n[0]):
        bad.append("buffer cap exceeded")
    busy = psi.sum(axis=1)
    if np.any(busy > p.n):
        bad.append("more than n customers in service")
    if np.any((q.sum(axis=1) > 0) & (busy != p.n)):
        bad.append("idling with non-empty buffers")
    if np.any(q != q0 + e - b - r):
        bad.append("buffer balance violated")
    if np.any(psi != psi0 + b - d):
        bad.append("service balance violated")
    if np.any(e != q + psi - psi0 + r + d):
        bad.append("customer conservation violated")
    if np.any(np.diff(full[:, 2:, :], axis=0) < 0):
        bad.append("counter decreased")
    dt = np.diff(traj.times)
    if np.any(dt < 0) or (strict_times and np.any(dt <= 0)):
        bad.append("event times out of order")
    return bad


def assert_invariants(traj: HwTrajectory) -> None:
    bad = check_invariants(traj)
    if bad:
        raise InvariantViolation("; ".join(bad))


def losses_on_period_lattice(traj: HwTrajectory, cls: int) -> bool:
    """True iff every class-``cls`` loss happens at a multiple of the pattern period."""
    p = traj.params
    u = traj.loss_times(cls) * (2 * p.n)
    ur = np.round(u)
    return bool(np.all(np.abs(u - ur) < 1e-6) and np.all(ur.astype(np.int64) % (2 * p.m) == 0))
