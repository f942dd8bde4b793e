"""Single-server N-class SLQ queue in conventional heavy traffic.

Service is non-preemptive; each started job consumes the next interval of
its class's potential-service renewal sequence, so D_i(t) = S_i(T_i(t)).
The buffer cap applies to the number of class-i customers in the system.
At equal times a service completion is processed before an arrival.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numba
import numpy as np

from slqlab import arrivals as arr
from slqlab.dists import Distribution
from slqlab.model import DerivedParams, ModelData, derive, slq_pick
from slqlab.rng import make_rng

ServiceDistribution = Distribution

X, E, R, D = range(4)
ARRIVAL, COMPLETION = 0, 1


@numba.njit(cache=True)
def _kernel(cap, arr_t, arr_c, arr_m, horizon, svc, tie_u):
    N = cap.shape[0]
    n_arr = arr_t.shape[0]
    max_ev = 2 * (n_arr + 1)
    for j in range(n_arr):
        max_ev += arr_m[j]
    log_t = np.empty(max_ev)
    log_kind = np.empty(max_ev, np.int8)
    log_c = np.empty(max_ev, np.int64)
    log_s = np.empty((max_ev, 4, N), np.int64)
    log_tc = np.empty((max_ev, N))
    log_srv = np.empty(max_ev, np.int64)
    s = np.zeros((4, N), np.int64)
    tcum = np.zeros(N)
    started = np.zeros(N, np.int64)
    srv = -1
    since = 0.0
    t_done = np.inf
    ka = 0
    kt = 0
    ev = 0
    while True:
        t_arr = arr_t[ka] if ka < n_arr else np.inf
        if t_done <= t_arr:
            if t_done > horizon:
                break
            t = t_done
            c = srv
            tcum[c] += t - since
            s[D, c] += 1
            s[X, c] -= 1
            srv = slq_pick(s[X], tie_u[kt])
            kt += 1
            if srv >= 0:
                since = t
                t_done = t + svc[srv, started[srv]]
                started[srv] += 1
            else:
                t_done = np.inf
            log_kind[ev] = COMPLETION
        else:
            if t_arr > horizon:
                break
            t = t_arr
            c = arr_c[ka]
            for _ in range(arr_m[ka]):
                s[E, c] += 1
                if s[X, c] < cap[c]:
                    s[X, c] += 1
                    if srv < 0:
                        srv = c
                        since = t
                        t_done = t + svc[c, started[c]]
                        started[c] += 1
                else:
                    s[R, c] += 1
            ka += 1
            log_kind[ev] = ARRIVAL
        log_t[ev] = t
        log_c[ev] = c
        log_s[ev] = s
        for i in range(N):
            log_tc[ev, i] = tcum[i]
        if srv >= 0:
            log_tc[ev, srv] += t - since
        log_srv[ev] = srv
        ev += 1
    return log_t[:ev], log_kind[:ev], log_c[:ev], log_s[:ev], log_tc[:ev], log_srv[:ev]


@dataclass
class ConvTrajectory:
    """Event log; row j holds the state right after event j.

    ``tcum[j]`` is the service time devoted to each class up to ``times[j]``,
    ``in_service[j]`` the class then in service (-1 when idle).
    """

    params: DerivedParams
    horizon: float
    times: np.ndarray
    kinds: np.ndarray
    classes: np.ndarray
    counts: np.ndarray
    tcum: np.ndarray
    in_service: np.ndarray

    @property
    def num_classes(self) -> int:
        return self.counts.shape[2]

    @property
    def cap(self) -> np.ndarray:
        return np.asarray(self.params.beta_n, dtype=np.int64)

    def _full(self):
        N = self.num_classes
        t = np.concatenate([[0.0], self.times])
        c = np.concatenate([np.zeros((1, 4, N), np.int64), self.counts])
        tc = np.concatenate([np.zeros((1, N)), self.tcum])
        srv = np.concatenate([[-1], self.in_service])
        return t, c, tc, srv

    def sample(self, grid):
        """Right-continuous counts (G, 4, N) and cumulative service times (G, N) on ``grid``."""
        grid = np.asarray(grid, dtype=float)
        t, c, tc, srv = self._full()
        idx = np.searchsorted(self.times, grid, side="right")
        busy = srv[idx][:, None] == np.arange(self.num_classes)[None, :]
        return c[idx], tc[idx] + busy * (grid - t[idx])[:, None]

    def idle_time(self, grid) -> np.ndarray:
        _, tc = self.sample(grid)
        return np.asarray(grid, dtype=float) - tc.sum(axis=1)


def simulate_conventional(params: DerivedParams, arrivals, horizon: float, services, tie_uniforms) -> ConvTrajectory:
    """Run the event loop on explicit inputs.

    ``services[i]`` lists the successive class-i service durations (at least
    one per class-i arrival); ``tie_uniforms`` has one entry per completion.
    """
    at, ac, am = arrivals
    N = len(params.beta_n)
    width = max([len(s) for s in services] + [1])
    svc = np.full((N, width), np.inf)
    for i, s in enumerate(services):
        svc[i, : len(s)] = s
    cap = np.asarray(params.beta_n, dtype=np.int64)
    out = _kernel(cap, np.asarray(at, dtype=float), np.asarray(ac, dtype=np.int64), np.asarray(am, dtype=np.int64),
                  float(horizon), svc, np.asarray(tie_uniforms, dtype=float))
    return ConvTrajectory(params, float(horizon), *out)


def default_sources(params: DerivedParams, model: ModelData) -> list[arr.ArrivalSource]:
    """Poisson when sigma_i^2 = 1, otherwise a gamma (or deterministic) renewal with scv sigma_i^2."""
    out = []
    for i, rate in enumerate(params.lambda_n):
        s2 = model.sigma_sq[i]
        if s2 == 1.0:
            out.append(arr.poisson_source(i, rate))
        elif s2 == 0.0:
            out.append(arr.renewal_source(i, "deterministic", 1.0, 0.0, accel=rate))
        else:
            out.append(arr.renewal_source(i, "gamma", 1.0, s2, accel=rate))
    return out


def default_services(model: ModelData) -> list[Distribution]:
    out = []
    for g2 in model.gamma_sq:
        if g2 == 1.0:
            out.append(Distribution("exponential", 1.0, 1.0))
        elif g2 == 0.0:
            out.append(Distribution("deterministic", 1.0, 0.0))
        else:
            out.append(Distribution("gamma", 1.0, g2))
    return out


def run_conventional(model: ModelData, n: int, dists: Sequence[Distribution] | None = None,
                     sources: Sequence[arr.ArrivalSource] | None = None, T: float = 1.0,
                     seed: int | None = None, rng: np.random.Generator | None = None) -> ConvTrajectory:
    """Simulate the n-th conventional system, initially empty, on [0, T].

    Class-i service times take the shape (tag, scv) of ``dists[i]`` with the
    mean rescaled to 1/(n mu_i^n).
    """
    params = derive(model, n, regime="conventional")
    if rng is None:
        rng = make_rng(seed)
    if dists is None:
        dists = default_services(model)
    if sources is None:
        sources = default_sources(params, model)
    times, cls, mult = arr.merge_streams(sources, T, rng)
    services = []
    for i, d in enumerate(dists):
        count = int(mult[cls == i].sum()) + 1
        shape = Distribution(d.tag, 1.0 / (n * params.mu_n[i]), d.scv)
        services.append(shape.sample(count, rng))
    ties = rng.random(int(mult.sum()) + 1)
    return simulate_conventional(params, (times, cls, mult), T, services, ties)


def conv_limit_params(model: ModelData) -> tuple[float, float, float]:
    """``(alpha, m_tilde, A_tilde)`` of the one-dimensional reflected BM limit."""
    alpha = 1.0 / math.fsum(1.0 / m for m in model.mu)
    m_tilde = alpha * math.fsum(lh / m for lh, m in zip(model.lam_hat, model.mu))
    a_tilde = alpha ** 2 * math.fsum(
        l / m ** 2 * (s2 + g2) for l, m, s2, g2 in zip(model.lam, model.mu, model.sigma_sq, model.gamma_sq)
    )
    return alpha, m_tilde, a_tilde


def check_invariants(traj: ConvTrajectory, tol: float = 1e-9) -> list[str]:
    t, c, tc, srv = traj._full()
    x, e, r, d = (c[:, i, :] for i in range(4))
    bad = []
    if np.any(x < 0):
        bad.append("negative count")
    if np.any(x > traj.cap[None, :]):
        bad.append("buffer cap exceeded")
    if np.any((x.sum(axis=1) > 0) & (srv < 0)):
        bad.append("idling with customers present")
    busy = srv >= 0
    if np.any(x[busy, srv[busy]] < 1):
        bad.append("serving an empty class")
    if np.any(x != e - d - r):
        bad.append("balance X = E - D - R violated")
    if np.any(np.diff(c[:, 1:, :], axis=0) < 0):
        bad.append("counter decreased")
    if np.any(np.diff(t) < 0):
        bad.append("event times out of order")
    idle = t - tc.sum(axis=1)
    step = np.diff(idle)
    if np.any(idle < -tol) or np.any(step < -tol):
        bad.append("idle time negative or decreasing")
    if np.any((step > tol) & (x[:-1].sum(axis=1) > 0)):
        bad.append("idle time grew while customers present")
    if np.any(tc.sum(axis=1) > t + tol):
        bad.append("more service than elapsed time")
    dr = np.diff(r, axis=0)
    if np.any(dr > 0):
        rows, cols = np.nonzero(dr)
        arrivals_ok = traj.kinds[rows] == ARRIVAL
        at_cap = x[rows, cols] == traj.cap[cols]
        if not (np.all(arrivals_ok) and np.all(at_cap)):
            bad.append("loss away from a full buffer")
    return bad
