"""Arrival streams: the periodic deterministic pattern, Poisson and renewal sources.

Pattern times are kept on the lattice of half-steps 1/(2n): with period
tau = m/n = 2m half-steps, the batch class receives m customers at every
u = 2jm (j >= 1) and the other class receives single customers at
u = 2jm + m + l, l = 0, ..., m - 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from slqlab import dists
from slqlab.errors import UnsupportedDistribution
from slqlab.model import DerivedParams

PATTERN = "pattern"
POISSON = "poisson"
RENEWAL = "renewal"


@dataclass(frozen=True)
class ArrivalEvent:
    time: float
    cls: int
    multiplicity: int = 1


@dataclass(frozen=True)
class ArrivalSource:
    """One arrival stream.

    A pattern source emits both classes of a two-class system (the batch
    class is ``k - 1``, zero-based). Poisson and renewal sources feed the
    single class ``cls``; renewal gaps have the configured mean and scv and
    are divided by ``accel``.
    """

    kind: str
    cls: int = 0
    k: int = 1
    params: DerivedParams | None = None
    rate: float = 0.0
    dist: str = "exponential"
    mean: float = 1.0
    scv: float = 1.0
    accel: float = 1.0

    def __post_init__(self):
        if self.kind not in (PATTERN, POISSON, RENEWAL):
            raise ValueError(f"unknown source kind {self.kind!r}")
        if self.kind == PATTERN:
            if self.params is None:
                raise ValueError("pattern source needs DerivedParams")
            if self.k not in (1, 2):
                raise ValueError("pattern k must be 1 or 2")
        if self.kind == RENEWAL and self.dist not in dists.TAGS:
            raise UnsupportedDistribution(f"unknown renewal distribution {self.dist!r}")

    @property
    def classes(self) -> tuple[int, ...]:
        return (0, 1) if self.kind == PATTERN else (self.cls,)

    def class_rate(self, cls: int) -> float:
        """Long-run arrival rate into ``cls``."""
        if cls not in self.classes:
            return 0.0
        if self.kind == PATTERN:
            return float(self.params.n)
        if self.kind == POISSON:
            return self.rate
        return self.accel / self.mean


def pattern_source(params: DerivedParams, k: int = 1) -> ArrivalSource:
    return ArrivalSource(kind=PATTERN, k=k, params=params)


def poisson_source(cls: int, rate: float) -> ArrivalSource:
    return ArrivalSource(kind=POISSON, cls=cls, rate=rate)


def renewal_source(cls: int, dist: str = "exponential", mean: float = 1.0, scv: float | None = None,
                   accel: float = 1.0) -> ArrivalSource:
    if scv is None:
        scv = {"deterministic": 0.0, "exponential": 1.0}.get(dist, 1.0)
    return ArrivalSource(kind=RENEWAL, cls=cls, dist=dist, mean=mean, scv=scv, accel=accel)


def _lattice_floor(t, n: int) -> np.ndarray:
    """Largest integer u with u / (2n) <= t, using the same float division as event times."""
    t = np.asarray(t, dtype=float)
    h = 2.0 * n
    u = np.floor(t * h)
    u = np.where((u + 1) / h <= t, u + 1, u)
    u = np.where(u / h > t, u - 1, u)
    return u.astype(np.int64)


def pattern_count_array(cls: int, t, params: DerivedParams, k: int = 1) -> np.ndarray:
    """Vectorized counting function of the pattern stream for ``cls``."""
    m = params.m
    if np.any(np.asarray(t) < 0):
        raise ValueError("t must be >= 0")
    periods, r = np.divmod(_lattice_floor(t, params.n), 2 * m)
    if cls == k - 1:
        return m * periods
    if cls not in (0, 1):
        raise ValueError("pattern sources have two classes")
    return m * periods + np.clip(r - m + 1, 0, m)


def pattern_count(cls: int, t: float, params: DerivedParams, k: int = 1) -> int:
    """Number of class-``cls`` pattern arrivals in (0, t]."""
    return int(pattern_count_array(cls, t, params, k))


def _pattern_arrays(source: ArrivalSource, after: float, horizon: float):
    p = source.params
    n, m = p.n, p.m
    u_lo = int(_lattice_floor(after, n))
    u_hi = int(_lattice_floor(horizon, n))
    u = np.arange(u_lo + 1, u_hi + 1, dtype=np.int64)
    u = u[u > 0]
    r = u % (2 * m)
    batch = u[r == 0]
    spread = u[r >= m]
    bcls, scls = source.k - 1, 2 - source.k
    allu = np.concatenate([batch, spread])
    cls = np.concatenate([np.full(batch.size, bcls), np.full(spread.size, scls)]).astype(np.int64)
    mult = np.concatenate([np.full(batch.size, m), np.ones(spread.size)]).astype(np.int64)
    order = np.argsort(allu, kind="stable")
    return allu[order] / (2.0 * n), cls[order], mult[order]


def _gap_arrays(after: float, horizon: float, rate: float, draw):
    """Cumulate gaps from ``after`` until the horizon; ``draw(size)`` returns gaps."""
    if rate <= 0:
        return np.empty(0)
    expected = rate * (horizon - after)
    chunks = []
    t = after
    while True:
        size = int(expected + 5 * math.sqrt(expected) + 16)
        times = t + np.cumsum(draw(size))
        chunks.append(times)
        if times[-1] > horizon:
            break
        t = times[-1]
    times = np.concatenate(chunks)
    return times[times <= horizon]


def event_arrays(source: ArrivalSource, after: float, horizon: float,
                 rng: np.random.Generator | None = None):
    """Arrival events in (after, horizon] as ``(times, classes, multiplicities)`` arrays.

    Poisson and renewal streams start afresh at ``after``.
    """
    if not after < horizon:
        raise ValueError("need after < horizon")
    if source.kind == PATTERN:
        return _pattern_arrays(source, after, horizon)
    if source.kind == POISSON:
        rate = source.rate
        times = _gap_arrays(after, horizon, rate, lambda s: rng.exponential(1.0 / rate, s))
    else:
        d = dists.Distribution(source.dist, source.mean, source.scv).scaled(source.accel)
        times = _gap_arrays(after, horizon, source.class_rate(source.cls), lambda s: d.sample(s, rng))
    return times, np.full(times.size, source.cls, dtype=np.int64), np.ones(times.size, dtype=np.int64)


def next_events(source: ArrivalSource, after: float, horizon: float,
                rng: np.random.Generator | None = None) -> list[ArrivalEvent]:
    times, cls, mult = event_arrays(source, after, horizon, rng)
    return [ArrivalEvent(float(t), int(c), int(k)) for t, c, k in zip(times, cls, mult)]


def merge_streams(sources: Iterable[ArrivalSource], horizon: float, rng: np.random.Generator | None = None):
    """All events of several sources on (0, horizon], ordered by time then class."""
    parts = [event_arrays(s, 0.0, horizon, rng) for s in sources]
    if not parts:
        e = np.empty(0, dtype=np.int64)
        return np.empty(0), e, e
    times = np.concatenate([p[0] for p in parts])
    cls = np.concatenate([p[1] for p in parts])
    mult = np.concatenate([p[2] for p in parts])
    order = np.lexsort((cls, times))
    return times[order], cls[order], mult[order]


def counts_on_grid(source: ArrivalSource, cls: int, grid, rng: np.random.Generator | None = None) -> np.ndarray:
    grid = np.asarray(grid, dtype=float)
    if source.kind == PATTERN:
        return pattern_count_array(cls, grid, source.params, source.k)
    times, c, mult = event_arrays(source, 0.0, float(grid[-1]), rng)
    sel = c == cls
    cum = np.concatenate([[0], np.cumsum(mult[sel])])
    return cum[np.searchsorted(times[sel], grid, side="right")]


def scaling_check(source: ArrivalSource, n: int, T: float, grid_step: float, cls: int | None = None,
                  rng: np.random.Generator | None = None, lam: float | None = None) -> tuple[float, float]:
    """Sup-norm deviations of the fluid and diffusion scaled counts on a grid.

    Returns ``(sup |E(t)/n - lam t|, sup |(E(t) - lam_n t) / sqrt(n)|)`` with
    ``lam_n`` the source's long-run rate and ``lam = lam_n / n`` unless given.
    """
    if not grid_step > 0:
        raise ValueError("grid_step must be > 0")
    cls = source.classes[0] if cls is None else cls
    steps = int(math.ceil(T / grid_step - 1e-9))
    grid = np.linspace(0.0, T, steps + 1)
    counts = counts_on_grid(source, cls, grid, rng)
    lam_n = source.class_rate(cls)
    lam = lam_n / n if lam is None else lam
    lln = float(np.max(np.abs(counts / n - lam * grid)))
    clt = float(np.max(np.abs(counts - lam_n * grid)) / math.sqrt(n))
    return lln, clt
