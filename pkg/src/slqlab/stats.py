"""Monte Carlo summaries and two-sample comparisons."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
from scipy.special import kolmogorov

from slqlab.errors import EmptySample

QUANTILE_LEVELS = (0.05, 0.25, 0.5, 0.75, 0.95)
Z95 = 1.959963984540054


@dataclass
class SampleSet:
    label: str
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float).ravel()
        if not np.all(np.isfinite(self.values)):
            raise ValueError(f"non-finite values in sample {self.label!r}")

    @property
    def count(self) -> int:
        return self.values.size


def _values(x, need: int = 2) -> np.ndarray:
    v = x.values if isinstance(x, SampleSet) else np.asarray(x, dtype=float).ravel()
    if v.size < need:
        raise EmptySample(f"need at least {need} values, got {v.size}")
    return v


@dataclass(frozen=True)
class KSResult:
    statistic: float
    p_value: float


def ks_statistic(a, b) -> float:
    """sup_x |F_a(x) - F_b(x)| for the empirical CDFs."""
    a = np.sort(_values(a))
    b = np.sort(_values(b))
    pts = np.concatenate([a, b])
    fa = np.searchsorted(a, pts, side="right") / a.size
    fb = np.searchsorted(b, pts, side="right") / b.size
    return float(np.max(np.abs(fa - fb)))


def ks_distance(a, b, permutation: bool = False, n_perm: int = 1000,
                rng: np.random.Generator | None = None) -> KSResult:
    """Two-sample Kolmogorov-Smirnov statistic with an asymptotic (or permutation) p-value."""
    va, vb = _values(a), _values(b)
    d = ks_statistic(va, vb)
    if not permutation:
        en = va.size * vb.size / (va.size + vb.size)
        return KSResult(d, float(kolmogorov(math.sqrt(en) * d)))
    rng = np.random.default_rng(0) if rng is None else rng
    pooled = np.concatenate([va, vb])
    hits = 0
    for _ in range(n_perm):
        rng.shuffle(pooled)
        if ks_statistic(pooled[: va.size], pooled[va.size:]) >= d - 1e-12:
            hits += 1
    return KSResult(d, (hits + 1) / (n_perm + 1))


@dataclass(frozen=True)
class Summary:
    count: int
    mean: float
    variance: float
    quantiles: dict
    ci95: tuple[float, float]


def summarize(a) -> Summary:
    v = _values(a)
    mean = float(v.mean())
    var = float(v.var(ddof=1))
    half = Z95 * math.sqrt(var / v.size)
    qs = {lvl: float(q) for lvl, q in zip(QUANTILE_LEVELS, np.quantile(v, QUANTILE_LEVELS))}
    return Summary(v.size, mean, var, qs, (mean - half, mean + half))


@dataclass(frozen=True)
class LossRow:
    n: int
    mean: float
    lo95: float
    hi95: float


@dataclass(frozen=True)
class LossTable:
    rows: tuple[LossRow, ...]
    decreasing: bool


def strictly_decreasing(means: Sequence[float]) -> bool:
    """Each mean below its predecessor; runs of exact zeros count as decreasing."""
    return all(b < a or (a == 0 and b == 0) for a, b in zip(means, means[1:]))


def loss_decay_table(runs: Mapping[int, object]) -> LossTable:
    """Mean scaled losses per n with normal-approximation 95% intervals."""
    if len(runs) < 2:
        raise EmptySample("need at least two values of n")
    rows = []
    for n in sorted(runs):
        s = summarize(runs[n])
        rows.append(LossRow(int(n), s.mean, s.ci95[0], s.ci95[1]))
    return LossTable(tuple(rows), strictly_decreasing([r.mean for r in rows]))
