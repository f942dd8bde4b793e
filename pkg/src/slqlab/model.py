"""Model data, per-n derived quantities and the SLQ selection rule."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numba
import numpy as np

from slqlab.errors import DegenerateScale, NonPositiveRate

CRITICAL_LOAD_TOL = 1e-12


@dataclass(frozen=True)
class InitialLaw:
    """Law of the diffusion-scaled initial state X0.

    ``kind`` is ``"deterministic"`` (X0 = ``mean``) or ``"gaussian"``
    (independent normals with the given means and variances).
    """

    kind: str = "deterministic"
    mean: tuple[float, ...] | None = None
    var: tuple[float, ...] | None = None

    def sample(self, num_classes: int, rng: np.random.Generator | None = None) -> np.ndarray:
        mean = np.zeros(num_classes) if self.mean is None else np.asarray(self.mean, dtype=float)
        if self.kind == "deterministic":
            return mean.copy()
        if self.kind == "gaussian":
            if rng is None:
                raise ValueError("gaussian initial law needs an rng")
            var = np.zeros(num_classes) if self.var is None else np.asarray(self.var, dtype=float)
            return mean + np.sqrt(var) * rng.standard_normal(num_classes)
        raise ValueError(f"unknown initial law {self.kind!r}")

    def to_dict(self) -> dict:
        d: dict = {"kind": self.kind}
        if self.mean is not None:
            d["mean"] = list(self.mean)
        if self.var is not None:
            d["var"] = list(self.var)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "InitialLaw":
        mean = d.get("mean")
        var = d.get("var")
        return cls(
            kind=d.get("kind", "deterministic"),
            mean=None if mean is None else tuple(float(v) for v in mean),
            var=None if var is None else tuple(float(v) for v in var),
        )


def _tup(v) -> tuple[float, ...]:
    return tuple(float(x) for x in v)


@dataclass(frozen=True)
class ModelData:
    """First and second order data of an SLQ system.

    Rates are per unit time. ``beta1`` is the many-server buffer coefficient,
    ``beta`` and ``eps`` the conventional one: the class-i conventional buffer
    at scale n is ``floor(beta * sqrt(n) + eps[i])``, i.e. an O(1) perturbation
    that vanishes after diffusion scaling.
    """

    mu: tuple[float, ...]
    lam: tuple[float, ...]
    mu_hat: tuple[float, ...] | None = None
    lam_hat: tuple[float, ...] | None = None
    sigma_sq: tuple[float, ...] | None = None
    gamma_sq: tuple[float, ...] | None = None
    m0: InitialLaw = field(default_factory=InitialLaw)
    beta1: float = 1.0
    beta: float = 1.0
    eps: tuple[float, ...] | None = None

    def __post_init__(self):
        n = len(self.mu)
        object.__setattr__(self, "mu", _tup(self.mu))
        object.__setattr__(self, "lam", _tup(self.lam))
        for name in ("mu_hat", "lam_hat", "sigma_sq", "gamma_sq", "eps"):
            v = getattr(self, name)
            object.__setattr__(self, name, (0.0,) * n if v is None else _tup(v))

    @property
    def num_classes(self) -> int:
        return len(self.mu)

    @property
    def rho(self) -> tuple[float, ...]:
        return tuple(l / m for l, m in zip(self.lam, self.mu))

    def to_dict(self) -> dict:
        return {
            "mu": list(self.mu),
            "lam": list(self.lam),
            "mu_hat": list(self.mu_hat),
            "lam_hat": list(self.lam_hat),
            "sigma_sq": list(self.sigma_sq),
            "gamma_sq": list(self.gamma_sq),
            "m0": self.m0.to_dict(),
            "beta1": self.beta1,
            "beta": self.beta,
            "eps": list(self.eps),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ModelData":
        allowed = {"mu", "lam", "mu_hat", "lam_hat", "sigma_sq", "gamma_sq", "m0", "beta1", "beta", "eps"}
        unknown = set(d) - allowed
        if unknown:
            raise ValueError(f"unknown model keys: {sorted(unknown)}")
        kw = dict(d)
        if "m0" in kw:
            kw["m0"] = InitialLaw.from_dict(kw["m0"])
        return cls(**kw)


def symmetric_two_class(beta1: float = 0.5, beta: float = 1.0, sigma_sq: float = 0.0,
                        gamma_sq: float = 1.0) -> ModelData:
    """lambda = (1, 1), mu = (2, 2): the parameter set of the counterexample."""
    return ModelData(mu=(2.0, 2.0), lam=(1.0, 1.0), sigma_sq=(sigma_sq,) * 2,
                     gamma_sq=(gamma_sq,) * 2, beta1=beta1, beta=beta)


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok


def validate(model: ModelData) -> ValidationReport:
    bad = []
    n = model.num_classes
    if n < 2:
        bad.append(f"num_classes = {n} < 2")
    for name in ("lam", "mu_hat", "lam_hat", "sigma_sq", "gamma_sq", "eps"):
        if len(getattr(model, name)) != n:
            bad.append(f"{name} has length {len(getattr(model, name))}, expected {n}")
    if bad:
        return ValidationReport(tuple(bad))
    for i in range(n):
        if not model.mu[i] > 0:
            bad.append(f"mu[{i}] = {model.mu[i]} not > 0")
        if not model.lam[i] > 0:
            bad.append(f"lam[{i}] = {model.lam[i]} not > 0")
        if model.sigma_sq[i] < 0:
            bad.append(f"sigma_sq[{i}] < 0")
        if model.gamma_sq[i] < 0:
            bad.append(f"gamma_sq[{i}] < 0")
    if not model.beta1 > 0:
        bad.append("beta1 not > 0")
    if not model.beta > 0:
        bad.append("beta not > 0")
    if all(m > 0 for m in model.mu):
        load = math.fsum(l / m for l, m in zip(model.lam, model.mu))
        if abs(load - 1.0) > CRITICAL_LOAD_TOL:
            bad.append(f"traffic intensity {load!r} != 1")
    return ValidationReport(tuple(bad))


@dataclass(frozen=True)
class DerivedParams:
    """Quantities of the n-th system."""

    n: int
    a: float
    mu_n: tuple[float, ...]
    lambda_n: tuple[float, ...]
    beta_n: tuple[int, ...]
    m: int
    rho: tuple[float, ...]

    @property
    def tau_exact(self) -> Fraction:
        return Fraction(self.m, self.n)

    @property
    def tau(self) -> float:
        return self.m / self.n

    @property
    def num_classes(self) -> int:
        return len(self.mu_n)


def _floor(x: float) -> int:
    # guards against n**a landing a hair below an exact integer
    return math.floor(x * (1.0 + 1e-12))


def derive(model: ModelData, n: int, a: float = 0.3, regime: str = "hw") -> DerivedParams:
    """Per-n rates, buffer size and pattern period for the n-th system.

    ``regime`` selects the buffer rule: ``"hw"`` gives the common size
    floor(beta1 sqrt(n)); ``"conventional"`` gives floor(beta sqrt(n) + eps_i).
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if not 0 < a <= 0.5:
        raise ValueError("a must lie in (0, 1/2]")
    rn = math.sqrt(n)
    mu_n = tuple(m + mh / rn for m, mh in zip(model.mu, model.mu_hat))
    lambda_n = tuple(n * l + rn * lh for l, lh in zip(model.lam, model.lam_hat))
    for i, (x, y) in enumerate(zip(mu_n, lambda_n)):
        if x <= 0:
            raise NonPositiveRate(f"mu_n[{i}] = {x} <= 0 at n = {n}")
        if y <= 0:
            raise NonPositiveRate(f"lambda_n[{i}] = {y} <= 0 at n = {n}")
    if regime == "hw":
        beta_n = (_floor(model.beta1 * rn),) * model.num_classes
    elif regime == "conventional":
        beta_n = tuple(_floor(model.beta * rn + e) for e in model.eps)
    else:
        raise ValueError(f"unknown regime {regime!r}")
    m = _floor(n ** a)
    if m == 0 or min(beta_n) <= 0:
        raise DegenerateScale(f"m = {m}, beta_n = {beta_n} at n = {n}")
    return DerivedParams(n=n, a=a, mu_n=mu_n, lambda_n=lambda_n, beta_n=beta_n, m=m, rho=model.rho)


@numba.njit(cache=True)
def slq_pick(q, u):
    """Index of a longest queue (ties split uniformly by ``u``), -1 if all empty."""
    best = 0
    for i in range(q.shape[0]):
        if q[i] > best:
            best = q[i]
    if best == 0:
        return -1
    j = 0
    for i in range(q.shape[0]):
        if q[i] == best:
            j += 1
    target = int(u * j)
    if target >= j:
        target = j - 1
    for i in range(q.shape[0]):
        if q[i] == best:
            if target == 0:
                return i
            target -= 1
    return -1


def slq_select(queue_lengths: Sequence[int], uniform_draw: float) -> int | None:
    """Serve-the-longest-queue choice; ``None`` when every buffer is empty.

    With j maximal buffers the ``floor(uniform_draw * j)``-th of them, in
    ascending index order, is returned.
    """
    q = np.asarray(queue_lengths, dtype=np.int64)
    i = slq_pick(q, float(uniform_draw))
    return None if i < 0 else int(i)
