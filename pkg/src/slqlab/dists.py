"""Positive distributions parametrized by mean and squared coefficient of variation."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from slqlab.errors import UnsupportedDistribution

TAGS = ("deterministic", "exponential", "gamma", "lognormal")


@dataclass(frozen=True)
class Distribution:
    tag: str = "exponential"
    mean: float = 1.0
    scv: float = 1.0

    def __post_init__(self):
        if self.tag not in TAGS:
            raise UnsupportedDistribution(f"unknown distribution tag {self.tag!r}")
        if not self.mean > 0:
            raise ValueError("mean must be > 0")
        if self.scv < 0:
            raise ValueError("scv must be >= 0")
        if self.tag == "deterministic" and self.scv != 0:
            raise ValueError("deterministic distribution has scv 0")
        if self.tag == "exponential" and self.scv != 1:
            raise ValueError("exponential distribution has scv 1")

    def scaled(self, factor: float) -> "Distribution":
        """Same shape with the mean divided by ``factor``."""
        return Distribution(self.tag, self.mean / factor, self.scv)

    def sample(self, size: int, rng: np.random.Generator) -> np.ndarray:
        return sample(self.tag, self.mean, self.scv, size, rng)


def sample(tag: str, mean: float, scv: float, size: int, rng: np.random.Generator) -> np.ndarray:
    if tag == "deterministic" or scv == 0:
        if tag not in TAGS:
            raise UnsupportedDistribution(f"unknown distribution tag {tag!r}")
        return np.full(size, float(mean))
    if tag == "exponential":
        return rng.exponential(mean, size)
    if tag == "gamma":
        return rng.gamma(1.0 / scv, mean * scv, size)
    if tag == "lognormal":
        s2 = math.log1p(scv)
        return rng.lognormal(math.log(mean) - 0.5 * s2, math.sqrt(s2), size)
    raise UnsupportedDistribution(f"unknown distribution tag {tag!r}")
