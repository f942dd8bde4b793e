"""Serve-the-longest-queue laboratory: simulators, diffusion scaling and limit objects."""

from slqlab.errors import (
    DegenerateScale,
    EmptySample,
    GridMismatch,
    GridOutOfRange,
    InvariantViolation,
    NonPositiveRate,
    NonPositiveStep,
    NoSuchCustomer,
    UnsupportedDistribution,
)
from slqlab.model import DerivedParams, InitialLaw, ModelData, derive, slq_select, validate

__all__ = [
    "DegenerateScale",
    "DerivedParams",
    "EmptySample",
    "GridMismatch",
    "GridOutOfRange",
    "InitialLaw",
    "InvariantViolation",
    "ModelData",
    "NoSuchCustomer",
    "NonPositiveRate",
    "NonPositiveStep",
    "UnsupportedDistribution",
    "derive",
    "slq_select",
    "validate",
]
