"""Exception types shared across the package."""


class NonPositiveRate(ValueError):
    pass


class DegenerateScale(ValueError):
    pass


class UnsupportedDistribution(ValueError):
    pass


class InvariantViolation(AssertionError):
    pass


class NoSuchCustomer(ValueError):
    pass


class GridOutOfRange(ValueError):
    pass


class GridMismatch(ValueError):
    pass


class NonPositiveStep(ValueError):
    pass


class EmptySample(ValueError):
    pass
