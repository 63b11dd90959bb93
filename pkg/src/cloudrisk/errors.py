"""Exception types shared across the package."""


class CloudRiskError(Exception):
    """Base class for all package errors."""


class InvalidInstanceError(CloudRiskError, ValueError):
    """Raised when an instance breaks one or more structural/probabilistic invariants."""

    def __init__(self, violations):
        self.violations = list(violations)
        lines = "; ".join(str(v) for v in self.violations)
        super().__init__(f"invalid instance: {lines}")


class MalformedDecisionError(CloudRiskError, ValueError):
    """Decision shape or option index does not fit the instance."""


class EnumerationTooLargeError(CloudRiskError):
    """Exhaustive enumeration would exceed the configured cap."""

    def __init__(self, count, cap, what="items"):
        self.count = count
        self.cap = cap
        super().__init__(f"{what} count {count} exceeds cap {cap}")


class SweepConfigError(CloudRiskError, ValueError):
    """A sweep parameter path or grid could not be resolved."""


class UnsupportedSweepError(CloudRiskError):
    """The requested sweep is well formed but not supported."""


class SolverMismatchError(CloudRiskError):
    """Branch-and-bound and brute force disagreed on an optimal objective."""
