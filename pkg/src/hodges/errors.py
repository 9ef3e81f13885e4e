"""Semantic exception hierarchy shared by all modules."""


class HodgesError(Exception):
    """Base error for this package."""


class ContractViolation(HodgesError, ValueError):
    """Inputs violate an operation's contract (dimension/type/domain checks)."""


class DomainError(HodgesError, ValueError):
    """A mathematically required condition on the inputs fails (e.g. empty index set)."""


class NumericalRankError(HodgesError):
    """A matrix is singular or numerically rank-deficient (condition number > 1e12)."""


class ScheduleError(HodgesError, ValueError):
    """A threshold schedule violates its growth/positivity requirements."""


class InsufficientDataError(HodgesError):
    """Too few replications satisfy a conditioning event to form an estimate."""
