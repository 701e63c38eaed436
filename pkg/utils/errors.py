# File: utils/errors.py

"""Exception types raised by the laboratory's numerical services and drivers."""


class DomainError(ValueError):
    """An argument lies outside the domain of a formula (e.g. gamma <= -1)."""


class SupportOverflowError(ValueError):
    """A rescaled test function no longer fits inside [-pi, pi]."""


class SingularEvaluationError(ValueError):
    """A boundary field was evaluated exactly on an eigenangle."""


class TailTruncationError(RuntimeError):
    """A truncated series or transform left a tail above tolerance."""


class ConvergenceError(RuntimeError):
    """A root search or quadrature failed to converge."""


class ConsistencyError(RuntimeError):
    """Two independent evaluation routes disagree beyond tolerance."""


class GmcRegimeError(ValueError):
    """A GMC prediction was requested outside the L2 regime."""


class EssCollapseError(RuntimeError):
    """Importance weights degenerated to too few effective samples."""


class ConfigError(ValueError):
    """An experiment config or CLI invocation is invalid."""


class AcceptanceError(AssertionError):
    """One or more acceptance assertions of an experiment failed."""
