"""Exception hierarchy shared by every stage of the pipeline.

Each class carries a short ``code`` so the CLI can report failures as a
single machine-parsable line.
"""

from __future__ import annotations


class DcsFcmError(Exception):
    code = "error"


class ArgumentError(DcsFcmError, ValueError):
    code = "argument"


class DomainError(DcsFcmError, ValueError):
    """A parameter vector or DGP parameter lies outside its admissible domain."""

    code = "domain"


class ScalingError(DcsFcmError, ArithmeticError):
    """The information matrix is singular or too ill-conditioned to invert."""

    code = "scaling"

    def __init__(self, message: str, condition: float = float("inf")):
        super().__init__(f"{message} (condition estimate {condition:.3e})")
        self.condition = condition


class FilteringError(DcsFcmError, ArithmeticError):
    """The score recursion overflowed or left the parameter domain."""

    code = "filtering"

    def __init__(self, message: str, index: int):
        super().__init__(f"{message} at t={index}")
        self.index = index


class InitializationError(DcsFcmError):
    code = "initialization"


class UsageError(DcsFcmError):
    code = "usage"


class DegenerateSeriesError(DcsFcmError, ValueError):
    """A series or path is constant, so a normalised statistic is undefined."""

    code = "degenerate_series"


class EmptyClusterError(DcsFcmError):
    code = "empty_cluster"


class ClusteringError(DcsFcmError):
    code = "clustering_failure"


class IngestionError(DcsFcmError):
    code = "ingestion"


class ConfigError(DcsFcmError):
    code = "config"


class HarnessError(DcsFcmError):
    code = "harness"
