"""
Error types for the commitment analyzer
Every error carries a short message and, where it applies, the tree path or JSON path it refers to
"""


class QBCError(Exception):
    """Base class for all analyzer errors."""

    def __init__(self, message, path=None):
        self.path = tuple(path) if path is not None else None
        if self.path is not None:
            message = f"{message} (at {format_path(self.path)})"
        super().__init__(message)


class DimensionLimitError(QBCError, ValueError):
    """Matrix would exceed the configured entry limit."""


class ShapeError(QBCError, ValueError):
    """Dimensions do not match."""


class DomainError(QBCError, ValueError):
    """Input is not a valid state."""


class StructureError(QBCError, ValueError):
    """Hybrid labels or block dimensions do not match."""


class InvalidChannelError(QBCError, ValueError):
    """Kraus set or POVM violates completeness."""


class TreeError(QBCError, ValueError):
    """Malformed communication tree."""


class ScheduleError(QBCError, ValueError):
    """Strategy dimensions disagree with the dimension schedule."""


class BranchExplosionError(QBCError, RuntimeError):
    """Too many live branches during a run."""


class NotaryError(QBCError):
    """A notarized strategy may not be purified."""


class ConfigError(QBCError, ValueError):
    """Experiment configuration or definition file is invalid."""


def format_path(path):
    """Render a label or JSON path for diagnostics."""
    if not path:
        return "root"
    return "/".join(str(p) for p in path)
