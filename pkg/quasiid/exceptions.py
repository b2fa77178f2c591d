"""
Exceptions raised by the quasiid toolkit.

All of them derive from ValueError so callers that only guard against bad
input keep working.
"""
from typing import Optional


class QuasiIDError(ValueError):
    """Base class for toolkit errors."""


class ZeroCF(QuasiIDError):
    """The characteristic function vanishes (numerically) at some point."""

    def __init__(self, t: float, message: Optional[str] = None):
        self.t = float(t)
        if message is None:
            message = f"Characteristic function vanishes near t = {self.t:.17g}"
        super().__init__(message)


class OffGrid(QuasiIDError):
    """A requested point is not a node of the trace grid."""

    def __init__(self, t: float, message: Optional[str] = None):
        self.t = float(t)
        if message is None:
            message = f"Point t = {self.t:.17g} is not a node of the trace grid"
        super().__init__(message)


class NonLattice(QuasiIDError):
    """Lattice recovery cannot represent the given trace."""


class ConfigInvalid(QuasiIDError):
    """Invalid analysis configuration; names the offending field."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"Invalid config field '{field}': {message}")
