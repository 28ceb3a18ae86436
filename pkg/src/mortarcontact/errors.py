"""Exception types raised by the library.

Each failure class named in the module contracts maps to one exception here so
callers can distinguish bad input geometry from solver breakdowns.
"""


class MortarContactError(Exception):
    """Base class for all library errors."""


class InvalidGeometryError(MortarContactError):
    """Mesh or face-set geometry is unusable (inverted cells, degenerate faces, ...)."""


class MeshFormatError(MortarContactError):
    """Mesh exchange file is malformed; carries the offending line number."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ConfigurationError(MortarContactError):
    """Run configuration file or options are inconsistent."""


class AssemblyError(MortarContactError):
    """A discrete operator could not be assembled (empty overlap, missing sets, ...)."""


class ProjectionError(MortarContactError):
    """Mortar projection failed (zero averaged normal, non-invertible face map)."""


class SolverError(MortarContactError):
    """Linear or nonlinear solve failed; message carries the diagnostic."""
