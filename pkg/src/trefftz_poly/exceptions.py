"""Exception hierarchy."""


class TrefftzPolyError(Exception):
    """Base class for all errors raised by this package."""


class MeshError(TrefftzPolyError):
    """Invalid geometry, seeds or mesh topology."""


class MeshFormatError(MeshError):
    """Malformed polymesh file."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ElementError(TrefftzPolyError):
    """An element matrix could not be built."""


class SolverError(TrefftzPolyError):
    """Singular or inconsistent global system."""


class BoundaryConditionError(TrefftzPolyError):
    """Conflicting or unknown boundary conditions."""
