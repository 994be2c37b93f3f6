"""
Errors raised by the magbill domain layer.
Validation failures also derive from ValueError so plain `except ValueError`
callers keep working.
"""


class MagbillError(Exception):
    """Base class for every error raised by magbill."""


class GeometryError(MagbillError, ValueError):
    pass


class InadmissiblePotentialError(MagbillError, ValueError):
    pass


class GaugeEquivalenceError(MagbillError, ValueError):
    pass


class DimensionMismatchError(MagbillError, ValueError):
    pass


class BoundaryConditionError(MagbillError, ValueError):
    pass


class AssemblyError(MagbillError):
    pass


class HermiticityError(AssemblyError):
    def __init__(self, defect: float, limit: float):
        super().__init__(f"Hermiticity defect {defect:.3e} exceeds {limit:.1e}; the assembly scheme is broken")
        self.defect = defect
        self.limit = limit


class ConvergenceError(MagbillError):
    def __init__(self, message: str, residuals=None):
        super().__init__(message)
        self.residuals = residuals


class UnitarityError(MagbillError, ValueError):
    pass


class CayleyError(MagbillError, ValueError):
    pass


class HermitianInputError(MagbillError, ValueError):
    pass


class ConfigError(MagbillError, ValueError):
    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
