"""
Exception hierarchy shared by all workbench modules
"""


class WorkbenchError(Exception):
    """Base class for every error raised by the workbench"""


class PrecisionError(WorkbenchError, ArithmeticError):
    """Result would need digits beyond the tracked precision"""


class FieldMismatchError(WorkbenchError, ValueError):
    """Operands live in different local fields"""


class NonPrimeError(WorkbenchError, ValueError):
    pass


class CharacterError(WorkbenchError, ValueError):
    """Character table is inconsistent or a character precondition fails"""


class DivergenceError(WorkbenchError, ArithmeticError):
    """An integral or series is outside its domain of convergence"""


class PoleError(WorkbenchError, ZeroDivisionError):
    pass


class ConvergenceError(WorkbenchError, ArithmeticError):
    """No convergence certificate (p-adic exp/log domain, geometric ratio >= 1)"""


class NotOrdinaryError(WorkbenchError, ValueError):
    pass


class ReductionError(WorkbenchError, ValueError):
    """Reduction type does not support the requested operation"""


class MissingCoefficientError(WorkbenchError, KeyError):
    pass


class TruncationError(WorkbenchError, ArithmeticError):
    """Tail or quadrature error estimate above the requested tolerance"""


class ResourceLimitError(WorkbenchError, RuntimeError):
    pass


class CertificationError(WorkbenchError, ValueError):
    """Input cannot be certified exactly (e.g. floating-point where algebraic is required)"""


class ConfigError(WorkbenchError, ValueError):
    """Campaign or CLI configuration could not be parsed"""


class ZeroInverseError(WorkbenchError, ZeroDivisionError):
    """Inversion of the exact zero"""
