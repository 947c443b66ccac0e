"""Error hierarchy shared by every service and mapped to CLI exit codes"""
from typing import Iterable, Optional


class UnidiophError(Exception):
    """Base class for all library errors"""

    exit_code = 3

    def __init__(self, message: str, detail: Optional[str] = None):
        super().__init__(message)
        self.message = message
        self.detail = detail

    def to_dict(self) -> dict:
        return {"error": type(self).__name__, "message": self.message, "detail": self.detail}


# Input / usage class (exit code 2)

class UsageError(UnidiophError, ValueError):
    """Invalid command-line usage or parameter"""

    exit_code = 2

    def __init__(self, message: str, flag: Optional[str] = None):
        super().__init__(message, detail=flag)
        self.flag = flag


class DimensionError(UnidiophError, ValueError):
    """Matrix shape mismatch or non-square input"""

    exit_code = 2


class DomainError(UnidiophError, ValueError):
    """Argument outside the domain of the operation"""

    exit_code = 2


class CardinalityError(UnidiophError, ValueError):
    """A set is too small for a δ-type minimization"""

    exit_code = 2


class ResourceError(UnidiophError, ValueError):
    """Requested enumeration or grid exceeds the desk-scale budget"""

    exit_code = 2


class InvalidTableError(UnidiophError, ValueError):
    """Group, metric or action table violates its axioms"""

    exit_code = 2


class NotFaithfulError(InvalidTableError):
    """Action has a nontrivial kernel"""

    def __init__(self, kernel: Iterable[int]):
        self.kernel = sorted(kernel)
        super().__init__(
            "action is not faithful",
            detail=f"nonidentity elements acting trivially: {self.kernel}",
        )


class NotIsometricError(UnidiophError, ValueError):
    """Operation requires an action by isometries"""

    exit_code = 2


# Numerical class (exit code 3)

class NotUnitaryError(UnidiophError):
    """Unitarity residual above tolerance"""

    def __init__(self, residual: float, tol: float):
        self.residual = residual
        self.tol = tol
        super().__init__(
            "matrix is not unitary",
            detail=f"residual {residual:.3e} > tol {tol:.3e}",
        )


class NonFiniteEntryError(UnidiophError):
    """NaN or Inf in a matrix"""


class EigensolverFailure(UnidiophError):
    """Eigendecomposition failed its reconstruction check"""


class ConvergenceFailure(UnidiophError):
    """Iteration did not converge within its budget"""
