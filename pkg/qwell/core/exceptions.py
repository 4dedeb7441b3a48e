# qwell/core/exceptions.py
"""Exception hierarchy for qwell. Every error carries the process exit code the CLI reports."""
from typing import List, Optional


class QwellBaseException(Exception):
    """Base for all qwell errors. Logged fully; the CLI prints only message and exit code."""
    def __init__(
        self,
        message: str = "An error occurred",
        exit_code: int = 1,
        request_id: Optional[str] = None,
    ):
        self.message = message
        self.exit_code = exit_code
        self.request_id = request_id
        super().__init__(message)


# --- exit code 2: configuration and input ---
class ConfigError(QwellBaseException):
    """Raised when a run config is unreadable or fails schema validation."""
    def __init__(self, message: str = "Invalid run configuration", request_id: Optional[str] = None):
        super().__init__(message=message, exit_code=2, request_id=request_id)


class InputError(QwellBaseException):
    """Raised for malformed numerical inputs (non-finite samples, bad indices, grid mismatch)."""
    def __init__(self, message: str = "Invalid input", request_id: Optional[str] = None):
        super().__init__(message=message, exit_code=2, request_id=request_id)


# --- exit code 3: preconditions ---
class PreconditionError(QwellBaseException):
    """Raised when a mathematical precondition of an operation does not hold."""
    def __init__(self, message: str = "Precondition violated", request_id: Optional[str] = None):
        super().__init__(message=message, exit_code=3, request_id=request_id)


class CompatibilityError(PreconditionError):
    """Target Gram matrix does not match the Gram matrix of the initial data."""
    def __init__(self, message: str = "Targets are not compatible with the initial Gram matrix", request_id: Optional[str] = None):
        super().__init__(message=message, request_id=request_id)


class UnreachableDirectionError(PreconditionError):
    """A requested direction has zero coupling and cannot be reached at first order."""
    def __init__(self, message: str = "Requested direction has zero coupling", request_id: Optional[str] = None):
        super().__init__(message=message, request_id=request_id)


class DegenerateFamilyError(PreconditionError):
    """The moment family around the reference trajectory is numerically dependent."""
    def __init__(self, message: str = "Moment family is degenerate; increase eta", request_id: Optional[str] = None):
        super().__init__(message=message, request_id=request_id)


class ConstraintViolationError(PreconditionError):
    """A phase congruence required by the delay/phase solve is violated."""
    def __init__(self, message: str = "Phase congruence violated", request_id: Optional[str] = None):
        super().__init__(message=message, request_id=request_id)


class TrustRegionError(PreconditionError):
    """Perturbation size (eta, initial state, target radius) exceeds the Newton budget."""
    def __init__(self, message: str = "Perturbation outside the Newton trust region", request_id: Optional[str] = None):
        super().__init__(message=message, request_id=request_id)


# --- exit code 4: numerical failures ---
class NumericalError(QwellBaseException):
    """Raised when a numerical procedure fails."""
    def __init__(self, message: str = "Numerical failure", request_id: Optional[str] = None):
        super().__init__(message=message, exit_code=4, request_id=request_id)


class IntegratorFailure(NumericalError):
    """Propagation produced non-finite values."""
    def __init__(self, message: str = "Integrator produced non-finite values", request_id: Optional[str] = None):
        super().__init__(message=message, request_id=request_id)


class IllConditionedError(NumericalError):
    """Moment Gram matrix too ill-conditioned for the horizon; carries the condition estimate."""
    def __init__(self, condition: float, message: Optional[str] = None, request_id: Optional[str] = None):
        self.condition = condition
        super().__init__(
            message=message or f"Gram condition {condition:.3e} above threshold: frequencies too close for this T (enlarge T)",
            request_id=request_id,
        )


class NewtonDivergenceError(NumericalError):
    """Newton iteration failed to converge; carries the residual history."""
    def __init__(self, residual_history: List[float], message: Optional[str] = None, request_id: Optional[str] = None):
        self.residual_history = list(residual_history)
        last = self.residual_history[-1] if self.residual_history else float("nan")
        super().__init__(
            message=message or f"Newton did not converge after {len(self.residual_history)} evaluations (last residual {last:.3e})",
            request_id=request_id,
        )


class EigenSolveError(NumericalError):
    """Dense symmetric eigen-solve failed."""
    def __init__(self, message: str = "Eigenvalue solve failed", request_id: Optional[str] = None):
        super().__init__(message=message, request_id=request_id)


class StageError(QwellBaseException):
    """Wraps an error raised while building one stage of a reference trajectory."""
    def __init__(self, stage: str, cause: QwellBaseException):
        self.stage = stage
        self.cause = cause
        super().__init__(message=f"[{stage}] {cause.message}", exit_code=cause.exit_code, request_id=cause.request_id)
