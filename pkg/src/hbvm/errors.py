"""Exception types shared across the toolkit."""


class HbvmError(Exception):
    """Base class for all toolkit errors."""


class SingularProjectedProblem(HbvmError):
    """The small projected Sylvester system is numerically singular.

    Signals spectral overlap between the projected coefficient matrices;
    callers treat this as a solver failure.
    """


class NotConverged(HbvmError):
    """An iterative solver hit its iteration cap.

    Carries the last iterate and its statistics so the caller can decide
    whether to accept the result anyway.
    """

    def __init__(self, message, result=None, stats=None, residual=None):
        super().__init__(message)
        self.result = result
        self.stats = stats
        self.residual = residual


class SolverFailure(HbvmError):
    """A linear-algebra building block failed inside a time step."""


class NewtonDidNotConverge(SolverFailure):
    """Newton iteration exhausted its budget; the step controller reacts."""

    def __init__(self, message, iterations=None, residual=None):
        super().__init__(message)
        self.iterations = iterations
        self.residual = residual


class NonFiniteResidual(HbvmError):
    """The right-hand side produced NaN or Inf during a residual evaluation."""


class StepSizeUnderflow(HbvmError):
    """Step halving would push h below the configured floor."""


class ValidationError(HbvmError):
    """A configuration violates one or more invariants (all are listed)."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("invalid configuration:\n" + "\n".join(f"  - {v}" for v in self.violations))
