"""Exception hierarchy shared by the numerical core, the harness and the API."""


class MetaRidgeError(Exception):
    """Base class for all errors raised by metaridge."""


class NotSpdError(MetaRidgeError):
    """A matrix expected to be symmetric positive definite is not (or is numerically singular)."""


class DimensionMismatchError(MetaRidgeError, ValueError):
    """Operand shapes are incompatible."""


class SingularError(MetaRidgeError):
    """A linear system that must be solved exactly is rank deficient."""


class StepFailureError(MetaRidgeError):
    """Backtracking line search exhausted its halvings without an acceptable step."""


class NoConvergenceError(MetaRidgeError):
    """An iterative solver hit its iteration cap before meeting its tolerance."""


class DegenerateDenominatorError(MetaRidgeError):
    """The limiting-risk denominator λγs + (1 − γ) vanished."""


class NonPositiveLambdaError(MetaRidgeError, ValueError):
    """A ridge or resolvent shift λ was not strictly positive."""


class ConfigError(MetaRidgeError):
    """Experiment configuration could not be read or validated."""


class IoError(MetaRidgeError, OSError):
    """Reading or writing an artifact failed."""


NUMERICAL_ERRORS = (
    NotSpdError,
    SingularError,
    StepFailureError,
    NoConvergenceError,
    DegenerateDenominatorError,
)
