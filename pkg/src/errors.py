"""Exception hierarchy shared by all quasiboson modules."""


class QuasibosonError(Exception):
    """Base class for every error raised by this package."""


class ParameterError(QuasibosonError, ValueError):
    """Invalid dimensions, mode indices, labels or other inputs."""


class UsageError(ParameterError):
    """An operation was called on an object of the wrong shape or kind."""


class NilpotencyError(ParameterError):
    """Occupation above m requested for fermionic constituents."""


class ValidationFailure(QuasibosonError):
    """Input data failed a numerical validation check."""


class UnitarityError(ValidationFailure):
    """An explicit matrix that should be unitary is not."""


class NormalizationError(ValidationFailure):
    """A wavefunction or state is not normalized within tolerance."""


class ConvergenceError(QuasibosonError, ArithmeticError):
    """A series hit its term cap or two evaluation routes disagree."""
