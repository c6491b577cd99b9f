"""Exception hierarchy.

Every error raised by the library derives from :class:`QcrbError` and carries
the CLI exit status it maps to: 2 for domain/parameter problems, 3 for
numerical or search failures.
"""


class QcrbError(Exception):
    exit_code = 3


class DomainError(QcrbError):
    """Input outside the domain where the requested quantity is defined."""

    exit_code = 2


class NumericError(QcrbError):
    """A numerical routine failed to produce a trustworthy value."""

    exit_code = 3


class ParameterError(DomainError, ValueError):
    pass


class HermiticityError(DomainError, ValueError):
    pass


class SingularMatrixError(DomainError):
    def __init__(self, message, eigenvalue=None):
        super().__init__(message)
        self.eigenvalue = eigenvalue


class SingularStateError(SingularMatrixError):
    pass


class SupportMismatchError(DomainError):
    pass


class CapacityError(DomainError):
    pass


class TruncationError(DomainError):
    pass


class UnsupportedFamilyError(DomainError):
    pass


class DegenerateOutcomeError(NumericError):
    pass


class InfeasiblePovmError(NumericError):
    pass


class ConvergenceError(NumericError):
    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace or []


class OracleFailure(NumericError):
    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class SearchFailure(NumericError):
    pass
