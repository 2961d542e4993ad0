"""Exception hierarchy shared by all modules."""


class TsallisINFError(Exception):
    pass


class InvalidArgument(TsallisINFError, ValueError):
    pass


class InvalidState(TsallisINFError, RuntimeError):
    pass


class NumericalFailure(TsallisINFError, ArithmeticError):
    """A root-finder or minimizer did not converge within its iteration cap.

    ``row`` is the offending row of a batched solve, when known.
    """

    def __init__(self, message: str, row: int = None):
        super().__init__(message)
        self.row = row


class IngestionError(InvalidArgument):
    pass


class NotApplicable(InvalidArgument):
    """A check or bound was requested for a setting it does not cover."""


class BoundNotApplicable(NotApplicable):
    """The stochastic bound needs a unique best arm."""


class PreconditionViolation(InvalidArgument):
    pass
