"""Exception hierarchy shared by all modules."""


class RatingError(Exception):
    """Base class for every error raised by eigenrate."""


class InvalidGameError(RatingError, ValueError):
    """A game record or games file is malformed."""


class PriorError(RatingError, ValueError):
    """A prior rating table is malformed or inconsistent with the games."""


class UnknownPlayerWarning(UserWarning):
    """A prior names a player that played no games."""


class DegenerateProblemError(RatingError):
    """Finite ratings do not exist for the given score matrix.

    Carries the :class:`~eigenrate.degeneracy.DegeneracyReport` that
    triggered the refusal.
    """

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class SolverStateError(RatingError, ArithmeticError):
    """The iteration reached a state it cannot continue from."""


class OracleError(RatingError, ValueError):
    """The dense verification oracle cannot be built for this input."""
