"""
Exceptions raised by the saito_sdk core modules.
"""


class SaitoError(Exception):
    """Root of every error raised by saito_sdk."""


class RingMismatchError(SaitoError, ValueError):
    pass


class DimensionMismatchError(SaitoError, ValueError):
    pass


class UnknownGroupError(SaitoError, KeyError):
    pass


class ParseError(SaitoError, ValueError):
    """Canonical text could not be parsed. `line` and `column` are 1-based."""

    def __init__(self, message, line=1, column=1):
        super().__init__("line {}, column {}: {}".format(line, column, message))
        self.line = line
        self.column = column
        self.reason = message


class InconsistencyError(SaitoError):
    """An internal consistency check failed (surplus residual, integrability, ...)."""


class RankDeficiencyError(InconsistencyError):
    pass


class VerificationError(SaitoError):
    """A verification or fixture comparison failed."""


class IntegrabilityError(InconsistencyError):
    """The Hessian assembled from the intersection form admits no potential."""
