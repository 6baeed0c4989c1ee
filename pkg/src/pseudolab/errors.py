"""Shared exception types.

The CLI maps ConfigurationError / DomainError / InapplicableConditionError
to exit code 2; everything else that escapes is a genuine failure.
"""


class ConfigurationError(ValueError):
    """Bad catalogue name, malformed config document, bad CLI arguments."""


class DomainError(ValueError):
    """Arguments outside an operation's domain (zero scale factor, l < 2, ...)."""


class InapplicableConditionError(DomainError):
    """Tail-bound condition queried for a family with tail limit 0 or infinity."""


class SingularityError(ArithmeticError):
    """An anchor or probe point sits on (or numerically on) the spectrum."""

    def __init__(self, message: str, which: str = ""):
        super().__init__(message)
        self.which = which


class TailCertificationError(ArithmeticError):
    """Strict-mode tail evaluation could not pin the infinite sup within tolerance."""

    def __init__(self, message: str, achieved_gap: float, blocks_scanned: int):
        super().__init__(message)
        self.achieved_gap = achieved_gap
        self.blocks_scanned = blocks_scanned
