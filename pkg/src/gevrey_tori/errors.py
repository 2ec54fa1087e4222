"""Exception types shared by all modules.

Two families are distinguished because the command line maps them to
different exit codes: bad input (``ValidationError``) and a numerical
invariant that failed at runtime (``InvariantError``).
"""

from __future__ import annotations


class ValidationError(ValueError):
    """Input rejected before any heavy computation (bad config, resonant omega, ...)."""


class InvariantError(ArithmeticError):
    """A runtime check on a computed object failed.

    ``invariant`` names the check so that callers (and the CLI) can report it.
    """

    def __init__(self, invariant: str, message: str):
        super().__init__(f"{invariant}: {message}")
        self.invariant = invariant
        self.detail = message
