"""Exception hierarchy shared across the package.

Every error raised deliberately by this package derives from
:class:`SabrBoundaryError`, so callers can catch one type. Input rejection is
split from numerical failure so the command line tool can map them to distinct
exit codes (1 for validation, 2 for non-convergence).
"""
from __future__ import annotations


class SabrBoundaryError(Exception):
    """Base class for all package errors."""


class DomainError(SabrBoundaryError, ValueError):
    """Inputs outside the supported domain.

    ``code`` is a stable machine-readable tag; human-readable detail goes in
    the message.
    """

    code = "domain"

    def __init__(self, message: str, *, violations: list[str] | None = None):
        super().__init__(message)
        self.violations = list(violations or [])


class BetaOneError(DomainError):
    """beta = 1 requested.

    The state process is then a driftless exponential local martingale and
    never reaches zero, so the hitting probability is identically 0 and the
    wedge construction is undefined.  Rejected with its own code so callers
    can distinguish it from garden-variety validation failures.
    """

    code = "beta_one"


class SeriesTruncationError(SabrBoundaryError, ArithmeticError):
    """The density series hit its term cap before the stopping rule fired."""

    def __init__(self, message: str, *, s: float, t: float, n_max: int):
        super().__init__(message)
        self.s = s
        self.t = t
        self.n_max = n_max


class QuadratureError(SabrBoundaryError, ArithmeticError):
    """Adaptive integration failed to converge; carries the partial result."""

    def __init__(self, message: str, *, partial=None):
        super().__init__(message)
        self.partial = partial
