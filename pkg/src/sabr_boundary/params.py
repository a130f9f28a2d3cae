"""Model parameters and their reduction to first-passage wedge coordinates.

The state pair (X, Y) follows

    dX = Y X^beta dW + (beta/2) Y^2 X^(2 beta - 1) dt,   X_0 = x0 > 0,
    dY = nu Y dZ,                                        Y_0 = y0 > 0,

with d<W, Z> = rho dt and beta in [0, 1).  After the power transform
x -> x^(1-beta)/(1-beta) and a deterministic time change, the event "X hits
zero" becomes the event that the first coordinate of a correlated planar
Brownian motion wins a race to a pair of absorbing lines.  In polar form that
race lives in an infinite wedge, fully described by four numbers:

* ``r0``      -- start radius,
* ``alpha``   -- wedge opening angle, in (0, pi),
* ``theta0``  -- start angle, in (0, alpha),
* ``rho_bar`` -- sqrt(1 - rho^2), the decorrelation factor.

``theta0`` is computed as atan2(a2*rho_bar, a1 - rho*a2), the polar angle of
the decorrelated start point ((a1 - rho*a2)/rho_bar, a2).  This single
two-argument form reproduces the usual per-sign branch formulas (including the
rho = 0 case arctan(a2/a1)) and stays defined on the whole parameter domain.
The edge theta = alpha corresponds to X reaching zero (theta0 -> alpha exactly
as a1 -> 0), the edge theta = 0 to Y reaching zero first.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import BetaOneError, DomainError

# Correlations this close to +-1 collapse the wedge numerically.
RHO_MARGIN = 1e-12


@dataclass(frozen=True)
class ModelParams:
    """Model inputs. ``validate`` reports violations; construction is permissive."""

    beta: float
    rho: float
    nu: float
    x0: float
    y0: float

    def validate(self) -> list[str]:
        return validate(self)


@dataclass(frozen=True)
class WedgeCoordinates:
    """Polar description of the equivalent planar Brownian race.

    Invariant: r0^2 * rho_bar^2 == a1^2 + a2^2 - 2*rho*a1*a2 with
    rho = -cos(alpha); a1 and a2 are the transformed distances of the two
    coordinates from their absorbing levels, a1 = x0^(1-beta)/(1-beta) and
    a2 = y0/nu.
    """

    rho_bar: float
    a1: float
    a2: float
    r0: float
    alpha: float
    theta0: float

    def __post_init__(self):
        ok = (
            0.0 < self.rho_bar <= 1.0
            and self.a1 > 0.0
            and self.a2 > 0.0
            and self.r0 > 0.0
            and 0.0 < self.alpha < math.pi
            and 0.0 < self.theta0 < self.alpha
            and all(
                math.isfinite(v)
                for v in (self.rho_bar, self.a1, self.a2, self.r0, self.alpha, self.theta0)
            )
        )
        if not ok:
            raise DomainError(
                "invalid wedge coordinates: need 0 < rho_bar <= 1, a1 > 0, a2 > 0, "
                f"r0 > 0, 0 < alpha < pi, 0 < theta0 < alpha; got {self}"
            )


def validate(p: ModelParams) -> list[str]:
    """Return a list of constraint violations, empty when ``p`` is admissible.

    Each entry names the offending field and the bound it breaks.
    """
    out: list[str] = []
    if not (math.isfinite(p.beta) and 0.0 <= p.beta < 1.0):
        if p.beta == 1.0:
            out.append(
                "beta: beta = 1 excluded (state is an exponential local "
                "martingale that never reaches zero); need 0 <= beta < 1"
            )
        else:
            out.append(f"beta: need 0 <= beta < 1, got {p.beta!r}")
    if not (math.isfinite(p.rho) and abs(p.rho) <= 1.0 - RHO_MARGIN):
        out.append(f"rho: need |rho| <= 1 - {RHO_MARGIN:g}, got {p.rho!r}")
    if not (math.isfinite(p.nu) and p.nu > 0.0):
        out.append(f"nu: need nu > 0, got {p.nu!r}")
    if not (math.isfinite(p.x0) and p.x0 > 0.0):
        out.append(f"x0: need x0 > 0, got {p.x0!r}")
    if not (math.isfinite(p.y0) and p.y0 > 0.0):
        out.append(f"y0: need y0 > 0, got {p.y0!r}")
    return out


def require_valid(p: ModelParams) -> None:
    """Raise DomainError (BetaOneError when beta = 1) if ``p`` is inadmissible."""
    problems = validate(p)
    if problems:
        cls = BetaOneError if p.beta == 1.0 else DomainError
        raise cls("; ".join(problems), violations=problems)


def derive_wedge(p: ModelParams) -> WedgeCoordinates:
    """Map model parameters to wedge coordinates.

    Scale note: a common rescaling of (a1, a2) leaves (alpha, theta0) unchanged
    and multiplies r0, so the hitting probability depends on (alpha, theta0)
    only.  The beta-reduction identity holds bitwise: derive_wedge(beta, x0, ...)
    equals derive_wedge(0, x0^(1-beta)/(1-beta), ...) field for field.
    """
    require_valid(p)
    rho = p.rho
    rho_bar = math.sqrt((1.0 - rho) * (1.0 + rho))
    a1 = p.x0 ** (1.0 - p.beta) / (1.0 - p.beta)
    a2 = p.y0 / p.nu
    r0 = math.sqrt(a1 * a1 + a2 * a2 - 2.0 * rho * a1 * a2) / rho_bar
    alpha = math.atan2(rho_bar, -rho)
    theta0 = math.atan2(a2 * rho_bar, a1 - rho * a2)
    return WedgeCoordinates(rho_bar=rho_bar, a1=a1, a2=a2, r0=r0, alpha=alpha, theta0=theta0)
