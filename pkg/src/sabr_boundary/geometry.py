"""Model-space geometry: metrics, coordinate maps, Jacobians, residual checks.

Four Riemannian planes share the open upper half-plane (or its first
quadrant) as chart:

* H  : Poincare half-plane, h = (dx^2 + dy^2)/y^2
* S  : general model plane, g = (dx^2/x^(2b) - 2 rho dx dy/x^b + dy^2)/(rbar^2 y^2)
* S0 : the b = 0 model plane, g0 = (dx^2 - 2 rho dx dy + dy^2)/(rbar^2 y^2)
* U  : the rho = 0 model plane, u = (dx^2/x^(2b) + dy^2)/y^2

with b the CEV exponent beta and rbar = sqrt(1 - rho^2).  Seven maps connect
them; each strips or reintroduces one of (beta, rho), and all are local
isometries, which is what the pullback and diagram residuals verify
numerically.

Composition conventions: identities are stated in application order (first
map listed is applied first).  Maps built from the fractional power x^(1-beta)
extend continuously to x = 0 but are not differentiable there, so map_apply
accepts x = 0 while map_jacobian and the residual operations refuse it.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .params import ModelParams


class SpaceId(enum.Enum):
    """Chart spaces; the value is the conventional coordinate decoration."""

    S = "s"
    S0 = "s0"
    H = "h"
    U = "u"


class MapId(enum.Enum):
    PHI00_TILDE = "phi00_tilde"  # S  -> H,  strips beta and rho at once
    PHI0_HAT = "phi0_hat"  #        S  -> S0, strips beta
    PHI0_BAR = "phi0_bar"  #        S  -> U,  strips rho; needs rho <= 0
    PHI0_TILDE = "phi0_tilde"  #    S0 -> H,  strips rho
    CHI = "chi"  #                  S0 -> S,  reintroduces beta
    CHI_BAR = "chi_bar"  #          H  -> U,  reintroduces beta (quadrant only)
    VARPHI0_TILDE = "varphi0_tilde"  # U -> H, strips beta


_SOURCE = {
    MapId.PHI00_TILDE: SpaceId.S,
    MapId.PHI0_HAT: SpaceId.S,
    MapId.PHI0_BAR: SpaceId.S,
    MapId.PHI0_TILDE: SpaceId.S0,
    MapId.CHI: SpaceId.S0,
    MapId.CHI_BAR: SpaceId.H,
    MapId.VARPHI0_TILDE: SpaceId.U,
}

_TARGET = {
    MapId.PHI00_TILDE: SpaceId.H,
    MapId.PHI0_HAT: SpaceId.S0,
    MapId.PHI0_BAR: SpaceId.U,
    MapId.PHI0_TILDE: SpaceId.H,
    MapId.CHI: SpaceId.S,
    MapId.CHI_BAR: SpaceId.U,
    MapId.VARPHI0_TILDE: SpaceId.H,
}

# maps whose first coordinate is a fractional power of x: defined for x >= 0,
# differentiable only for x > 0
_POWER_MAPS = frozenset(
    {
        MapId.PHI00_TILDE,
        MapId.PHI0_HAT,
        MapId.PHI0_BAR,
        MapId.CHI,
        MapId.CHI_BAR,
        MapId.VARPHI0_TILDE,
    }
)


@dataclass(frozen=True)
class ChartPoint:
    """A point of one of the model spaces in its chart coordinates."""

    space: SpaceId
    x: float
    y: float

    def __post_init__(self):
        if not isinstance(self.space, SpaceId):
            raise DomainError(f"space: need a SpaceId, got {self.space!r}")
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise DomainError(f"chart point: need finite coordinates, got ({self.x!r}, {self.y!r})")
        if not self.y > 0.0:
            raise DomainError(f"chart point: need y > 0, got y={self.y!r}")


def map_source(m: MapId) -> SpaceId:
    return _SOURCE[m]


def map_target(m: MapId) -> SpaceId:
    return _TARGET[m]


def _rho_bar(p: ModelParams) -> float:
    return math.sqrt((1.0 - p.rho) * (1.0 + p.rho))


def metric_tensor(pt: ChartPoint, p: ModelParams) -> np.ndarray:
    """Coefficient matrix of the metric of pt's space at pt.

    Cross terms are split symmetrically, so the quadratic form is
    v^T G v for a displacement v.  Metrics involving x^beta with beta > 0
    (spaces S and U) require x > 0.
    """
    x, y = pt.x, pt.y
    if pt.space in (SpaceId.S, SpaceId.U) and p.beta > 0.0 and x <= 0.0:
        raise DomainError(
            f"metric_tensor: {pt.space.name} metric needs x > 0 when beta > 0, got x={x!r}"
        )
    y2 = y * y
    if pt.space is SpaceId.H:
        return np.array([[1.0 / y2, 0.0], [0.0, 1.0 / y2]])
    if pt.space is SpaceId.U:
        xb = x**p.beta
        return np.array([[1.0 / (y2 * xb * xb), 0.0], [0.0, 1.0 / y2]])
    rb2 = (1.0 - p.rho) * (1.0 + p.rho)
    if pt.space is SpaceId.S0:
        c = 1.0 / (rb2 * y2)
        return np.array([[c, -p.rho * c], [-p.rho * c, c]])
    # SpaceId.S
    xb = x**p.beta
    c = 1.0 / (rb2 * y2)
    return np.array([[c / (xb * xb), -p.rho * c / xb], [-p.rho * c / xb, c]])


def _check_map_point(m: MapId, pt: ChartPoint, p: ModelParams, need_interior: bool) -> None:
    if pt.space is not _SOURCE[m]:
        raise DomainError(
            f"map {m.value}: needs a point of {_SOURCE[m].name}, got {pt.space.name}"
        )
    if m is MapId.PHI0_BAR and not (-1.0 < p.rho <= 0.0):
        raise DomainError(f"map phi0_bar: needs rho in (-1, 0], got rho={p.rho!r}")
    if m in _POWER_MAPS:
        if need_interior and pt.x <= 0.0:
            raise DomainError(
                f"map {m.value}: not differentiable at x <= 0, got x={pt.x!r}"
            )
        if pt.x < 0.0:
            raise DomainError(f"map {m.value}: needs x >= 0, got x={pt.x!r}")


def map_apply(m: MapId, pt: ChartPoint, p: ModelParams) -> ChartPoint:
    """Image of pt under map m, tagged with the target space."""
    _check_map_point(m, pt, p, need_interior=False)
    b = p.beta
    rho = p.rho
    rb = _rho_bar(p)
    x, y = pt.x, pt.y
    omb = 1.0 - b

    if m is MapId.PHI00_TILDE:
        out_x = x**omb / (rb * omb) - rho * y / rb
    elif m is MapId.PHI0_HAT:
        out_x = x**omb / omb
    elif m is MapId.PHI0_BAR:
        out_x = omb ** (1.0 / omb) * (x**omb / (rb * omb) - rho * y / rb) ** (1.0 / omb)
    elif m is MapId.PHI0_TILDE:
        out_x = (x - rho * y) / rb
    elif m in (MapId.CHI, MapId.CHI_BAR):
        out_x = omb ** (1.0 / omb) * x ** (1.0 / omb)
    else:  # VARPHI0_TILDE
        out_x = x**omb / omb
    return ChartPoint(space=_TARGET[m], x=out_x, y=y)


def map_jacobian(m: MapId, pt: ChartPoint, p: ModelParams) -> np.ndarray:
    """Analytic Jacobian [[dX/dx, dX/dy], [dY/dx, dY/dy]] of map m at pt."""
    _check_map_point(m, pt, p, need_interior=True)
    b = p.beta
    rho = p.rho
    rb = _rho_bar(p)
    x, y = pt.x, pt.y
    omb = 1.0 - b

    if m is MapId.PHI00_TILDE:
        row = [x ** (-b) / rb, -rho / rb]
    elif m is MapId.PHI0_HAT:
        row = [x ** (-b), 0.0]
    elif m is MapId.PHI0_BAR:
        core = omb ** (b / omb) * (x**omb / (rb * omb) - rho * y / rb) ** (b / omb)
        row = [x ** (-b) / rb * core, -rho / rb * core]
    elif m is MapId.PHI0_TILDE:
        row = [1.0 / rb, -rho / rb]
    elif m in (MapId.CHI, MapId.CHI_BAR):
        row = [omb ** (b / omb) * x ** (b / omb), 0.0]
    else:  # VARPHI0_TILDE
        row = [x ** (-b), 0.0]
    return np.array([row, [0.0, 1.0]])


def pullback_residual(m: MapId, pt: ChartPoint, p: ModelParams) -> float:
    """Max-abs entry of J^T G_target(m(pt)) J - G_source(pt).

    Zero (to roundoff) exactly when m is a local isometry at pt, which all
    seven maps are on their domains.
    """
    jac = map_jacobian(m, pt, p)
    g_src = metric_tensor(pt, p)
    g_tgt = metric_tensor(map_apply(m, pt, p), p)
    res = jac.T @ g_tgt @ jac - g_src
    return float(np.max(np.abs(res)))


def _point_distance(a: ChartPoint, b: ChartPoint) -> float:
    return math.hypot(a.x - b.x, a.y - b.y)


def diagram_residual(pt: ChartPoint, p: ModelParams) -> float:
    """Worst relative mismatch of the four composition identities at pt in S.

    In application order (first listed applied first):

      1. phi0_bar then varphi0_tilde  = phi00_tilde      (rho <= 0 only)
      2. phi0_hat then phi0_tilde     = phi00_tilde
      3. chi then phi00_tilde         = phi0_tilde   (on the S0 image of pt)
      4. phi00_tilde then chi_bar     = phi0_bar         (rho <= 0 only)

    Each mismatch is the Euclidean distance between both sides divided by
    max(1, |rhs|); paths through phi0_bar are skipped for rho > 0, where that
    map is undefined.
    """
    if pt.space is not SpaceId.S:
        raise DomainError(f"diagram_residual: needs a point of S, got {pt.space.name}")
    if pt.x <= 0.0:
        raise DomainError(f"diagram_residual: needs interior x > 0, got x={pt.x!r}")

    def rel(lhs: ChartPoint, rhs: ChartPoint) -> float:
        return _point_distance(lhs, rhs) / max(1.0, math.hypot(rhs.x, rhs.y))

    tilde = map_apply(MapId.PHI00_TILDE, pt, p)
    hat = map_apply(MapId.PHI0_HAT, pt, p)

    residuals = [
        # 2: through S0
        rel(map_apply(MapId.PHI0_TILDE, hat, p), tilde),
        # 3: stated on S0; chi lands back in S, then up to H
        rel(
            map_apply(MapId.PHI00_TILDE, map_apply(MapId.CHI, hat, p), p),
            map_apply(MapId.PHI0_TILDE, hat, p),
        ),
    ]
    if p.rho <= 0.0:
        bar = map_apply(MapId.PHI0_BAR, pt, p)
        residuals.append(rel(map_apply(MapId.VARPHI0_TILDE, bar, p), tilde))
        residuals.append(rel(map_apply(MapId.CHI_BAR, tilde, p), bar))
    return max(residuals)
