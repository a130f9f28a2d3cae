"""Heat kernels on the model planes and finite-difference generator checks.

Everything is built from the hyperbolic-plane kernel.  ``heat_kernel_h``
returns the transition density of hyperbolic Brownian motion (generator
half the Laplace-Beltrami operator) with respect to the hyperbolic area
measure; it depends on the two points only through their distance.  The chart
kernels ``kernel_g0``, ``kernel_u`` and ``kernel_g`` are densities of the
mapped processes with respect to plain Lebesgue measure on their chart, so
they integrate to one over the chart and concentrate to a Dirac delta at the
source as t drops to zero.  The Lebesgue convention makes the hyperbolic
volume factor explicit:

    kernel value = (isometry determinant at the target)
                   * heat_kernel_h(t, distance of mapped points) / target_y^2,

where 1/y^2 = sqrt(det h) translates the hyperbolic kernel itself to Lebesgue
measure and the determinant factor accounts for the chart map, evaluated at
the running (target) point.  As functions of the *source* point these kernels
satisfy the backward equation d/dt K = (1/2) Delta K; the target-variable
equation holds for the measure-invariant density, not for the Lebesgue one.

The time convention is Brownian throughout: the classical closed-form kernel
solving d/ds p = Delta p is evaluated at s = t/2.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from ._dequad import integrate_unit
from .errors import DomainError, QuadratureError
from .geometry import ChartPoint, MapId, SpaceId, map_apply, map_jacobian
from .params import ModelParams

# exp() underflow guard for the assembled kernel prefactor
_LOG_FLOOR = -760.0
_KERNEL_REL_TOL = 1e-11
_KERNEL_MAX_LEVEL = 10


@dataclass(frozen=True)
class KernelValue:
    """A kernel evaluation: Lebesgue-chart density with its arguments."""

    value: float
    time: float
    source: ChartPoint
    target: ChartPoint

    def __post_init__(self):
        if not (math.isfinite(self.value) and self.value >= 0.0):
            raise DomainError(f"kernel value: need finite value >= 0, got {self.value!r}")
        if not (math.isfinite(self.time) and self.time > 0.0):
            raise DomainError(f"kernel time: need t > 0, got {self.time!r}")
        if self.source.space is not self.target.space:
            raise DomainError(
                "kernel points: source and target must share a space, got "
                f"{self.source.space.name} and {self.target.space.name}"
            )


def hyperbolic_distance(z1: ChartPoint, z2: ChartPoint) -> float:
    """Geodesic distance on the Poincare half-plane.

    Equal to arccosh(1 + ((x1-x2)^2 + (y1-y2)^2) / (2 y1 y2)), evaluated as
    2*asinh(sqrt(q/2)) with q the bracketed ratio, which keeps full relative
    precision for nearby points.
    """
    if z1.space is not SpaceId.H or z2.space is not SpaceId.H:
        raise DomainError(
            f"hyperbolic_distance: needs points of H, got {z1.space.name}, {z2.space.name}"
        )
    q = ((z1.x - z2.x) ** 2 + (z1.y - z2.y) ** 2) / (2.0 * z1.y * z2.y)
    return 2.0 * math.asinh(math.sqrt(0.5 * q))


def heat_kernel_h(t: float, d: float) -> float:
    """Hyperbolic-plane Brownian transition density at distance d, time t.

    Density with respect to the hyperbolic area measure.  The closed form in
    the heat clock s (solving d/ds p = Delta p) is

        p_s(d) = sqrt(2) e^{-s/4} / (4 pi s)^{3/2}
                 * int_d^inf  w e^{-w^2/(4s)} / sqrt(cosh w - cosh d) dw,

    evaluated at s = t/2 for the Brownian convention.  The substitution
    w = d + v^2 removes the inverse-square-root endpoint singularity:
    cosh w - cosh d = 2 sinh(d + v^2/2) sinh(v^2/2), and the factor
    sqrt(sinh(v^2/2)) ~ v / sqrt(2) cancels against dw = 2v dv analytically.
    The dominant Gaussian e^{-d^2/(4s)} is pulled out of the integral so the
    quadrature works on an O(1) integrand.  Relative accuracy ~1e-10.
    """
    if not (math.isfinite(t) and t > 0.0):
        raise DomainError(f"heat_kernel_h: need t > 0, got {t!r}")
    if not (math.isfinite(d) and d >= 0.0):
        raise DomainError(f"heat_kernel_h: need d >= 0, got {d!r}")
    s = 0.5 * t
    log_pref = (
        0.5 * math.log(2.0)
        - 1.5 * math.log(4.0 * math.pi * s)
        - 0.25 * s
        - d * d / (4.0 * s)
    )
    if log_pref < _LOG_FLOOR:
        return 0.0

    def g(x: np.ndarray, cx: np.ndarray) -> np.ndarray:
        # far-tail nodes overflow sinh/exp arguments harmlessly: the Gaussian
        # factor reaches exact zero first, so those nodes contribute 0
        with np.errstate(over="ignore", invalid="ignore"):
            v = x / cx
            jac = 1.0 / (cx * cx)
            xi = 0.5 * v * v
            w = d + 2.0 * xi
            # sinh(xi)/xi -> 1 as xi -> 0; the half-power of xi already
            # cancelled against dw = 2v dv
            ratio = np.ones_like(xi)
            pos = xi > 0.0
            ratio[pos] = np.sinh(xi[pos]) / xi[pos]
            den = np.sqrt(np.sinh(d + xi) * ratio)
            expo = np.exp(-xi * (d + xi) / s)  # e^{-(w^2-d^2)/(4s)}
            out = np.zeros_like(xi)
            ok = (den > 0.0) & (expo > 0.0)
            out[ok] = 2.0 * w[ok] * expo[ok] / den[ok] * jac[ok]
        return out

    val, _err, _evals, converged = integrate_unit(
        g, tol_abs=1e-300, max_level=_KERNEL_MAX_LEVEL, tol_rel=_KERNEL_REL_TOL
    )
    if not converged:
        raise QuadratureError(
            f"heat_kernel_h: quadrature failed to converge at t={t!r}, d={d!r}",
            partial=val,
        )
    return math.exp(log_pref) * val


def _require_space(pt: ChartPoint, space: SpaceId, who: str) -> None:
    if pt.space is not space:
        raise DomainError(f"{who}: needs points of {space.name}, got {pt.space.name}")


def kernel_g0(t: float, source: ChartPoint, target: ChartPoint, p: ModelParams) -> KernelValue:
    """Transition kernel on the beta = 0 plane, Lebesgue density in target.

    The plane maps to the Poincare half-plane by a constant-Jacobian global
    isometry with determinant 1/rho_bar, so the value is
    heat_kernel_h at the mapped distance times 1/(rho_bar * target_y^2).
    """
    _require_space(source, SpaceId.S0, "kernel_g0")
    _require_space(target, SpaceId.S0, "kernel_g0")
    rho_bar = math.sqrt((1.0 - p.rho) * (1.0 + p.rho))
    d = hyperbolic_distance(
        map_apply(MapId.PHI0_TILDE, source, p), map_apply(MapId.PHI0_TILDE, target, p)
    )
    value = heat_kernel_h(t, d) / (rho_bar * target.y * target.y)
    return KernelValue(value=value, time=t, source=source, target=target)


def kernel_u(t: float, source: ChartPoint, target: ChartPoint, p: ModelParams) -> KernelValue:
    """Transition kernel on the rho = 0 plane, Lebesgue density in target.

    Pulled back from the half-plane kernel through the beta-stripping map,
    whose Jacobian determinant at the target is target_x^(-beta).
    """
    _require_space(source, SpaceId.U, "kernel_u")
    _require_space(target, SpaceId.U, "kernel_u")
    if source.x <= 0.0 or target.x <= 0.0:
        raise DomainError(
            f"kernel_u: needs x > 0, got source.x={source.x!r}, target.x={target.x!r}"
        )
    d = hyperbolic_distance(
        map_apply(MapId.VARPHI0_TILDE, source, p),
        map_apply(MapId.VARPHI0_TILDE, target, p),
    )
    det = target.x ** (-p.beta)
    value = det * heat_kernel_h(t, d) / (target.y * target.y)
    return KernelValue(value=value, time=t, source=source, target=target)


def kernel_g(
    t: float,
    source: ChartPoint,
    target: ChartPoint,
    p: ModelParams,
    x_guard: float | None = None,
) -> KernelValue:
    """Transition kernel on the general plane, Lebesgue density in target.

    Built by stripping the correlation (rho <= 0 required) and then the
    exponent: value = det(grad of the rho-stripping map at target) * kernel_u
    at the mapped points.  The kernel relation degenerates at the absorbing
    boundary, so targets with x <= x_guard (default 1e-3 * x0) are refused
    rather than extrapolated.
    """
    _require_space(source, SpaceId.S, "kernel_g")
    _require_space(target, SpaceId.S, "kernel_g")
    if not (-1.0 < p.rho <= 0.0):
        raise DomainError(f"kernel_g: needs rho in (-1, 0], got rho={p.rho!r}")
    guard = 1e-3 * p.x0 if x_guard is None else x_guard
    if not target.x > guard:
        raise DomainError(
            f"kernel_g: target.x must exceed the boundary guard {guard!r}, got {target.x!r}"
        )
    if source.x <= 0.0:
        raise DomainError(f"kernel_g: needs source.x > 0, got {source.x!r}")
    det = float(np.linalg.det(map_jacobian(MapId.PHI0_BAR, target, p)))
    inner = kernel_u(
        t,
        map_apply(MapId.PHI0_BAR, source, p),
        map_apply(MapId.PHI0_BAR, target, p),
        p,
    )
    return KernelValue(value=det * inner.value, time=t, source=source, target=target)


def laplace_beltrami_apply(
    space: SpaceId,
    field: Callable[[float, float], float],
    pt: ChartPoint,
    h_step: float,
    p: ModelParams,
    generator: bool = False,
) -> float:
    """Apply the space's Laplace-Beltrami operator to a sampled field at pt.

    Derivatives come from central finite differences with step h_step: the
    axis stencil for pure first/second derivatives plus the four corners for
    the mixed term when the space carries a dx dy cross term.  With
    ``generator=True`` the drift-free generator of the original process is
    applied instead (the first-derivative term is dropped); the two coincide
    at beta = 0.

    Coefficient forms (b = beta, applied at (x, y)):

        S :  y^2 (b x^(2b-1) f_x + x^(2b) f_xx + 2 rho x^b f_xy + f_yy)
        S0:  y^2 (f_xx + 2 rho f_xy + f_yy)
        U :  y^2 (b x^(2b-1) f_x + x^(2b) f_xx + f_yy)
        H :  y^2 (f_xx + f_yy)
    """
    if not isinstance(space, SpaceId):
        raise DomainError(f"laplace_beltrami_apply: need a SpaceId, got {space!r}")
    if pt.space is not space:
        raise DomainError(
            f"laplace_beltrami_apply: point space {pt.space.name} != {space.name}"
        )
    if not (math.isfinite(h_step) and h_step > 0.0):
        raise DomainError(f"laplace_beltrami_apply: need h_step > 0, got {h_step!r}")
    x, y = pt.x, pt.y
    h = h_step
    if y - h <= 0.0:
        raise DomainError(f"stencil leaves the domain: y - h = {y - h!r} <= 0")
    needs_x_pos = space in (SpaceId.S, SpaceId.U) and p.beta > 0.0
    if needs_x_pos and x - h <= 0.0:
        raise DomainError(f"stencil leaves the domain: x - h = {x - h!r} <= 0")

    f0 = field(x, y)
    fxp, fxm = field(x + h, y), field(x - h, y)
    fyp, fym = field(x, y + h), field(x, y - h)
    fx = (fxp - fxm) / (2.0 * h)
    fxx = (fxp - 2.0 * f0 + fxm) / (h * h)
    fyy = (fyp - 2.0 * f0 + fym) / (h * h)

    y2 = y * y
    b = p.beta
    if space is SpaceId.H:
        return y2 * (fxx + fyy)
    if space is SpaceId.S0:
        fxy = (
            field(x + h, y + h) - field(x + h, y - h) - field(x - h, y + h) + field(x - h, y - h)
        ) / (4.0 * h * h)
        return y2 * (fxx + 2.0 * p.rho * fxy + fyy)
    if space is SpaceId.U:
        drift = 0.0 if generator or b == 0.0 else b * x ** (2.0 * b - 1.0) * fx
        return y2 * (drift + x ** (2.0 * b) * fxx + fyy)
    # SpaceId.S
    fxy = (
        field(x + h, y + h) - field(x + h, y - h) - field(x - h, y + h) + field(x - h, y - h)
    ) / (4.0 * h * h)
    drift = 0.0 if generator or b == 0.0 else b * x ** (2.0 * b - 1.0) * fx
    xb = x**b
    return y2 * (drift + xb * xb * fxx + 2.0 * p.rho * xb * fxy + fyy)
