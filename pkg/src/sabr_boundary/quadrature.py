"""Boundary-hitting probability by double integration of the passage density.

P = integral over {0 < s < t < infinity} of f_joint(s, t): the first
coordinate must be absorbed strictly before the second.  The probability
depends on the wedge only through (alpha, theta0); the start radius is a pure
time scale, so the integrand is evaluated on the r0 = 1 wedge and the result
is exactly invariant under parameter rescalings.

Change of variables to the open unit square:

    t = v/(1-v),  s = t*u,   P = int_0^1 dv (1-v)^-2 * t * int_0^1 f(t*u, t) du

Both axes use tanh-sinh rules (the inner integrand has an integrable
(1-u)^(pi/(2 alpha) - 1) endpoint singularity when rho > 0, the outer a
matching one at v = 1), nested: each outer node solves the inner integral to
abs_tol/(4*(1+t)).  Complement nodes (1-u, 1-v) come straight from the rule,
so s and t - s keep full precision at the corners.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Iterable

import numpy as np

from ._dequad import integrate_unit
from .density import DEFAULT_CONFIG, DensityEvalConfig, _series_batch
from .errors import DomainError, SabrBoundaryError
from .params import ModelParams, WedgeCoordinates, derive_wedge

_ABS_TOL_LO = 1e-12
_ABS_TOL_HI = 1e-2
_INNER_MAX_LEVEL = 9
_OUTER_MAX_LEVEL = 8
_CLAMP_SLACK = 10.0


@dataclass(frozen=True)
class QuadratureResult:
    """Outcome of an adaptive integration.

    ``value`` is clamped to [0, 1] for probability outputs; ``raw_value``
    keeps the unclamped number for diagnostics.  ``converged`` is False when
    any nesting level hit its refinement cap before reaching tolerance or when
    the raw value strays outside [-10*abs_tol, 1 + 10*abs_tol].
    """

    value: float
    abs_err: float
    evals: int
    converged: bool
    raw_value: float


def _check_abs_tol(abs_tol: float) -> None:
    if not (math.isfinite(abs_tol) and _ABS_TOL_LO <= abs_tol <= _ABS_TOL_HI):
        raise DomainError(
            f"abs_tol: need {_ABS_TOL_LO:g} <= abs_tol <= {_ABS_TOL_HI:g}, got {abs_tol!r}"
        )


def _unit_wedge(w: WedgeCoordinates) -> WedgeCoordinates:
    if w.r0 == 1.0:
        return w
    return replace(w, a1=w.a1 / w.r0, a2=w.a2 / w.r0, r0=1.0)


def _integrate_square(
    w1: WedgeCoordinates,
    abs_tol: float,
    cfg: DensityEvalConfig,
    v_cap: float | None,
) -> QuadratureResult:
    """Shared core: integrate over v in (0, v_cap) via the v -> v*v_cap map."""
    evals = 0
    inner_converged = True

    def marginal(t_arr: np.ndarray) -> np.ndarray:
        # int_0^t f(s, t) ds = t * int_0^1 f(t*u, t) du for each outer node
        nonlocal evals, inner_converged
        out = np.empty_like(t_arr)
        for i, t in enumerate(t_arr):
            inner_tol = abs_tol / (4.0 * (1.0 + t))
            # density values provably below this cannot move the inner
            # integral by more than 1e-3 of its tolerance; lets the density
            # zero-skip corner nodes whose series is all cancellation
            floor = 1e-3 * inner_tol / t

            def g(u: np.ndarray, cu: np.ndarray) -> np.ndarray:
                vals, _, _ = _series_batch(t * u, t * cu, w1, cfg, abs_floor=floor)
                return vals * t

            val, _err, ev, ok = integrate_unit(g, inner_tol, max_level=_INNER_MAX_LEVEL)
            evals += ev
            inner_converged &= ok
            out[i] = val
        return out

    scale = 1.0 if v_cap is None else v_cap

    def outer(v: np.ndarray, cv: np.ndarray) -> np.ndarray:
        if v_cap is None:
            t = v / cv
            jac = 1.0 / (cv * cv)
        else:
            vv = v * v_cap
            cvv = 1.0 - vv
            t = vv / cvv
            jac = 1.0 / (cvv * cvv)
        return marginal(t) * jac

    raw, err, _oe, outer_ok = integrate_unit(
        outer, abs_tol / (2.0 * scale), max_level=_OUTER_MAX_LEVEL
    )
    raw *= scale
    err = err * scale + abs_tol / 4.0  # inner budget
    in_range = -_CLAMP_SLACK * abs_tol <= raw <= 1.0 + _CLAMP_SLACK * abs_tol
    value = min(1.0, max(0.0, raw))
    return QuadratureResult(
        value=value,
        abs_err=err,
        evals=evals,
        converged=bool(outer_ok and inner_converged and in_range),
        raw_value=raw,
    )


def hitting_probability_wedge(
    w: WedgeCoordinates,
    abs_tol: float = 1e-8,
    cfg: DensityEvalConfig = DEFAULT_CONFIG,
) -> QuadratureResult:
    """P(first coordinate absorbed first) for explicit wedge coordinates."""
    _check_abs_tol(abs_tol)
    return _integrate_square(_unit_wedge(w), abs_tol, cfg, v_cap=None)


def hitting_probability(
    p: ModelParams,
    abs_tol: float = 1e-8,
    cfg: DensityEvalConfig = DEFAULT_CONFIG,
) -> QuadratureResult:
    """P(X reaches zero in finite time) for model parameters ``p``."""
    return hitting_probability_wedge(derive_wedge(p), abs_tol, cfg)


def cumulative(
    p: ModelParams,
    T: float,
    abs_tol: float = 1e-8,
    cfg: DensityEvalConfig = DEFAULT_CONFIG,
) -> QuadratureResult:
    """P(X absorbed first and both coordinates absorbed by Brownian time T).

    Integrates f over {0 < s < t <= T}; T = inf returns the full hitting
    probability.  Nondecreasing in T up to quadrature tolerance.
    """
    _check_abs_tol(abs_tol)
    if T == math.inf:
        return hitting_probability(p, abs_tol, cfg)
    if not (math.isfinite(T) and T > 0.0):
        raise DomainError(f"cumulative: need T > 0 (or inf), got {T!r}")
    w = derive_wedge(p)
    w1 = _unit_wedge(w)
    T1 = T / (w.r0 * w.r0)  # horizon in the unit-radius clock
    v_cap = T1 / (1.0 + T1)  # t <= T1 corresponds to v <= v_cap
    return _integrate_square(w1, abs_tol, cfg, v_cap=v_cap)


@dataclass(frozen=True)
class SweepEntry:
    """One grid point of a sweep: either a result or an error message."""

    params: ModelParams
    result: QuadratureResult | None
    error: str | None


def sweep(
    grid: Iterable[ModelParams],
    abs_tol: float = 1e-8,
    cfg: DensityEvalConfig = DEFAULT_CONFIG,
) -> list[SweepEntry]:
    """Evaluate the hitting probability on a parameter grid.

    Entries are processed and returned in input order; a failure at one grid
    point is recorded in that entry and does not abort the rest.
    """
    _check_abs_tol(abs_tol)
    out: list[SweepEntry] = []
    for p in grid:
        try:
            res = hitting_probability(p, abs_tol, cfg)
            out.append(SweepEntry(params=p, result=res, error=None))
        except SabrBoundaryError as exc:
            out.append(SweepEntry(params=p, result=None, error=str(exc)))
    return out
