"""Joint first-passage density of the two absorption times.

With (tau_x, tau_y) the zero-hitting times of the transformed coordinate pair
(in the Brownian clock), ``f_joint(s, t)`` is the density of
P(tau_x in ds, tau_y in dt) on 0 < s < t: the first coordinate is absorbed at
s, the second later at t.  In wedge coordinates (r0, alpha, theta0) it is a
Bessel series:

    f(s, t) = pi*sin(alpha) / (2*alpha^2*(t-s)*sqrt(s*(t - s*cos^2(alpha))))
              * exp(z - c) * sum_{n>=1} n*sin(n*pi*(alpha-theta0)/alpha)
                                      * e^{-z} I_{n*pi/(2*alpha)}(z),

    z = (r0^2/(2s)) * (t-s) / (2*(t - s*cos^2(alpha))),
    c = (r0^2/(2s)) * (t - s*cos(2*alpha)) / (2*(t - s*cos^2(alpha))),
    z - c = -r0^2 sin^2(alpha) / (2*(t - s*cos^2(alpha)))  (always <= 0).

The denominators 2t - s(1+cos(2*alpha)) and 2(t - s*cos^2(alpha)) are the same
quantity; the second form is used, evaluated as (t-s) + s*sin^2(alpha) so no
cancellation occurs even when alpha approaches 0 or pi.  The exp(z - c) factor
is combined analytically with the scaled Bessel values, which is what keeps
the evaluation finite for s -> 0 where both z and c blow up.

Series truncation: stop once |term| < rel_tol * |partial sum| holds for three
consecutive n, never before n_min terms; if n_max is reached first, raise
SeriesTruncationError.  Small negative values from an almost-cancelling sine
series are legitimate roundoff and are returned as computed, not clamped.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, SeriesTruncationError
from .params import WedgeCoordinates
from .special import ive_grid

# exp underflows to zero below this exponent; the true density underneath is
# smaller than any representable double
_EXP_FLOOR = -745.0
# log threshold for the rigorous small-s bound below (ln 1e-305)
_BOUND_FLOOR = -702.0
_CONSECUTIVE = 3


@dataclass(frozen=True)
class DensityEvalConfig:
    """Series evaluation controls.

    rel_tol drives the stopping rule; n_min forces a minimum number of terms
    (guards against a deceptively small early term); n_max caps work and turns
    a non-converging series into a hard error instead of a silent bias.
    """

    rel_tol: float = 1e-14
    n_min: int = 4
    n_max: int = 10000

    def __post_init__(self):
        if not (0.0 < self.rel_tol < 1e-6):
            raise DomainError(f"rel_tol: need 0 < rel_tol < 1e-6, got {self.rel_tol!r}")
        if not (1 <= self.n_min <= self.n_max):
            raise DomainError(
                f"n_min/n_max: need 1 <= n_min <= n_max, got {self.n_min!r}, {self.n_max!r}"
            )


DEFAULT_CONFIG = DensityEvalConfig()


def _check_domain(s: float, t: float) -> None:
    if not (math.isfinite(s) and math.isfinite(t) and 0.0 < s < t):
        raise DomainError(f"density domain: need 0 < s < t finite, got s={s!r}, t={t!r}")


def _series_batch(
    s: np.ndarray,
    tms: np.ndarray,
    w: WedgeCoordinates,
    cfg: DensityEvalConfig,
    abs_floor: float = 0.0,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized evaluation at points (s_i, t_i), t_i = s_i + tms_i.

    ``tms`` is t - s supplied exactly by the caller (the quadrature produces
    it from complement nodes, so it keeps relative precision near s = t).
    Returns (f, terms_used, last_term_magnitude); last_term_magnitude is the
    absolute contribution of the last evaluated term to f, so the contract
    last_term <= rel_tol * |f| can be checked on the returned scale.

    ``abs_floor > 0`` lets an integrator declare that density values provably
    below that threshold may be returned as zero: points whose rigorous
    pointwise bound (see below) falls under the floor are skipped.  The public
    single-point entry points keep the default 0.0, where only values below
    the double-precision range are shorted.
    """
    s = np.atleast_1d(np.asarray(s, dtype=float))
    tms = np.atleast_1d(np.asarray(tms, dtype=float))
    alpha = w.alpha
    sin_a = math.sin(alpha)
    sin2 = sin_a * sin_a
    q = math.pi / (2.0 * alpha)
    phi = math.pi * (alpha - w.theta0) / alpha
    r2 = w.r0 * w.r0

    denom = tms + s * sin2  # t - s*cos^2(alpha) = (t-s) + s*sin^2(alpha)
    z = (r2 / (2.0 * s)) * tms / (2.0 * denom)
    combined = -r2 * sin2 / (2.0 * denom)
    pref = (math.pi * sin_a / (2.0 * alpha * alpha)) / (tms * np.sqrt(s * denom))

    f = np.zeros_like(s)
    terms_used = np.zeros(s.shape, dtype=int)
    last_mag = np.zeros_like(s)

    # Two zero short-circuits, both below double-precision resolution:
    # (a) the shared exponent z - c underflows exp();
    # (b) a rigorous pointwise bound underflows.  For (b): on the event
    # {tau_x = s < tau_y} the path cannot touch the line carrying the
    # absorbing edge before s, so the s-marginal is dominated by the level
    # passage density at distance d1 = r0*sin(alpha - theta0), and the
    # conditional density of tau_y - s is at most sup_x x e^{-x^2/2}/sqrt(2pi)
    # divided by (t - s).  Hence
    #   f(s,t) <= 0.242 * d1 / ((t-s) * sqrt(2 pi s^3)) * exp(-d1^2/(2s)).
    # This catches the s -> 0 corner where z grows so large that the series
    # would need ~sqrt(z) terms to resolve a value far below 1e-305.
    d1 = w.r0 * math.sin(alpha - w.theta0)
    bound_log = (
        math.log(0.242 * d1 / math.sqrt(2.0 * math.pi))
        - 1.5 * np.log(s)
        - np.log(tms)
        - d1 * d1 / (2.0 * s)
    )
    floor_log = _BOUND_FLOOR if abs_floor <= 0.0 else max(_BOUND_FLOOR, math.log(abs_floor))
    open_mask = (combined >= _EXP_FLOOR) & (bound_log >= floor_log)
    if not open_mask.any():
        return f, terms_used, last_mag

    scale = np.zeros_like(s)
    scale[open_mask] = pref[open_mask] * np.exp(combined[open_mask])

    idx = np.flatnonzero(open_mask)  # global indices still summing
    partial = np.zeros(idx.size)
    streak = np.zeros(idx.size, dtype=int)
    z_open = z[idx]

    n0 = 1
    block = 16
    while idx.size:
        n_hi = min(n0 + block - 1, cfg.n_max)
        ns = np.arange(n0, n_hi + 1)
        ives = ive_grid(ns * q, z_open)  # (len(ns), len(idx))
        coeff = ns * np.sin(ns * phi)
        done_rows = np.zeros(idx.size, dtype=bool)
        for row, n in enumerate(ns):
            live = ~done_rows
            if not live.any():
                break
            term = coeff[row] * ives[row, live]
            partial[live] += term
            mag = np.abs(term)
            # <= so that an identically-underflowed tail (term 0, sum 0)
            # still terminates
            small = mag <= cfg.rel_tol * np.abs(partial[live])
            st = streak[live]
            st = np.where(small, st + 1, 0)
            streak[live] = st
            terms_used[idx[live]] = n
            last_mag[idx[live]] = mag
            if n >= cfg.n_min:
                newly = np.zeros(idx.size, dtype=bool)
                newly[live] = st >= _CONSECUTIVE
                done_rows |= newly
        finished = done_rows
        f[idx[finished]] = scale[idx[finished]] * partial[finished]
        keep = ~finished
        if n_hi >= cfg.n_max and keep.any():
            bad = idx[keep][0]
            raise SeriesTruncationError(
                f"density series did not converge within n_max={cfg.n_max} terms "
                f"at s={s[bad]!r}, t={(s[bad] + tms[bad])!r}",
                s=float(s[bad]),
                t=float(s[bad] + tms[bad]),
                n_max=cfg.n_max,
            )
        idx = idx[keep]
        partial = partial[keep]
        streak = streak[keep]
        z_open = z_open[keep]
        n0 = n_hi + 1
        block = min(2 * block, 512)

    last_mag *= scale
    return f, terms_used, last_mag


def f_joint(
    s: float,
    t: float,
    w: WedgeCoordinates,
    cfg: DensityEvalConfig = DEFAULT_CONFIG,
) -> float:
    """Density value at (s, t), 0 < s < t."""
    _check_domain(s, t)
    val, _, _ = _series_batch(np.array([s]), np.array([t - s]), w, cfg)
    return float(val[0])


def series_diagnostics(
    s: float,
    t: float,
    w: WedgeCoordinates,
    cfg: DensityEvalConfig = DEFAULT_CONFIG,
) -> tuple[int, float]:
    """(terms_used, last_term_magnitude) for the evaluation at (s, t).

    last_term_magnitude is on the scale of the returned density, so for any
    converged evaluation it is bounded by rel_tol * |f_joint| up to the
    stopping-rule slack.  An evaluation short-circuited by exponent underflow
    reports (0, 0.0).
    """
    _check_domain(s, t)
    _, terms, last = _series_batch(np.array([s]), np.array([t - s]), w, cfg)
    return int(terms[0]), float(last[0])


def f_uncorrelated(
    s: float,
    t: float,
    w: WedgeCoordinates,
    cfg: DensityEvalConfig = DEFAULT_CONFIG,
) -> float:
    """Right-angle (rho = 0) density in its reduced integer-order form.

    f(s, t) = 2/(pi*(t-s)*sqrt(s*t)) * exp(-r0^2 (t+s)/(4 s t))
              * sum_{n>=1} n*sin(2n(pi/2 - theta0)) * I_n(r0^2 (t-s)/(4 s t)),

    which is the general series specialized to alpha = pi/2; kept as an
    independent code path so the two routes can be compared.  Rejects wedges
    whose opening angle is not a right angle.
    """
    _check_domain(s, t)
    if abs(w.alpha - 0.5 * math.pi) > 1e-12:
        raise DomainError(
            f"f_uncorrelated: needs alpha = pi/2 (rho = 0), got alpha={w.alpha!r}"
        )
    r2 = w.r0 * w.r0
    arg = r2 * (t - s) / (4.0 * s * t)
    combined = -r2 / (2.0 * t)  # -(t+s)/(4st)*r0^2 + arg
    if combined < _EXP_FLOOR:
        return 0.0
    scale = 2.0 / (math.pi * (t - s) * math.sqrt(s * t)) * math.exp(combined)
    half_pi = 0.5 * math.pi
    partial = 0.0
    streak = 0
    n0 = 1
    block = 16
    while True:
        n_hi = min(n0 + block - 1, cfg.n_max)
        ns = np.arange(n0, n_hi + 1)
        ives = ive_grid(ns.astype(float), np.array([arg]))[:, 0]
        coeffs = ns * np.sin(2.0 * ns * (half_pi - w.theta0))
        for i, n in enumerate(ns):
            term = coeffs[i] * ives[i]
            partial += term
            streak = streak + 1 if abs(term) < cfg.rel_tol * abs(partial) else 0
            if streak >= _CONSECUTIVE and n >= cfg.n_min:
                return scale * partial
        if n_hi >= cfg.n_max:
            raise SeriesTruncationError(
                f"uncorrelated series did not converge within n_max={cfg.n_max} "
                f"terms at s={s!r}, t={t!r}",
                s=s,
                t=t,
                n_max=cfg.n_max,
            )
        n0 = n_hi + 1
        block = min(2 * block, 512)
