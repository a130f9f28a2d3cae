"""Scaled modified Bessel function of the first kind, and log-gamma.

The first-passage density is a series over modified Bessel functions
I_nu(z) with real orders nu = n*pi/(2*alpha) and a shared argument z that can
reach 1e6 near the integration corners, so everything here is written around
``exp(-z) * I_nu(z)`` (the scaled form never overflows) and around evaluating
many orders at one argument in a single vectorized call.

Two evaluation branches, switched at z = max(30, nu^2/2):

* ascending power series  I_nu(z) = sum_k (z/2)^(2k+nu) / (k! Gamma(k+nu+1)),
  run as a ratio recursion from the leading term with periodic renormalization
  (for large z the leading scaled term underflows while the sum does not);
* large-argument asymptotic series
  I_nu(z) ~ e^z/sqrt(2 pi z) * sum_k (-1)^k a_k(nu)/z^k,
  a_k(nu) = prod_{j<=k} (4 nu^2 - (2j-1)^2) / (8^k k!),
  truncated at the first non-decreasing term (the series is asymptotic); the
  second, exponentially small component of I_nu is below 1e-26 relative for
  z >= 30 and is dropped.

At the switch point both branches agree to better than 1e-11 relative over
nu in [0, 200]; the power series is exact-in-principle and the asymptotic
series' first omitted term at z = nu^2/2 is ~1/k! with k ~ 17.
"""
from __future__ import annotations

import math

import numpy as np
from scipy.special import gammaln

from .errors import DomainError

_EPS = np.finfo(float).eps
_LN10 = math.log(10.0)
_RENORM = 1e250
_ASYM_KMAX = 60


def log_gamma(x: float) -> float:
    """Natural log of Gamma(x) for x > 0.

    Thin wrapper over the C library lgamma, which is good to ~1 ulp on the
    supported domain; kept as a named entry point so the density and tests
    share one gamma route.
    """
    if not (math.isfinite(x) and x > 0.0):
        raise DomainError(f"log_gamma: need finite x > 0, got {x!r}")
    return math.lgamma(x)


def bessel_i_scaled(nu: float, z: float) -> float:
    """exp(-z) * I_nu(z) for nu >= 0, z >= 0."""
    if not (math.isfinite(nu) and nu >= 0.0):
        raise DomainError(f"bessel_i_scaled: need finite order nu >= 0, got {nu!r}")
    if not (math.isfinite(z) and z >= 0.0):
        raise DomainError(f"bessel_i_scaled: need finite argument z >= 0, got {z!r}")
    return float(ive_grid(np.array([nu]), np.array([z]))[0, 0])


def ive_grid(nus: np.ndarray, zs: np.ndarray) -> np.ndarray:
    """exp(-z)*I_nu(z) on the grid (len(nus), len(zs)); shared-argument hot path.

    Branch choice is elementwise; inputs must already be validated
    (nus >= 0, zs >= 0, finite).
    """
    nus = np.atleast_1d(np.asarray(nus, dtype=float))
    zs = np.atleast_1d(np.asarray(zs, dtype=float))
    n, m = nus.size, zs.size
    nu2d = np.broadcast_to(nus[:, None], (n, m))
    z2d = np.broadcast_to(zs[None, :], (n, m))
    out = np.empty((n, m))

    zero = z2d == 0.0
    if zero.any():
        out[zero] = np.where(nu2d[zero] == 0.0, 1.0, 0.0)

    asym = (~zero) & (z2d >= np.maximum(30.0, 0.5 * nu2d * nu2d))
    if asym.any():
        out[asym] = _ive_asymptotic_flat(nu2d[asym], z2d[asym])

    ser = ~(zero | asym)
    if ser.any():
        out[ser] = _ive_series_flat(nu2d[ser], z2d[ser])
    return out


def _ive_series_flat(nu: np.ndarray, z: np.ndarray) -> np.ndarray:
    """Power-series branch on flat arrays with z > 0.

    Terms are positive, so no cancellation; the running term is kept at unit
    scale (leading term normalized to 1) and renormalized whenever it passes
    1e250, which keeps the recursion in range even when the true leading
    scaled term underflows double precision.  Updates are whole-array (terms
    past an element's convergence point only shrink, so letting every element
    run to the joint stopping index costs nothing in accuracy).
    """
    nu = np.asarray(nu, dtype=float)
    z = np.asarray(z, dtype=float)
    # iterations to pass the term peak k* = (sqrt(nu^2+z^2) - nu)/2, plus the
    # decay tail ~6*sqrt(k*) to drop below eps, plus slack
    kpeak = 0.5 * (np.hypot(nu, z) - nu)
    k_need = kpeak + 6.0 * np.sqrt(kpeak + 1.0) + 64.0

    # bucket elements by required depth so a few deep series do not drag
    # every element through their iteration count
    out = np.empty_like(z)
    order = np.argsort(k_need)
    k_sorted = k_need[order]
    lo = 0
    cap = 128.0
    while lo < order.size:
        hi = int(np.searchsorted(k_sorted, cap, side="right"))
        if hi > lo:
            sel = order[lo:hi]
            out[sel] = _ive_series_core(nu[sel], z[sel], kpeak[sel], int(k_sorted[hi - 1]) + 1)
            lo = hi
        cap *= 2.0
    return out


def _ive_series_core(nu: np.ndarray, z: np.ndarray, kpeak: np.ndarray, k_cap: int) -> np.ndarray:
    q = 0.25 * z * z
    term = np.ones_like(z)
    total = np.ones_like(z)
    shift = np.zeros_like(z)
    k_all_past_peak = int(np.max(kpeak)) + 1

    for k in range(1, k_cap + 1):
        term = term * (q / (k * (k + nu)))
        total += term
        if term.max() > _RENORM:
            big = term > _RENORM
            sc = np.where(big, 1.0 / _RENORM, 1.0)
            term *= sc
            total *= sc
            shift += np.where(big, 250.0 * _LN10, 0.0)
        if k >= k_all_past_peak and (k % 16 == 0 or k == k_cap):
            if np.all(term <= _EPS * total):
                break
    else:  # pragma: no cover - unreachable for validated inputs
        raise ArithmeticError("bessel series failed to terminate")

    log_lead = nu * np.log(0.5 * z) - gammaln(nu + 1.0)
    return np.exp(log_lead - z + shift + np.log(total))


def _ive_asymptotic_flat(nu: np.ndarray, z: np.ndarray) -> np.ndarray:
    """Large-argument branch on flat arrays; valid for z >= max(30, nu^2/2)."""
    nu = np.asarray(nu, dtype=float)
    z = np.asarray(z, dtype=float)
    mu = 4.0 * nu * nu
    total = np.ones_like(z)
    term = np.ones_like(z)
    prev_mag = np.full_like(z, np.inf)
    live = np.ones(z.shape, dtype=bool)
    for k in range(1, _ASYM_KMAX + 1):
        c = (2 * k - 1) ** 2
        t_new = term * (-(mu - c) / (8.0 * k * z))
        mag = np.abs(t_new)
        # asymptotic tail reached once terms stop decreasing: freeze, drop term
        keep = live & (mag < prev_mag)
        total = np.where(keep, total + t_new, total)
        term = np.where(keep, t_new, term)
        prev_mag = np.where(keep, mag, prev_mag)
        live = keep & (mag > _EPS * np.abs(total))
        if not live.any():
            break
    return total / np.sqrt(2.0 * np.pi * z)
