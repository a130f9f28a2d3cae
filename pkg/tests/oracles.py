"""Independent oracles used by the test suite.

Everything here deliberately avoids the package's own algorithms: Bessel
values come from a plain high-precision ascending sum, an asymptotic
expansion with its own coefficient loop, closed forms at half-integer
order, and mpmath's implementation; derivatives come from central
differences; the naive Monte Carlo marcher detects barrier crossings by
endpoint sign only (no bridge correction).
"""
from __future__ import annotations

import math

import mpmath as mp
import numpy as np

from sabr_boundary.density import f_joint
from sabr_boundary.params import WedgeCoordinates

mp.mp.dps = 50


def ive_series_mp(nu: float, z: float) -> float:
    """exp(-z) I_nu(z) by the plain ascending series in 50-digit arithmetic."""
    if z == 0.0:
        return 1.0 if nu == 0.0 else 0.0
    nu_mp = mp.mpf(nu)
    z_mp = mp.mpf(z)
    q = z_mp * z_mp / 4
    term = mp.mpf(1)
    total = mp.mpf(1)
    k = 0
    while True:
        k += 1
        term *= q / (k * (k + nu_mp))
        total += term
        if abs(term) < mp.mpf(10) ** (-45) * abs(total) and k > z / 2:
            break
        if k > 200_000:
            raise ArithmeticError("oracle series did not terminate")
    lead = (z_mp / 2) ** nu_mp / mp.gamma(nu_mp + 1)
    return float(lead * total * mp.exp(-z_mp))


def ive_asymptotic(nu: float, z: float, k_terms: int = 20) -> float:
    """exp(-z) I_nu(z) from the large-argument expansion.

    ive ~ (2 pi z)^(-1/2) * sum_k (-1)^k a_k(nu) / z^k with
    a_k = prod_{j=1..k} (4 nu^2 - (2j-1)^2) / (8 j).  Valid for z >> nu^2;
    the sum is truncated at its smallest term.
    """
    mu = 4.0 * nu * nu
    term = 1.0
    total = 1.0
    prev = abs(term)
    for k in range(1, k_terms + 1):
        term *= -(mu - (2.0 * k - 1.0) ** 2) / (8.0 * k * z)
        if abs(term) > prev:
            break
        prev = abs(term)
        total += term
    return total / math.sqrt(2.0 * math.pi * z)


def ive_half_integer(nu: float, z: float) -> float:
    """Closed forms exp(-z) I_{+-1/2}(z) and exp(-z) I_{3/2}(z)."""
    if z == 0.0:
        raise ValueError("half-integer closed forms need z > 0")
    pref = math.sqrt(2.0 / (math.pi * z))
    # expm1-based sinh/cosh times exp(-z) stays accurate for large z
    em = -math.expm1(-2.0 * z)  # 1 - exp(-2z)
    ep = 2.0 - em  # 1 + exp(-2z)
    if nu == 0.5:
        return pref * 0.5 * em
    if nu == -0.5:
        return pref * 0.5 * ep
    if nu == 1.5:
        return pref * (0.5 * ep - 0.5 * em / z)
    raise ValueError(f"no closed form wired for nu={nu}")


def ive_mpmath(nu: float, z: float) -> float:
    """mpmath's own besseli, scaled."""
    return float(mp.besseli(mp.mpf(nu), mp.mpf(z)) * mp.exp(-mp.mpf(z)))


def fd_jacobian(fn, x: float, y: float, h: float = 1e-6) -> np.ndarray:
    """Central-difference Jacobian of fn: R^2 -> R^2 at (x, y)."""
    out = np.empty((2, 2))
    fx_p = fn(x + h, y)
    fx_m = fn(x - h, y)
    fy_p = fn(x, y + h)
    fy_m = fn(x, y - h)
    for i in range(2):
        out[i, 0] = (fx_p[i] - fx_m[i]) / (2.0 * h)
        out[i, 1] = (fy_p[i] - fy_m[i]) / (2.0 * h)
    return out


def wedge_exit_probability(w: WedgeCoordinates) -> float:
    """Exact law of the planar Brownian race: P(first axis wins) = theta0/alpha."""
    return w.theta0 / w.alpha


def density_bin_mass(
    w: WedgeCoordinates,
    s0: float,
    s1: float,
    t0: float,
    t1: float,
    order: int = 24,
) -> float:
    """integral of f over the bin, honoring the s < t support cut.

    Tensor Gauss-Legendre with the t-range clipped to (max(t0, s), t1) per
    s node; the integrand is smooth inside bins for right-angle wedges,
    where the density stays bounded at the diagonal.
    """
    nodes, weights = np.polynomial.legendre.leggauss(order)
    s_nodes = 0.5 * (s1 + s0) + 0.5 * (s1 - s0) * nodes
    s_weights = 0.5 * (s1 - s0) * weights
    total = 0.0
    for s, sw in zip(s_nodes, s_weights):
        lo = max(t0, s)
        if lo >= t1:
            continue
        t_nodes = 0.5 * (t1 + lo) + 0.5 * (t1 - lo) * nodes
        t_weights = 0.5 * (t1 - lo) * weights
        row = sum(tw * f_joint(s, t, w) for t, tw in zip(t_nodes, t_weights))
        total += sw * row
    return total


def naive_pair_estimate(
    w: WedgeCoordinates,
    n_paths: int,
    dt: float,
    t_max: float,
    seed: int,
) -> float:
    """Fixed-grid pair marching with endpoint-only crossing detection.

    The deliberately biased baseline for the bridge-effectiveness check:
    excursions through a barrier inside a step go unnoticed, so passage is
    detected late and the midpoint estimate is biased.  Unresolved paths
    count one half each, as in the bridge estimator.
    """
    rho = -math.cos(w.alpha)
    rho_bar = w.rho_bar
    rng = np.random.Generator(np.random.Philox(key=np.array([seed, 0], dtype=np.uint64)))
    n_steps = int(math.ceil(t_max / dt))
    root = math.sqrt(dt)
    d1 = np.full(n_paths, w.a1)
    d2 = np.full(n_paths, w.a2)
    n_hit = 0
    n_miss = 0
    for _ in range(n_steps):
        if not d1.size:
            break
        g = rng.standard_normal((d1.size, 2))
        u = rng.random(d1.size)
        d1 = d1 + root * g[:, 0]
        d2 = d2 + root * (rho * g[:, 0] + rho_bar * g[:, 1])
        c1 = d1 <= 0.0
        c2 = d2 <= 0.0
        x_first = (c1 & ~c2) | (c1 & c2 & (u < 0.5))
        y_first = (c1 | c2) & ~x_first
        n_hit += int(np.count_nonzero(x_first))
        n_miss += int(np.count_nonzero(y_first))
        keep = ~(c1 | c2)
        d1 = d1[keep]
        d2 = d2[keep]
    n_unresolved = n_paths - n_hit - n_miss
    return (n_hit + 0.5 * n_unresolved) / n_paths
