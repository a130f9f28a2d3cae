"""Monte Carlo oracles for the zero-hitting probability.

Two independent simulation routes cross-check the quadrature:

* ``bridge_bm`` plays the planar Brownian race of the wedge reduction
  directly: the correlated pair starts at (a1, a2) and is absorbed on the
  first coordinate axis it touches.  Paths advance in aggregated windows
  (one Gaussian draw per window) and every window gets the exact
  per-coordinate Brownian-bridge crossing test, so barrier detection has no
  grid bias beyond the neglected joint same-window correction.
* ``euler_sabr`` / ``euler_drifted_sabr`` integrate the state pair on a
  fixed physical-time grid with full truncation (absorption at X <= 0);
  ``hobson_normal`` builds exact beta = 0 paths from the time-change
  representation, inverting the clock by trapezoid accumulation.

Reproducibility: paths are processed in fixed blocks of 8192, each block
drawing from its own counter-based Philox stream keyed (seed, block index).
Per-block results are integer counts, so the reduction over blocks is exact
and the output is bitwise identical for any worker count (the
SABR_BOUNDARY_THREADS environment variable only changes scheduling).
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .params import ModelParams, WedgeCoordinates, derive_wedge, require_valid

SCHEMES = ("bridge_bm", "euler_drifted_sabr", "euler_sabr", "hobson_normal")

# Paths per RNG stream; fixed so output never depends on worker scheduling.
_BLOCK = 8192
# Window length h <= d_min^2 / 90 keeps the far-field per-window bridge
# crossing probability below exp(-45); only near-barrier windows can fire.
_WINDOW_FACTOR = 90.0
# Window budget for the histogram's second-passage continuation.
_PHASE2_CAP = 200_000
# Grid steps advanced per vectorized chunk in the time-change scheme.
_HOBSON_CHUNK = 64


@dataclass(frozen=True)
class McConfig:
    """Simulation settings.

    ``dt`` is the grid step in the scheme's native clock: the Brownian pair
    clock for bridge_bm and hobson_normal, physical time for the Euler
    schemes.  ``t_max`` is the horizon in the same clock, except for
    hobson_normal where it is the physical horizon so its estimates measure
    the same event as the Euler schemes.  ``t_max = None`` means the default
    400 * r0^2 of the associated wedge.
    """

    n_paths: int
    dt: float
    t_max: float | None = None
    seed: int = 0
    scheme: str = "bridge_bm"

    def validate(self) -> list[str]:
        return validate_config(self)


@dataclass(frozen=True)
class McEstimate:
    """Hit-probability estimate with the unresolved-paths bracket.

    ``p_low`` counts only paths that resolved as hits; ``p_high``
    additionally counts every path still undecided at the horizon.  The
    exact answer lies between the two up to discretization bias.
    bridge_bm reports ``p_hat`` at the bracket midpoint (undecided paths
    count one half each); the SDE schemes report the hit frequency
    ``p_low``, i.e. the probability of hitting by the stated horizon.
    """

    p_hat: float
    std_err: float
    p_low: float
    p_high: float
    n_unresolved: int
    n_paths: int
    n_hit: int
    seed: int

    def __post_init__(self):
        ok = (
            0.0 <= self.p_low <= self.p_hat <= self.p_high <= 1.0
            and self.n_paths >= 1
            and 0 <= self.n_unresolved <= self.n_paths
            and (self.p_high - self.p_low) * self.n_paths >= self.n_unresolved - 1e-9
        )
        if not ok:
            raise DomainError(f"inconsistent estimate fields: {self}")


@dataclass(frozen=True)
class McHistogram:
    """Empirical joint law of the two passage times, X passage first.

    ``counts[i, j]`` counts pairs with s in s_edges[i:i+2] and t in
    t_edges[j:j+2]; the extra final row and column collect overflow beyond
    the last edge (including pairs whose second passage outran the
    continuation budget), so ``counts.sum() == n_hit`` exactly.
    """

    s_edges: np.ndarray
    t_edges: np.ndarray
    counts: np.ndarray
    n_paths: int
    n_hit: int
    n_unresolved: int
    seed: int

    @property
    def p_hat(self) -> float:
        """Hit frequency of the run; equals counts.sum() / n_paths."""
        return self.n_hit / self.n_paths


def validate_config(cfg: McConfig) -> list[str]:
    """Return constraint violations for ``cfg``, empty when admissible."""
    out: list[str] = []
    if not (isinstance(cfg.n_paths, int) and cfg.n_paths >= 1):
        out.append(f"n_paths: need an integer >= 1, got {cfg.n_paths!r}")
    if not (isinstance(cfg.dt, (int, float)) and math.isfinite(cfg.dt) and cfg.dt > 0.0):
        out.append(f"dt: need dt > 0, got {cfg.dt!r}")
    if cfg.t_max is not None and not (math.isfinite(cfg.t_max) and cfg.t_max > 0.0):
        out.append(f"t_max: need t_max > 0 (or None for 400*r0^2), got {cfg.t_max!r}")
    if not (isinstance(cfg.seed, int) and 0 <= cfg.seed < 2**64):
        out.append(f"seed: need a 64-bit unsigned integer, got {cfg.seed!r}")
    if cfg.scheme not in SCHEMES:
        out.append(f"scheme: need one of {', '.join(SCHEMES)}, got {cfg.scheme!r}")
    return out


def _require_config(cfg: McConfig) -> None:
    problems = validate_config(cfg)
    if problems:
        raise DomainError("; ".join(problems), violations=problems)


def default_horizon(w: WedgeCoordinates) -> float:
    """Default simulation horizon, 400 start-radii squared.

    Passage-time tails decay like t^(-1/2), so the horizon trades run time
    against the width of the unresolved bracket rather than against bias.
    """
    return 400.0 * w.r0 * w.r0


def worker_count() -> int:
    """Worker cap from SABR_BOUNDARY_THREADS (unset -> 1, 0 -> cpu count)."""
    raw = os.environ.get("SABR_BOUNDARY_THREADS", "").strip()
    if not raw:
        return 1
    try:
        value = int(raw)
    except ValueError:
        raise DomainError(
            f"SABR_BOUNDARY_THREADS: need a nonnegative integer, got {raw!r}"
        ) from None
    if value < 0:
        raise DomainError(f"SABR_BOUNDARY_THREADS: need a nonnegative integer, got {value}")
    if value == 0:
        return os.cpu_count() or 1
    return value


def _block_sizes(n_paths: int) -> list[int]:
    full, rem = divmod(n_paths, _BLOCK)
    return [_BLOCK] * full + ([rem] if rem else [])


def _stream(seed: int, block_index: int) -> np.random.Generator:
    key = np.array([seed, block_index], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def _run_blocks(work, sizes):
    """Apply ``work(block_index, block_size)`` to every block, in order."""
    workers = worker_count()
    if workers <= 1 or len(sizes) <= 1:
        return [work(i, n) for i, n in enumerate(sizes)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(work, range(len(sizes)), sizes))


def _estimate(n_hit: int, n_unresolved: int, n_paths: int, seed: int, *, midpoint: bool) -> McEstimate:
    p_low = n_hit / n_paths
    p_high = (n_hit + n_unresolved) / n_paths
    p_hat = 0.5 * (p_low + p_high) if midpoint else p_low
    std_err = math.sqrt(max(p_hat * (1.0 - p_hat), 0.0) / n_paths)
    return McEstimate(
        p_hat=p_hat,
        std_err=std_err,
        p_low=p_low,
        p_high=p_high,
        n_unresolved=n_unresolved,
        n_paths=n_paths,
        n_hit=n_hit,
        seed=seed,
    )


def _bridge_block(rng, n, a1, a2, rho, rho_bar, dt, n_steps, collect):
    """March one block of correlated pairs started at (a1, a2).

    Returns (n_hit, n_miss, n_unresolved, s, t); the passage-time arrays are
    None unless ``collect``.  Windows cover k grid steps with k capped by
    both the remaining horizon and d_min^2/(90 dt); each window applies the
    exact Brownian-bridge crossing test per coordinate.  Crossing times are
    reported at the window end (resolution ~dt, since far-field windows fire
    with probability < exp(-45)).  When both coordinates cross in one window
    a fair coin from the path's stream picks the winner.
    """
    d1 = np.full(n, float(a1))
    d2 = np.full(n, float(a2))
    steps_left = np.full(n, n_steps, dtype=np.int64)
    idx = np.arange(n)
    n_hit = 0
    n_miss = 0
    if collect:
        s_val = np.full(n, np.inf)
        t_val = np.full(n, np.inf)
        hit_all = np.zeros(n, dtype=bool)
        cont_idx: list[np.ndarray] = []
        cont_d: list[np.ndarray] = []
        cont_t: list[np.ndarray] = []
    while idx.size:
        m = idx.size
        g = rng.standard_normal((m, 2))
        u = rng.random((m, 3))
        k = (np.minimum(d1, d2) ** 2 / (_WINDOW_FACTOR * dt)).astype(np.int64)
        np.clip(k, 1, steps_left, out=k)
        h = k * dt
        root = np.sqrt(h)
        e1 = d1 + root * g[:, 0]
        e2 = d2 + root * (rho * g[:, 0] + rho_bar * g[:, 1])
        cross1 = u[:, 0] < np.exp(np.minimum(-2.0 * d1 * e1 / h, 0.0))
        cross2 = u[:, 1] < np.exp(np.minimum(-2.0 * d2 * e2 / h, 0.0))
        x_first = (cross1 & ~cross2) | (cross1 & cross2 & (u[:, 2] < 0.5))
        y_first = (cross1 | cross2) & ~x_first
        n_hit += int(np.count_nonzero(x_first))
        n_miss += int(np.count_nonzero(y_first))
        steps_after = steps_left - k
        if collect and np.any(x_first):
            ids = idx[x_first]
            hit_all[ids] = True
            s_here = (n_steps - steps_after[x_first]) * dt
            s_val[ids] = s_here
            same = cross2[x_first]
            t_val[ids[same]] = s_here[same]
            cont_idx.append(ids[~same])
            cont_d.append(e2[x_first][~same])
            cont_t.append(s_here[~same])
        keep = ~(cross1 | cross2) & (steps_after > 0)
        idx = idx[keep]
        d1 = e1[keep]
        d2 = e2[keep]
        steps_left = steps_after[keep]
    n_unresolved = n - n_hit - n_miss
    if not collect:
        return n_hit, n_miss, n_unresolved, None, None
    if cont_idx:
        ids = np.concatenate(cont_idx)
        d = np.concatenate(cont_d)
        t_abs = np.concatenate(cont_t)
        done = np.full(ids.size, np.inf)
        pos = np.arange(ids.size)
        for _ in range(_PHASE2_CAP):
            if not pos.size:
                break
            m = pos.size
            g = rng.standard_normal(m)
            u = rng.random(m)
            k = np.maximum(np.floor(d * d / (_WINDOW_FACTOR * dt)), 1.0)
            h = k * dt
            e = d + np.sqrt(h) * g
            crossed = u < np.exp(np.minimum(-2.0 * d * e / h, 0.0))
            t_abs = t_abs + h
            done[pos[crossed]] = t_abs[crossed]
            keep = ~crossed
            pos = pos[keep]
            d = e[keep]
            t_abs = t_abs[keep]
        t_val[ids] = done
    return n_hit, n_miss, n_unresolved, s_val[hit_all], t_val[hit_all]


def estimate_first_passage(w: WedgeCoordinates, cfg: McConfig) -> McEstimate:
    """Estimate P(first coordinate is absorbed first) for the wedge race.

    Unresolved-by-horizon paths populate the bracket and count one half
    each in ``p_hat`` (the bracket midpoint), which keeps the symmetric
    case exactly symmetric.
    """
    _require_config(cfg)
    if cfg.scheme != "bridge_bm":
        raise DomainError(
            f"estimate_first_passage requires scheme bridge_bm, got {cfg.scheme!r}"
        )
    rho = -math.cos(w.alpha)
    t_max = default_horizon(w) if cfg.t_max is None else cfg.t_max
    n_steps = max(1, math.ceil(t_max / cfg.dt))

    def work(i, m):
        rng = _stream(cfg.seed, i)
        return _bridge_block(rng, m, w.a1, w.a2, rho, w.rho_bar, cfg.dt, n_steps, False)

    parts = _run_blocks(work, _block_sizes(cfg.n_paths))
    n_hit = sum(p[0] for p in parts)
    n_unresolved = sum(p[2] for p in parts)
    return _estimate(n_hit, n_unresolved, cfg.n_paths, cfg.seed, midpoint=True)


def first_passage_histogram(w: WedgeCoordinates, cfg: McConfig, bins) -> McHistogram:
    """Bin the passage-time pairs (s, t) of paths whose first coordinate won.

    ``bins`` is a pair (s_edges, t_edges) of ascending arrays starting at
    0.0.  The winner decision uses the horizon of ``cfg``; the losing
    coordinate is then run to its own passage without a horizon (window
    aggregation makes that cheap), so every hit contributes a pair.  Pairs
    beyond the last edge land in the overflow row/column.  s < t holds for
    every pair except same-window photo finishes, which are recorded with
    t = s.  Deterministic given the seed.
    """
    _require_config(cfg)
    if cfg.scheme != "bridge_bm":
        raise DomainError(
            f"first_passage_histogram requires scheme bridge_bm, got {cfg.scheme!r}"
        )
    try:
        raw_s, raw_t = bins
    except (TypeError, ValueError):
        raise DomainError("bins: need a pair (s_edges, t_edges)") from None
    s_edges = np.asarray(raw_s, dtype=float)
    t_edges = np.asarray(raw_t, dtype=float)
    for name, edges in (("s_edges", s_edges), ("t_edges", t_edges)):
        if edges.ndim != 1 or edges.size < 2 or not np.all(np.diff(edges) > 0.0):
            raise DomainError(f"{name}: need a 1-D strictly increasing array of >= 2 edges")
        if edges[0] != 0.0:
            raise DomainError(f"{name}: first edge must be 0.0 so no pair underflows")
    ext_s = np.append(s_edges, np.inf)
    ext_t = np.append(t_edges, np.inf)
    rho = -math.cos(w.alpha)
    t_max = default_horizon(w) if cfg.t_max is None else cfg.t_max
    n_steps = max(1, math.ceil(t_max / cfg.dt))

    def work(i, m):
        rng = _stream(cfg.seed, i)
        n_hit, n_miss, n_unres, s, t = _bridge_block(
            rng, m, w.a1, w.a2, rho, w.rho_bar, cfg.dt, n_steps, True
        )
        counts, _, _ = np.histogram2d(s, t, bins=(ext_s, ext_t))
        return n_hit, n_miss, n_unres, counts.astype(np.int64)

    parts = _run_blocks(work, _block_sizes(cfg.n_paths))
    counts = sum(p[3] for p in parts)
    n_hit = sum(p[0] for p in parts)
    n_unresolved = sum(p[2] for p in parts)
    if int(counts.sum()) != n_hit:
        raise AssertionError("histogram lost pairs; overflow handling is broken")
    return McHistogram(
        s_edges=s_edges,
        t_edges=t_edges,
        counts=counts,
        n_paths=cfg.n_paths,
        n_hit=n_hit,
        n_unresolved=n_unresolved,
        seed=cfg.seed,
    )


def _euler_block(rng, n, p, cfg_dt, n_steps, drifted):
    """Euler-Maruyama on the physical grid with absorption at X <= 0.

    The volatility factor is advanced by its exact lognormal update, so
    discretization error lives only in the X coordinate.  Full truncation:
    a step proposing X <= 0 is absorbed at the boundary.
    """
    rho = p.rho
    rho_bar = math.sqrt((1.0 - rho) * (1.0 + rho))
    b = p.beta
    root = math.sqrt(cfg_dt)
    log_drift = -0.5 * p.nu * p.nu * cfg_dt
    x = np.full(n, p.x0)
    y = np.full(n, p.y0)
    n_hit = 0
    for _ in range(n_steps):
        if not x.size:
            break
        g = rng.standard_normal((x.size, 2))
        gw = g[:, 0]
        gz = rho * gw + rho_bar * g[:, 1]
        inc = y * x**b * (root * gw) if b else y * (root * gw)
        if drifted and b > 0.0:
            inc = inc + (0.5 * b * cfg_dt) * y * y * x ** (2.0 * b - 1.0)
        x_new = x + inc
        y = y * np.exp(p.nu * root * gz + log_drift)
        keep = x_new > 0.0
        n_hit += int(x_new.size - np.count_nonzero(keep))
        x = x_new[keep]
        y = y[keep]
    return n_hit, int(x.size)


def _hobson_block(rng, n, p, dt, t_max, u_steps):
    """Exact beta = 0 paths via the time-change representation.

    The correlated pair (x0 + W, y0/nu + Z) is marched on the Brownian
    clock; the physical clock Gamma accumulates (nu Ytilde)^-2 by trapezoid.
    X hits zero by physical t_max iff the first coordinate bridge-crosses
    while Gamma (taken at window midpoint) is still <= t_max; the second
    coordinate crossing, or Gamma passing t_max, resolves the path as a
    miss.  Paths still undecided after the Brownian-clock safety budget
    ``u_steps`` are reported unresolved.
    """
    rho = p.rho
    rho_bar = math.sqrt((1.0 - rho) * (1.0 + rho))
    nu = p.nu
    a2 = p.y0 / nu
    root = math.sqrt(dt)
    chunk = _HOBSON_CHUNK
    x = np.full(n, p.x0)
    y = np.full(n, a2)
    gamma = np.zeros(n)
    inv = np.full(n, 1.0 / (nu * a2) ** 2)
    n_hit = 0
    n_miss = 0
    for _ in range(max(1, -(-u_steps // chunk))):
        if not x.size:
            break
        m = x.size
        g = rng.standard_normal((m, chunk, 2))
        u = rng.random((m, chunk, 3))
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            xs = x[:, None] + np.cumsum(root * g[:, :, 0], axis=1)
            ys = y[:, None] + np.cumsum(root * (rho * g[:, :, 0] + rho_bar * g[:, :, 1]), axis=1)
            x_prev = np.concatenate([x[:, None], xs[:, :-1]], axis=1)
            y_prev = np.concatenate([y[:, None], ys[:, :-1]], axis=1)
            cx = u[:, :, 0] < np.exp(np.minimum(-2.0 * x_prev * xs / dt, 0.0))
            cy = u[:, :, 1] < np.exp(np.minimum(-2.0 * y_prev * ys / dt, 0.0))
            inv_new = np.where(ys > 0.0, 1.0 / (nu * ys) ** 2, np.inf)
            inv_prev = np.concatenate([inv[:, None], inv_new[:, :-1]], axis=1)
            d_gamma = (0.5 * dt) * (inv_prev + inv_new)
            gam = gamma[:, None] + np.cumsum(d_gamma, axis=1)
            stop = cx | cy | (gam > t_max)
            stopped = stop.any(axis=1)
            rows = np.nonzero(stopped)[0]
            j = np.argmax(stop[rows], axis=1)
            cxj = cx[rows, j]
            cyj = cy[rows, j]
            first = (cxj & ~cyj) | (cxj & cyj & (u[rows, j, 2] < 0.5))
            gam_mid = gam[rows, j] - 0.5 * d_gamma[rows, j]
            hit = first & (gam_mid <= t_max)
        n_hit += int(np.count_nonzero(hit))
        n_miss += int(rows.size - np.count_nonzero(hit))
        keep = ~stopped
        x = xs[keep, -1]
        y = ys[keep, -1]
        gamma = gam[keep, -1]
        inv = inv_new[keep, -1]
    return n_hit, n_miss, int(x.size)


def simulate_sabr(p: ModelParams, cfg: McConfig) -> McEstimate:
    """Estimate P(X hits zero by the horizon) by direct path simulation.

    ``p_hat`` is the hit-by-horizon frequency; paths alive at the horizon
    (or, for hobson_normal, undecided within the Brownian-clock safety
    budget) widen the bracket toward the all-time probability.
    """
    require_valid(p)
    _require_config(cfg)
    if cfg.scheme == "bridge_bm":
        raise DomainError(
            "simulate_sabr runs the SDE schemes; use estimate_first_passage for bridge_bm"
        )
    if cfg.scheme == "hobson_normal" and p.beta != 0.0:
        raise DomainError(f"hobson_normal requires beta = 0, got beta = {p.beta!r}")
    w = derive_wedge(p)
    t_max = default_horizon(w) if cfg.t_max is None else cfg.t_max

    if cfg.scheme == "hobson_normal":
        u_cap = 400.0 * (w.a1 * w.a1 + w.a2 * w.a2)
        u_steps = max(1, math.ceil(u_cap / cfg.dt))

        def work(i, m):
            rng = _stream(cfg.seed, i)
            return _hobson_block(rng, m, p, cfg.dt, t_max, u_steps)

        parts = _run_blocks(work, _block_sizes(cfg.n_paths))
        n_hit = sum(q[0] for q in parts)
        n_unresolved = sum(q[2] for q in parts)
        return _estimate(n_hit, n_unresolved, cfg.n_paths, cfg.seed, midpoint=False)

    drifted = cfg.scheme == "euler_drifted_sabr"
    n_steps = max(1, math.ceil(t_max / cfg.dt))

    def work(i, m):
        rng = _stream(cfg.seed, i)
        return _euler_block(rng, m, p, cfg.dt, n_steps, drifted)

    parts = _run_blocks(work, _block_sizes(cfg.n_paths))
    n_hit = sum(q[0] for q in parts)
    n_unresolved = sum(q[1] for q in parts)
    return _estimate(n_hit, n_unresolved, cfg.n_paths, cfg.seed, midpoint=False)
