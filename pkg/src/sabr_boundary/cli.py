"""Command line surface with machine-readable output.

Every command emits one self-describing run record: command name, full
parameter echo (feeding the echo back reproduces the result), payload,
error estimate, wall time, tool version, and seed where applicable.  JSON
is the default format; ``--csv`` flattens the record to a header and one
row.  JSON floats use the shortest round-trip representation and CSV
floats use %.17g, so both are bit-faithful.  All times are in the Brownian
clock of the wedge reduction unless a command says otherwise.

Exit codes: 0 ok, 1 validation error, 2 non-convergence (partial result is
still printed), 3 I/O error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time
from dataclasses import dataclass
from importlib import metadata as _metadata

import numpy as np

from .density import DEFAULT_CONFIG, f_joint, series_diagnostics
from .errors import DomainError, QuadratureError, SabrBoundaryError
from .geometry import (
    ChartPoint,
    MapId,
    SpaceId,
    diagram_residual,
    map_apply,
    map_source,
    map_target,
    pullback_residual,
)
from .kernels import heat_kernel_h, hyperbolic_distance, kernel_g, kernel_g0
from .montecarlo import (
    McConfig,
    default_horizon,
    estimate_first_passage,
    simulate_sabr,
)
from .params import ModelParams, derive_wedge
from .quadrature import cumulative, hitting_probability, sweep

try:
    VERSION = _metadata.version("sabr-boundary")
except _metadata.PackageNotFoundError:  # running from a source tree
    VERSION = "0.0.0"

_SWEEP_COLUMNS = ("beta", "rho", "nu", "x0", "y0", "prob", "abs_err", "converged", "error")

_THETA0_NOTE = (
    "The start angle is computed as theta0 = atan2(a2*rho_bar, a1 - rho*a2) "
    "with a1 = x0^(1-beta)/(1-beta), a2 = y0/nu, rho_bar = sqrt(1-rho^2); "
    "this single form covers all correlation signs, including rho = 0 where "
    "it reduces to arctan(a2/a1), and the hitting probability equals the "
    "double integral of the first-passage density over 0 < s < t."
)


class _CliError(Exception):
    """Flag-level failure; maps to exit code 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _CliError(message)


@dataclass(frozen=True)
class RunRecord:
    """One command invocation: echo, payload, and provenance."""

    command: str
    params: dict
    result: dict
    abs_err: float | None
    wall_time_s: float
    version: str
    seed: int | None


def _jsonable(value):
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value.tolist()]
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    return value


def _record_dict(rec: RunRecord) -> dict:
    return {
        "command": rec.command,
        "version": rec.version,
        "params": _jsonable(rec.params),
        "result": _jsonable(rec.result),
        "abs_err": _jsonable(rec.abs_err),
        "seed": rec.seed,
        "wall_time_s": rec.wall_time_s,
    }


def _csv_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format(value, ".17g")
    if isinstance(value, (list, tuple)):
        return ";".join(_csv_cell(v) for v in value)
    return str(value)


def _record_csv(rec: RunRecord) -> str:
    flat: dict = {"command": rec.command, "version": rec.version}
    for key, val in rec.params.items():
        flat[key] = _jsonable(val)
    for key, val in rec.result.items():
        flat[f"result_{key}"] = _jsonable(val)
    flat["abs_err"] = rec.abs_err
    flat["seed"] = rec.seed
    flat["wall_time_s"] = rec.wall_time_s
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(flat.keys())
    writer.writerow(_csv_cell(v) for v in flat.values())
    return buf.getvalue()


def _write_out(text: str, out_path: str | None) -> None:
    if out_path is None:
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")
        return
    with open(out_path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def _emit(rec: RunRecord, args) -> None:
    if getattr(args, "csv", False):
        _write_out(_record_csv(rec), args.out)
    else:
        _write_out(json.dumps(_record_dict(rec), indent=2), args.out)


def _add_model_flags(sub, *, optional=(), defaults=None) -> None:
    defaults = defaults or {}
    for name in ("beta", "rho", "nu", "x0", "y0"):
        if name in optional:
            sub.add_argument(
                f"--{name}", type=float, default=defaults.get(name, 1.0),
                help=f"model parameter {name} (default {defaults.get(name, 1.0)})",
            )
        else:
            sub.add_argument(f"--{name}", type=float, required=True,
                             help=f"model parameter {name}")


def _add_output_flags(sub, *, csv_default=False) -> None:
    fmt = sub.add_mutually_exclusive_group()
    fmt.add_argument("--json", dest="csv", action="store_false",
                     help="emit a JSON record" + ("" if csv_default else " (default)"))
    fmt.add_argument("--csv", dest="csv", action="store_true",
                     help="emit a flattened CSV record" + (" (default)" if csv_default else ""))
    sub.set_defaults(csv=csv_default)
    sub.add_argument("--out", default=None, metavar="PATH",
                     help="write output to PATH instead of stdout")


def _model_params(args) -> ModelParams:
    return ModelParams(beta=args.beta, rho=args.rho, nu=args.nu, x0=args.x0, y0=args.y0)


def _model_echo(args) -> dict:
    return {"beta": args.beta, "rho": args.rho, "nu": args.nu, "x0": args.x0, "y0": args.y0}


def cmd_prob(args) -> int:
    p = _model_params(args)
    t0 = time.perf_counter()
    res = hitting_probability(p, abs_tol=args.tol)
    wall = time.perf_counter() - t0
    rec = RunRecord(
        command="prob",
        params={**_model_echo(args), "tol": args.tol},
        result={
            "prob": res.value,
            "abs_err": res.abs_err,
            "converged": res.converged,
            "evals": res.evals,
            "raw_value": res.raw_value,
        },
        abs_err=res.abs_err,
        wall_time_s=wall,
        version=VERSION,
        seed=None,
    )
    _emit(rec, args)
    return 0 if res.converged else 2


def cmd_density(args) -> int:
    p = _model_params(args)
    w = derive_wedge(p)
    t0 = time.perf_counter()
    value = f_joint(args.s, args.t, w)
    terms, last = series_diagnostics(args.s, args.t, w)
    wall = time.perf_counter() - t0
    rec = RunRecord(
        command="density",
        params={**_model_echo(args), "s": args.s, "t": args.t},
        result={
            "value": value,
            "terms_used": terms,
            "last_term_magnitude": last,
            "r0": w.r0,
            "alpha": w.alpha,
            "theta0": w.theta0,
        },
        abs_err=abs(value) * DEFAULT_CONFIG.rel_tol,
        wall_time_s=wall,
        version=VERSION,
        seed=None,
    )
    _emit(rec, args)
    return 0


def cmd_cumulative(args) -> int:
    p = _model_params(args)
    t0 = time.perf_counter()
    res = cumulative(p, args.T, abs_tol=args.tol)
    wall = time.perf_counter() - t0
    rec = RunRecord(
        command="cumulative",
        params={**_model_echo(args), "T": args.T, "tol": args.tol},
        result={
            "prob": res.value,
            "abs_err": res.abs_err,
            "converged": res.converged,
            "evals": res.evals,
            "raw_value": res.raw_value,
        },
        abs_err=res.abs_err,
        wall_time_s=wall,
        version=VERSION,
        seed=None,
    )
    _emit(rec, args)
    return 0 if res.converged else 2


def _read_grid(path: str) -> list[ModelParams]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise DomainError(f"grid file {path!r} is empty")
    header = [c.strip() for c in rows[0]]
    if header[:5] != list(_SWEEP_COLUMNS[:5]):
        raise DomainError(
            f"grid file {path!r}: header must start with "
            f"{','.join(_SWEEP_COLUMNS[:5])}, got {','.join(header[:5])}"
        )
    grid = []
    for ln, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        try:
            vals = [float(c) for c in row[:5]]
        except ValueError as exc:
            raise DomainError(f"grid file {path!r} line {ln}: {exc}") from None
        grid.append(ModelParams(*vals))
    if not grid:
        raise DomainError(f"grid file {path!r} has no data rows")
    return grid


def _sweep_rows(entries) -> list[dict]:
    rows = []
    for e in entries:
        row = {
            "beta": e.params.beta,
            "rho": e.params.rho,
            "nu": e.params.nu,
            "x0": e.params.x0,
            "y0": e.params.y0,
        }
        if e.result is not None:
            row.update(prob=e.result.value, abs_err=e.result.abs_err,
                       converged=e.result.converged, error=None)
        else:
            row.update(prob=None, abs_err=None, converged=False, error=e.error)
        rows.append(row)
    return rows


def cmd_sweep(args) -> int:
    grid = _read_grid(args.grid_file)
    t0 = time.perf_counter()
    entries = sweep(grid, abs_tol=args.tol)
    wall = time.perf_counter() - t0
    rows = _sweep_rows(entries)
    ok = all(r["converged"] for r in rows)
    if args.csv:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(_SWEEP_COLUMNS)
        for r in rows:
            writer.writerow(_csv_cell(r[c]) for c in _SWEEP_COLUMNS)
        _write_out(buf.getvalue(), args.out)
    else:
        rec = RunRecord(
            command="sweep",
            params={"grid_file": args.grid_file, "tol": args.tol},
            result={"rows": rows},
            abs_err=max((r["abs_err"] or 0.0) for r in rows),
            wall_time_s=wall,
            version=VERSION,
            seed=None,
        )
        _emit(rec, args)
    return 0 if ok else 2


def cmd_map(args) -> int:
    p = _model_params(args)
    m = MapId(args.map)
    src = map_source(m)
    pt = ChartPoint(space=src, x=args.x, y=args.y)
    t0 = time.perf_counter()
    image = map_apply(m, pt, p)
    result = {
        "source_space": src.value,
        "target_space": map_target(m).value,
        "x": image.x,
        "y": image.y,
    }
    if args.check:
        result["pullback_residual"] = pullback_residual(m, pt, p)
        result["diagram_residual"] = (
            diagram_residual(pt, p) if src is SpaceId.S else None
        )
    wall = time.perf_counter() - t0
    rec = RunRecord(
        command="map",
        params={**_model_echo(args), "map": args.map, "x": args.x, "y": args.y,
                "check": args.check},
        result=result,
        abs_err=None,
        wall_time_s=wall,
        version=VERSION,
        seed=None,
    )
    _emit(rec, args)
    return 0


def cmd_kernel(args) -> int:
    p = _model_params(args)
    t0 = time.perf_counter()
    if args.space == "h":
        z1 = ChartPoint(space=SpaceId.H, x=args.x1, y=args.y1)
        z2 = ChartPoint(space=SpaceId.H, x=args.x2, y=args.y2)
        d = hyperbolic_distance(z1, z2)
        value = heat_kernel_h(args.t, d)
        result = {"value": value, "distance": d,
                  "measure": "hyperbolic area element at the target"}
    else:
        space = SpaceId.S0 if args.space == "g0" else SpaceId.S
        src = ChartPoint(space=space, x=args.x1, y=args.y1)
        tgt = ChartPoint(space=space, x=args.x2, y=args.y2)
        kv = kernel_g0(args.t, src, tgt, p) if args.space == "g0" else kernel_g(args.t, src, tgt, p)
        value = kv.value
        result = {"value": value, "measure": "Lebesgue dx dy at the target"}
    wall = time.perf_counter() - t0
    rec = RunRecord(
        command="kernel",
        params={**_model_echo(args), "space": args.space, "t": args.t,
                "x1": args.x1, "y1": args.y1, "x2": args.x2, "y2": args.y2},
        result=result,
        abs_err=abs(value) * 1e-11,  # kernel integral runs at 1e-11 relative
        wall_time_s=wall,
        version=VERSION,
        seed=None,
    )
    _emit(rec, args)
    return 0


def cmd_mc(args) -> int:
    p = _model_params(args)
    w = derive_wedge(p)
    dt = args.dt if args.dt is not None else 1e-3 * w.r0 * w.r0
    t_max = args.tmax if args.tmax is not None else default_horizon(w)
    cfg = McConfig(n_paths=args.paths, dt=dt, t_max=t_max, seed=args.seed,
                   scheme=args.scheme)
    t0 = time.perf_counter()
    if args.scheme == "bridge_bm":
        est = estimate_first_passage(w, cfg)
    else:
        est = simulate_sabr(p, cfg)
    wall = time.perf_counter() - t0
    rec = RunRecord(
        command="mc",
        params={**_model_echo(args), "scheme": args.scheme, "paths": args.paths,
                "dt": dt, "tmax": t_max, "seed": args.seed},
        result={
            "p_hat": est.p_hat,
            "std_err": est.std_err,
            "p_low": est.p_low,
            "p_high": est.p_high,
            "n_hit": est.n_hit,
            "n_unresolved": est.n_unresolved,
            "n_paths": est.n_paths,
        },
        abs_err=est.std_err,
        wall_time_s=wall,
        version=VERSION,
        seed=args.seed,
    )
    _emit(rec, args)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="sabr-boundary",
        description="Probability that the drifted SABR state hits zero, "
                    "with the supporting density, geometry, kernel, and "
                    "Monte Carlo tooling.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {VERSION}")
    subs = parser.add_subparsers(dest="cmd", required=True)

    sp = subs.add_parser("prob", help="hitting probability via the series double integral",
                         description="Hitting probability of zero. " + _THETA0_NOTE)
    _add_model_flags(sp)
    sp.add_argument("--tol", type=float, default=1e-8, help="absolute tolerance (default 1e-8)")
    _add_output_flags(sp)
    sp.set_defaults(fn=cmd_prob)

    sp = subs.add_parser("density", help="joint first-passage density f(s, t)")
    _add_model_flags(sp)
    sp.add_argument("--s", type=float, required=True, help="first passage time, 0 < s < t")
    sp.add_argument("--t", type=float, required=True, help="second passage time, t > s")
    _add_output_flags(sp)
    sp.set_defaults(fn=cmd_density)

    sp = subs.add_parser("cumulative", help="probability restricted to passage by time T")
    _add_model_flags(sp)
    sp.add_argument("--T", type=float, required=True,
                    help="horizon in the Brownian clock; inf gives the full probability")
    sp.add_argument("--tol", type=float, default=1e-8, help="absolute tolerance (default 1e-8)")
    _add_output_flags(sp)
    sp.set_defaults(fn=cmd_cumulative)

    sp = subs.add_parser("sweep", help="hitting probability over a CSV parameter grid",
                         description="Reads beta,rho,nu,x0,y0 rows and emits one "
                                     "result row per grid point; output is valid "
                                     "sweep input, so sweeps can be refined.")
    sp.add_argument("--grid-file", required=True, metavar="PATH",
                    help="CSV with header starting beta,rho,nu,x0,y0")
    sp.add_argument("--tol", type=float, default=1e-8, help="absolute tolerance (default 1e-8)")
    _add_output_flags(sp, csv_default=True)
    sp.set_defaults(fn=cmd_sweep)

    sp = subs.add_parser("map", help="apply one of the isometric charts",
                         description="Applies the named map to (x, y) in its "
                                     "source chart; --check adds the metric "
                                     "pullback residual and, for maps out of "
                                     "the SABR chart, the composition-diagram "
                                     "residual.")
    sp.add_argument("--map", required=True, choices=[m.value for m in MapId],
                    help="map identifier")
    sp.add_argument("--x", type=float, required=True, help="source x")
    sp.add_argument("--y", type=float, required=True, help="source y (> 0)")
    sp.add_argument("--check", action="store_true", help="emit isometry residuals")
    _add_model_flags(sp, optional=("nu", "x0", "y0"))
    _add_output_flags(sp)
    sp.set_defaults(fn=cmd_map)

    sp = subs.add_parser("kernel", help="heat kernel value between two chart points",
                         description="h: hyperbolic-plane kernel against the "
                                     "hyperbolic area element; g0/g: chart "
                                     "kernels as Lebesgue densities in the "
                                     "target variables.")
    sp.add_argument("--space", required=True, choices=("h", "g0", "g"))
    sp.add_argument("--t", type=float, required=True, help="time (Brownian clock)")
    sp.add_argument("--x1", type=float, required=True)
    sp.add_argument("--y1", type=float, required=True)
    sp.add_argument("--x2", type=float, required=True)
    sp.add_argument("--y2", type=float, required=True)
    _add_model_flags(sp, optional=("beta", "rho", "nu", "x0", "y0"),
                     defaults={"beta": 0.0, "rho": 0.0})
    _add_output_flags(sp)
    sp.set_defaults(fn=cmd_kernel)

    sp = subs.add_parser("mc", help="Monte Carlo estimate of the hitting probability",
                         description="bridge_bm races the correlated Brownian "
                                     "pair (time-change construction); the "
                                     "euler schemes integrate the SDE on the "
                                     "physical clock; hobson_normal builds "
                                     "exact beta = 0 paths. Identical seed and "
                                     "config give bitwise-identical estimates "
                                     "for any SABR_BOUNDARY_THREADS value.")
    _add_model_flags(sp)
    sp.add_argument("--scheme", required=True,
                    choices=("bridge_bm", "euler_drifted_sabr", "euler_sabr", "hobson_normal"))
    sp.add_argument("--paths", type=int, default=100_000, help="number of paths (default 1e5)")
    sp.add_argument("--dt", type=float, default=None,
                    help="grid step in the scheme's clock (default 1e-3*r0^2)")
    sp.add_argument("--tmax", type=float, default=None,
                    help="horizon in the scheme's clock (default 400*r0^2)")
    sp.add_argument("--seed", type=int, default=0, help="64-bit RNG seed (default 0)")
    _add_output_flags(sp)
    sp.set_defaults(fn=cmd_mc)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    try:
        return args.fn(args)
    except QuadratureError as exc:
        print(f"error: {exc}", file=sys.stderr)
        if exc.partial is not None:
            print(f"partial result: {exc.partial!r}", file=sys.stderr)
        return 2
    except SabrBoundaryError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
