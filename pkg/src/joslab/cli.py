"""Command-line laboratory: parameter sweeps, tongue and adjacency reports,
monodromy output and the verification suite.

Exit codes: 0 success, 1 verification check failed, 2 invalid configuration,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import __version__
from .flow import Params, rotation_number
from .monodromy import SeedInaccurateError, WindingError, condition_star, monodromy
from .ode import IntegrationError
from .report import ConfigError, Report, RunConfig, emit
from .tongues import RefinementDiverged, boundary_at, find_adjacencies
from .verify import run_verification

DEFAULT_TOL = {"rotnum": 1e-9, "grid": 2e-8, "tongue": 1e-8, "adjacency": 1e-6}


def _parse_range(text: str):
    parts = text.split(":")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("range must be lo:hi:step")
    try:
        lo, hi, step = (float(p) for p in parts)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad range {text!r}") from exc
    return (lo, hi, step)


def _range_values(rng) -> list[float]:
    lo, hi, step = rng
    count = int(math.floor((hi - lo) / step + 1e-9)) + 1
    return [lo + k * step for k in range(count)]


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="joslab",
        description="rotation numbers, phase-locking tongues and adjacency "
        "points of the driven Josephson circle flow",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, *, point=False, tongue=False, ranges=False):
        p.add_argument("--nu", type=float, default=1.0, help="fixed nonzero parameter nu")
        if point:
            p.add_argument("--a", type=float, required=True)
            p.add_argument("--s", type=float, required=True)
        if tongue:
            p.add_argument("--r", type=int, required=True, help="tongue rotation number")
            p.add_argument("--s-range", type=_parse_range, required=True, metavar="LO:HI:STEP")
        if ranges:
            p.add_argument("--a-range", type=_parse_range, required=True, metavar="LO:HI:STEP")
            p.add_argument("--s-range", type=_parse_range, required=True, metavar="LO:HI:STEP")
        p.add_argument("--tol", type=float, default=None, help="override the default tolerance")
        p.add_argument("--threads", type=int, default=os.cpu_count() or 1)
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        p.add_argument("--out", dest="out", default=None, metavar="PATH")
        p.add_argument("--no-plot", dest="plot", action="store_false",
                       help="skip the figure next to the table output")

    common(sub.add_parser("rotnum", help="rotation number at one parameter point"), point=True)
    common(sub.add_parser("grid", help="rotation number over an (a, s) grid"), ranges=True)
    common(sub.add_parser("tongue", help="boundary curves of one tongue"), tongue=True)
    common(sub.add_parser("adjacency", help="locate and test adjacency points"), tongue=True)
    common(sub.add_parser("monodromy", help="monodromy matrix at one parameter point"), point=True)
    common(sub.add_parser("verify", help="run the full verification suite"))
    return parser


def _config_from_args(args) -> RunConfig:
    return RunConfig(
        command=args.command,
        nu=args.nu,
        a=getattr(args, "a", None),
        s=getattr(args, "s", None),
        r=getattr(args, "r", None),
        a_range=getattr(args, "a_range", None),
        s_range=getattr(args, "s_range", None),
        tol=args.tol,
        threads=args.threads,
        format=args.format,
        output_path=args.out,
        plot=args.plot,
    )


def _point_worker(task):
    nu, a, s, tol = task
    res = rotation_number(Params(nu, a, s), tol=tol)
    return {"a": a, "s": s, "rho": res.rho, "locked_r": res.locked_at}


def _run_rotnum(config: RunConfig) -> list[dict]:
    tol = config.tol or DEFAULT_TOL["rotnum"]
    res = rotation_number(Params(config.nu, config.a, config.s), tol=tol)
    print(f"rho(nu={config.nu:g}, a={config.a:g}, s={config.s:g}) = {res.rho:.15g}"
          + (f"  [locked at r={res.locked_at}]" if res.locked_at is not None else ""))
    return [
        {
            "nu": config.nu,
            "a": config.a,
            "s": config.s,
            "rho": res.rho,
            "locked_r": res.locked_at,
            "residual": res.residual,
            "converged": res.converged,
        }
    ]


def _run_grid(config: RunConfig) -> list[dict]:
    tol = config.tol or DEFAULT_TOL["grid"]
    a_values = _range_values(config.a_range)
    s_values = _range_values(config.s_range)
    tasks = [(config.nu, a, s, tol) for s in s_values for a in a_values]
    if config.threads and config.threads > 1 and len(tasks) >= 8:
        with ProcessPoolExecutor(max_workers=config.threads) as pool:
            rows = list(pool.map(_point_worker, tasks, chunksize=8))
    else:
        rows = [_point_worker(t) for t in tasks]
    print(f"grid: {len(rows)} points ({len(a_values)} x {len(s_values)})")
    return rows


def _run_tongue(config: RunConfig) -> list[dict]:
    tol = config.tol or DEFAULT_TOL["tongue"]
    rows = []
    for s in _range_values(config.s_range):
        sl = boundary_at(config.r, s, config.nu, tol_a=tol)
        rows.append(
            {
                "r": config.r,
                "s": s,
                "g_minus": None if sl.empty else sl.g_minus,
                "g_plus": None if sl.empty else sl.g_plus,
                "width": None if sl.empty else sl.width,
            }
        )
    filled = sum(1 for row in rows if row["width"] is not None)
    print(f"tongue r={config.r}: {filled}/{len(rows)} slices intersect the tongue")
    return rows


def _run_adjacency(config: RunConfig) -> list[dict]:
    tol = config.tol or DEFAULT_TOL["adjacency"]
    lo, hi, _ = config.s_range
    found = find_adjacencies(config.r, config.nu, (lo, hi), tol=tol)
    rows = []
    for adj in found:
        try:
            cs = condition_star(Params(config.nu, adj.a, adj.s))
            branch = cs.branch
        except (IntegrationError, WindingError, SeedInaccurateError):
            branch = None  # recorded as blank, not fatal
        rows.append(
            {
                "r": adj.r,
                "a": adj.a,
                "s": adj.s,
                "identity_residual": adj.identity_residual,
                "condition_star_branch": branch,
            }
        )
        print(
            f"adjacency r={adj.r}: a={adj.a:.12g} s={adj.s:.12g} "
            f"identity_residual={adj.identity_residual:.3e} branch={branch}"
        )
    if not rows:
        print(f"no adjacencies of tongue r={config.r} in the given range")
    return rows


def _run_monodromy(config: RunConfig) -> list[dict]:
    import cmath

    m = monodromy(Params(config.nu, config.a, config.s))
    mat = m.matrix
    det_dev = abs(np.linalg.det(mat) - cmath.exp(2j * math.pi * config.a))
    print(f"M = [[{mat[0,0]:.12g}, {mat[0,1]:.12g}], [{mat[1,0]:.12g}, {mat[1,1]:.12g}]]")
    print(f"det deviation = {det_dev:.3e}  projective deviation = {m.projective_deviation:.3e}")
    return [
        {
            "nu": config.nu,
            "a": config.a,
            "s": config.s,
            "m11_re": mat[0, 0].real,
            "m11_im": mat[0, 0].imag,
            "m12_re": mat[0, 1].real,
            "m12_im": mat[0, 1].imag,
            "m21_re": mat[1, 0].real,
            "m21_im": mat[1, 0].imag,
            "m22_re": mat[1, 1].real,
            "m22_im": mat[1, 1].imag,
            "det_deviation": det_dev,
            "projective_deviation": m.projective_deviation,
        }
    ]


def run(config: RunConfig) -> tuple[Report, int]:
    """Execute one command; returns the report and the process exit code."""
    t_start = time.perf_counter()
    tolerances = {"tol": config.tol} if config.tol else {"defaults": DEFAULT_TOL}
    exit_code = 0
    checks: list[dict] = []

    if config.command == "rotnum":
        results = _run_rotnum(config)
    elif config.command == "grid":
        results = _run_grid(config)
    elif config.command == "tongue":
        results = _run_tongue(config)
    elif config.command == "adjacency":
        results = _run_adjacency(config)
    elif config.command == "monodromy":
        results = _run_monodromy(config)
    else:
        report, ok = run_verification(threads=config.threads, echo=print)
        results = []
        checks = report.checks
        exit_code = 0 if ok else 1

    report = Report(
        command=config.command,
        results=results,
        checks=checks,
        provenance={"tool": "joslab", "version": __version__, "nu": config.nu,
                    "tolerances": tolerances},
    )
    wall = time.perf_counter() - t_start

    if config.output_path:
        written = [emit(report, config.format, config.output_path)]
        if config.plot:
            from .plots import save_figure

            fig_path = save_figure(config.command, results, config.output_path)
            if fig_path:
                written.append(fig_path)
        print(f"wrote {', '.join(written)}", file=sys.stderr)
    print(f"completed {config.command} in {wall:.1f}s", file=sys.stderr)
    return report, exit_code


def _join_range_flags(argv: list[str]) -> list[str]:
    """Fold '--a-range -1:1:0.1' into '--a-range=-1:1:0.1' so argparse does
    not mistake a negative lower bound for an option."""
    out = []
    skip = False
    for i, tok in enumerate(argv):
        if skip:
            skip = False
            continue
        if tok in ("--a-range", "--s-range") and i + 1 < len(argv):
            out.append(f"{tok}={argv[i + 1]}")
            skip = True
        else:
            out.append(tok)
    return out


def main(argv=None) -> int:
    parser = _build_parser()
    if argv is None:
        argv = sys.argv[1:]
    args = parser.parse_args(_join_range_flags(list(argv)))
    try:
        config = _config_from_args(args)
    except ConfigError as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return 2
    try:
        _, code = run(config)
    except ConfigError as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return 2
    except (IntegrationError, WindingError, RefinementDiverged) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(str(exc), file=sys.stderr)
        return 3
    return code


if __name__ == "__main__":
    sys.exit(main())
