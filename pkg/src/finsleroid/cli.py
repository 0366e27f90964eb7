"""Command-line front end.

    finsleroid eval --y 2,0.3,0.2,0.5            F and angles of one vector (JSON)
    finsleroid verify --seed 0 --out report.json  run the identity suite
    finsleroid sample --surface indicatrix --grid 16x16x8
    finsleroid sample --horizontal --grid 8x8 --lambda 2
    finsleroid report report.json                 pretty-print a stored report

Exit codes: 0 success, 1 verification failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys

import numpy as np

from .core import FinsleroidError, default_frame, load_params
from .horizontal import horizontal_bundle, horizontal_curvature_check, section_radius
from .inversion import angles_from_tangent, as_model, indicatrix_point, metric_function
from .verifier import Report, SamplingPlan, full_report, section_vector

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _floats(text: str, n: int | None = None) -> list[float]:
    try:
        vals = [float(x) for x in text.split(",")]
    except ValueError:
        raise UsageError(f"cannot parse numbers from {text!r}") from None
    if n is not None and len(vals) != n:
        raise UsageError(f"expected {n} comma-separated numbers, got {len(vals)}")
    return vals


def parse_grid(text: str, parts: tuple[int, ...] = (3,)) -> tuple[int, ...]:
    """'16x16x8' -> (16, 16, 8); ``parts`` lists the accepted lengths."""
    try:
        dims = tuple(int(x) for x in text.lower().split("x"))
    except ValueError:
        raise UsageError(f"grid must look like AxBxC, got {text!r}") from None
    if len(dims) not in parts or min(dims) < 1:
        raise UsageError(f"grid {text!r} needs {' or '.join(map(str, parts))} positive sizes")
    return dims


def thread_cap() -> int:
    """FINSLEROID_THREADS if set; the suite itself always runs on one thread."""
    raw = os.environ.get("FINSLEROID_THREADS")
    if raw is None or raw == "":
        return 1
    try:
        n = int(raw)
    except ValueError:
        raise UsageError(f"FINSLEROID_THREADS must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise UsageError(f"FINSLEROID_THREADS must be a positive integer, got {raw!r}")
    return n


def _params(args):
    try:
        return load_params(args.params)
    except OSError as exc:
        raise UsageError(f"cannot read params: {exc}") from None
    except (json.JSONDecodeError, FinsleroidError, ValueError) as exc:
        raise UsageError(f"bad params: {exc}") from None


def _open_out(path):
    if path is None or path == "-":
        return sys.stdout, False
    return open(path, "w", newline=""), True


# --- subcommands -----------------------------------------------------------------------

def cmd_eval(args) -> int:
    if args.y is None:
        raise UsageError("eval needs --y a,b,c,d")
    p = _params(args)
    y = _floats(args.y, 4)
    try:
        a, F = angles_from_tangent(y, default_frame(), p)
    except FinsleroidError as exc:
        raise UsageError(str(exc)) from None
    out = {"y": y, "F": F, "eta": a.eta, "theta": a.theta, "phi": a.phi}
    print(json.dumps(out, indent=2))
    return EXIT_OK


def cmd_verify(args) -> int:
    p = _params(args)
    threads = thread_cap()
    kw = {"seed": args.seed}
    if args.grid:
        kw["n_eta"], kw["n_theta"], kw["n_phi"] = parse_grid(args.grid)
    plan = SamplingPlan(**kw)
    report = full_report(plan, default_frame(), p)
    report.extras["threads"] = 1
    report.extras["thread_cap"] = threads
    fh, close = _open_out(args.out)
    try:
        fh.write(report.to_json() + "\n")
    finally:
        if close:
            fh.close()
    failed = report.failed()
    print(f"{report.status}: {len(report.records) - len(failed)}/{len(report.records)} records "
          f"in {report.elapsed:.1f} s", file=sys.stderr)
    for r in failed:
        print(f"  FAIL {r.id}: {r.max_residual:.3e} >= {r.tolerance:.0e}", file=sys.stderr)
    return EXIT_OK if report.overall else EXIT_FAIL


def _sample_indicatrix(p, dims, writer):
    plan = SamplingPlan(n_eta=dims[0], n_theta=dims[1], n_phi=dims[2])
    frame = default_frame()
    model = as_model(p)
    writer.writerow(["eta", "theta", "phi", "y0", "y1", "y2", "y3", "F"])
    for eta in plan.eta_grid():
        for theta in plan.theta_grid(p):
            for phi in plan.phi_grid(p):
                y = [float(v) for v in indicatrix_point((eta, theta, phi), frame, model)]
                writer.writerow([repr(float(eta)), repr(float(theta)), repr(float(phi)),
                                 *map(repr, y), repr(metric_function(y, frame, model))])


def _sample_horizontal(p, dims, lam, writer):
    plan = SamplingPlan(n_theta=dims[0], n_phi=dims[1])
    model = as_model(p)
    if lam is not None:
        try:
            scales = [section_radius(lam, model)]
        except FinsleroidError as exc:
            raise UsageError(str(exc)) from None
    else:
        n_scale = dims[2] if len(dims) == 3 else 1
        scales = list(np.geomspace(0.5, 2.0, n_scale)) if n_scale > 1 else [1.0]
    writer.writerow(["v1", "v2", "v3", "r", "det_R", "min_eigenvalue", "curvature_residual"])
    for scale in scales:
        for theta in plan.theta_grid(p):
            for phi in plan.phi_grid(p):
                v = section_vector(float(theta), float(phi), float(scale), model)
                hb = horizontal_bundle(v, model)
                row = [*map(float, v), hb.r, float(np.linalg.det(hb.R)),
                       float(np.linalg.eigvalsh(hb.R).min()), horizontal_curvature_check(hb, model)]
                writer.writerow([repr(x) for x in row])


def cmd_sample(args) -> int:
    p = _params(args)
    if args.horizontal:
        dims = parse_grid(args.grid or "8x8", (2, 3))
    else:
        if args.surface != "indicatrix":
            raise UsageError(f"unknown surface {args.surface!r}")
        if args.lam is not None:
            raise UsageError("--lambda applies to --horizontal sampling")
        dims = parse_grid(args.grid or "16x16x8")
    fh, close = _open_out(args.out)
    try:
        writer = csv.writer(fh)
        if args.horizontal:
            _sample_horizontal(p, dims, args.lam, writer)
        else:
            _sample_indicatrix(p, dims, writer)
    finally:
        if close:
            fh.close()
    return EXIT_OK


def format_report(report: Report) -> str:
    lines = [f"model: {report.model}   status: {report.status}",
             "params: " + ", ".join(f"{k}={v:g}" for k, v in report.params.items()
                                    if isinstance(v, (int, float)) and k in ("H", "T", "Chat", "P")),
             ""]
    width = max((len(r.id) for r in report.records), default=10)
    for r in report.records:
        lines.append(f"{r.status.upper():4s}  {r.id:<{width}s}  {r.max_residual:9.2e} < {r.tolerance:7.0e}"
                     f"  n={r.points:<4d} {r.statement}")
        if r.note:
            lines.append(" " * (width + 8) + f"note: {r.note}")
    failed = report.failed()
    lines.append("")
    lines.append(f"{len(report.records) - len(failed)} of {len(report.records)} records pass")
    return "\n".join(lines)


def cmd_report(args) -> int:
    try:
        with open(args.path) as fh:
            report = Report.from_dict(json.load(fh))
    except OSError as exc:
        raise UsageError(f"cannot read report: {exc}") from None
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise UsageError(f"not a report document: {exc}") from None
    print(format_report(report))
    if report.no_data:
        return EXIT_OK
    return EXIT_OK if report.overall else EXIT_FAIL


# --- entry point ------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="finsleroid",
                                     description="Evaluate and verify the two-axes pseudo-Finsleroid metric.")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--params", metavar="FILE", help="JSON object with H, T, Chat and optional constants")
    common.add_argument("--out", metavar="FILE", help="output file (default stdout)")

    pe = sub.add_parser("eval", parents=[common], help="F and angles of a tangent vector")
    pe.add_argument("--y", metavar="a,b,c,d", help="tangent vector components")
    pe.set_defaults(func=cmd_eval)

    pv = sub.add_parser("verify", parents=[common], help="run the identity suite and write a JSON report")
    pv.add_argument("--seed", type=int, default=0)
    pv.add_argument("--grid", metavar="AxBxC", help="eta x theta x phi grid sizes")
    pv.set_defaults(func=cmd_verify)

    ps = sub.add_parser("sample", parents=[common], help="CSV scans of the indicatrix or horizontal sections")
    ps.add_argument("--surface", default="indicatrix", help="surface to sample (indicatrix)")
    ps.add_argument("--horizontal", action="store_true", help="scan horizontal-section vectors instead")
    ps.add_argument("--grid", metavar="AxBxC", help="eta x theta x phi, or theta x phi[x scales] with --horizontal")
    ps.add_argument("--lambda", dest="lam", type=float, metavar="X", help="section height for --horizontal")
    ps.add_argument("--seed", type=int, default=0, help="accepted for symmetry; grids are deterministic")
    ps.set_defaults(func=cmd_sample)

    pr = sub.add_parser("report", help="pretty-print a stored report")
    pr.add_argument("path", help="report JSON written by verify")
    pr.set_defaults(func=cmd_report)
    return parser


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"finsleroid {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
