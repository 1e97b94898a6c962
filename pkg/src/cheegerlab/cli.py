"""Command-line front end.

Subcommands: ``space list|info``, ``verify <check> --space <descriptor>``,
``sweep p-monotonicity|rigidity``, ``buser``, ``report validate``.

Reports are newline-delimited JSON records, UTF-8, one record per check, with
the fixed field order (tool_version, check, space, inputs, computed, verdict,
gap, tolerance, notes).  The first line is a header object carrying the
format tag and the timestamp; record bodies are byte-identical across runs
with identical argv.  Exit codes: 0 all PASS, 1 any FAIL, 2 usage/validation
error, 3 INCONCLUSIVE present.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from datetime import datetime, timezone

import numpy as np

from . import __version__
from .kernels import buser_sharp_bound
from .mmspace import MODEL_DEFAULTS, build_space, parse_descriptor
from .plaplacian import monotonicity_sweep
from .reports import VerificationReport, Verdict
from .spectral import HeatOperator, smoothing_report, solve_spectrum, assemble_operator
from .verify import (
    revolution_diagnostics,
    rigidity_scan,
    verify_buser,
    verify_cheeger,
    verify_heat_chain,
    verify_isoperimetry,
)

REPORT_FORMAT = "cheegerlab-report/1"

_VERIFY_CHECKS = ("cheeger", "buser", "isoperimetry", "heat-chain", "smoothing", "revolution")


def _jsonable(value):
    if isinstance(value, (np.floating,)):
        return float(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value.tolist()]
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, Verdict):
        return value.value
    return value


def report_record(report: VerificationReport) -> str:
    payload = {
        "tool_version": __version__,
        "check": report.check,
        "space": report.space,
        "inputs": _jsonable(report.inputs),
        "computed": _jsonable(report.computed),
        "verdict": report.verdict.value,
        "gap": float(report.gap),
        "tolerance": float(report.tolerance),
        "notes": report.notes,
    }
    return json.dumps(payload, ensure_ascii=False)


def _emit(reports, out_path):
    header = json.dumps(
        {"format": REPORT_FORMAT, "generated_at": datetime.now(timezone.utc).isoformat()}
    )
    lines = [header] + [report_record(r) for r in reports]
    text = "\n".join(lines) + "\n"
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _exit_code(reports) -> int:
    verdicts = [r.verdict for r in reports]
    if any(v is Verdict.FAIL for v in verdicts):
        return 1
    if any(v is Verdict.INCONCLUSIVE for v in verdicts):
        return 3
    return 0


def _parse_float_list(text: str):
    return [float(x) for x in text.split(",") if x.strip()]


def _parse_eps(text: str):
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError("epsilon range must be start:stop:step")
        start, stop, step = map(float, parts)
        if step <= 0:
            raise ValueError("epsilon step must be positive")
        count = int(round((stop - start) / step))
        return [start + k * step for k in range(count + 1)]
    return _parse_float_list(text)


def _build_from_args(args) -> "object":
    model = parse_descriptor(args.space)
    overrides = {}
    if getattr(args, "n", None) is not None:
        overrides["n"] = args.n
    if getattr(args, "R", None) is not None:
        overrides["R"] = args.R
    return build_space(model, **overrides)


def _add_space_opts(p, require_space=True):
    p.add_argument("--space", required=require_space, help="model descriptor, e.g. gaussian:K=1,R=8")
    p.add_argument("--n", type=int, help="node count override")
    p.add_argument("--R", type=float, help="truncation radius override")
    p.add_argument("--out", help="write the report to this path instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cheegerlab",
        description="spectral gaps, Cheeger constants and sharp functional "
        "inequalities on discretized weighted 1D spaces",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_space = sub.add_parser("space", help="model catalog")
    space_sub = p_space.add_subparsers(dest="space_command", required=True)
    space_sub.add_parser("list", help="list models and default parameters")
    p_info = space_sub.add_parser("info", help="build a grid and print a summary")
    _add_space_opts(p_info)
    p_info.add_argument("--csv", help="export the grid (x, mass, iface_weight) to CSV")

    p_verify = sub.add_parser("verify", help="run one named inequality check")
    p_verify.add_argument("check", choices=_VERIFY_CHECKS)
    _add_space_opts(p_verify, require_space=False)
    p_verify.add_argument("--tol", type=float, help="verdict tolerance override")
    p_verify.add_argument("--ts", default="0.1,1,10", help="heat-chain times (comma list)")
    p_verify.add_argument("--t", type=float, default=1.0, help="smoothing time")
    p_verify.add_argument("--trials", type=int, default=100, help="smoothing trials")
    p_verify.add_argument("--T", default="10,20,40", help="revolution truncations (comma list)")

    p_sweep = sub.add_parser("sweep", help="parameter sweeps")
    p_sweep.add_argument("kind", choices=("p-monotonicity", "rigidity"))
    _add_space_opts(p_sweep, require_space=False)
    p_sweep.add_argument("--ps", default="1,1.5,2,3", help="exponent list for p-monotonicity")
    p_sweep.add_argument("--eps", default="0:0.1:0.02", help="epsilon list or start:stop:step")
    p_sweep.add_argument("--csv", help="also write the sweep as flat CSV")

    p_buser = sub.add_parser("buser", help="evaluate the sharp bound sup_t (1-e^{-lt})/J_K(t)")
    p_buser.add_argument("--lambda1", type=float, required=True)
    p_buser.add_argument("--K", type=float, required=True)
    p_buser.add_argument("--samples-csv", help="write the sampled (t, ratio) pairs to CSV")

    p_report = sub.add_parser("report", help="report-file utilities")
    report_sub = p_report.add_subparsers(dest="report_command", required=True)
    p_validate = report_sub.add_parser("validate", help="parse a report file, recompute the exit code")
    p_validate.add_argument("--path", required=True)

    return parser


def _cmd_space(args) -> int:
    if args.space_command == "list":
        for name, defaults in MODEL_DEFAULTS.items():
            items = ",".join(f"{k}={v}" for k, v in defaults.items())
            print(f"{name}  (defaults: {items})")
        return 0
    grid = _build_from_args(args)
    print(f"descriptor: {grid.model.descriptor()}")
    print(f"nodes: {grid.n}  span: [{grid.nodes[0]!r}, {grid.nodes[-1]!r}]")
    print(f"total mass: {grid.total_mass!r}  (raw: {grid.raw_total_mass!r})")
    print(f"bc: {grid.bc.value}  mode: {grid.measure_mode.value}  K_tag: {grid.K_tag!r}")
    if args.csv:
        grid.to_csv(args.csv)
        print(f"grid written to {args.csv}")
    return 0


def _cmd_verify(args) -> int:
    if args.check == "revolution":
        t_list = _parse_float_list(args.T)
        report = revolution_diagnostics(t_list, n=args.n or 8001)
        _emit([report], args.out)
        return _exit_code([report])
    if not args.space:
        raise ValueError(f"verify {args.check} requires --space")
    grid = _build_from_args(args)
    tol = {} if args.tol is None else {"tol": args.tol}
    if args.check == "cheeger":
        report = verify_cheeger(grid, **tol)
    elif args.check == "buser":
        report = verify_buser(grid, **tol)
    elif args.check == "isoperimetry":
        report = verify_isoperimetry(grid, **tol)
    elif args.check == "heat-chain":
        report = verify_heat_chain(grid, ts=_parse_float_list(args.ts), **tol)
    else:
        heat = HeatOperator(grid)
        report = smoothing_report(grid, heat, t=args.t, trials=args.trials)
    _emit([report], args.out)
    return _exit_code([report])


def _cmd_sweep(args) -> int:
    if args.kind == "p-monotonicity":
        if not args.space:
            raise ValueError("sweep p-monotonicity requires --space")
        grid = _build_from_args(args)
        ps = _parse_float_list(args.ps)
        points, violations = monotonicity_sweep(grid, ps)
        margins = [
            points[i].scaled - points[i - 1].scaled for i in range(1, len(points))
        ]
        gap = min(margins) if margins else 0.0
        report = VerificationReport(
            check="p-monotonicity",
            space=grid.model.descriptor(),
            inputs={"ps": ps, "n": grid.n},
            computed={
                "points": [
                    {
                        "p": pt.p,
                        "lambda_1p": pt.value,
                        "scaled": pt.scaled,
                        "restarts_agreeing": pt.restarts_agreeing,
                    }
                    for pt in points
                ],
                "violations": violations,
            },
            verdict=Verdict.PASS if not violations else Verdict.FAIL,
            gap=gap,
            tolerance=0.0,
            notes="scaled = p * lambda_{1,p}^{1/p}; strict increase required",
        )
        if args.csv:
            with open(args.csv, "w", newline="") as fh:
                writer = csv.writer(fh)
                writer.writerow(["p", "lambda_1p", "p_lambda_1p_pow_1_over_p", "restarts_agreeing"])
                for pt in points:
                    writer.writerow([repr(pt.p), repr(pt.value), repr(pt.scaled), pt.restarts_agreeing])
        _emit([report], args.out)
        return _exit_code([report])

    eps = _parse_eps(args.eps)
    kwargs = {}
    if args.R is not None:
        kwargs["R"] = args.R
    if args.n is not None:
        kwargs["n"] = args.n
    reports = rigidity_scan(eps, **kwargs)
    gaps = [r.gap for r in reports]
    margins = [gaps[i] - gaps[i - 1] for i in range(1, len(gaps))]
    summary = VerificationReport(
        check="rigidity-scan",
        space=reports[-1].space if reports else "perturbed_gaussian",
        inputs={"eps": eps},
        computed={"gaps": gaps, "monotone_margin": min(margins) if margins else 0.0},
        verdict=Verdict.PASS
        if (abs(gaps[0]) <= 4e-3 and all(m > 0 for m in margins))
        else Verdict.FAIL,
        gap=min(margins) if margins else 0.0,
        tolerance=0.0,
        notes="gap(eps) must vanish at eps=0 (within 4e-3) and grow strictly",
    )
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["eps", "h", "B", "gap"])
            for e, r in zip(eps, reports):
                writer.writerow(
                    [repr(e), repr(r.computed["h"]), repr(r.computed["B"]), repr(r.gap)]
                )
    _emit(reports + [summary], args.out)
    return _exit_code(reports + [summary])


def _cmd_buser(args) -> int:
    if args.lambda1 < 0:
        raise ValueError("--lambda1 must be nonnegative")
    result = buser_sharp_bound(args.lambda1, args.K)
    print(f"sup_value: {result.sup_value!r}")
    print(f"argmax_t: {result.argmax_t!r}")
    print(f"at_infinity: {result.at_infinity}")
    if args.samples_csv:
        with open(args.samples_csv, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["t", "ratio"])
            for t, ratio in result.samples:
                writer.writerow([repr(float(t)), repr(float(ratio))])
    return 0


def _cmd_report(args) -> int:
    verdicts = []
    with open(args.path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            payload = json.loads(line)
            if "verdict" in payload:
                verdicts.append(payload["verdict"])
    print(f"records: {len(verdicts)}")
    if any(v == "FAIL" for v in verdicts):
        return 1
    if any(v == "INCONCLUSIVE" for v in verdicts):
        return 3
    return 0


def run_cli(argv) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 0 for --help and 2 for usage errors
        return 0 if exc.code in (0, None) else 2
    try:
        if args.command == "space":
            return _cmd_space(args)
        if args.command == "verify":
            return _cmd_verify(args)
        if args.command == "sweep":
            return _cmd_sweep(args)
        if args.command == "buser":
            return _cmd_buser(args)
        if args.command == "report":
            return _cmd_report(args)
    except (ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 2


def main() -> None:
    sys.exit(run_cli(sys.argv[1:]))
