"""Command-line front end.

Exit codes: 0 success, 2 usage or config error, 3 solver did not converge
(report still written), 4 singular least-squares system, 5 self-check
failure.
"""
from __future__ import annotations

import argparse
import csv
import datetime as _dt
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__, _accel, data as datamod, error_model
from .error_model import ParamLayout
from .kinematics import load_model
from .metrics import MetricTriple, compare, evaluate
from .solvers import SingularSystemError, SolverConfig, lm_solve, ls_solve, slm_solve
from .ukf import UkfConfig, ukf_calibrate, ukf_slm_calibrate

EXIT_OK, EXIT_USAGE, EXIT_NOT_CONVERGED, EXIT_SINGULAR, EXIT_SELFCHECK = 0, 2, 3, 4, 5
METHODS = ("ls", "lm", "slm", "ukf", "ukf-slm")
JACOBIAN_THRESHOLD = 1e-8


class UsageError(Exception):
    pass


def _now():
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


def _file_digest(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _manifest(argv, config, *, method=None, seed=None, dataset=None, started):
    return {
        "command_line": list(argv),
        "config": config,
        "seed": seed,
        "method": method,
        "dataset_sha256": dataset,
        "toolkit_version": __version__,
        "kernel_backend": _accel.BACKEND,
        "rng": datamod.RNG_ALGORITHM,
        "started_at": started,
        "finished_at": _now(),
    }


def _write_json(path, obj):
    Path(path).write_text(json.dumps(obj, indent=2) + "\n", encoding="utf-8")


def _read_json(path):
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read {path}: {exc}") from exc


# -- synth -------------------------------------------------------------------

def cmd_synth(args, argv):
    started = _now()
    try:
        scenario = datamod.load_scenario(args.scenario)
    except (OSError, KeyError, ValueError, TypeError, json.JSONDecodeError) as exc:
        raise UsageError(f"bad scenario {args.scenario}: {exc}") from exc
    if args.seed is not None:
        scenario.seed = args.seed
    mset, x_true = datamod.synthesize(scenario)
    datamod.save(mset, args.out)
    truth = {
        "names": list(scenario.layout.names),
        "values": [float(v) for v in x_true],
        "manifest": _manifest(argv, scenario.to_dict(), seed=scenario.seed,
                              dataset=_file_digest(args.out), started=started),
    }
    _write_json(args.truth, truth)
    print(f"wrote {len(mset)} measurements to {args.out}, truth to {args.truth}")
    return EXIT_OK


# -- calibrate ----------------------------------------------------------------

def _configs(args):
    raw = _read_json(args.config) if args.config else {}
    try:
        scfg = dict(raw.get("solver", {}))
        for flag, key in (("lam", "lambda"), ("delta0", "delta0"), ("mu", "mu"), ("max_iter", "max_iter"), ("tol", "tol")):
            value = getattr(args, flag)
            if value is not None:
                scfg[key] = value
        solver = SolverConfig.from_dict(scfg)
        ukf = UkfConfig.from_dict(raw.get("ukf", {}))
        em = raw.get("error_model", {})
        layout = ParamLayout(
            bool(em.get("identify_anchor", False) or args.identify_anchor),
            bool(em.get("identify_cable_offset", False) or args.identify_cable_offset),
        )
    except (TypeError, ValueError) as exc:
        raise UsageError(f"bad configuration: {exc}") from exc
    if args.method == "slm" and not solver.mu < 1:
        raise UsageError("slm requires mu in (0, 1)")
    return solver, ukf, layout


def run_method(method, model, mset, solver, ukf, layout):
    if method == "ls":
        return ls_solve(model, mset, solver, layout=layout)
    if method == "lm":
        return lm_solve(model, mset, solver, layout=layout)
    if method == "slm":
        return slm_solve(model, mset, solver, layout=layout)
    if method == "ukf":
        return ukf_calibrate(model, mset, ukf, layout)[1]
    if method == "ukf-slm":
        return ukf_slm_calibrate(model, mset, ukf, solver, layout)
    raise UsageError(f"unknown method {method!r}")


def cmd_calibrate(args, argv):
    started = _now()
    if args.method not in METHODS:
        raise UsageError(f"unknown method {args.method!r}; choose from {', '.join(METHODS)}")
    solver, ukf, layout = _configs(args)
    try:
        model = load_model(args.model)
        mset = datamod.load(args.data)
    except (OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
        raise UsageError(str(exc)) from exc
    try:
        report = run_method(args.method, model, mset, solver, ukf, layout)
    except SingularSystemError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SINGULAR
    x0 = error_model.zero_deviation(layout)
    before = evaluate(error_model.residuals(model, x0, mset))
    after = evaluate(error_model.residuals(model, report.x_hat, mset))
    config = {"solver": solver.to_dict(), "ukf": ukf.to_dict(),
              "error_model": {"identify_anchor": layout.identify_anchor,
                              "identify_cable_offset": layout.identify_cable_offset}}
    out = {
        "method": args.method,
        "parameter_names": list(layout.names),
        "x_hat": [float(v) for v in report.x_hat],
        "before": before.to_dict(),
        "after": after.to_dict(),
        "rmse_history_mm": [float(v) for v in report.rmse_history],
        "iterations": report.iterations,
        "converged": bool(report.converged),
        "stage_boundary": report.stage_boundary,
        "wall_time_s": report.wall_time,
        "manifest": _manifest(argv, config, method=args.method, dataset=_file_digest(args.data), started=started),
    }
    _write_json(args.out, out)
    print(f"{args.method}: RMSE {before.rmse:.6g} -> {after.rmse:.6g} mm in {report.iterations} iterations"
          f" ({'converged' if report.converged else 'NOT converged'})")
    return EXIT_OK if report.converged else EXIT_NOT_CONVERGED


# -- compare ------------------------------------------------------------------

def cmd_compare(args, argv):
    reports = [_read_json(p) for p in args.reports]
    labels = args.labels or [r.get("method") for r in reports]
    if len(labels) != len(reports):
        raise UsageError("--labels must give one label per report")
    try:
        entries = [(label, MetricTriple.from_dict(r["after"])) for label, r in zip(labels, reports)]
        digests = {r["manifest"]["dataset_sha256"] for r in reports}
        before = None
        if not args.no_before and len(digests) == 1:
            before = MetricTriple.from_dict(reports[0]["before"])
        table = compare(entries, before=before)
    except (KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"cannot compare reports: {exc}") from exc
    text = table.to_text()
    print(text, end="")
    if args.out_text:
        Path(args.out_text).write_text(text, encoding="utf-8")
    if args.out_json:
        Path(args.out_json).write_text(table.to_json() + "\n", encoding="utf-8")
    if args.history_dir:
        hdir = Path(args.history_dir)
        hdir.mkdir(parents=True, exist_ok=True)
        for label, r in zip(labels, reports):
            with open(hdir / f"{label}_history.csv", "w", newline="", encoding="utf-8") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(["iteration", "rmse_mm"])
                for i, v in enumerate(r["rmse_history_mm"]):
                    w.writerow([i, repr(float(v))])
    return EXIT_OK


# -- jacobian-check -------------------------------------------------------------

def jacobian_discrepancy(model, mset, x) -> float:
    batched = error_model.identification_jacobian(model, x, mset)
    reference = error_model.reference_jacobian(model, x, mset)
    return float(np.max(np.abs(batched - reference)))


def cmd_jacobian_check(args, argv):
    try:
        model = load_model(args.model)
        mset = datamod.load(args.data)
        x = datamod.load_deviation(args.x) if args.x else error_model.zero_deviation()
    except (OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
        raise UsageError(str(exc)) from exc
    worst = jacobian_discrepancy(model, mset, x)
    ok = worst <= args.threshold
    print(f"max |J_batched - J_reference| = {worst:.3e} ({'ok' if ok else 'FAIL'}, threshold {args.threshold:g})")
    return EXIT_OK if ok else EXIT_SELFCHECK


def build_parser():
    p = argparse.ArgumentParser(prog="cablecal", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("synth", help="generate a synthetic measurement set with known deviations")
    s.add_argument("--scenario", required=True)
    s.add_argument("--out", required=True, help="measurement CSV to write")
    s.add_argument("--truth", required=True, help="ground-truth deviation JSON to write")
    s.add_argument("--seed", type=int, help="override the scenario seed")
    s.set_defaults(func=cmd_synth)

    c = sub.add_parser("calibrate", help="identify DH deviations from a measurement set")
    c.add_argument("--model", required=True)
    c.add_argument("--data", required=True)
    c.add_argument("--method", required=True, help="one of: " + ", ".join(METHODS))
    c.add_argument("--out", required=True, help="JSON report to write")
    c.add_argument("--config", help="JSON with optional 'solver', 'ukf' and 'error_model' sections")
    c.add_argument("--lambda", dest="lam", type=float)
    c.add_argument("--delta0", type=float)
    c.add_argument("--mu", type=float)
    c.add_argument("--max-iter", dest="max_iter", type=int)
    c.add_argument("--tol", type=float)
    c.add_argument("--identify-anchor", action="store_true")
    c.add_argument("--identify-cable-offset", action="store_true")
    c.set_defaults(func=cmd_calibrate)

    m = sub.add_parser("compare", help="tabulate calibration reports")
    m.add_argument("--reports", nargs="+", required=True)
    m.add_argument("--labels", nargs="+")
    m.add_argument("--out-text")
    m.add_argument("--out-json")
    m.add_argument("--history-dir", help="directory for per-method convergence CSVs")
    m.add_argument("--no-before", action="store_true", help="omit the uncalibrated row")
    m.set_defaults(func=cmd_compare)

    j = sub.add_parser("jacobian-check", help="compare batched and column-wise Jacobians")
    j.add_argument("--model", required=True)
    j.add_argument("--data", required=True)
    j.add_argument("--x", help="deviation JSON to evaluate at (default: zero)")
    j.add_argument("--threshold", type=float, default=JACOBIAN_THRESHOLD)
    j.set_defaults(func=cmd_jacobian_check)
    return p


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args, argv)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
