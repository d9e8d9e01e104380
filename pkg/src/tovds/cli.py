"""Command-line front end.

Subcommands: solve, sweep, metric, lane-emden, verify.  Exit codes:
0 success, 1 numerical failure, 2 configuration error.  All artifact files
are deterministic functions of the configuration.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from . import acceptance
from .analysis import lane_emden_first_zero, regime_sweep
from .config import (
    _check_keys,
    _num,
    build_constants,
    build_ctrl,
    build_eos,
    build_model_input,
    load_json,
)
from .errors import ConfigError, TovdsError
from .integrate import StepControl
from .metric import MetricPatch, continuity_report
from .model import MONOTONE_SHORT, boundary_quantities, solve_star

EXIT_OK = 0
EXIT_NUMERICAL = 1
EXIT_CONFIG = 2


def _write_json(path, obj) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _error_json(kind: str, message: str) -> None:
    print(json.dumps({"error": kind, "message": message}), file=sys.stdout)


def _profile_json_rows(profile) -> list:
    cols = ("r", "m", "u", "P", "rho", "kappa", "Q", "dPdr")
    arrays = [getattr(profile, c) for c in cols]
    return [
        {c: float(a[i]) for c, a in zip(cols, arrays)}
        for i in range(profile.r.size)
    ]


def cmd_solve(args) -> int:
    cfg = load_json(args.config)
    inp = build_model_input(cfg, args.units)
    units_label = args.units or cfg.get("units", "geom")
    os.makedirs(args.out, exist_ok=True)

    profile, outcome = solve_star(inp)

    if args.format == "csv":
        profile.write_csv(os.path.join(args.out, "profile.csv"), units_label)
    else:
        _write_json(os.path.join(args.out, "profile.json"), {
            "units": units_label, "rows": _profile_json_rows(profile),
        })
    _write_json(os.path.join(args.out, "outcome.json"), outcome.to_json_dict())

    k = inp.constants
    rho_c = profile.rho[0]
    P_c = profile.P[0]
    lambda_static = 4.0 * math.pi * k.G * (rho_c + 3.0 * P_c / k.c2) / k.c2
    static_case = (
        lambda_static > 0.0
        and abs(inp.Lambda - lambda_static) <= 1e-10 * lambda_static
    )

    lines = [f"outcome: {outcome.kind}"]
    if static_case:
        lines.append("constant-pressure special case detected "
                     "(Lambda equals 4 pi G (rho_c + 3 P_c/c^2)/c^2)")
    if outcome.boundary is not None:
        b = outcome.boundary
        lines += [
            f"r_plus     = {b.r_plus!r}",
            f"m_plus     = {b.m_plus!r}",
            f"kappa_plus = {b.kappa_plus!r}",
            f"Q_plus     = {b.Q_plus!r}",
            f"B          = {b.B!r}",
        ]
    if outcome.first_rise_r is not None:
        lines.append(f"first pressure rise at r = {outcome.first_rise_r!r}")
    if outcome.end_r is not None:
        lines.append(f"integration ended at r = {outcome.end_r!r}")
    summary = "\n".join(lines) + "\n"
    with open(os.path.join(args.out, "summary.txt"), "w") as fh:
        fh.write(summary)
    print(summary, end="")
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = load_json(args.config)
    _check_keys(cfg, {"gamma", "eos", "units", "constants", "alpha_grid", "beta_grid",
                      "ctrl", "R_max"}, "config")
    k = build_constants(cfg, args.units)
    gamma = _num(cfg, "gamma", "config", required=True)
    if "eos" in cfg:
        eos = build_eos(cfg, k)
    else:
        eos = None

    def grid(key):
        if key not in cfg:
            raise ConfigError(f"missing required '{key}'")
        block = cfg[key]
        if isinstance(block, list):
            return np.asarray([float(v) for v in block])
        if not isinstance(block, dict):
            raise ConfigError(f"'{key}' must be a list or an object")
        _check_keys(block, {"start", "stop", "num", "spacing"}, key)
        start = _num(block, "start", key, required=True, nonnegative=True)
        stop = _num(block, "stop", key, required=True, nonnegative=True)
        num = block.get("num", 10)
        if not isinstance(num, int) or num < 1:
            raise ConfigError(f"'num' in {key} must be a positive integer")
        spacing = block.get("spacing", "log")
        if spacing == "log":
            if start <= 0.0:
                raise ConfigError(f"log spacing in {key} needs start > 0")
            return np.logspace(math.log10(start), math.log10(stop), num)
        if spacing == "lin":
            return np.linspace(start, stop, num)
        raise ConfigError(f"'spacing' in {key} must be 'log' or 'lin'")

    ctrl = build_ctrl(cfg, default=StepControl(rel_tol=1e-9, abs_tol=1e-12))
    result = regime_sweep(
        gamma, grid("alpha_grid"), grid("beta_grid"), eos=eos, ctrl=ctrl,
        R_max=_num(cfg, "R_max", "config", default=50.0, positive=True),
        jobs=args.jobs,
    )
    os.makedirs(args.out, exist_ok=True)
    result.to_csv(os.path.join(args.out, "sweep.csv"))
    _write_json(os.path.join(args.out, "sweep.json"), result.to_json_dict())
    n_short = sum(c.outcome == MONOTONE_SHORT for c in result.cells)
    print(f"{len(result.cells)} cells, {n_short} monotone-short, "
          f"epsilon0 estimate {result.epsilon0_estimate!r}")
    return EXIT_OK


def cmd_metric(args) -> int:
    cfg = load_json(args.config)
    inp = build_model_input(cfg, args.units)
    os.makedirs(args.out, exist_ok=True)
    profile, outcome = solve_star(inp)
    if outcome.kind != MONOTONE_SHORT:
        _error_json("numerical", f"metric patching needs a monotone-short model, got {outcome.kind}")
        return EXIT_NUMERICAL
    patch = MetricPatch.from_model(profile, outcome.boundary)
    report = continuity_report(patch)
    doc = report.to_json_dict()
    hp = patch.horizon_pair
    doc["horizons"] = None if hp is None else {"r_I": hp.r_I, "r_E": hp.r_E}
    doc["r_plus"] = patch.r_plus
    doc["brackets_star"] = patch.brackets_star() if hp is not None else None
    _write_json(os.path.join(args.out, "metric_report.json"), doc)
    for row in report.rows:
        status = "pass" if row.passed else "FAIL"
        print(f"{row.quantity} {row.side:8s} order {row.order}: value {row.value!r} "
              f"target {row.target!r} rel_err {row.rel_err:.3e} [{status}]")
    return EXIT_OK if report.passed else EXIT_NUMERICAL


def cmd_lane_emden(args) -> int:
    cfg = load_json(args.config)
    _check_keys(cfg, {"mu", "lambda", "R_cap"}, "config")
    mus = cfg.get("mu")
    if isinstance(mus, (int, float)) and not isinstance(mus, bool):
        mus = [float(mus)]
    if not isinstance(mus, list) or not mus:
        raise ConfigError("'mu' must be a number or a nonempty list")
    lam = _num(cfg, "lambda", "config", default=0.0, nonnegative=True)
    R_cap = _num(cfg, "R_cap", "config", default=100.0, positive=True)
    os.makedirs(args.out, exist_ok=True)
    rows = []
    for mu in mus:
        xi1 = lane_emden_first_zero(float(mu), lam, R_cap=R_cap)
        rows.append({"mu": float(mu), "lambda": lam, "xi1": xi1})
        xi_str = "none (no zero; turns around above 0)" if xi1 is None else repr(xi1)
        print(f"mu = {mu:<8g} lambda = {lam:<8g} xi1 = {xi_str}")
    if args.format == "csv":
        lines = ["# first zeros of the scaled limit equation", "mu,lambda,xi1"]
        for row in rows:
            xi = "" if row["xi1"] is None else repr(row["xi1"])
            lines.append(f"{row['mu']!r},{row['lambda']!r},{xi}")
        with open(os.path.join(args.out, "lane_emden.csv"), "w") as fh:
            fh.write("\n".join(lines) + "\n")
    else:
        _write_json(os.path.join(args.out, "lane_emden.json"), {"rows": rows})
    return EXIT_OK


def cmd_verify(args) -> int:
    os.makedirs(args.out, exist_ok=True)
    numbers = None
    if args.criteria:
        try:
            numbers = {int(tok) for tok in args.criteria.split(",")}
        except ValueError:
            raise ConfigError(f"--criteria must be a comma list of integers, got {args.criteria!r}")
        unknown = numbers - set(range(1, len(acceptance.CRITERIA) + 1))
        if unknown:
            raise ConfigError(f"unknown criterion number(s): {sorted(unknown)}")
    results = acceptance.run_criteria(numbers=numbers, jobs=args.jobs)
    doc = {"criteria": [r.to_json_dict() for r in results],
           "pass": all(r.passed for r in results)}
    _write_json(os.path.join(args.out, "verify_report.json"), doc)
    for r in results:
        print(r.format_line())
    n_fail = sum(not r.passed for r in results)
    print(f"{len(results) - n_fail}/{len(results)} criteria passed")
    return EXIT_OK if n_fail == 0 else EXIT_NUMERICAL


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tovds",
        description="Static relativistic stars with a cosmological constant: "
                    "solve, classify, patch the vacuum metric, and verify.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, needs_config=True):
        if needs_config:
            p.add_argument("--config", required=True, help="JSON configuration file")
        p.add_argument("--out", default="out", help="output directory (default: ./out)")
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        p.add_argument("--units", choices=("geom", "si"), default=None,
                       help="override the config unit system")
        p.add_argument("--jobs", type=int, default=1, help="parallel sweep workers")

    common(sub.add_parser("solve", help="solve one star and classify the outcome"))
    common(sub.add_parser("sweep", help="classify the scaled system over an (alpha, beta) grid"))
    common(sub.add_parser("metric", help="patch the vacuum metric and check C^2 matching"))
    common(sub.add_parser("lane-emden", help="first zeros of the scaled limit equation"))
    verify = sub.add_parser("verify", help="run the acceptance criteria")
    common(verify, needs_config=False)
    verify.add_argument("--criteria", default=None,
                        help="comma list of criterion numbers (default: all)")
    return parser


_COMMANDS = {
    "solve": cmd_solve,
    "sweep": cmd_sweep,
    "metric": cmd_metric,
    "lane-emden": cmd_lane_emden,
    "verify": cmd_verify,
}


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        _error_json("config", str(exc))
        return EXIT_CONFIG
    except TovdsError as exc:
        _error_json("numerical", str(exc))
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
