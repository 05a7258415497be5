"""Command-line entry point.

Exit status: 0 success, 1 an inequality or check failed, 2 unreadable or
invalid input, 3 dimension mismatch.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys

import numpy as np

from . import serialize
from .channels import check_channel
from .entropics import (
    coherent_information,
    entanglement_distortion,
    entanglement_fidelity,
    entropy_exchange,
)
from .exceptions import CoverageError, DimensionError, ValidationError
from .qmath import von_neumann_entropy
from .rdopt import (
    EXACT_STEP_FLOOR,
    OptimizerConfig,
    check_monotone_convex,
    default_grid,
    evaluate_code,
    rd_curve,
    search_codes,
    verify_theorem_chain,
)
from .verify import FuzzConfig, fuzz

EXIT_OK, EXIT_VIOLATION, EXIT_PARSE, EXIT_DIM = 0, 1, 2, 3

log = logging.getLogger("qratedist")


class _ParseFailure(Exception):
    pass


def _load(path, loader):
    try:
        return loader(serialize.load_json(path))
    except DimensionError:
        raise
    except (OSError, json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise _ParseFailure(f"{path}: {exc}") from exc


def _parse_grid(text: str | None, d: int) -> np.ndarray:
    if text is None:
        return default_grid(d)
    try:
        start, end, count = text.split(":")
        grid = np.linspace(float(start), float(end), int(count))
    except ValueError as exc:
        raise _ParseFailure(f"bad --grid {text!r}, expected start:end:count") from exc
    return grid


def _emit(args, payload: dict) -> None:
    if args.out:
        serialize.atomic_write(args.out, serialize.dumps(payload))


def _cfg(args) -> OptimizerConfig:
    kw = {"seed": args.seed}
    if args.restarts is not None:
        kw["restarts"] = args.restarts
    if args.max_iters is not None:
        kw["max_iterations"] = args.max_iters
    return OptimizerConfig(**kw)


def cmd_entropy(args) -> int:
    rho = _load(args.state, serialize.state_from_json)
    s = von_neumann_entropy(rho)
    print(repr(s))
    _emit(args, {"entropy_bits": s})
    return EXIT_OK


def cmd_channel_info(args) -> int:
    rho = _load(args.state, serialize.state_from_json)
    ch = _load(args.channel, lambda o: check_channel(serialize.channel_from_json(o)))
    info = {
        "F_e": entanglement_fidelity(rho, ch),
        "S_e": entropy_exchange(rho, ch),
        "I_c": coherent_information(rho, ch),
        "d": entanglement_distortion(rho, ch),
    }
    print(serialize.dumps(info), end="")
    _emit(args, info)
    return EXIT_OK


def cmd_rd_curve(args) -> int:
    rho = _load(args.state, serialize.state_from_json)
    grid = _parse_grid(args.grid, rho.dim)
    curve = rd_curve(rho, grid, _cfg(args))
    tol = 5e-3 if args.tol is None else args.tol
    env = check_monotone_convex(curve, tol) if len(grid) >= 3 else None
    raw = check_monotone_convex(curve, tol, use="raw") if len(grid) >= 3 else None
    header = f"{'D':>10} {'R_raw':>12} {'R_envelope':>12} {'witness_d':>10}"
    print(header + (f" {'R_plot_clamped':>14}" if args.clamp_zero else ""))
    for p, e, c in zip(curve.points, curve.envelope, curve.clamped_for_plot()):
        row = f"{p.distortion_target:10.6f} {p.rate_estimate:12.6f} {e:12.6f} {p.witness_distortion:10.6f}"
        print(row + (f" {c:14.6f}" if args.clamp_zero else ""))
    payload = serialize.curve_to_json(curve)
    if env is not None:
        print(
            f"envelope: monotone {env.monotone_violation:.3g}, convexity {env.convexity_violation:.3g}, "
            f"{'pass' if env.passed else 'FAIL'} at tol {tol:g}"
        )
        print(f"raw: monotone {raw.monotone_violation:.3g}, convexity {raw.convexity_violation:.3g}")
        payload["check"] = {
            "tol": tol,
            "envelope": {"monotone": env.monotone_violation, "convexity": env.convexity_violation},
            "raw": {"monotone": raw.monotone_violation, "convexity": raw.convexity_violation},
            "passed": env.passed,
        }
    _emit(args, payload)
    if args.csv:
        serialize.atomic_write(args.csv, serialize.curve_to_csv(curve))
    return EXIT_OK if env is None or env.passed else EXIT_VIOLATION


def _evaluation_json(ev) -> dict:
    return {"rate": ev.rate, "D_e": ev.distortion, "slot_distortions": list(ev.slot_distortions)}


def cmd_code_eval(args) -> int:
    code = _load(args.code, serialize.code_from_json)
    rho = _load(args.state, serialize.state_from_json)
    check_channel(code.encoder), check_channel(code.decoder)
    ev = _evaluation_json(evaluate_code(code, rho))
    print(serialize.dumps(ev), end="")
    _emit(args, ev)
    return EXIT_OK


def cmd_code_search(args) -> int:
    rho = _load(args.state, serialize.state_from_json)
    res = search_codes(rho, args.n, args.K, _cfg(args))
    ev = _evaluation_json(res.evaluation)
    print(serialize.dumps(ev), end="")
    payload = serialize.code_to_json(res.code)
    payload["evaluation"] = ev
    _emit(args, payload)
    return EXIT_OK


def cmd_fuzz(args) -> int:
    kw = {"seed": args.seed}
    if args.trials is not None:
        kw["trials"] = args.trials
    if args.dims:
        kw["dims"] = tuple(int(x) for x in args.dims.split(","))
    if args.tol is not None:
        kw["slack_floor"] = kw["channel_slack_floor"] = -abs(args.tol)
    try:
        cfg = FuzzConfig(**kw)
    except ValueError as exc:
        raise _ParseFailure(str(exc)) from exc
    reports = fuzz(cfg, regression_dir=args.regression_dir)
    for r in reports:
        status = "ok" if r.violations == 0 else "VIOLATED"
        print(
            f"{r.inequality_name:26s} trials={r.trials:5d} min_slack={r.min_slack: .3e} "
            f"violations={r.violations} {status}"
        )
    _emit(args, {"seed": cfg.seed, "reports": [r.to_json() for r in reports]})
    return EXIT_VIOLATION if any(r.violations for r in reports) else EXIT_OK


def cmd_chain_verify(args) -> int:
    code = _load(args.code, serialize.code_from_json)
    rho = _load(args.state, serialize.state_from_json)
    curve = _load(args.curve, serialize.curve_from_json)
    rep = verify_theorem_chain(code, rho, curve)
    floor = EXACT_STEP_FLOOR if args.tol is None else -abs(args.tol)
    steps = []
    for s in rep.steps:
        status = s.status
        if s.label in ("13", "14", "15", "16"):
            status = "holds" if s.slack >= floor else "violated"
        steps.append({"step": s.label, "lhs": s.lhs, "rhs": s.rhs, "slack": s.slack, "status": status})
        print(f"({s.label:>10}) {s.lhs: .9f} >= {s.rhs: .9f}  slack {s.slack: .3e}  {status}")
    payload = {
        "rate": code.rate,
        "D_e": rep.distortion,
        "slot_distortions": list(rep.slot_distortions),
        "oracle_looseness": rep.oracle_looseness,
        "steps": steps,
    }
    _emit(args, payload)
    exact_ok = all(s["status"] == "holds" for s in steps[:4])
    return EXIT_OK if exact_ok else EXIT_VIOLATION


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--tol", type=float, default=None, help="reporting tolerance override")
    common.add_argument("--out", default=None, help="machine-readable output path")
    common.add_argument("-v", "--verbose", action="store_true")

    opt = argparse.ArgumentParser(add_help=False)
    opt.add_argument("--restarts", type=int, default=None)
    opt.add_argument("--max-iters", type=int, default=None)

    p = argparse.ArgumentParser(prog="qratedist", description="Quantum rate-distortion toolkit")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("entropy", parents=[common], help="von Neumann entropy of a state")
    s.add_argument("state")
    s.set_defaults(func=cmd_entropy)

    s = sub.add_parser("channel-info", parents=[common], help="F_e, S_e, I_c and distortion")
    s.add_argument("state")
    s.add_argument("channel")
    s.set_defaults(func=cmd_channel_info)

    s = sub.add_parser("rd-curve", parents=[common, opt], help="estimate R^I(D) on a grid")
    s.add_argument("state")
    s.add_argument("--grid", default=None, help="start:end:count")
    s.add_argument("--csv", default=None, help="also write the curve as CSV")
    s.add_argument(
        "--clamp-zero",
        action="store_true",
        help="add a display column with the envelope clamped at 0 (files keep raw values)",
    )
    s.set_defaults(func=cmd_rd_curve)

    s = sub.add_parser("code-eval", parents=[common], help="rate and block distortion of a code")
    s.add_argument("code")
    s.add_argument("state")
    s.set_defaults(func=cmd_code_eval)

    s = sub.add_parser("code-search", parents=[common, opt], help="search (n, K) codes")
    s.add_argument("state")
    s.add_argument("--n", type=int, default=1)
    s.add_argument("--K", type=int, default=1)
    s.set_defaults(func=cmd_code_search)

    s = sub.add_parser("fuzz", parents=[common], help="randomised inequality checks")
    s.add_argument("--trials", type=int, default=None, help="trials per family (default: per-family)")
    s.add_argument("--dims", default=None, help="comma-separated subsystem dimensions")
    s.add_argument("--regression-dir", default=None)
    s.set_defaults(func=cmd_fuzz)

    s = sub.add_parser("chain-verify", parents=[common], help="check the converse chain for a code")
    s.add_argument("code")
    s.add_argument("state")
    s.add_argument("curve")
    s.set_defaults(func=cmd_chain_verify)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except (DimensionError, CoverageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DIM
    except (_ParseFailure, ValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())
