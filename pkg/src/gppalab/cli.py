"""Command-line entry point.

Exit codes: 0 pass, 2 configuration error, 3 verification failure,
4 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import rates
from .errors import (
    ConfigError,
    DivergenceError,
    DomainError,
    GPPAError,
    InvalidSpec,
    NotAZero,
    NotMonotone,
    RangeViolation,
)
from .experiment import load_config, run_experiment
from .subregularity import estimate_kappa
from .suite import FAMILIES, verify_suite
from .zoo import make_operator

EXIT_OK, EXIT_CONFIG, EXIT_VERIFY, EXIT_NUMERIC = 0, 2, 3, 4

_INPUT_ERRORS = (ConfigError, InvalidSpec, NotMonotone, NotAZero, RangeViolation, DomainError)


def _exit_code(exc):
    if isinstance(exc, _INPUT_ERRORS):
        return EXIT_CONFIG
    return EXIT_NUMERIC


def cmd_run(args):
    cfg = load_config(args.config)
    report = run_experiment(cfg, args.out)
    for v in report.verifications:
        k = "-" if v.K_detected is None else v.K_detected
        print(f"{'PASS' if v.overall else 'FAIL'}  {v.certificate_id} ({v.metric}) K_detected={k}")
    print(f"outputs written to {args.out}")
    return EXIT_OK if report.passed else EXIT_VERIFY


def cmd_verify(args):
    only = None
    if args.only:
        only = [n for item in args.only for n in item.split(",") if n]
        unknown = [n for n in only if n not in FAMILIES]
        if unknown:
            print(f"unknown family: {', '.join(unknown)}; known: {', '.join(FAMILIES)}", file=sys.stderr)
            return EXIT_CONFIG
    results = verify_suite(args.seed, only, args.matrix)
    failed = [r.name for r in results if not r.passed]
    if failed:
        print(f"first failing family: {failed[0]}", file=sys.stderr)
        return EXIT_VERIFY
    return EXIT_OK


def cmd_estimate(args):
    op = make_operator(args.operator)
    center = args.center if args.center else [0.0] * op.dim
    est = estimate_kappa(op, center, args.delta, args.samples, args.seed)
    print(json.dumps(est.to_json(), indent=2))
    return EXIT_OK


def _parse_params(items):
    params = {}
    for item in items or []:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"--params {item}", "expected key=value")
        try:
            params[key] = float(value)
        except ValueError:
            raise ConfigError(f"--params {key}", f"not a number: {value!r}") from None
    return params


def cmd_rates(args):
    params = _parse_params(args.params)
    try:
        out = rates.evaluate(args.theorem_id, params)
    except KeyError as exc:
        raise ConfigError(f"--params {exc.args[0]}", "missing parameter") from None
    except ValueError as exc:
        if isinstance(exc, GPPAError):
            raise
        raise ConfigError("theorem_id", str(exc)) from None
    print(json.dumps({"theorem_id": args.theorem_id, "params": params, **out}, indent=2))
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="gppalab", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run an experiment config")
    r.add_argument("config")
    r.add_argument("--out", default="out", help="output directory (default: out)")
    r.set_defaults(func=cmd_run)

    v = sub.add_parser("verify", help="run the property suite")
    v.add_argument("--only", action="append", metavar="FAMILY",
                   help=f"restrict to families ({', '.join(FAMILIES)}); repeatable or comma-separated")
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--matrix", help="extra matrix file for the resolvent family (not checked for monotonicity)")
    v.set_defaults(func=cmd_verify)

    e = sub.add_parser("estimate-kappa", help="sampled subregularity constant")
    e.add_argument("operator")
    e.add_argument("--center", type=float, nargs="+")
    e.add_argument("--delta", type=float, required=True)
    e.add_argument("--samples", type=int, default=1000)
    e.add_argument("--seed", type=int, default=0)
    e.set_defaults(func=cmd_estimate)

    q = sub.add_parser("rates", help="evaluate a rate formula")
    q.add_argument("theorem_id", choices=rates.THEOREM_IDS)
    q.add_argument("--params", nargs="*", metavar="KEY=VALUE")
    q.set_defaults(func=cmd_rates)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except DivergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except GPPAError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _exit_code(exc)


if __name__ == "__main__":
    sys.exit(main())
