"""Command-line entry point for the experiments and decision procedures.

Exit codes: 0 success (including warnings), 1 a verification report
contains a flagged violation or oracle mismatch, 2 invalid flags or
inputs.  Given the same arguments and seed, stdout and output files are
byte-identical across runs; progress and warnings go to stderr.
"""

from __future__ import annotations

import argparse
import math
import sys
from fractions import Fraction

from . import experiments, matfq
from .exchange import OrderedBasis, find_serial_partner, serial_search, ExchangeInstance
from .experiments import ExperimentConfig, Report
from .gf import NotPrimePower, UnsupportedExtension

DEFAULT_TRIALS = 10_000
DEFAULT_SEED = 1729


def _add_common(p: argparse.ArgumentParser, *, with_n: str | None = None, with_trials: bool = True) -> None:
    p.add_argument("--q", type=int, required=True, help="field size (prime power)")
    p.add_argument("--k", type=int, required=True, help="exchange set size")
    if with_n == "repeat":
        p.add_argument("--n", type=int, action="append", required=True, help="rank n (repeatable)")
    elif with_n == "single":
        p.add_argument("--n", type=int, required=True, help="rank n")
    if with_trials:
        p.add_argument("--trials", type=int, default=DEFAULT_TRIALS, help="Monte Carlo trials")
    p.add_argument("--seed", type=int, default=None, help="base seed (default printed when unset)")
    p.add_argument("--exhaustive", action="store_true", help="also run the all-subsets search")
    p.add_argument("--gate", type=int, default=10**6, help="max C(n,k) for the all-subsets search")
    p.add_argument("--format", choices=("csv", "json"), default="csv", help="output format")
    p.add_argument("--out", default=None, help="write records to this path instead of stdout")
    p.add_argument("--jobs", type=int, default=1, help="worker processes (output unaffected)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fqexchange", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p_est = sub.add_parser("estimate", help="estimate alpha or beta by Monte Carlo")
    p_est.add_argument("target", choices=("alpha", "beta"))
    _add_common(p_est)

    p_trend = sub.add_parser("trend", help="serial-partner success rate across n")
    _add_common(p_trend, with_n="repeat")

    p_verify = sub.add_parser("verify", help="empirical checks of the probability bounds")
    p_verify.add_argument("target", choices=("conditional", "zprime"))
    _add_common(p_verify, with_n="single")

    p_cross = sub.add_parser("crosscheck", help="backtracking vs exhaustive enumeration")
    _add_common(p_cross, with_n="single", with_trials=False)
    p_cross.add_argument("--instances", type=int, default=500, help="random instances to compare")

    p_exh = sub.add_parser("exhaustive", help="witness existence on small instances")
    p_exh.add_argument("--q", type=int, required=True)
    p_exh.add_argument("--n", type=int, required=True)
    p_exh.add_argument("--pairs", type=int, default=200, help="sampled basis pairs when not enumerable")
    p_exh.add_argument("--seed", type=int, default=None)
    p_exh.add_argument("--format", choices=("csv", "json"), default="csv")
    p_exh.add_argument("--out", default=None)

    p_serial = sub.add_parser("serial", help="decide one instance from matrix files")
    p_serial.add_argument("--b1", required=True, help="first basis, matrix text format")
    p_serial.add_argument("--b2", required=True, help="second basis, matrix text format")
    p_serial.add_argument("--x1", required=True, help="comma-separated positions in b1")
    p_serial.add_argument("--x2", default=None, help="comma-separated positions in b2")
    p_serial.add_argument("--mode", choices=("blocks", "all_subsets"), default="blocks")
    p_serial.add_argument("--gate", type=int, default=10**6)
    p_serial.add_argument("--out", default=None)

    return parser


def _resolve_seed(args) -> int:
    if args.seed is None:
        print(f"seed not given; using default seed {DEFAULT_SEED}", file=sys.stderr)
        return DEFAULT_SEED
    return args.seed


def _warn_regime(k: int, n_values) -> None:
    for n in n_values:
        if k > math.log(n):
            print(
                f"warning: k = {k} exceeds ln({n}) = {math.log(n):.3f}; "
                "outside the regime the asymptotic guarantee covers",
                file=sys.stderr,
            )


def _emit(report: Report, args) -> int:
    out = open(args.out, "w") if args.out else sys.stdout
    try:
        if args.format == "csv":
            experiments.write_csv(report.records, out)
        else:
            experiments.write_json(report.records, out)
    finally:
        if args.out:
            out.close()
    for flag in report.flags:
        print(f"FLAG: {flag}", file=sys.stderr)
    return 1 if report.flags else 0


def _parse_positions(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(p) for p in text.split(",") if p != "")
    except ValueError:
        raise ValueError(f"positions must be comma-separated integers, got {text!r}") from None


def _read_basis(path: str) -> OrderedBasis:
    with open(path) as fh:
        return OrderedBasis(matfq.read_matrix_text(fh))


def _cmd_estimate(args) -> int:
    seed = _resolve_seed(args)
    config = ExperimentConfig(
        q=args.q, k=args.k, n_values=(), trials=args.trials, seed=seed,
        exhaustive=args.exhaustive, gate=args.gate,
    )
    fn = experiments.estimate_alpha if args.target == "alpha" else experiments.estimate_beta
    result = fn(config, jobs=args.jobs)
    return _emit(experiments.report_from_estimate(config, result), args)


def _cmd_trend(args) -> int:
    seed = _resolve_seed(args)
    n_values = tuple(args.n)
    _warn_regime(args.k, n_values)
    config = ExperimentConfig(
        q=args.q, k=args.k, n_values=n_values, trials=args.trials, seed=seed,
        exhaustive=args.exhaustive, gate=args.gate,
    )
    c, eps = Fraction(1, 20), Fraction(1, 20)
    rows = experiments.trend(config, c, eps, jobs=args.jobs)
    return _emit(experiments.report_from_trend(config, rows, c, eps), args)


def _cmd_verify(args) -> int:
    seed = _resolve_seed(args)
    _warn_regime(args.k, (args.n,))
    config = ExperimentConfig(
        q=args.q, k=args.k, n_values=(args.n,), trials=args.trials, seed=seed,
        exhaustive=args.exhaustive, gate=args.gate,
    )
    if args.target == "conditional":
        report = experiments.verify_conditional_bounds(config, jobs=args.jobs)
    else:
        report = experiments.verify_zprime_bound(config, jobs=args.jobs)
    return _emit(report, args)


def _cmd_crosscheck(args) -> int:
    seed = _resolve_seed(args)
    _warn_regime(args.k, (args.n,))
    config = ExperimentConfig(
        q=args.q, k=args.k, n_values=(args.n,), trials=1, seed=seed,
        exhaustive=args.exhaustive, gate=args.gate,
    )
    report = experiments.crosscheck_serial(config, args.instances)
    return _emit(report, args)


def _cmd_exhaustive(args) -> int:
    seed = args.seed
    if seed is None:
        print(f"seed not given; using default seed {DEFAULT_SEED}", file=sys.stderr)
        seed = DEFAULT_SEED
    report = experiments.exhaustive_small(args.q, args.n, seed=seed, sample_pairs=args.pairs)
    return _emit(report, args)


def _cmd_serial(args) -> int:
    b1 = _read_basis(args.b1)
    b2 = _read_basis(args.b2)
    x1 = _parse_positions(args.x1)
    out = open(args.out, "w") if args.out else sys.stdout
    try:
        if args.x2 is not None:
            x2 = _parse_positions(args.x2)
            cert = serial_search(ExchangeInstance(b1, b2, x1, x2))
            if cert is None:
                out.write("none\n")
            else:
                out.write(cert.to_text() + "\n")
        else:
            found = find_serial_partner(b1, x1, b2, mode=args.mode, gate=args.gate)
            if found is None:
                out.write("none\n")
            else:
                partner, cert = found
                out.write("partner: " + " ".join(str(j) for j in partner) + "\n")
                out.write(cert.to_text() + "\n")
    finally:
        if args.out:
            out.close()
    return 0


_HANDLERS = {
    "estimate": _cmd_estimate,
    "trend": _cmd_trend,
    "verify": _cmd_verify,
    "crosscheck": _cmd_crosscheck,
    "exhaustive": _cmd_exhaustive,
    "serial": _cmd_serial,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return _HANDLERS[args.command](args)
    except (NotPrimePower, UnsupportedExtension, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
