"""Command-line front end: exponents, bound, rate-curve, simulate, verify.

Exit codes: 0 ok, 2 usage, 3 domain validation, 4 infeasible everywhere,
5 internal check failure.  Outputs carry a ``#`` metadata header (CSV) or a
``meta`` block (JSON) echoing the configuration; nothing time- or
machine-dependent is written, so reruns are byte-identical.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from pathlib import Path

from . import __version__
from .bounds import TABLE_COLUMNS, bound_table, table_rows, theorem_report
from .codec import DecodeBudgetError
from .exponents import cap_alpha, exponent_h, rate_fn_D, rate_fn_D1, s_rho_alpha, weight_w
from .montecarlo import analytic_tails, bound_consistency, power_check, run_trials
from .output import csv_text, emit, json_text, meta_lines
from .params import ParameterError, capacity_bits, derive_params
from .penalties import ETA, PenaltyRangeError, compute_penalties
from .rate_search import CSV_COLUMNS, DEFAULT_L_LIST, dictionary_d, rate_curve

EXIT_OK, EXIT_USAGE, EXIT_DOMAIN, EXIT_INFEASIBLE, EXIT_CHECK = 0, 2, 3, 4, 5


class DomainError(Exception):
    pass


def default_threads() -> int:
    env = os.environ.get("SSC_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise DomainError(f"SSC_THREADS must be an integer, got {env!r}")
    return os.cpu_count() or 1


def _out_path(args, default_name: str):
    if getattr(args, "output", None):
        return Path(args.output)
    out_dir = args.out_dir or os.environ.get("SSC_OUTPUT_DIR")
    if out_dir:
        Path(out_dir).mkdir(parents=True, exist_ok=True)
        return Path(out_dir) / default_name
    return None


def _rate_bits(args, v: float) -> float:
    c = capacity_bits(v)
    if args.rate_bits is not None:
        r = args.rate_bits
    else:
        r = args.rate_frac * c
    if not 0 < r < c:
        raise DomainError(f"rate {r:.6g} bits must lie in (0, C) with C = {c:.6g} bits")
    return r


def _check_snr(v):
    if not (v > 0 and math.isfinite(v)):
        raise DomainError(f"--snr must be positive and finite, got {v}")


def _rate_args(p, default_frac=0.5):
    g = p.add_mutually_exclusive_group()
    g.add_argument("--rate-frac", type=float, default=default_frac,
                   help="rate as a fraction of capacity (default %(default)s)")
    g.add_argument("--rate-bits", type=float, default=None, help="absolute rate in bits")


def _dict_args(p):
    p.add_argument("--dict", dest="kind", choices=("gaussian", "bernoulli", "binomial"),
                   default="gaussian")
    p.add_argument("--d", type=int, default=None, help="binomial trials per entry")


# ---------------------------------------------------------------------------

def cmd_exponents(args) -> int:
    v = args.snr
    _check_snr(v)
    r_bits = _rate_bits(args, v)
    r_nats = r_bits * math.log(2.0)
    c_nats = 0.5 * math.log1p(v)
    alphas = [k / args.grid for k in range(1, args.grid + 1)]
    rows = []
    for a in alphas:
        ca = float(cap_alpha(a, v))
        gap = ca - a * r_nats
        sa = float(s_rho_alpha(a, v))
        D = float(rate_fn_D(max(gap, 0.0), sa))
        D1 = float(rate_fn_D1(max(gap, 0.0), sa))
        rows.append([a, ca, gap, exponent_h(a, c_nats - r_nats, v), D, D1])
    config = {"subcommand": "exponents", "snr": v, "R_bits": r_bits, "grid": args.grid}
    meta = meta_lines("exponents", config) + [
        f"C_bits: {capacity_bits(v)!r}", f"C_nats: {c_nats!r}", f"w_v: {weight_w(v)!r}",
        f"eta: {ETA!r}",
    ]
    cols = ("alpha", "C_alpha_nats", "C_alpha_minus_alphaR", "h_alpha_C_minus_R",
            "D_gap_s_alpha", "D1_gap_s_alpha")
    emit(csv_text(cols, rows, meta), _out_path(args, "exponents.csv"))
    return EXIT_OK


def cmd_bound(args) -> int:
    _check_snr(args.snr)
    r_bits = _rate_bits(args, args.snr)
    d = dictionary_d(args.kind, args.d)
    params = derive_params(args.L, args.a, r_bits, args.snr, d=d)
    penalties = None
    if d > 0:
        try:
            penalties = compute_penalties(args.L, d, args.alpha0, args.snr)
        except PenaltyRangeError as exc:
            raise DomainError(str(exc))
    table = bound_table(params, penalties, alpha0=args.alpha0)
    rep = theorem_report(args.alpha0, params, penalties)
    config = {"subcommand": "bound", "params": params.as_dict(), "kind": args.kind,
              "alpha0": args.alpha0}
    meta = meta_lines("bound", config)
    if penalties is not None:
        meta.append("penalties: " + " ".join(f"{k}={v!r}" for k, v in penalties.as_dict().items()))
    else:
        meta.append("penalties: not applicable (Gaussian dictionary)")
    meta.append("theorem: " + " ".join(f"{k}={v!r}" for k, v in rep.as_dict().items()))
    emit(csv_text(TABLE_COLUMNS, table_rows(table), meta), _out_path(args, "bound.csv"))
    return EXIT_OK


def _parse_list(text: str, conv=int) -> list:
    try:
        return [conv(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise DomainError(f"cannot parse list {text!r}")


def cmd_rate_curve(args) -> int:
    _check_snr(args.snr)
    d = dictionary_d(args.kind, args.d)
    if not 0 < args.eps0 < 1:
        raise DomainError("--eps0 must lie in (0, 1)")
    L_list = _parse_list(args.L_list) if args.L_list else list(DEFAULT_L_LIST)
    if any(L < 2 for L in L_list):
        raise DomainError("every L must be >= 2")
    fracs = None
    if args.rate_fracs:
        fracs = _parse_list(args.rate_fracs, float)
    threads = args.threads or default_threads()
    points = rate_curve(args.snr, args.kind, d if d else None, args.a, args.eps0, L_list,
                        fracs, threads=threads)
    config = {"subcommand": "rate-curve", "snr": args.snr, "kind": args.kind, "d": d,
              "a": args.a, "eps0": args.eps0, "L_list": L_list,
              "rate_fracs": "0.990:0.050:-0.001" if fracs is None else fracs}
    meta = meta_lines("rate-curve", config)
    path = _out_path(args, "rate_curve.csv")
    emit(csv_text(CSV_COLUMNS, [p.row() for p in points], meta), path)
    if path is not None:
        pts = [[p.n, p.overall_rate_bits] for p in points if p.status == "ok"]
        emit(csv_text(("n", "overall_rate_bits"), pts, meta),
             path.with_name(path.stem + "_points.csv"))
    if all(p.status != "ok" for p in points):
        print("no L value yields a feasible rate", file=sys.stderr)
        return EXIT_INFEASIBLE
    return EXIT_OK


def _finite_or_none(x: float):
    return x if math.isfinite(x) else None


def cmd_simulate(args) -> int:
    _check_snr(args.snr)
    r_bits = _rate_bits(args, args.snr)
    d = dictionary_d(args.kind, args.d)
    if args.trials < 1:
        raise DomainError("--trials must be >= 1")
    params = derive_params(args.L, 0.0, r_bits, args.snr, d=d, M=args.M)
    threads = args.threads or default_threads()
    stats = run_trials(params, args.kind, d, args.trials, args.seed,
                       fixed_dictionary=args.fixed_dictionary, threads=threads,
                       budget_bits=args.budget_bits)
    tails = analytic_tails(params, args.kind, d)
    rows = bound_consistency(stats, tails)
    power_ok = power_check(stats, params.P)
    verdicts = [
        {"l0": r.l0, "ties": r.ties, "count": r.count, "frequency": r.frequency,
         "wilson_lower": r.wilson_lower, "wilson_upper": r.wilson_upper,
         "log_tail_bound": _finite_or_none(tails[r.l0]), "capped_bound": r.bound,
         "verdict": "PASS" if r.passed else "FAIL"}
        for r in rows
    ]
    estimate = ("P[E | X] (fixed dictionary)" if args.fixed_dictionary
                else "E_X P[E | X] (fresh dictionary per trial)")
    report = {
        "meta": {"toolkit": f"ssbounds {__version__}", "command": "simulate",
                 "params": params.as_dict(), "estimate": estimate},
        **stats.as_dict(),
        "consistency": verdicts,
        "power_check": {"P": params.P, "mean": stats.power_mean, "se": stats.power_se,
                        "verdict": "PASS" if power_ok else "FAIL"},
    }
    emit(json_text(report), _out_path(args, "simulate.json"))
    failed = [v for v in verdicts if v["verdict"] == "FAIL" and v["ties"] != "favorable"]
    if failed or not power_ok:
        print("simulation disagrees with the analytic bound or the power check",
              file=sys.stderr)
        return EXIT_CHECK
    return EXIT_OK


def cmd_verify(args) -> int:
    from . import verifiers
    from .exponents import phi, verify_binomial_ratio

    ok = True
    path = _out_path(args, f"verify_{args.suite}.csv")
    config = {"subcommand": "verify", "suite": args.suite, "cases": args.cases,
              "seed": args.seed, "l_max": args.l_max}
    meta = meta_lines("verify", config)
    if args.suite == "lemmas":
        rows = verifiers.audit(args.cases, args.seed)
        ok = all(r.status == "PASS" for r in rows)
        emit(csv_text(verifiers.AUDIT_COLUMNS, [r.row() for r in rows], meta), path)
    elif args.suite == "phi":
        out = []
        for l in (1000, 2000, 5000, 10_000, 100_000, 1_000_000):
            e = phi(l)
            passed = e.phi <= 5.0 / l
            ok &= passed
            out.append([l, e.zeta_star, e.phi, 5.0 / l, "PASS" if passed else "FAIL"])
        emit(csv_text(("l", "zeta_star", "phi", "five_over_l", "status"), out, meta), path)
    elif args.suite == "binomial":
        out = []
        for l in range(1, args.l_max + 1):
            r = verify_binomial_ratio(l, cap=max(4096, args.l_max))
            ok &= r.passed
            out.append([l, r.argmax_k, r.log_max_ratio, r.phi, "PASS" if r.passed else "FAIL"])
        emit(csv_text(("l", "argmax_k", "log_max_ratio", "phi", "status"), out, meta), path)
    if not ok:
        print("verification found a violation", file=sys.stderr)
        return EXIT_CHECK
    return EXIT_OK


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ssbounds", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"ssbounds {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--output", "-o", default=None, help="output file (default: stdout)")
    common.add_argument("--out-dir", default=None,
                        help="directory for default-named outputs (env SSC_OUTPUT_DIR)")
    common.add_argument("--threads", type=int, default=None,
                        help="worker cap (env SSC_THREADS, default all cores)")
    sub = p.add_subparsers(dest="command", required=True)

    e = sub.add_parser("exponents", parents=[common], help="capacity, C_alpha, h, D and D1")
    e.add_argument("--snr", type=float, required=True)
    _rate_args(e)
    e.add_argument("--grid", type=int, default=20, help="number of alpha grid points")
    e.set_defaults(func=cmd_exponents)

    b = sub.add_parser("bound", parents=[common], help="per-l bound table")
    b.add_argument("--L", type=int, required=True)
    b.add_argument("--a", type=float, required=True, help="section size rate, M = round(L^a)")
    b.add_argument("--snr", type=float, required=True)
    _rate_args(b)
    _dict_args(b)
    b.add_argument("--alpha0", type=float, default=0.1)
    b.set_defaults(func=cmd_bound)

    r = sub.add_parser("rate-curve", parents=[common], help="achievable rate versus L")
    r.add_argument("--snr", type=float, required=True)
    _dict_args(r)
    r.add_argument("--a", type=float, required=True, help="section size rate, M = round(L^a)")
    r.add_argument("--eps0", type=float, default=1e-4)
    r.add_argument("--L-list", default=None, help="comma-separated L values (default 20..100)")
    r.add_argument("--rate-fracs", default=None, help="comma-separated capacity fractions")
    r.set_defaults(func=cmd_rate_curve)

    s = sub.add_parser("simulate", parents=[common], help="Monte Carlo ML decoding")
    s.add_argument("--L", type=int, required=True)
    s.add_argument("--M", type=int, required=True)
    s.add_argument("--snr", type=float, required=True)
    _rate_args(s)
    _dict_args(s)
    s.add_argument("--trials", type=int, default=10_000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--fixed-dictionary", action="store_true")
    s.add_argument("--budget-bits", type=float, default=16)
    s.set_defaults(func=cmd_simulate)

    v = sub.add_parser("verify", parents=[common], help="lemma and phi verifiers")
    v.add_argument("--suite", choices=("lemmas", "phi", "binomial"), default="lemmas")
    v.add_argument("--cases", type=int, default=1000)
    v.add_argument("--seed", type=int, default=1)
    v.add_argument("--l-max", type=int, default=4096)
    v.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.threads is not None and args.threads < 1:
        parser.error("--threads must be >= 1")
    try:
        return args.func(args)
    except (DomainError, ParameterError, DecodeBudgetError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
