"""Command-line front end: ``phvfe <subcommand> [options]``."""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .catalog import (
    BUILTIN_NAMES,
    CatalogError,
    CharacteristicError,
    UnknownInstance,
    ValidationFailure,
    builtin_config,
    build_instance,
    load_instance,
    parse_config_file,
    validate_instance,
)
from .characters import identity_suite
from .ff_core import FieldError, is_prime, make_field
from .fourier import GridTooLarge, MAX_GRID
from .func_eq import (
    DEFAULT_TOL,
    FIT_TOL,
    VerificationError,
    compute_table,
    cross_extension_check,
    fit_exponents,
    support_scan,
)
from .report import VerificationReport, field_json, table_summary

EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_USAGE = 2
EXIT_UNKNOWN = 3
EXIT_CAP = 4
EXIT_INVALID = 5
EXIT_VERIFY = 6
IDENTITY_TOL = 1e-8

EPILOG = """exit codes:
  0  every enabled check passed
  1  a check ran but failed its verdict
  2  usage error (bad flags, bad field)
  3  unknown instance or representation
  4  grid or field size cap exceeded
  5  instance validation or config rejection (witness in message)
  6  verification failure (no dual twist / no fitting split)
"""


class CliError(Exception):
    def __init__(self, code: int, msg: str):
        super().__init__(msg)
        self.code = code


def _split_prime_power(q: int) -> tuple[int, int]:
    for p in range(2, q + 1):
        if q % p == 0:
            if not is_prime(p):
                break
            e, r = 0, q
            while r % p == 0:
                r //= p
                e += 1
            if r == 1:
                return p, e
            break
    raise CliError(EXIT_USAGE, f"q = {q} is not a prime power")


def _field(args, q_attr: str = "q", e_attr: str = "e"):
    q = getattr(args, q_attr, None)
    if q is not None:
        p, e = _split_prime_power(q)
    elif args.p is not None:
        p, e = args.p, getattr(args, e_attr, None) or 1
    else:
        raise CliError(EXIT_USAGE, "give the field with --q or --p/--e")
    try:
        return make_field(p, e)
    except FieldError as exc:
        code = EXIT_CAP if "cap" in str(exc) else EXIT_USAGE
        raise CliError(code, str(exc)) from None


def _config(args):
    if args.config:
        docs = parse_config_file(Path(args.config).read_text())
        if args.instance:
            docs = [d for d in docs if d.name == args.instance]
            if not docs:
                raise CliError(EXIT_UNKNOWN, f"no instance {args.instance!r} in {args.config}")
        return docs[0]
    if not args.instance:
        raise CliError(EXIT_USAGE, "give --instance or --config")
    try:
        return builtin_config(args.instance)
    except UnknownInstance as exc:
        raise CliError(EXIT_UNKNOWN, str(exc)) from None


def _instance(args, field):
    cfg = _config(args)
    if field.q**cfg.n > args.cap:
        raise CliError(EXIT_CAP, f"q^n = {field.q}^{cfg.n} exceeds cap {args.cap}")
    try:
        inst = load_instance(cfg, field, seed=args.seed) if args.config else build_instance(cfg, field)
    except ValidationFailure as exc:
        raise CliError(EXIT_INVALID, str(exc)) from None
    except CharacteristicError as exc:
        raise CliError(EXIT_INVALID, str(exc)) from None
    rho = getattr(args, "rho", None)
    if rho is not None and rho not in inst.rho_traces:
        raise CliError(EXIT_UNKNOWN, f"{inst.name} has no representation {rho!r} "
                                     f"(options: {', '.join(inst.rho_names)})")
    return inst


def _table(args, inst):
    return compute_table(inst, args.rho, fast=not args.naive_dft, tol=args.tol, threads=args.threads)


# -- subcommands ----------------------------------------------------------------

def cmd_catalog(args, rep: VerificationReport) -> None:
    rows = []
    names = list(BUILTIN_NAMES)
    cfgs = parse_config_file(Path(args.config).read_text()) if args.config else [builtin_config(n) for n in names]
    for cfg in cfgs:
        rows.append({"name": cfg.name, "n": cfg.n, "d": cfg.d, "rho": list(cfg.rho),
                     "eps": list(cfg.eps), "p": cfg.p_constraint})
        print(f"{cfg.name:14s} n={cfg.n:<3d} d={cfg.d:<2d} p={cfg.p_constraint:4s} "
              f"rho={','.join(cfg.rho)}  eps={','.join(cfg.eps)}")
    rep.sections["catalog"] = rows
    rep.check("catalog", True)


def cmd_validate(args, rep: VerificationReport) -> None:
    field = _field(args)
    inst = _instance(args, field)
    res = validate_instance(inst, seed=args.seed)
    rep.instance, rep.field = inst.name, field_json(field)
    rep.sections["validation"] = res.to_json()
    for r in res.reports:
        print(f"{r['check']:20s} checked={r['checked']:<6d} failures={r['failures']}"
              + ("" if r["ok"] else f" witness={r['witness']}"))
        rep.check(r["check"], r["ok"])


def _verify_common(args, rep: VerificationReport):
    field = _field(args)
    inst = _instance(args, field)
    rep.instance, rep.rho, rep.field = inst.name, args.rho, field_json(field)
    table = _table(args, inst)
    rep.sections["table"] = table_summary(table)
    if args.table:
        Path(args.table).write_text(table.to_csv())
    rep.check("ratio_residual", table.max_ratio_residual < args.tol)
    rep.check("unique_dual_twist", len(table.valid_twists) == 1)
    print(f"{inst.name}/{args.rho} over {field}: {len(table.rows)} characters, "
          f"dual twist {table.twist!r}, max ratio residual {table.max_ratio_residual:.3g}")
    return inst, table


def _fit(args, rep, table):
    fit = fit_exponents(table, m_max=args.m_max)
    rep.sections["fit"] = fit.to_json()
    q = table.field.q
    pred = fit.predict(table.ks)
    weight_law = np.abs(np.abs(table.C) - q ** (-np.array(fit.weights) / 2.0)).max()
    rep.check("fit_residual", fit.fit_residual < FIT_TOL)
    rep.check("weight_law", weight_law < FIT_TOL and sum(fit.weights) == 2 * fit.m + fit.d)
    rep.check("zeta_unit", abs(abs(fit.zeta) - 1) < FIT_TOL)
    rep.check("reproduces_table", float(np.abs(pred - table.C).max()) < FIT_TOL)
    print(f"m={fit.m} lambdas={fit.lambda_ks} mus={fit.mu_ks} zeta={fit.zeta:.6f} "
          f"shift={fit.shift} residual={fit.fit_residual:.3g}")
    return fit


def cmd_verify(args, rep):
    _verify_common(args, rep)


def cmd_fit(args, rep):
    _, table = _verify_common(args, rep)
    _fit(args, rep, table)


def cmd_scan(args, rep):
    _, table = _verify_common(args, rep)
    fit = _fit(args, rep, table)
    scan = support_scan(table, fit, tol=args.tol)
    rep.sections["scan"] = scan.to_json()
    rep.check("support_matches_weights", scan.ok)
    rep.check("generic_support_vanishes", scan.max_generic_support < args.tol)
    print(f"support-exceptional={scan.support_exceptional} weight-exceptional={scan.weight_exceptional}")


def cmd_cross(args, rep):
    k1 = _field(args)
    k2 = _field(args, "q2", "e2")
    inst = _instance(args, k1)
    if k2.q**inst.n > args.cap:
        raise CliError(EXIT_CAP, f"q^n = {k2.q}^{inst.n} exceeds cap {args.cap}")
    rep.instance, rep.rho, rep.field = inst.name, args.rho, field_json(k1)
    try:
        cr = cross_extension_check(inst, args.rho, k1, k2, fast=not args.naive_dft,
                                   m_max=args.m_max, tol=args.tol)
    except ValueError as exc:
        raise CliError(EXIT_USAGE, str(exc)) from None
    rep.sections["cross"] = cr.to_json()
    rep.check("norm_pullback", cr.multisets_match)
    rep.check("zeta_power", cr.zeta_residual < FIT_TOL)
    rep.check("same_dual_twist", cr.same_twist)
    print(f"{inst.name}/{args.rho} {k1} -> {k2}: lifted lambdas {cr.lifted_lambdas} vs "
          f"{cr.large.lambda_ks}; zeta residual {cr.zeta_residual:.3g}")


def cmd_identities(args, rep):
    field = _field(args)
    rep.field = field_json(field)
    res = identity_suite(field)
    rep.sections["identities"] = {k: float(f"{v:.12g}") for k, v in res.items()}
    for k, v in res.items():
        ok = v < IDENTITY_TOL
        rep.check(k, ok)
        print(f"{k:24s} {v:.3g} {'ok' if ok else 'FAIL'}")


COMMANDS = {
    "catalog": cmd_catalog,
    "validate": cmd_validate,
    "verify": cmd_verify,
    "fit": cmd_fit,
    "scan": cmd_scan,
    "cross": cmd_cross,
    "identities": cmd_identities,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="phvfe",
        description="Verify finite-field functional equations of prehomogeneous vector spaces.",
        epilog=EPILOG,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("command", choices=list(COMMANDS))
    parser.add_argument("--instance", help="built-in instance name (see `catalog`)")
    parser.add_argument("--config", help="instance config file (key: value lines, --- separated)")
    parser.add_argument("--q", type=int, help="field size (prime power)")
    parser.add_argument("--p", type=int, help="characteristic (with --e)")
    parser.add_argument("--e", type=int, help="extension degree (with --p)")
    parser.add_argument("--q2", type=int, help="larger field for `cross`")
    parser.add_argument("--e2", type=int, help="degree of the larger field for `cross` (with --p)")
    parser.add_argument("--rho", default="trivial", help="component-group representation")
    parser.add_argument("--m-max", type=int, default=2)
    parser.add_argument("--tol", type=float, default=DEFAULT_TOL,
                        help="ratio / support tolerance (default %(default)g)")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", help="write the JSON report here")
    parser.add_argument("--table", help="write the character-sum table CSV here")
    parser.add_argument("--threads", type=int, default=1)
    parser.add_argument("--naive-dft", action="store_true", help="use the O(q^2n) transform")
    parser.add_argument("--cap", type=int, default=MAX_GRID, help=argparse.SUPPRESS)
    return parser


def run_cli(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0) and EXIT_USAGE
    rep = VerificationReport(args.command, args.seed)
    try:
        COMMANDS[args.command](args, rep)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except GridTooLarge as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAP
    except (VerificationError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VERIFY
    except CatalogError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    if args.out:
        Path(args.out).write_text(rep.dumps())
    print(f"verdict: {'pass' if rep.passed else 'fail'}")
    return EXIT_PASS if rep.passed else EXIT_FAIL


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
