"""Sweep built-in instances over several fields and summarise each fit.

    python scripts/sweep_tables.py --q 3 5 7 9 11 --out sweep.csv
"""
import argparse
import csv
import sys
import time

from phvfe.catalog import builtin_instances
from phvfe.cli import _split_prime_power
from phvfe.ff_core import make_field
from phvfe.func_eq import FitError, VerificationError, compute_table, fit_exponents, support_scan

MAX_POINTS = 1 << 14


def sweep(qs, m_max=2):
    for q in qs:
        F = make_field(*_split_prime_power(q))
        for inst in builtin_instances(F):
            if F.q**inst.n > MAX_POINTS:
                continue
            for rho in inst.rho_names:
                t0 = time.perf_counter()
                row = {"instance": inst.name, "rho": rho, "q": F.q}
                try:
                    table = compute_table(inst, rho)
                    fit = fit_exponents(table, m_max=m_max)
                    scan = support_scan(table, fit)
                except (VerificationError, FitError) as exc:
                    row.update(status=f"error: {exc}")
                else:
                    row.update(
                        status="ok" if scan.ok else "support mismatch",
                        twist=table.twist,
                        ratio_residual=f"{table.max_ratio_residual:.3g}",
                        m=fit.m,
                        lambdas=" ".join(map(str, fit.lambda_ks)),
                        mus=" ".join(map(str, fit.mu_ks)),
                        zeta=f"{fit.zeta.real:.6f}{fit.zeta.imag:+.6f}j",
                        shift=fit.shift,
                        k0_prime=F.p**fit.k0_prime_e,
                        exceptional=" ".join(map(str, scan.support_exceptional)),
                    )
                row["seconds"] = f"{time.perf_counter() - t0:.3f}"
                yield row


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--q", type=int, nargs="+", default=[3, 5, 7, 9])
    ap.add_argument("--m-max", type=int, default=2)
    ap.add_argument("--out", help="CSV path (default stdout)")
    args = ap.parse_args()
    cols = ["instance", "rho", "q", "status", "twist", "ratio_residual", "m", "lambdas", "mus",
            "zeta", "shift", "k0_prime", "exceptional", "seconds"]
    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    writer = csv.DictWriter(fh, fieldnames=cols, restval="")
    writer.writeheader()
    for row in sweep(args.q, args.m_max):
        writer.writerow(row)
        fh.flush()
    if args.out:
        fh.close()


if __name__ == "__main__":
    main()
