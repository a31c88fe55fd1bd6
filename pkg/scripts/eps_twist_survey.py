"""Residual of every dual-twist candidate, per instance and field.

Shows which candidate the verifier selects and how far the others miss.

    python scripts/eps_twist_survey.py --instance sym_det_2 --q 5 7 11 13
"""
import argparse

from phvfe.catalog import get_instance
from phvfe.cli import _split_prime_power
from phvfe.ff_core import make_field
from phvfe.func_eq import compute_table


def survey(name, qs, rho="trivial"):
    out = []
    for q in qs:
        F = make_field(*_split_prime_power(q))
        table = compute_table(get_instance(name, F), rho, strict=False)
        out.append((q, table.twist, dict(sorted(table.candidate_residuals.items()))))
    return out


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--instance", default="sym_det_2")
    ap.add_argument("--rho", default="trivial")
    ap.add_argument("--q", type=int, nargs="+", default=[5, 7, 11, 13])
    args = ap.parse_args()
    for q, chosen, res in survey(args.instance, args.q, args.rho):
        cells = "  ".join(f"{k}={v:.2e}" for k, v in res.items())
        print(f"q={q:<4d} selected={chosen:<8s} {cells}")


if __name__ == "__main__":
    main()
