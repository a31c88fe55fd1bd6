"""Wall-clock cost of one table, fast against naive transform.

    python scripts/timing.py --instance matrix_det_2 --q 5
"""
import argparse
import time

from phvfe.catalog import get_instance
from phvfe.cli import _split_prime_power
from phvfe.ff_core import make_field
from phvfe.fourier import NAIVE_MAX_GRID
from phvfe.func_eq import compute_table


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--instance", default="matrix_det_2")
    ap.add_argument("--q", type=int, default=5)
    ap.add_argument("--rho", default="trivial")
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args()
    F = make_field(*_split_prime_power(args.q))
    inst = get_instance(args.instance, F)
    modes = [True] + ([False] if F.q**inst.n <= NAIVE_MAX_GRID else [])
    for fast in modes:
        t0 = time.perf_counter()
        table = compute_table(inst, args.rho, fast=fast, threads=args.threads)
        dt = time.perf_counter() - t0
        print(f"{'fast ' if fast else 'naive'} q^n={F.q**inst.n:<7d} {len(table.rows)} characters "
              f"{dt:.3f}s residual {table.max_ratio_residual:.2g}")


if __name__ == "__main__":
    main()
