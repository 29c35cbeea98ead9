"""Counting functions of a compact two-edge graph against the Weyl slope."""
import argparse
import time

from indefqg.conditions import standard_conditions
from indefqg.graph import compact_pair
from indefqg.spectral import counting_function


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--a-plus", type=float, default=1.0)
    ap.add_argument("--a-minus", type=float, default=0.7)
    ap.add_argument("--sqrt-lambda", type=float, nargs="+", default=[25.0, 50.0, 100.0, 200.0])
    args = ap.parse_args()
    g = compact_pair(args.a_plus, args.a_minus)
    bc = standard_conditions(g)
    print("sqrt_lambda,branch,N,slope,length_sum,relative_error,seconds")
    for root in args.sqrt_lambda:
        for branch in ("positive", "negative"):
            t0 = time.perf_counter()
            r = counting_function(bc, g, branch, root ** 2)
            dt = time.perf_counter() - t0
            print(f"{root},{branch},{r.counts[-1]},{r.weyl_slope!r},{r.expected_slope!r},{r.relative_error!r},{dt:.2f}")


if __name__ == "__main__":
    main()
