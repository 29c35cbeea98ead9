"""Direct vs composed scattering data for randomly coupled star pairs."""
import argparse
import math

import numpy as np
from scipy.stats import unitary_group

from indefqg.cli import glue_deviation
from indefqg.conditions import from_unitary
from indefqg.graph import star


def random_pair(rng):
    nneg = int(rng.integers(1, 3))
    g1 = star(["+"] * int(rng.integers(1, 3)) + ["-"] * nneg, "v", "a")
    g2 = star(["+"] * int(rng.integers(1, 3)) + ["-"] * nneg, "w", "b")
    bcs = [from_unitary(unitary_group.rvs(g.index.dim, random_state=rng), g.index) for g in (g1, g2)]
    pairs = list(zip([e.id for e in g1.externals("-")], [e.id for e in g2.externals("-")]))
    return g1, bcs[0], g2, bcs[1], pairs, list(rng.uniform(0.3, 2.0, nneg))


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--pairs", type=int, default=20)
    ap.add_argument("--samples", type=int, default=200)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    rng = np.random.default_rng(args.seed)
    print("pair,max_deviation,critical_samples")
    for i in range(args.pairs):
        g1, bc1, g2, bc2, pairs, lengths = random_pair(rng)
        rows = glue_deviation(g1, bc1, g2, bc2, pairs, lengths, np.linspace(0.05, 10, args.samples))
        devs = [d for _, d in rows if not math.isnan(d)]
        print(f"{i},{max(devs, default=math.nan)!r},{len(rows) - len(devs)}")


if __name__ == "__main__":
    main()
