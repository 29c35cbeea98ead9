"""Grid refinement study for the resolvent applied to a smooth source."""
import argparse

import numpy as np

from indefqg.conditions import standard_conditions
from indefqg.graph import two_vertex
from indefqg.resolvent import ResolventContext, apply_resolvent, boundary_traces, edge_grid, ode_residual


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--k", type=complex, default=1.2 + 0.7j)
    ap.add_argument("--h0", type=float, default=4e-3)
    ap.add_argument("--levels", type=int, default=5)
    args = ap.parse_args()
    g = two_vertex(1.0)
    bc = standard_conditions(g)
    ctx = ResolventContext(bc, g, args.k)
    print("h,ode_residual,trace_residual,observed_order")
    prev = None
    for level in range(args.levels):
        h = args.h0 / 2 ** level
        grids = {eid: edge_grid(g, eid, h, support=8.0) for eid in g.edge_ids}
        f = {eid: np.exp(-3 * (x - 0.5) ** 2) + 0j for eid, x in grids.items()}
        u = apply_resolvent(ctx, f, grids)
        err = ode_residual(g, u, f, grids, ctx.energy)
        val, der = boundary_traces(g, u, grids)
        trace = float(np.abs(bc.A @ val + bc.B @ der).max())
        order = np.log2(prev / err) if prev else float("nan")
        print(f"{h!r},{err!r},{trace!r},{order:.3f}")
        prev = err


if __name__ == "__main__":
    main()
