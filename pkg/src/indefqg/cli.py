"""Command-line front end.

Exit status: 0 on success, 1 when a check fails (boundary conditions not
self-adjoint, glue deviation above tolerance), 2 on usage or input errors.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .conditions import build_conditions, check_laplacian_self_adjoint, check_self_adjoint, glue_conditions
from .graph import GraphError, glue_graphs, glue_renamers, read_graph
from .report import header_line, render_csv
from .resolvent import EdgePoint, ResolventContext, kernel_table
from .scattering import (CriticalSetError, close_edges, direct_sum, scattering_data, star_product_glue, sweep)
from .secular import PoleError, ResonanceError
from .spectral import BRANCHES, counting_function, find_eigenvalues, find_resonances, zero_mode_dimension


class UsageError(Exception):
    pass


@dataclass
class JobConfig:
    command: str
    inputs: list[str]
    out: str | None = None
    ranges: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=dict)

    def __post_init__(self):
        for name, (lo, hi) in self.ranges.items():
            if not (lo < hi):
                raise UsageError(f"empty range for {name}: {lo} .. {hi}")
        for name, v in self.tolerances.items():
            if not v > 0:
                raise UsageError(f"{name} must be positive")

    def header(self) -> str:
        settings = {**{f"{k}_range": f"{lo}:{hi}" for k, (lo, hi) in self.ranges.items()}, **self.tolerances}
        return header_line(self.command, __version__, settings)


def _emit(cfg: JobConfig, columns, rows) -> None:
    text = render_csv(cfg.header(), columns, rows)
    if cfg.out:
        Path(cfg.out).write_text(text)
    else:
        sys.stdout.write(text)


def _load(graph_path, bc_path):
    g = read_graph(graph_path)
    return g, build_conditions(Path(bc_path), g)


def cmd_validate(a) -> int:
    g, bc = _load(a.graph, a.bc)
    rep = check_self_adjoint(bc, a.tol)
    lap = check_laplacian_self_adjoint(bc, a.tol)
    result = {
        "self_adjoint": rep.ok,
        "rank_ok": rep.rank_ok,
        "symmetry_residual": rep.symmetry_residual,
        "laplacian_self_adjoint": lap.ok,
        "laplacian_symmetry_residual": lap.symmetry_residual,
        "n": g.index.n,
        "m": g.index.m,
    }
    print(f"self-adjoint: {'yes' if rep.ok else 'no'}")
    print(f"rank: {rep.rank} of {g.index.dim}; symmetry residual {rep.symmetry_residual:.3e}")
    print(f"laplacian self-adjoint: {'yes' if lap.ok else 'no'}")
    if a.out:
        Path(a.out).write_text(json.dumps(result, indent=2) + "\n")
    return 0 if rep.ok else 1


def _branches(choice):
    return BRANCHES if choice == "both" else (choice,)


def cmd_spectrum(a) -> int:
    g, bc = _load(a.graph, a.bc)
    cfg = JobConfig("spectrum", [a.graph, a.bc], a.out, {"k": (a.kmin, a.kmax)},
                    {"step": a.step} if a.step else {})
    rows = []
    for b in _branches(a.branch):
        for ev in find_eigenvalues(bc, g, b, (a.kmin, a.kmax), a.step):
            rows.append((b, ev.lam, ev.root, ev.multiplicity, ev.residual))
    zero = zero_mode_dimension(bc, g)
    if zero:
        rows.append(("zero", 0.0, 0.0, zero, 0.0))
    rows.sort(key=lambda r: r[1])
    _emit(cfg, ["branch", "lambda", "k_or_kappa", "multiplicity", "residual"], rows)
    return 0


def cmd_resonances(a) -> int:
    g, bc = _load(a.graph, a.bc)
    cfg = JobConfig("resonances", [a.graph, a.bc], a.out, {"k": (a.kmin, a.kmax)},
                    {"step": a.step} if a.step else {})
    rows = []
    for b in _branches(a.branch):
        for r in find_resonances(bc, g, b, (a.kmin, a.kmax), a.step):
            rows.append((b, r.root, r.residual, r.is_eigenvalue))
    _emit(cfg, ["branch", "k_or_kappa", "residual", "is_eigenvalue"], rows)
    return 0


def cmd_scatter(a) -> int:
    g, bc = _load(a.graph, a.bc)
    if a.lmin < 0 < a.lmax or 0 in (a.lmin, a.lmax):
        raise UsageError("the energy range must lie on one side of zero")
    if a.samples < 1:
        raise UsageError("--samples must be at least 1")
    cfg = JobConfig("scatter", [a.graph, a.bc], a.out, {"lambda": (a.lmin, a.lmax)}, {})
    sign = "+" if a.lmax > 0 else "-"
    edges = [e.id for e in g.externals(sign)]
    if not edges:
        raise UsageError(f"graph has no {sign} external edges")
    cols = ["lambda"]
    for r in edges:
        for c in edges:
            cols += [f"S_{r},{c}_re", f"S_{r},{c}_im"]
    rows = []
    for lam, sm in sweep(bc, g, np.linspace(a.lmin, a.lmax, a.samples)):
        vals = np.full(len(edges) ** 2, np.nan + 1j * np.nan) if sm is None else sm.S.ravel()
        rows.append([lam] + [p for z in vals for p in (z.real, z.imag)])
    _emit(cfg, cols, rows)
    return 0


def _parse_points(text: str) -> list[EdgePoint]:
    pts = []
    for item in text.split(","):
        try:
            edge, x = item.rsplit(":", 1)
            pts.append(EdgePoint(edge.strip(), float(x)))
        except ValueError as exc:
            raise UsageError(f"bad point {item!r}; expected edge:x") from exc
    return pts


def cmd_resolvent(a) -> int:
    g, bc = _load(a.graph, a.bc)
    k = complex(a.k_re, a.k_im)
    cfg = JobConfig("resolvent", [a.graph, a.bc], a.out, {}, {})
    ctx = ResolventContext(bc, g, k)
    pts = _parse_points(a.points)
    for p in pts:
        g.edge(p.edge)
    _emit(cfg, ["edge_p", "x", "edge_q", "y", "re", "im"], kernel_table(ctx, pts, pts))
    return 0


def _parse_ident(items) -> list[tuple[str, str]]:
    pairs = []
    for item in items:
        if ":" not in item:
            raise UsageError(f"bad identification {item!r}; expected e1:e2")
        a, b = item.split(":", 1)
        pairs.append((a, b))
    return pairs


def glue_deviation(g1, bc1, g2, bc2, pairs, lengths, ks):
    """Per-k maximum entrywise deviation between the glued graph and the composed data."""
    G = glue_graphs(g1, g2, pairs, lengths)
    bcG = glue_conditions(bc1, bc2, g1, g2, pairs, G)
    r1, r2 = glue_renamers(g1, g2)
    all_negative = (
        {p for p, _ in pairs} == {e.id for e in g1.externals("-")}
        and {q for _, q in pairs} == {e.id for e in g2.externals("-")}
        and all(g1.edge(p).sign == "-" for p, _ in pairs)
    )
    out = []
    for k in ks:
        try:
            dG = scattering_data(bcG, G, k)
            d1, d2 = scattering_data(bc1, g1, k), scattering_data(bc2, g2, k)
            joined = direct_sum(d1, d2)
            joined = type(joined)(joined.k, joined.chi_EE,
                                  tuple(r1(e) for e in d1.edges) + tuple(r2(e) for e in d2.edges), joined.signs)
            S, names = close_edges(joined, [(r1(p), r2(q)) for p, q in pairs], lengths)
            pos = {e: i for i, e in enumerate(dG.edges)}
            order = [pos[e] for e in names]
            dev = float(np.max(np.abs(S - dG.chi_EE[np.ix_(order, order)]), initial=0.0))
            if all_negative:
                # the explicit block formula expects the second graph's negatives in pairing order
                d2r = _reorder_negatives(d2, [q for _, q in pairs])
                d1r = _reorder_negatives(d1, [p for p, _ in pairs])
                Sp, pnames = star_product_glue(d1r, d2r, lengths)
                order = [pos[r1(e)] if i < len(g1.externals("+")) else pos[r2(e)] for i, e in enumerate(pnames)]
                dev = max(dev, float(np.max(np.abs(Sp - dG.chi_EE[np.ix_(order, order)]), initial=0.0)))
            out.append((float(k), dev))
        except (ResonanceError, PoleError, CriticalSetError):
            out.append((float(k), math.nan))
    return out


def _reorder_negatives(d, neg_order):
    plus = [e for e, s in zip(d.edges, d.signs) if s == "+"]
    order = [d.edges.index(e) for e in plus + list(neg_order)]
    return type(d)(d.k, d.chi_EE[np.ix_(order, order)], tuple(d.edges[i] for i in order),
                   tuple(d.signs[i] for i in order))


def cmd_glue(a) -> int:
    g1, bc1 = _load(a.graph1, a.bc1)
    g2, bc2 = _load(a.graph2, a.bc2)
    pairs = _parse_ident(a.ident)
    if len(pairs) != len(a.lengths):
        raise UsageError("need one length per identified pair")
    cfg = JobConfig("glue", [a.graph1, a.bc1, a.graph2, a.bc2], a.out, {"k": (a.kmin, a.kmax)}, {"tol": a.tol})
    rows = glue_deviation(g1, bc1, g2, bc2, pairs, a.lengths, np.linspace(a.kmin, a.kmax, a.samples))
    devs = [d for _, d in rows if not math.isnan(d)]
    worst = max(devs) if devs else math.nan
    _emit(cfg, ["k", "max_deviation"], rows)
    print(f"max deviation: {worst:.3e} over {len(devs)} of {len(rows)} samples", file=sys.stderr)
    return 0 if devs and worst <= a.tol else 1


def cmd_weyl(a) -> int:
    g, bc = _load(a.graph, a.bc)
    lam_max = a.sqrt_lambda ** 2
    cfg = JobConfig("weyl", [a.graph, a.bc], a.out, {"sqrt_lambda": (0.0, a.sqrt_lambda)},
                    {"step": a.step} if a.step else {})
    results = {}
    for b in BRANCHES:
        try:
            results[b] = counting_function(bc, g, b, lam_max, a.step, a.samples)
        except GraphError:
            continue
    if not results:
        raise UsageError("no branch supports counting on this graph")
    lams = next(iter(results.values())).lambdas
    cols = ["lambda"] + [f"N_{b}" for b in results]
    rows = [[lam] + [int(results[b].counts[i]) for b in results] for i, lam in enumerate(lams)]
    _emit(cfg, cols, rows)
    for b, r in results.items():
        print(f"{b}: N*pi/sqrt(lambda) = {r.weyl_slope:.6f}, length sum {r.expected_slope:.6f}", file=sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="indefqg", description="Sign-indefinite Laplacians on metric graphs")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def gb(sp):
        sp.add_argument("graph")
        sp.add_argument("bc")
        sp.add_argument("--out")

    sp = sub.add_parser("validate", help="check self-adjointness of boundary conditions")
    gb(sp)
    sp.add_argument("--tol", type=float, default=1e-10)
    sp.set_defaults(func=cmd_validate)

    for name, func in (("spectrum", cmd_spectrum), ("resonances", cmd_resonances)):
        sp = sub.add_parser(name)
        gb(sp)
        sp.add_argument("--branch", choices=BRANCHES + ("both",), default="both")
        sp.add_argument("--kmin", type=float, default=0.01)
        sp.add_argument("--kmax", type=float, required=True)
        sp.add_argument("--step", type=float, default=None)
        sp.set_defaults(func=func)

    sp = sub.add_parser("scatter", help="scattering matrix sweep over an energy range")
    gb(sp)
    sp.add_argument("--lmin", type=float, required=True)
    sp.add_argument("--lmax", type=float, required=True)
    sp.add_argument("--samples", type=int, default=100)
    sp.set_defaults(func=cmd_scatter)

    sp = sub.add_parser("resolvent", help="dump resolvent kernel values")
    gb(sp)
    sp.add_argument("--k-re", type=float, required=True)
    sp.add_argument("--k-im", type=float, required=True)
    sp.add_argument("--points", required=True, help="comma list of edge:x")
    sp.set_defaults(func=cmd_resolvent)

    sp = sub.add_parser("glue", help="compare direct and composed scattering data of a glued graph")
    for n in ("graph1", "bc1", "graph2", "bc2"):
        sp.add_argument(n)
    sp.add_argument("--ident", nargs="+", required=True, help="pairs e1:e2")
    sp.add_argument("--lengths", type=float, nargs="+", required=True)
    sp.add_argument("--kmin", type=float, default=0.05)
    sp.add_argument("--kmax", type=float, default=10.0)
    sp.add_argument("--samples", type=int, default=200)
    sp.add_argument("--tol", type=float, default=1e-10)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_glue)

    sp = sub.add_parser("weyl", help="eigenvalue counting functions")
    gb(sp)
    sp.add_argument("--sqrt-lambda", type=float, default=200.0)
    sp.add_argument("--step", type=float, default=None)
    sp.add_argument("--samples", type=int, default=200)
    sp.set_defaults(func=cmd_weyl)
    return p


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (UsageError, GraphError, ValueError, KeyError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ResonanceError, PoleError, CriticalSetError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run())

