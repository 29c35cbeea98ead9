import numpy as np
import pytest
from scipy.integrate import simpson
from hypothesis import given, settings

from indefqg.conditions import dirichlet, neumann, standard_conditions
from indefqg.graph import InternalEdge, MetricGraph, star, three_star, two_vertex
from indefqg.resolvent import (EdgePoint, ResolventContext, apply_resolvent, boundary_traces, branch_for,
                               edge_grid, free_traces, kernel_table, ode_residual, params_for, resolvent_kernel)
from indefqg.secular import ResonanceError

from .conftest import printed_real_line_bc, random_bc, random_graph, seeds


def half_line(sign="+"):
    return star([sign])


@pytest.mark.parametrize("kind,sign", [("neumann", 1), ("dirichlet", -1)])
@pytest.mark.parametrize("k", [1.3 + 0.4j, -0.8 + 1.1j])
def test_half_line_images(kind, sign, k):
    g = half_line()
    bc = neumann(g.index) if kind == "neumann" else dirichlet(g.index)
    ctx = ResolventContext(bc, g, k)
    eid = g.external_edges[0].id
    for x, y in [(0.2, 1.5), (2.0, 0.3), (0.7, 0.7)]:
        ref = 0.5j / k * (np.exp(1j * k * abs(x - y)) + sign * np.exp(1j * k * (x + y)))
        assert resolvent_kernel(ctx, EdgePoint(eid, x), EdgePoint(eid, y)) == pytest.approx(ref, abs=1e-14)


def test_negative_half_line_kernel():
    # on a negative edge the operator is +d^2, so (d^2 - k^2) u = f with decay
    g = half_line("-")
    k = 0.9 + 0.6j
    ctx = ResolventContext(neumann(g.index), g, k)
    z = 1j * k
    eid = g.external_edges[0].id
    x, y = 0.4, 1.1
    ref = -0.5j / z * (np.exp(1j * z * abs(x - y)) + np.exp(1j * z * (x + y)))
    assert resolvent_kernel(ctx, EdgePoint(eid, x), EdgePoint(eid, y)) == pytest.approx(ref, abs=1e-14)


def test_branch_selection():
    assert branch_for(1 + 1j) == "Q" and branch_for(-1 + 1j) == "P"
    with pytest.raises(ValueError):
        branch_for(1 - 1j)
    with pytest.raises(ValueError):
        branch_for(2j)
    assert params_for(-1 + 1j, "P").z_minus == pytest.approx(-1j * (-1 + 1j))


def _random_point(g, rng):
    e = g.edge(g.edge_ids[int(rng.integers(len(g.edge_ids)))])
    hi = getattr(e, "length", 3.0)
    return EdgePoint(e.id, float(rng.uniform(0, hi)))


@settings(max_examples=40, deadline=None)
@given(seeds)
def test_kernel_symmetry(seed):
    rng = np.random.default_rng(seed)
    g = random_graph(seed)
    bc = random_bc(g, seed, mix=False)
    k = complex(rng.uniform(0.2, 3), rng.uniform(0.2, 2))
    try:
        c1 = ResolventContext(bc, g, k)
        c2 = ResolventContext(bc, g, -np.conj(k))
    except ResonanceError:
        return
    for _ in range(25):
        p, q = _random_point(g, rng), _random_point(g, rng)
        a = resolvent_kernel(c2, p, q)
        b = np.conj(resolvent_kernel(c1, q, p))
        assert abs(a - b) <= 1e-10 * max(1.0, abs(a))


def _real_line_problem(h, k=1.2 + 0.7j):
    g, bc = printed_real_line_bc()
    ctx = ResolventContext(bc, g, k)
    grids = {e.id: edge_grid(g, e.id, h, support=8.0) for e in g.external_edges}
    f = {eid: np.exp(-4 * (x - 2.5) ** 2) + 0j for eid, x in grids.items()}
    return g, bc, ctx, grids, f


def test_real_line_residual_and_order():
    errs = []
    for h in (2e-3, 1e-3, 5e-4):
        g, bc, ctx, grids, f = _real_line_problem(h)
        u = apply_resolvent(ctx, f, grids)
        errs.append(ode_residual(g, u, f, grids, ctx.energy))
        if h == 1e-3:
            assert errs[-1] <= 1e-4
            val, der = boundary_traces(g, u, grids)
            assert np.abs(bc.A @ val + bc.B @ der).max() <= 1e-4
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert orders.min() >= 1.8


@pytest.mark.parametrize("k", [1.0 + 0.5j, -0.7 + 0.9j])
def test_two_vertex_residual_and_traces(k):
    g = two_vertex(1.0)
    bc = standard_conditions(g)
    ctx = ResolventContext(bc, g, k)
    h = 1e-3
    grids = {eid: edge_grid(g, eid, h, support=6.0) for eid in g.edge_ids}
    f = {eid: np.sin(3 * x) * np.exp(-x) + 0j for eid, x in grids.items()}
    u = apply_resolvent(ctx, f, grids)
    assert ode_residual(g, u, f, grids, ctx.energy) <= 1e-4
    val, der = boundary_traces(g, u, grids)
    assert np.abs(bc.A @ val + bc.B @ der).max() <= 1e-4


def test_free_trace_identity():
    g = three_star()
    ctx = ResolventContext(standard_conditions(g), g, 0.9 + 0.8j)
    grids = {eid: edge_grid(g, eid, 5e-4, support=10.0) for eid in g.edge_ids}
    f = {eid: (x ** 2) * np.exp(-2 * x) + 0j for eid, x in grids.items()}
    val, der = free_traces(ctx, f, grids)
    for e in g.external_edges:
        z = ctx._z(e)
        s = 1.0 if e.sign == "+" else -1.0
        free = ctx.free_kernel(e.id, 0.0, grids[e.id]) * f[e.id]
        dfree = -1j * z * free  # d/dx e^{iz(y - x)} at x = 0
        i = g.index.slot(e.id)
        assert val[i] == pytest.approx(simpson(free, x=grids[e.id]), abs=1e-8)
        assert der[i] == pytest.approx(simpson(dfree, x=grids[e.id]), abs=1e-8)


def test_zero_source_gives_zero():
    g = two_vertex(1.0)
    ctx = ResolventContext(standard_conditions(g), g, 1 + 1j)
    grids = {eid: edge_grid(g, eid, 0.01, support=2.0) for eid in g.edge_ids}
    u = apply_resolvent(ctx, {"i3": np.zeros_like(grids["i3"], dtype=complex)}, grids)
    assert all(not np.any(v) for v in u.values())
    with pytest.raises(ValueError):
        apply_resolvent(ctx, {}, grids)


def test_real_axis_resonance_guard():
    a = 1.0
    g = MetricGraph(["u", "w"], [], [InternalEdge("i", "+", "u", "w", a)])
    with pytest.raises(ResonanceError):
        ResolventContext(dirichlet(g.index), g, np.pi)
    ResolventContext(dirichlet(g.index), g, np.pi + 0.3)


def test_points_and_grids_validated():
    g = two_vertex(1.0)
    ctx = ResolventContext(standard_conditions(g), g, 1 + 1j)
    with pytest.raises(ValueError):
        resolvent_kernel(ctx, EdgePoint("i3", 1.5), EdgePoint("i3", 0.5))
    with pytest.raises(ValueError):
        edge_grid(g, "e1", 0.1)
    with pytest.raises(ValueError):
        edge_grid(g, "i3", 0.0)
    assert edge_grid(g, "i3", 0.3).size % 2 == 1
    rows = kernel_table(ctx, [EdgePoint("e1", 0.1)], [EdgePoint("i3", 0.2), EdgePoint("e2", 1.0)])
    assert len(rows) == 2 and rows[0][:4] == ("e1", 0.1, "i3", 0.2)
