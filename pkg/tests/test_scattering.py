import math

import numpy as np
import pytest
from hypothesis import given, settings

from indefqg.cli import glue_deviation
from indefqg.conditions import check_self_adjoint, dirichlet, glue_conditions, standard_conditions
from indefqg.graph import ExternalEdge, InternalEdge, MetricGraph, glue_graphs, star, three_star, two_vertex
from indefqg.resolvent import boundary_traces, ode_residual
from indefqg.scattering import (CriticalSetError, ScatteringData, ac_spectrum, close_edges, direct_sum, eigenfunction_defect,
                                generalized_eigenfunction, loop_determinant, positive_edge_glue, scattering_data,
                                scattering_matrix, star_product_glue, sweep)
from indefqg.secular import ResonanceError
from indefqg.spectral import find_eigenvalues

from .conftest import printed_real_line_bc, random_bc, seeds


def two_vertex_S(a, k):
    t, c = 1j * np.tanh(a * k), 1 / np.cosh(a * k)
    return np.array([[t, c], [c, t]])


@pytest.mark.parametrize("a", [0.5, 1.0, 2.0])
def test_two_vertex_closed_form(a):
    g = two_vertex(a)
    bc = standard_conditions(g)
    for k in np.linspace(0.01, 25, 60):
        sm = scattering_matrix(bc, g, k * k)
        assert np.abs(sm.S - two_vertex_S(a, k)).max() <= 1e-10
        assert sm.unitarity_residual <= 1e-9


def test_three_star_blocks():
    g = three_star()
    bc = standard_conditions(g)
    plus = scattering_matrix(bc, g, 2.3)
    assert np.allclose(plus.S, np.array([[-1 + 2j, 4 + 2j], [4 + 2j, -1 + 2j]]) / 5, atol=1e-12)
    minus = scattering_matrix(bc, g, -0.4)
    assert minus.S[0, 0] == pytest.approx(-0.6 - 0.8j, abs=1e-12)
    assert plus.edges == ("e1", "e2") and minus.edges == ("e3",)


def test_real_line_plus_minus_i():
    g, bc = printed_real_line_bc()
    for lam in (0.01, 1.0, 40.0):
        assert scattering_matrix(bc, g, lam).S[0, 0] == pytest.approx(1j, abs=1e-12)
        assert scattering_matrix(bc, g, -lam).S[0, 0] == pytest.approx(-1j, abs=1e-12)


def test_limits_of_two_vertex():
    g = two_vertex(1.0)
    bc = standard_conditions(g)
    low = scattering_matrix(bc, g, 1e-8).S  # k = 1e-4: transmission
    high = scattering_matrix(bc, g, 2500.0).S  # k = 50: reflection i
    assert np.allclose(low, [[0, 1], [1, 0]], atol=1e-3)
    assert np.allclose(high, [[1j, 0], [0, 1j]], atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(seeds)
def test_unitarity_and_symmetry_random_star(seed):
    rng = np.random.default_rng(seed)
    signs = list(rng.choice(["+", "-"], size=int(rng.integers(2, 5))))
    g = star(signs)
    bc = random_bc(g, seed, mix=True)
    for lam in (float(rng.uniform(0.05, 20)), -float(rng.uniform(0.05, 20))):
        sign = "+" if lam > 0 else "-"
        if not g.externals(sign):
            continue
        try:
            sm = scattering_matrix(bc, g, lam)
        except ResonanceError:
            continue
        assert sm.unitarity_residual <= 1e-9


def test_symmetric_for_real_conditions():
    # real boundary conditions give a transpose-symmetric S
    g = three_star()
    S = scattering_matrix(standard_conditions(g), g, 1.7).S
    assert np.allclose(S, S.T, atol=1e-13)


def test_ac_spectrum():
    info = ac_spectrum(three_star())
    assert info.multiplicity(3.0) == 2 and info.multiplicity(-3.0) == 1
    assert ac_spectrum(two_vertex(1.0)).multiplicity(-1.0) == 0


def test_no_scattering_without_externals():
    g = two_vertex(1.0)
    with pytest.raises(ValueError):
        scattering_matrix(standard_conditions(g), g, -1.0)
    with pytest.raises(ValueError):
        scattering_matrix(standard_conditions(g), g, 0.0)


@pytest.mark.parametrize("branch", ["positive", "negative", "positive_conjugate", "negative_conjugate"])
@pytest.mark.parametrize("k", [0.3, 1.7, 9.0])
def test_generalized_eigenfunction_defect(branch, k):
    for g in (two_vertex(1.0), three_star()):
        ode, bnd = eigenfunction_defect(standard_conditions(g), g, "e1", branch, k)
        assert ode <= 1e-6 and bnd <= 1e-6


def test_generalized_eigenfunction_finite_differences():
    g = two_vertex(1.0)
    bc = standard_conditions(g)
    h = 1e-3
    grids = {"e1": np.arange(0, 3 + h / 2, h), "e2": np.arange(0, 3 + h / 2, h), "i3": np.linspace(0, 1, 1001)}
    u = generalized_eigenfunction(bc, g, "e1", "positive", 1.3, grids)
    assert ode_residual(g, u, {}, grids, 1.69) <= 1e-5
    val, der = boundary_traces(g, u, grids)
    assert np.abs(bc.A @ val + bc.B @ der).max() <= 1e-5


def test_generalized_eigenfunction_exact_defect():
    # exact derivatives: the Ansatz solves the ODE edgewise, so check the boundary conditions exactly
    g = three_star()
    bc = standard_conditions(g)
    k = 1.1
    pts = {e.id: np.array([0.0]) for e in g.external_edges}
    u = generalized_eigenfunction(bc, g, "e2", "positive", k, pts)
    val = np.array([u[e.id][0] for e in g.external_edges])
    z = np.array([k, k, 1j * k])
    col = (val - np.array([0, 1, 0])) * 1j * z  # outgoing derivative
    der = col - np.array([0, 1j * k, 0])
    assert np.abs(bc.A @ val + bc.B @ der).max() <= 1e-12
    with pytest.raises(ValueError):
        generalized_eigenfunction(bc, g, "zz", "positive", k, pts)
    with pytest.raises(ValueError):
        generalized_eigenfunction(bc, g, "e1", "upward", k, pts)


def real_line_data(k):
    g, bc = printed_real_line_bc()
    return scattering_data(bc, g, k)


@pytest.mark.parametrize("a", [0.5, 1.0, 2.0])
def test_star_product_of_real_lines(a):
    for k in np.linspace(0.05, 10, 40):
        S, edges = star_product_glue(real_line_data(k), real_line_data(k), [a])
        assert np.abs(S - two_vertex_S(a, k)).max() <= 1e-10
        d = direct_sum(real_line_data(k), real_line_data(k), ("1.", "2."))
        S2, names = close_edges(d, [("1.e2", "2.e2")], [a])
        assert names == ("1.e1", "2.e1")
        assert np.abs(S2 - two_vertex_S(a, k)).max() <= 1e-10


def test_star_product_rejects_mismatch():
    d = real_line_data(1.0)
    with pytest.raises(ValueError):
        star_product_glue(d, real_line_data(2.0), [1.0])
    with pytest.raises(ValueError):
        star_product_glue(d, d, [1.0, 2.0])


def random_star_pair(seed):
    rng = np.random.default_rng(seed)
    nneg = int(rng.integers(1, 3))
    g1 = star(["+"] * int(rng.integers(1, 3)) + ["-"] * nneg, "v", "a")
    g2 = star(["+"] * int(rng.integers(1, 3)) + ["-"] * nneg, "w", "b")
    n1 = [e.id for e in g1.externals("-")]
    n2 = [e.id for e in g2.externals("-")]
    pairs = list(zip(n1, n2))
    lengths = list(rng.uniform(0.3, 2.0, nneg))
    return g1, random_bc(g1, seed), g2, random_bc(g2, seed + 1), pairs, lengths


@pytest.mark.parametrize("seed", range(5))
def test_direct_vs_star_product(seed):
    g1, bc1, g2, bc2, pairs, lengths = random_star_pair(seed)
    rows = glue_deviation(g1, bc1, g2, bc2, pairs, lengths, np.linspace(0.05, 10, 200))
    devs = [d for _, d in rows if not math.isnan(d)]
    assert len(devs) >= 150
    assert max(devs) <= 1e-10


def test_long_connection_decouples():
    g1, bc1, g2, bc2, pairs, lengths = random_star_pair(7)
    k = 1.3
    d1, d2 = scattering_data(bc1, g1, k), scattering_data(bc2, g2, k)
    S, _ = star_product_glue(d1, d2, [60.0] * len(lengths))
    n1 = len(g1.externals("+"))
    assert np.allclose(S[:n1, :n1], d1.pp, atol=1e-12)
    assert np.allclose(S[n1:, n1:], d2.pp, atol=1e-12)
    assert np.abs(S[:n1, n1:]).max() <= 1e-12


def test_positive_glue_poles_are_eigenvalues():
    # closing e1 and e2 of the two-vertex graph into a loop of length 1
    g = two_vertex(0.7)
    bc = standard_conditions(g)
    closed = MetricGraph(["v1", "v2"], [], [InternalEdge("i3", "-", "v1", "v2", 0.7),
                                            InternalEdge("c", "+", "v1", "v2", 1.0)])
    ev = [e.root for e in find_eigenvalues(standard_conditions(closed), closed, "positive", (0.5, 11.5))]
    ks = np.linspace(0.5, 11.5, 4401)
    vals = np.array([abs(loop_determinant(scattering_data(bc, g, k), [("e1", "e2")], [1.0])) for k in ks])
    minima = [ks[i] for i in range(1, ks.size - 1) if vals[i] < vals[i - 1] and vals[i] < vals[i + 1] and vals[i] < 1e-2]
    assert len(minima) == len(ev)
    assert np.allclose(minima, ev, atol=ks[1] - ks[0])
    S, names = positive_edge_glue(scattering_data(bc, g, 2.0), ("e1", "e2"), 1.0)
    assert S.shape == (0, 0) and names == ()


def test_relabelled_glue_matches_direct():
    # glue a 3-star's negative edge to a real line's negative edge, compare relabelled data
    g1 = three_star()
    g2, bc2 = printed_real_line_bc()
    bc1 = standard_conditions(g1)
    rows = glue_deviation(g1, bc1, g2, bc2, [("e3", "e2")], [0.8], np.linspace(0.1, 5, 30))
    assert max(d for _, d in rows) <= 1e-10


def test_critical_set_detected():
    # Dirichlet on both sides: chi_mm = -1 and e^{-ka} -> 1 as k -> 0 makes the loop singular
    g = star(["+", "-"])
    bc = dirichlet(g.index)
    d = ScatteringData(0.0, -np.eye(2, dtype=complex), ("e1", "e2"), ("+", "-"))
    with pytest.raises(CriticalSetError):
        star_product_glue(d, d, [1.0], k=0.0)
    assert scattering_data(bc, g, 1.0).mm[0, 0] == pytest.approx(-1)


def test_close_edges_validation():
    d = scattering_data(standard_conditions(three_star()), three_star(), 1.0)
    with pytest.raises(ValueError):
        close_edges(d, [("e1", "e3")], [1.0])
    with pytest.raises(ValueError):
        close_edges(d, [("e1", "e2"), ("e2", "e1")], [1.0, 1.0])
    with pytest.raises(ValueError):
        positive_edge_glue(d, ("e1", "e3"), 1.0)


def test_sweep_marks_resonances():
    # half-line with a Dirichlet-decoupled interval: det Z vanishes at k = pi
    g = MetricGraph(["u", "w"], [ExternalEdge("e", "+", "u")], [InternalEdge("i", "+", "u", "w", 1.0)])
    out = sweep(dirichlet(g.index), g, [1.0, math.pi ** 2, 4.0])
    assert out[0][1] is not None and out[1][1] is None and out[2][1] is not None


def test_glued_graph_conditions_are_self_adjoint():
    g1, bc1, g2, bc2, pairs, lengths = random_star_pair(3)
    G = glue_graphs(g1, g2, pairs, lengths)
    bcG = glue_conditions(bc1, bc2, g1, g2, pairs, G)
    assert check_self_adjoint(bcG).ok


def test_auxiliary_wire_is_identity_up_to_relabel():
    g = three_star()
    d = scattering_data(random_bc(g, 11), g, 1.4)
    wire = ScatteringData(1.4, np.array([[0, 1], [1, 0]], dtype=complex), ("w1", "w2"), ("+", "+"))
    S, names = close_edges(direct_sum(d, wire), [("e1", "w1")], [0.0])
    assert names == ("e2", "e3", "w2")
    order = [1, 2, 0]  # original data in the new edge order
    assert np.allclose(S, d.chi_EE[np.ix_(order, order)], atol=1e-13)
    # a positive wire of length a only multiplies the channel by e^{ika}
    S, _ = close_edges(direct_sum(d, wire), [("e1", "w1")], [0.9])
    ph = np.diag([1, 1, np.exp(1.4j * 0.9)])
    assert np.allclose(S, ph @ d.chi_EE[np.ix_(order, order)] @ ph, atol=1e-13)
