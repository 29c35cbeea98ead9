import numpy as np
import pytest
from hypothesis import strategies as st
from scipy.stats import unitary_group

from indefqg.conditions import BoundaryConditions, from_unitary
from indefqg.graph import ExternalEdge, InternalEdge, MetricGraph, real_line

# the two-vertex example lists slots as [e1, i3 origin, i3 terminus, e2];
# canonical order is [e1, e2, i3 origin, i3 terminus]
TWO_VERTEX_PERM = [0, 2, 3, 1]


def to_canonical(M, perm=TWO_VERTEX_PERM):
    """Reorder the columns of a matrix written in the printed slot order."""
    M = np.asarray(M, dtype=complex)
    out = np.zeros_like(M)
    out[:, perm] = M
    return out


def printed_real_line_bc():
    g = real_line()
    return g, BoundaryConditions([[-1, 1], [0, 0]], [[0, 0], [-1, 1]], g.index)


def random_unitary(d, seed):
    return unitary_group.rvs(d, random_state=np.random.default_rng(seed)) if d > 1 else \
        np.array([[np.exp(2j * np.pi * np.random.default_rng(seed).random())]])


def random_bc(g, seed, mix=True):
    """Random self-adjoint conditions; optionally hidden behind a random left factor."""
    bc = from_unitary(random_unitary(g.index.dim, seed), g.index)
    if mix:
        rng = np.random.default_rng(seed + 10_000)
        G = rng.normal(size=(g.index.dim,) * 2) + 1j * rng.normal(size=(g.index.dim,) * 2)
        bc = bc.left_multiply(G)
    return bc


def random_graph(seed, max_ext=3, max_int=2):
    rng = np.random.default_rng(seed)
    nv = int(rng.integers(1, 4))
    vs = [f"v{i}" for i in range(nv)]
    ext = [ExternalEdge(f"e{i}", str(rng.choice(["+", "-"])), vs[int(rng.integers(nv))])
           for i in range(int(rng.integers(0, max_ext + 1)))]
    internal = [InternalEdge(f"i{i}", str(rng.choice(["+", "-"])), vs[int(rng.integers(nv))],
                             vs[int(rng.integers(nv))], float(rng.uniform(0.2, 2.0)))
                for i in range(int(rng.integers(0 if ext else 1, max_int + 1)))]
    return MetricGraph(vs, ext, internal)


seeds = st.integers(min_value=0, max_value=2**31 - 1)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)
