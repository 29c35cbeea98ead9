"""Green's kernel of ``(T(A, B) - k^2)^{-1}`` and its action on grid functions.

The kernel splits as ``r = r0 + r1``.  ``r0`` is the free kernel on each edge,
``sgn * (i / 2z) e^{iz|x-y|}``, and ``r1`` is the boundary correction
``Phi(x) Xi R+^{-1} J W Phi(y)^T`` with ``Xi = -Z^{-1}(A - B I)``.

The open quadrant ``Re k > 0, Im k > 0`` uses ``(z+, z-) = (k, ik)``; the open
quadrant ``Re k < 0, Im k > 0`` uses ``(k, -ik)``.  In both cases every
``e^{izx}`` decays along external edges.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import cumulative_simpson, simpson

from .conditions import BoundaryConditions, signature
from .graph import ExternalEdge, InternalEdge, MetricGraph
from .secular import ResonanceError, SpectralParams, batch_det_scaled, build_I, build_W, transfer_scaled

REAL_AXIS_GUARD = 1e-6


@dataclass(frozen=True)
class EdgePoint:
    edge: str
    x: float


def branch_for(k: complex) -> str:
    k = complex(k)
    if k.imag < 0:
        raise ValueError("k must lie in the closed upper half plane")
    if k.real > 0:
        return "Q"
    if k.real < 0:
        return "P"
    raise ValueError("k on the imaginary axis is not covered by either branch")


def params_for(k: complex, branch: str) -> SpectralParams:
    if branch == "Q":
        return SpectralParams(k, 1j * k)
    if branch == "P":
        return SpectralParams(k, -1j * k)
    raise ValueError(f"branch must be 'Q' or 'P', got {branch!r}")


@dataclass(frozen=True)
class ResolventContext:
    bc: BoundaryConditions
    g: MetricGraph
    k: complex
    branch: str | None = None
    params: SpectralParams = field(init=False)
    _M: np.ndarray = field(init=False, repr=False)
    _JW: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        k = complex(self.k)
        branch = self.branch or branch_for(k)
        params = params_for(k, branch)
        object.__setattr__(self, "k", k)
        object.__setattr__(self, "branch", branch)
        object.__setattr__(self, "params", params)
        if k.imag == 0:
            self._guard_real_axis()
        _, M = transfer_scaled(self.bc, self.g, params)
        object.__setattr__(self, "_M", M)
        idx = self.g.index
        object.__setattr__(self, "_JW", np.diag(signature(idx)) * np.diag(build_W(idx, params)))

    def _guard_real_axis(self):
        ks = self.k.real + np.linspace(-REAL_AXIS_GUARD, REAL_AXIS_GUARD, 5)
        rot = 1j if self.branch == "Q" else -1j
        vals = batch_det_scaled(self.bc, self.g, ks, rot * ks)
        if np.min(np.abs(vals)) <= 1e-9:
            raise ResonanceError(f"k = {self.k} is within {REAL_AXIS_GUARD} of a resonance", self.params)

    @property
    def energy(self) -> complex:
        return self.k * self.k

    def _z(self, e) -> complex:
        return self.params.z_plus if e.sign == "+" else self.params.z_minus

    def _logs(self, e: InternalEdge):
        za = self._z(e) * e.length
        return max(0.0, -za.imag), max(0.0, za.imag)

    def phi_row(self, edge_id: str, x) -> np.ndarray:
        """Scaled rows ``Phi(x) D`` for an array of coordinates, shape ``(len(x), d)``."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        e = self.g.edge(edge_id)
        idx = self.g.index
        z = self._z(e)
        out = np.zeros((x.size, idx.dim), dtype=complex)
        if isinstance(e, ExternalEdge):
            out[:, idx.slot(e.id)] = np.exp(1j * z * x)
        else:
            lo, lt = self._logs(e)
            out[:, idx.slot(e.id, "origin")] = np.exp(1j * z * x - lo)
            out[:, idx.slot(e.id, "terminus")] = np.exp(-1j * z * x - lt)
        return out

    def psi_col(self, edge_id: str, y) -> np.ndarray:
        """Columns ``R+^{-1} Phi(y)^T``, shape ``(len(y), d)``."""
        y = np.atleast_1d(np.asarray(y, dtype=float))
        e = self.g.edge(edge_id)
        idx = self.g.index
        z = self._z(e)
        out = np.zeros((y.size, idx.dim), dtype=complex)
        out[:, idx.slot(e.id)] = np.exp(1j * z * y)
        if isinstance(e, InternalEdge):
            out[:, idx.slot(e.id, "terminus")] = np.exp(1j * z * (e.length - y))
        return out

    def free_kernel(self, edge_id: str, x, y) -> np.ndarray:
        e = self.g.edge(edge_id)
        z = self._z(e)
        s = 1.0 if e.sign == "+" else -1.0
        return s * 0.5j / z * np.exp(1j * z * np.abs(np.asarray(x) - np.asarray(y)))


def _check_point(g: MetricGraph, p: EdgePoint) -> None:
    e = g.edge(p.edge)
    hi = e.length if isinstance(e, InternalEdge) else np.inf
    if not (0.0 <= p.x <= hi):
        raise ValueError(f"coordinate {p.x} outside edge {p.edge!r}")


def resolvent_kernel(ctx: ResolventContext, p: EdgePoint, q: EdgePoint) -> complex:
    _check_point(ctx.g, p)
    _check_point(ctx.g, q)
    r1 = ctx.phi_row(p.edge, p.x)[0] @ ctx._M @ (ctx._JW * ctx.psi_col(q.edge, q.x)[0])
    if p.edge == q.edge:
        return complex(r1 + ctx.free_kernel(p.edge, p.x, q.x))
    return complex(r1)


def kernel_table(ctx: ResolventContext, points_p, points_q):
    """Rows ``(edge_p, x, edge_q, y, re, im)`` for every pair of points."""
    rows = []
    for p in points_p:
        for q in points_q:
            r = resolvent_kernel(ctx, p, q)
            rows.append((p.edge, p.x, q.edge, q.x, r.real, r.imag))
    return rows


def edge_grid(g: MetricGraph, edge_id: str, h: float, support: float | None = None) -> np.ndarray:
    """Uniform grid on an internal edge, or on ``[0, support]`` of an external edge.

    The node count is rounded so the actual spacing is at most ``h``.
    """
    if h <= 0:
        raise ValueError("quadrature step must be positive")
    e = g.edge(edge_id)
    length = e.length if isinstance(e, InternalEdge) else support
    if length is None or length <= 0:
        raise ValueError(f"external edge {edge_id!r} needs a positive support length")
    n = int(np.ceil(length / h - 1e-9))
    return np.linspace(0.0, length, 2 * ((n + 1) // 2) + 1)


def _cumulative(v: np.ndarray, x: np.ndarray) -> np.ndarray:
    # cumulative_simpson drops imaginary parts, so integrate them separately
    return (cumulative_simpson(v.real, x=x, initial=0)
            + 1j * cumulative_simpson(v.imag, x=x, initial=0))


def apply_resolvent(ctx: ResolventContext, f: dict, grids: dict) -> dict:
    """``u(x) = sum over edges of int r(x, y) f(y) dy`` by composite Simpson quadrature.

    ``f`` and ``grids`` map edge ids to sampled values and their uniform grids.
    Edges missing from ``f`` carry no source; ``u`` is returned on ``grids``.
    """
    if not f:
        raise ValueError("source has empty support")
    idx = ctx.g.index
    fhat = np.zeros(idx.dim, dtype=complex)
    free = {}
    for eid, vals in f.items():
        y = np.asarray(grids[eid], dtype=float)
        vals = np.asarray(vals, dtype=complex)
        if vals.shape != y.shape:
            raise ValueError(f"source on {eid!r} does not match its grid")
        fhat += simpson(ctx.psi_col(eid, y) * vals[:, None], x=y, axis=0)
        e = ctx.g.edge(eid)
        z = ctx._z(e)
        s = 1.0 if e.sign == "+" else -1.0
        left = _cumulative(np.exp(-1j * z * y) * vals, y)
        right_c = _cumulative(np.exp(1j * z * y) * vals, y)
        right = right_c[-1] - right_c
        free[eid] = s * 0.5j / z * (np.exp(1j * z * y) * left + np.exp(-1j * z * y) * right)
    c = ctx._M @ (ctx._JW * fhat)
    out = {}
    for eid, x in grids.items():
        u = ctx.phi_row(eid, x) @ c
        if eid in free:
            u = u + free[eid]
        out[eid] = u
    return out


def boundary_traces(g: MetricGraph, u: dict, grids: dict) -> tuple[np.ndarray, np.ndarray]:
    """Boundary values and inward derivatives from second-order one-sided differences."""
    idx = g.index
    val = np.zeros(idx.dim, dtype=complex)
    der = np.zeros(idx.dim, dtype=complex)
    for e in g.external_edges + g.internal_edges:
        x, v = np.asarray(grids[e.id]), np.asarray(u[e.id])
        h = x[1] - x[0]
        o = idx.slot(e.id, "origin")
        val[o] = v[0]
        der[o] = (-3 * v[0] + 4 * v[1] - v[2]) / (2 * h)
        if isinstance(e, InternalEdge):
            t = idx.slot(e.id, "terminus")
            val[t] = v[-1]
            der[t] = -(3 * v[-1] - 4 * v[-2] + v[-3]) / (2 * h)
    return val, der


def ode_residual(g: MetricGraph, u: dict, f: dict, grids: dict, energy: complex) -> float:
    """Sup over interior nodes of ``|(tau - lambda) u - f|`` with central differences."""
    worst = 0.0
    for e in g.external_edges + g.internal_edges:
        x, v = np.asarray(grids[e.id]), np.asarray(u[e.id])
        h = x[1] - x[0]
        d2 = (v[2:] - 2 * v[1:-1] + v[:-2]) / (h * h)
        tau = -d2 if e.sign == "+" else d2
        src = np.asarray(f.get(e.id, np.zeros_like(v)))[1:-1]
        worst = max(worst, float(np.max(np.abs(tau - energy * v[1:-1] - src))))
    return worst


def free_traces(ctx: ResolventContext, f: dict, grids: dict) -> tuple[np.ndarray, np.ndarray]:
    """Exact traces of the free part: ``(R+^{-1} J W fhat, -I R+^{-1} J W fhat)``."""
    idx = ctx.g.index
    fhat = np.zeros(idx.dim, dtype=complex)
    for eid, vals in f.items():
        y = np.asarray(grids[eid])
        fhat += simpson(ctx.psi_col(eid, y) * np.asarray(vals)[:, None], x=y, axis=0)
    val = ctx._JW * fhat
    return val, -np.diag(build_I(idx, ctx.params)) * val
