"""Boundary conditions ``A psi + B psi' = 0`` on the boundary space K.

A pair ``(A, B)`` defines a self-adjoint realization iff ``(A|B)`` has full
rank and ``B J A* = A J B*`` with ``J = diag(1_n, -1_m)``.  Two pairs define the
same operator iff ``Ker(A|B)`` agree.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

import numpy as np

from .graph import BoundaryIndex, GraphError, MetricGraph, glue_slot_maps

SYMMETRY_TOL = 1e-10
UNITARY_TOL = 1e-10
RANK_SAFETY = 64.0


class NotSelfAdjointError(ValueError):
    pass


def numerical_rank(M: np.ndarray, scale: float | None = None) -> int:
    """Rank with the threshold ``sigma_max * dim * eps * 64``."""
    s = np.linalg.svd(M, compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0
    dim = max(M.shape)
    thresh = (s[0] if scale is None else scale) * dim * np.finfo(float).eps * RANK_SAFETY
    return int(np.sum(s > thresh))


def signature(index: BoundaryIndex) -> np.ndarray:
    """``J = diag(1_n, -1_m)``."""
    return np.diag(np.asarray(index.slot_signs, dtype=complex))


def symplectic_similarity(index: BoundaryIndex) -> np.ndarray:
    """``H = diag(1_n, 1_m, 1_n, -1_m)`` relating the indefinite form on K^2 to the standard one."""
    j = np.asarray(index.slot_signs, dtype=complex)
    return np.diag(np.concatenate([np.ones(index.dim, dtype=complex), j]))


@dataclass(frozen=True)
class BoundaryConditions:
    A: np.ndarray
    B: np.ndarray
    index: BoundaryIndex

    def __post_init__(self):
        A = np.array(self.A, dtype=complex)
        B = np.array(self.B, dtype=complex)
        d = self.index.dim
        if A.shape != (d, d) or B.shape != (d, d):
            raise ValueError(f"A and B must be {d}x{d}, got {A.shape} and {B.shape}")
        A.setflags(write=False)
        B.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)

    @property
    def J(self) -> np.ndarray:
        return signature(self.index)

    @property
    def AB(self) -> np.ndarray:
        return np.hstack([self.A, self.B])

    def left_multiply(self, G: np.ndarray) -> "BoundaryConditions":
        return BoundaryConditions(G @ self.A, G @ self.B, self.index)

    def to_document(self) -> dict:
        return {"kind": "matrix", "A": _encode(self.A), "B": _encode(self.B)}


@dataclass(frozen=True)
class SelfAdjointReport:
    rank_ok: bool
    symmetry_ok: bool
    rank: int
    rank_residual: float
    symmetry_residual: float

    @property
    def ok(self) -> bool:
        return self.rank_ok and self.symmetry_ok


@dataclass(frozen=True)
class ProjectorForm:
    P: np.ndarray
    L: np.ndarray


def _report(A, B, J, tol) -> SelfAdjointReport:
    d = A.shape[0]
    AB = np.hstack([A, B])
    s = np.linalg.svd(AB, compute_uv=False)
    rank = numerical_rank(AB)
    # smallest of the d leading singular values, relative to the largest
    rank_residual = float(s[d - 1] / s[0]) if s[0] > 0 else 0.0
    scale = (np.linalg.norm(A) + np.linalg.norm(B)) ** 2
    defect = np.linalg.norm(B @ J @ A.conj().T - A @ J @ B.conj().T)
    sym = float(defect / scale) if scale > 0 else float("inf")
    return SelfAdjointReport(rank == d, sym <= tol, rank, rank_residual, sym)


def check_self_adjoint(bc: BoundaryConditions, tol: float = SYMMETRY_TOL) -> SelfAdjointReport:
    return _report(bc.A, bc.B, bc.J, tol)


def check_laplacian_self_adjoint(bc: BoundaryConditions, tol: float = SYMMETRY_TOL) -> SelfAdjointReport:
    """Self-adjointness of ``-Delta(A, B)``, equivalently Krein self-adjointness of ``J T(A, B)``."""
    return _report(bc.A, bc.B, np.eye(bc.index.dim, dtype=complex), tol)


def subspace_equal(bc1: BoundaryConditions, bc2: BoundaryConditions) -> bool:
    """``Ker(A1|B1) == Ker(A2|B2)``, both of dimension ``n+m``."""
    if bc1.A.shape != bc2.A.shape:
        raise ValueError("boundary conditions live on different spaces")
    d = bc1.index.dim
    M1, M2 = bc1.AB, bc2.AB
    if numerical_rank(M1) != d or numerical_rank(M2) != d:
        return False
    n1 = M1 / np.linalg.norm(M1)
    n2 = M2 / np.linalg.norm(M2)
    return numerical_rank(np.vstack([n1, n2])) == d


def from_unitary(U: np.ndarray, index: BoundaryIndex, tol: float = UNITARY_TOL) -> BoundaryConditions:
    U = np.asarray(U, dtype=complex)
    d = index.dim
    if U.shape != (d, d):
        raise ValueError(f"U must be {d}x{d}")
    if np.linalg.norm(U.conj().T @ U - np.eye(d)) > tol:
        raise ValueError("U is not unitary")
    one = np.eye(d)
    return BoundaryConditions(-0.5 * (U - one), (U + one) / 2j @ signature(index), index)


def to_unitary(bc: BoundaryConditions) -> np.ndarray:
    """The unitary ``U`` with ``Ker(A|B) = Ker(-(U-1)/2 | (U+1)J/(2i))``."""
    if not check_self_adjoint(bc).ok:
        raise NotSelfAdjointError("boundary conditions are not self-adjoint")
    A0, B0 = bc.A, bc.B @ bc.J
    return -np.linalg.solve(A0 + 1j * B0, A0 - 1j * B0)


def to_projector_form(bc: BoundaryConditions) -> ProjectorForm:
    """Unique ``(P, L)`` with ``Ker(A|B) = Ker(L + P | P_perp J)``.

    ``P`` projects onto ``Ker(B J)``; ``L`` is the Cayley transform
    ``i (1 - U)(1 + U)^{-1}`` restricted to ``Ran P_perp``.
    """
    U = to_unitary(bc)
    d = bc.index.dim
    BJ = bc.B @ bc.J
    _, s, Vh = np.linalg.svd(BJ)
    rank = int(np.sum(s > s[0] * d * np.finfo(float).eps * RANK_SAFETY)) if s[0] > 0 else 0
    null = Vh[rank:].conj().T
    P = null @ null.conj().T
    Pp = np.eye(d) - P
    L = Pp @ (1j * (np.eye(d) - U) @ np.linalg.inv(np.eye(d) + U + P)) @ Pp
    L = (L + L.conj().T) / 2
    return ProjectorForm(P, L)


def from_projector_form(pf: ProjectorForm, index: BoundaryIndex) -> BoundaryConditions:
    Pp = np.eye(index.dim) - pf.P
    return BoundaryConditions(pf.L + pf.P, Pp @ signature(index), index)


def dirichlet(index: BoundaryIndex) -> BoundaryConditions:
    d = index.dim
    return BoundaryConditions(np.eye(d), np.zeros((d, d)), index)


def neumann(index: BoundaryIndex) -> BoundaryConditions:
    d = index.dim
    return BoundaryConditions(np.zeros((d, d)), np.eye(d), index)


def standard_signed_vertex(deg_plus: int, deg_minus: int) -> tuple[np.ndarray, np.ndarray]:
    """Continuity plus signed derivative balance at one vertex.

    Positive slots come first.  Rows ``0..d-2`` of ``A`` enforce continuity,
    the last row of ``B`` holds ``+1`` on positive and ``-1`` on negative slots.
    """
    d = deg_plus + deg_minus
    if deg_plus < 0 or deg_minus < 0 or d < 1:
        raise ValueError("vertex degree must be at least 1")
    A = np.zeros((d, d))
    B = np.zeros((d, d))
    for r in range(d - 1):
        A[r, r], A[r, r + 1] = 1.0, -1.0
    B[d - 1, :deg_plus] = 1.0
    B[d - 1, deg_plus:] = -1.0
    return A, B


def standard_conditions(g: MetricGraph) -> BoundaryConditions:
    """Assemble ``standard_signed_vertex`` blocks for every vertex of ``g``."""
    idx = g.index
    at_vertex: dict[str, list[int]] = {v: [] for v in g.vertices}
    for e in g.external_edges:
        at_vertex[e.at].append(idx.slot(e.id))
    for e in g.internal_edges:
        at_vertex[e.origin].append(idx.slot(e.id, "origin"))
        at_vertex[e.terminus].append(idx.slot(e.id, "terminus"))
    d = idx.dim
    A = np.zeros((d, d))
    B = np.zeros((d, d))
    row = 0
    for v in g.vertices:
        slots = sorted(at_vertex[v])
        if not slots:
            continue
        signs = [idx.slot_signs[s] for s in slots]
        slots = [s for s, sg in zip(slots, signs) if sg > 0] + [s for s, sg in zip(slots, signs) if sg < 0]
        Av, Bv = standard_signed_vertex(signs.count(1), signs.count(-1))
        A[row:row + len(slots), slots] = Av
        B[row:row + len(slots), slots] = Bv
        row += len(slots)
    return BoundaryConditions(A, B, idx)


def form_invertibility_margin(g: MetricGraph) -> float:
    """``sum a(I+) - sum a(I-)``; the form criterion fails when this vanishes."""
    if not g.is_compact:
        raise GraphError("invertibility margin needs a compact graph")
    return float(sum(e.length for e in g.internals("+")) - sum(e.length for e in g.internals("-")))


def block_diagonal(bc1: BoundaryConditions, bc2: BoundaryConditions, index: BoundaryIndex,
                   map1, map2) -> BoundaryConditions:
    """Place two decoupled sets of conditions on a combined boundary space."""
    d1, d2 = bc1.index.dim, bc2.index.dim
    d = index.dim
    if d1 + d2 != d:
        raise ValueError("slot counts do not add up")
    A = np.zeros((d, d), dtype=complex)
    B = np.zeros((d, d), dtype=complex)
    A[:d1, map1] = bc1.A
    B[:d1, map1] = bc1.B
    A[d1:, map2] = bc2.A
    B[d1:, map2] = bc2.B
    return BoundaryConditions(A, B, index)


# -- documents ---------------------------------------------------------------

def _encode(M: np.ndarray) -> list:
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(M, dtype=complex)]


def _decode(rows) -> np.ndarray:
    try:
        return np.array([[complex(re, im) for re, im in row] for row in rows], dtype=complex)
    except (TypeError, ValueError) as exc:
        raise ValueError(f"complex entries must be [re, im] pairs: {exc}") from exc


def build_conditions(doc: Mapping | str | Path, g: MetricGraph) -> BoundaryConditions:
    if isinstance(doc, Path):
        doc = json.loads(doc.read_text())
    elif isinstance(doc, str):
        doc = json.loads(doc)
    kind = doc.get("kind")
    if kind == "matrix":
        return BoundaryConditions(_decode(doc["A"]), _decode(doc["B"]), g.index)
    if kind == "unitary":
        return from_unitary(_decode(doc["U"]), g.index)
    if kind == "standard_signed_vertices":
        return standard_conditions(g)
    raise ValueError(f"unknown boundary-condition kind {kind!r}")


def unitary_document(U: np.ndarray) -> dict:
    return {"kind": "unitary", "U": _encode(U)}


def glue_conditions(bc1: BoundaryConditions, bc2: BoundaryConditions, g1: MetricGraph, g2: MetricGraph,
                    ident, glued: MetricGraph) -> BoundaryConditions:
    """Conditions on a glued graph: each vertex keeps its own coupling."""
    map1, map2 = glue_slot_maps(g1, g2, ident, glued)
    return block_diagonal(bc1, bc2, glued.index, map1, map2)


def relabel_conditions(bc: BoundaryConditions, index: BoundaryIndex, slot_map) -> BoundaryConditions:
    """Move conditions to a new slot numbering; ``slot_map[j]`` is the new slot of old slot ``j``."""
    d = index.dim
    A = np.zeros((d, d), dtype=complex)
    B = np.zeros((d, d), dtype=complex)
    A[:, slot_map] = bc.A
    B[:, slot_map] = bc.B
    return BoundaryConditions(A, B, index)
