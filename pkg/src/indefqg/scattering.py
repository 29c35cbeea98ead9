"""Scattering matrices on both energy half-lines and their composition under gluing.

Positive energies ``lambda = k^2`` use ``(k, ik)`` and the ``E+ x E+`` block of
the generalized-eigenfunction coefficients; negative energies
``lambda = -kappa^2`` use ``(i kappa, -kappa)`` and the ``E- x E-`` block.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .conditions import BoundaryConditions
from .graph import ExternalEdge, InternalEdge, MetricGraph
from .secular import ResonanceError, SpectralParams, chi_coefficients

CRITICAL_RCOND = 1e-10

GENERALIZED_BRANCHES = {
    "positive": SpectralParams.positive_energy,
    "positive_conjugate": SpectralParams.positive_energy_conjugate,
    "negative": SpectralParams.negative_energy,
    "negative_conjugate": SpectralParams.negative_energy_conjugate,
}


class CriticalSetError(ArithmeticError):
    """A matrix inverted by the star product is numerically singular at this ``k``."""


@dataclass(frozen=True)
class AcSpectrumInfo:
    intervals: tuple  # ((lo, hi), multiplicity)

    def multiplicity(self, lam: float) -> int:
        return sum(m for (lo, hi), m in self.intervals if lo < lam < hi)


def ac_spectrum(g: MetricGraph) -> AcSpectrumInfo:
    pieces = []
    if g.externals("-"):
        pieces.append(((-math.inf, 0.0), len(g.externals("-"))))
    if g.externals("+"):
        pieces.append(((0.0, math.inf), len(g.externals("+"))))
    return AcSpectrumInfo(tuple(pieces))


@dataclass(frozen=True)
class ScatteringData:
    """External restriction of the coefficient matrix at ``(k, ik)``.

    Rows and columns follow ``edges`` (positive externals first).
    """

    k: float
    chi_EE: np.ndarray
    edges: tuple[str, ...]
    signs: tuple[str, ...]

    def _pos(self, sign):
        return [i for i, s in enumerate(self.signs) if s == sign]

    def block(self, row_sign: str, col_sign: str) -> np.ndarray:
        return self.chi_EE[np.ix_(self._pos(row_sign), self._pos(col_sign))]

    @property
    def pp(self):
        return self.block("+", "+")

    @property
    def pm(self):
        return self.block("+", "-")

    @property
    def mp(self):
        return self.block("-", "+")

    @property
    def mm(self):
        return self.block("-", "-")


def scattering_data(bc: BoundaryConditions, g: MetricGraph, k: float) -> ScatteringData:
    chi = chi_coefficients(bc, g, None, SpectralParams.positive_energy(k))
    order = g.external_order()
    rows = [g.index.slot(e.id) for e in order]
    return ScatteringData(float(k), chi[rows], tuple(e.id for e in order), tuple(e.sign for e in order))


@dataclass(frozen=True)
class ScatteringMatrix:
    lam: float
    S: np.ndarray
    edges: tuple[str, ...]
    unitarity_residual: float


def unitarity_residual(S: np.ndarray) -> float:
    return float(np.linalg.norm(S.conj().T @ S - np.eye(S.shape[0]), 2)) if S.size else 0.0


def scattering_matrix(bc: BoundaryConditions, g: MetricGraph, lam: float) -> ScatteringMatrix:
    if lam == 0:
        raise ValueError("the scattering matrix is not defined at zero energy")
    sign = "+" if lam > 0 else "-"
    edges = g.externals(sign)
    if not edges:
        raise ValueError(f"no {sign} external edges: no scattering on this half-line")
    root = math.sqrt(abs(lam))
    params = SpectralParams.positive_energy(root) if lam > 0 else SpectralParams.negative_energy_conjugate(root)
    chi = chi_coefficients(bc, g, None, params)
    order = g.external_order()
    cols = [j for j, e in enumerate(order) if e.sign == sign]
    rows = [g.index.slot(order[j].id) for j in cols]
    S = chi[np.ix_(rows, cols)]
    return ScatteringMatrix(float(lam), S, tuple(e.id for e in edges), unitarity_residual(S))


def _eigenfunction_terms(bc, g, incoming, branch, k):
    if branch not in GENERALIZED_BRANCHES:
        raise ValueError(f"branch must be one of {sorted(GENERALIZED_BRANCHES)}")
    ids = [e.id for e in g.external_order()]
    if incoming not in ids:
        raise ValueError(f"{incoming!r} is not an external edge")
    params = GENERALIZED_BRANCHES[branch](k)
    col = chi_coefficients(bc, g, None, params)[:, ids.index(incoming)]
    idx = g.index
    terms = {}
    for e in g.external_edges + g.internal_edges:
        z = params.for_sign(1 if e.sign == "+" else -1)
        if isinstance(e, ExternalEdge):
            pairs = [(col[idx.slot(e.id)], z)]
            if e.id == incoming:
                pairs.append((1.0, -z))
        else:
            pairs = [(col[idx.slot(e.id, "origin")], z), (col[idx.slot(e.id, "terminus")], -z)]
        terms[e.id] = pairs
    return params, terms


def _evaluate(pairs, x, order=0):
    return sum(c * (1j * w) ** order * np.exp(1j * w * x) for c, w in pairs)


def generalized_eigenfunction(bc: BoundaryConditions, g: MetricGraph, incoming: str, branch: str,
                              k: float, points: dict) -> dict:
    """Values of the generalized eigenfunction with an incoming wave on edge ``incoming``.

    ``points`` maps edge ids to coordinate arrays.  On edge ``incoming`` the term
    ``e^{-izx}`` is added to the outgoing part ``chi e^{izx}``.
    """
    _, terms = _eigenfunction_terms(bc, g, incoming, branch, k)
    return {eid: _evaluate(terms[eid], np.asarray(x, dtype=float)) for eid, x in points.items()}


def eigenfunction_defect(bc: BoundaryConditions, g: MetricGraph, incoming: str, branch: str, k: float,
                         samples: int = 64, support: float = 5.0) -> tuple[float, float]:
    """``(ODE defect, boundary defect)`` of a generalized eigenfunction, relative to its size.

    Derivatives are exact, so both numbers measure only rounding in the coefficients.
    """
    params, terms = _eigenfunction_terms(bc, g, incoming, branch, k)
    lam = params.energy
    ode, scale = 0.0, 0.0
    for e in g.external_edges + g.internal_edges:
        x = np.linspace(0.0, getattr(e, "length", support), samples)
        u = _evaluate(terms[e.id], x)
        d2 = _evaluate(terms[e.id], x, 2)
        tau = -d2 if e.sign == "+" else d2
        ode = max(ode, float(np.max(np.abs(tau - lam * u))))
        scale = max(scale, float(np.max(np.abs(u))), float(np.max(np.abs(d2))))
    idx = g.index
    val = np.zeros(idx.dim, dtype=complex)
    der = np.zeros(idx.dim, dtype=complex)
    for e in g.external_edges + g.internal_edges:
        o = idx.slot(e.id, "origin")
        val[o] = _evaluate(terms[e.id], 0.0)
        der[o] = _evaluate(terms[e.id], 0.0, 1)
        if isinstance(e, InternalEdge):
            t = idx.slot(e.id, "terminus")
            val[t] = _evaluate(terms[e.id], e.length)
            der[t] = -_evaluate(terms[e.id], e.length, 1)
    bnd = np.abs(bc.A @ val + bc.B @ der).max() / max(1.0, np.abs(val).max(), np.abs(der).max())
    return ode / max(scale, 1.0), float(bnd)


def _solve_checked(M: np.ndarray, rhs: np.ndarray, what: str) -> np.ndarray:
    if M.size:
        with np.errstate(all="ignore"):
            c = np.linalg.cond(M, 1)
        if not np.isfinite(c) or 1.0 / c < CRITICAL_RCOND:
            raise CriticalSetError(f"{what} is singular (critical set)")
    return np.linalg.solve(M, rhs)


def _propagation(signs: Sequence[str], lengths: Sequence[float], k: float) -> np.ndarray:
    """``e^{iza}`` on the new internal edges at ``(k, ik)``: ``e^{ika}`` or ``e^{-ka}``."""
    return np.array([np.exp(1j * k * a) if s == "+" else np.exp(-k * a) for s, a in zip(signs, lengths)])


def star_product_glue(d1: ScatteringData, d2: ScatteringData, lengths: Sequence[float], k: float | None = None):
    """Scattering matrix of the graph obtained by joining every negative external edge
    of the first graph to the matching negative external edge of the second.

    Returns ``(S, edges)`` with ``S`` over ``E+ of d1`` followed by ``E+ of d2``.
    """
    k = d1.k if k is None else k
    if not (math.isclose(d1.k, k) and math.isclose(d2.k, k)):
        raise ValueError("scattering data were computed at different k")
    c1pp, c1pm, c1mp, c1mm = d1.pp, d1.pm, d1.mp, d1.mm
    c2pp, c2pm, c2mp, c2mm = d2.pp, d2.pm, d2.mp, d2.mm
    if c1mm.shape != c2mm.shape or c1mm.shape[0] != len(lengths):
        raise ValueError("negative blocks and length list must have matching sizes")
    E = np.diag(np.exp(-k * np.asarray(lengths, dtype=float)))
    one = np.eye(E.shape[0])
    L1 = c1mm @ E @ c2mm @ E  # loop starting on side 1
    L2 = c2mm @ E @ c1mm @ E
    b1 = _solve_checked(one - L1, c1mp, "1 - chi1 E chi2 E")
    b2 = _solve_checked(one - L2, c2mp, "1 - chi2 E chi1 E")
    s11 = c1pp + c1pm @ E @ c2mm @ E @ b1
    s21 = c2pm @ E @ b1
    s12 = c1pm @ E @ b2
    s22 = c2pp + c2pm @ E @ c1mm @ E @ b2
    S = np.block([[s11, s12], [s21, s22]])
    p1 = [e for e, s in zip(d1.edges, d1.signs) if s == "+"]
    p2 = [e for e, s in zip(d2.edges, d2.signs) if s == "+"]
    return S, tuple(p1 + p2)


def close_edges(d: ScatteringData, pairs: Sequence[tuple[str, str]], lengths: Sequence[float]):
    """Scattering data after joining external edge pairs ``(p, q)`` of one graph.

    With ``t = e^{iza}`` on each new edge and ``P`` swapping partners, the open
    channels see ``S_oo + S_oc t P (1 - S_cc t P)^{-1} S_co``.  Returns
    ``(S, remaining edge ids)``; ``S`` may be empty when every edge is consumed.
    """
    sign_of = dict(zip(d.edges, d.signs))
    consumed = [e for pq in pairs for e in pq]
    if len(set(consumed)) != len(consumed):
        raise ValueError("an edge appears in two pairs")
    for p, q in pairs:
        if sign_of[p] != sign_of[q]:
            raise ValueError(f"cannot join edges of different sign: {p!r}, {q!r}")
    pos = {e: i for i, e in enumerate(d.edges)}
    c = [pos[e] for e in consumed]
    o = [i for i, e in enumerate(d.edges) if e not in consumed]
    S = d.chi_EE
    tP = _loop_matrix([sign_of[p] for p, _ in pairs], lengths, d.k)
    inner = _solve_checked(np.eye(len(c)) - S[np.ix_(c, c)] @ tP, S[np.ix_(c, o)], "1 - S_cc t P")
    S_new = S[np.ix_(o, o)] + S[np.ix_(o, c)] @ tP @ inner
    return S_new, tuple(d.edges[i] for i in o)


def _loop_matrix(signs, lengths, k) -> np.ndarray:
    t = _propagation(signs, lengths, k)
    n = len(t)
    M = np.zeros((2 * n, 2 * n), dtype=complex)
    for j in range(n):
        M[2 * j, 2 * j + 1] = M[2 * j + 1, 2 * j] = t[j]
    return M


def loop_determinant(d: ScatteringData, pairs, lengths) -> complex:
    """``det(1 - S_cc t P)``; its zeros in ``k`` are the poles of the joined data."""
    consumed = [e for pq in pairs for e in pq]
    pos = {e: i for i, e in enumerate(d.edges)}
    c = [pos[e] for e in consumed]
    sign_of = dict(zip(d.edges, d.signs))
    tP = _loop_matrix([sign_of[p] for p, _ in pairs], lengths, d.k)
    return complex(np.linalg.det(np.eye(len(c)) - d.chi_EE[np.ix_(c, c)] @ tP))


def positive_edge_glue(d: ScatteringData, pair: tuple[str, str], length: float):
    """Join two positive external edges of one graph by an edge of the given length."""
    sign_of = dict(zip(d.edges, d.signs))
    if any(sign_of.get(e) != "+" for e in pair):
        raise ValueError("both edges must be positive external edges")
    return close_edges(d, [tuple(pair)], [length])


def direct_sum(d1: ScatteringData, d2: ScatteringData, prefix: tuple[str, str] = ("", "")) -> ScatteringData:
    n1 = len(d1.edges)
    chi = np.zeros((n1 + len(d2.edges),) * 2, dtype=complex)
    chi[:n1, :n1] = d1.chi_EE
    chi[n1:, n1:] = d2.chi_EE
    edges = tuple(prefix[0] + e for e in d1.edges) + tuple(prefix[1] + e for e in d2.edges)
    return ScatteringData(d1.k, chi, edges, d1.signs + d2.signs)


def sweep(bc: BoundaryConditions, g: MetricGraph, lams: Sequence[float]):
    """``(lambda, S or None)`` per sample; ``None`` marks resonances or critical points."""
    out = []
    for lam in lams:
        try:
            out.append((float(lam), scattering_matrix(bc, g, float(lam))))
        except ResonanceError:
            out.append((float(lam), None))
    return out

