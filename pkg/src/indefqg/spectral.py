"""Eigenvalues, resonances, zero modes and counting functions.

Positive eigenvalues ``k^2`` are real zeros ``k > 0`` of ``det Z(k, ik)``;
negative eigenvalues ``-kappa^2`` are zeros ``kappa > 0`` of ``det Z(i kappa, kappa)``.
A zero is an eigenvalue when some kernel vector of ``Z`` vanishes on the
external slots whose Ansatz does not decay (``E+`` resp. ``E-``); otherwise it
is only a resonance.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .conditions import BoundaryConditions
from .graph import GraphError, MetricGraph
from .secular import SpectralParams, batch_det_scaled, build_XY_batch

BRANCHES = ("positive", "negative")
BRACKET_LEVEL = 1e-2
ROOT_TOL = 1e-9
NULLITY_TOL = 1e-7
MAX_HALVINGS = 3


@dataclass(frozen=True)
class Eigenvalue:
    branch: str
    lam: float
    root: float
    multiplicity: int
    residual: float
    at_boundary: bool = False


@dataclass(frozen=True)
class Resonance:
    branch: str
    root: float
    residual: float
    external: dict
    is_eigenvalue: bool


@dataclass
class SpectrumReport:
    positive_eigenvalues: list = field(default_factory=list)
    negative_eigenvalues: list = field(default_factory=list)
    zero_dimension: int = 0
    resonances: list = field(default_factory=list)
    scan_range: tuple = (0.0, 0.0)
    step: float = 0.0

    def rows(self):
        yield from self.negative_eigenvalues[::-1]
        if self.zero_dimension:
            yield Eigenvalue("zero", 0.0, 0.0, self.zero_dimension, 0.0)
        yield from self.positive_eigenvalues


def _check_branch(branch: str) -> None:
    if branch not in BRANCHES:
        raise ValueError(f"branch must be one of {BRANCHES}, got {branch!r}")


def branch_params(branch: str, k: complex) -> SpectralParams:
    return SpectralParams.positive_energy(k) if branch == "positive" else SpectralParams.negative_energy(k)


def _batch_params(branch, ks):
    ks = np.asarray(ks, dtype=complex)
    return (ks, 1j * ks) if branch == "positive" else (1j * ks, ks)


def _g(bc, g, branch, ks) -> np.ndarray:
    return batch_det_scaled(bc, g, *_batch_params(branch, ks))


def default_step(g: MetricGraph) -> float:
    """Grid step small enough that a simple real zero leaves a grid value below the bracket level.

    Each internal edge contributes two columns whose phase derivative is bounded
    by its length, so ``|d/dk det_scaled| <= 2 sum(a)`` roughly.
    """
    total = sum(e.length for e in g.internal_edges)
    return min(0.05, 0.8 * BRACKET_LEVEL / max(total, 1e-3))


def _scaled_Z(bc, g, branch, k) -> np.ndarray:
    X, Y, _ = build_XY_batch(g, *_batch_params(branch, [k]), scaled=True)
    Z = bc.A @ X[0] + bc.B @ Y[0]
    norms = np.linalg.norm(Z, axis=0)
    return Z / np.where(norms == 0, 1.0, norms)


def _local_minima(absg: np.ndarray) -> list[int]:
    out = []
    n = absg.size
    for i in range(n):
        left = absg[i - 1] if i > 0 else np.inf
        right = absg[i + 1] if i < n - 1 else np.inf
        if absg[i] <= left and absg[i] <= right and absg[i] < BRACKET_LEVEL:
            out.append(i)
    return out


def _secant(f, k0, k1, lo, hi, maxiter=80):
    g0, g1 = f(k0), f(k1)
    for _ in range(maxiter):
        if g1 == g0:
            break
        k2 = k1 - (g1 * (k1 - k0) / (g1 - g0)).real
        k2 = min(max(k2, lo), hi)
        k0, g0 = k1, g1
        k1, g1 = k2, f(k2)
        if abs(k1 - k0) <= 4 * np.finfo(float).eps * max(1.0, abs(k1)):
            break
    return k1, abs(g1)


def _refine(bc, g, branch, lo, hi, guess):
    f = lambda k: complex(_g(bc, g, branch, [k])[0])  # noqa: E731
    width = hi - lo
    k, res = _secant(f, guess, guess + 0.25 * width, lo, hi)
    if res > ROOT_TOL:
        # secant wandered off or stalled on a flat double zero: fall back to golden section
        opt = minimize_scalar(lambda x: abs(f(x)), bounds=(lo, hi), method="bounded",
                              options={"xatol": 1e-14 * max(1.0, hi)})
        k, res = _secant(f, opt.x, opt.x + 1e-6 * width, lo, hi)
        if res > ROOT_TOL and abs(f(opt.x)) < res:
            k, res = opt.x, abs(f(opt.x))
    if res > ROOT_TOL:
        return None
    # polish on the smallest singular value: sharpens clusters of coalescing zeros
    smin = lambda x: np.linalg.svd(_scaled_Z(bc, g, branch, x), compute_uv=False)[-1]  # noqa: E731
    delta = 1e-6 * max(1.0, abs(k))
    opt = minimize_scalar(smin, bounds=(max(lo, k - delta), min(hi, k + delta)), method="bounded",
                          options={"xatol": 1e-15 * max(1.0, abs(k))})
    if abs(f(opt.x)) <= res:
        k, res = opt.x, abs(f(opt.x))
    return float(k), float(res)


def det_roots(bc: BoundaryConditions, g: MetricGraph, branch: str, k_range, step: float | None = None):
    """Real zeros of the scaled determinant on ``k_range``: list of ``(root, residual, at_boundary)``."""
    _check_branch(branch)
    kmin, kmax = map(float, k_range)
    if not (0 < kmin < kmax):
        raise ValueError("k_range must satisfy 0 < k_min < k_max")
    step = default_step(g) if step is None else float(step)
    if step <= 0:
        raise ValueError("grid step must be positive")
    n = max(2, int(math.ceil((kmax - kmin) / step)) + 1)
    ks = np.linspace(kmin, kmax, n)
    absg = np.abs(_g(bc, g, branch, ks))
    roots: list[tuple[float, float, bool]] = []
    for i in _local_minima(absg):
        lo, hi = ks[max(i - 1, 0)], ks[min(i + 1, n - 1)]
        fine = np.linspace(lo, hi, 2 * 2 ** MAX_HALVINGS + 1)
        fabs = np.abs(_g(bc, g, branch, fine))
        for j in _local_minima(fabs) or [int(np.argmin(fabs))]:
            flo, fhi = fine[max(j - 1, 0)], fine[min(j + 1, fine.size - 1)]
            got = _refine(bc, g, branch, flo, fhi, fine[j])
            if got is None:
                continue
            k, res = got
            if any(abs(k - r) <= 1e-7 * max(1.0, k) for r, _, _ in roots):
                continue
            edge = min(k - kmin, kmax - k) <= 1e-9 * max(1.0, k)
            roots.append((k, res, edge))
    roots.sort()
    return roots


def _nullity(M: np.ndarray, tol: float) -> tuple[int, np.ndarray]:
    _, s, Vh = np.linalg.svd(M)
    if s.size == 0 or s[0] == 0:
        return M.shape[1], Vh.conj().T
    # pad: a tall matrix has at most ncols singular values
    null = int(np.sum(s <= tol * s[0])) + (M.shape[1] - s.size)
    return null, Vh[M.shape[1] - null:].conj().T


def _side_rows(g: MetricGraph, branch: str) -> np.ndarray:
    """Unit rows selecting the external slots that must vanish for square integrability."""
    sign = "+" if branch == "positive" else "-"
    idx = g.index
    slots = [idx.slot(e.id) for e in g.externals(sign)]
    R = np.zeros((len(slots), idx.dim))
    for r, s in enumerate(slots):
        R[r, s] = 1.0
    return R


def root_nullities(bc, g, branch, k) -> tuple[int, int, np.ndarray]:
    """``(nullity of Z, nullity with the side condition, kernel basis of Z)``."""
    Z = _scaled_Z(bc, g, branch, k)
    full, basis = _nullity(Z, NULLITY_TOL)
    side = _side_rows(g, branch)
    if side.shape[0] == 0:
        return full, full, basis
    constrained, _ = _nullity(np.vstack([Z, side]), NULLITY_TOL)
    return full, constrained, basis


def find_eigenvalues(bc: BoundaryConditions, g: MetricGraph, branch: str, k_range,
                     step: float | None = None) -> list[Eigenvalue]:
    out = []
    for k, res, edge in det_roots(bc, g, branch, k_range, step):
        _, mult, _ = root_nullities(bc, g, branch, k)
        if mult == 0:
            continue
        lam = k * k if branch == "positive" else -k * k
        out.append(Eigenvalue(branch, lam, k, mult, res, edge))
    return out


def find_resonances(bc: BoundaryConditions, g: MetricGraph, branch: str, k_range,
                    step: float | None = None) -> list[Resonance]:
    out = []
    order = g.external_order()
    idx = g.index
    for k, res, _ in det_roots(bc, g, branch, k_range, step):
        full, constrained, basis = root_nullities(bc, g, branch, k)
        v = basis[:, -1] if basis.shape[1] else np.zeros(idx.dim)
        ext = {e.id: complex(v[idx.slot(e.id)]) for e in order}
        out.append(Resonance(branch, k, res, ext, constrained > 0))
    return out


def zero_mode_matrices(g: MetricGraph) -> tuple[np.ndarray, np.ndarray]:
    """``X0, Y0`` from the affine Ansatz ``alpha + beta x`` on internal edges (zero on externals)."""
    idx = g.index
    d = idx.dim
    X0 = np.zeros((d, d))
    Y0 = np.zeros((d, d))
    for e in g.internal_edges:
        o, t = idx.slot(e.id, "origin"), idx.slot(e.id, "terminus")
        X0[o, o] = 1.0
        X0[t, o], X0[t, t] = 1.0, e.length
        Y0[o, t] = 1.0
        Y0[t, t] = -1.0
    return X0, Y0


def zero_mode_dimension(bc: BoundaryConditions, g: MetricGraph, tol: float = 1e-9) -> int:
    X0, Y0 = zero_mode_matrices(g)
    Z0 = bc.A @ X0 + bc.B @ Y0
    idx = g.index
    ext = np.zeros((len(g.external_edges), idx.dim))
    for r, e in enumerate(g.external_edges):
        ext[r, idx.slot(e.id)] = 1.0
    M = np.vstack([Z0, ext])
    if not M.any():
        return idx.dim - len(g.external_edges)
    null, _ = _nullity(M, tol)
    return null


def spectrum(bc: BoundaryConditions, g: MetricGraph, k_range, step: float | None = None,
             branches=BRANCHES, with_resonances: bool = False) -> SpectrumReport:
    step = default_step(g) if step is None else step
    rep = SpectrumReport(scan_range=tuple(map(float, k_range)), step=float(step))
    for b in branches:
        ev = find_eigenvalues(bc, g, b, k_range, step)
        if b == "positive":
            rep.positive_eigenvalues = ev
        else:
            rep.negative_eigenvalues = ev
        if with_resonances:
            rep.resonances += find_resonances(bc, g, b, k_range, step)
    rep.zero_dimension = zero_mode_dimension(bc, g)
    return rep


@dataclass(frozen=True)
class CountingResult:
    branch: str
    lambdas: np.ndarray
    counts: np.ndarray
    weyl_slope: float
    expected_slope: float

    @property
    def relative_error(self) -> float:
        if self.expected_slope == 0:
            return abs(self.weyl_slope)
        return abs(self.weyl_slope / self.expected_slope - 1.0)


def counting_function(bc: BoundaryConditions, g: MetricGraph, branch: str, lam_max: float,
                      step: float | None = None, samples: int = 200, k_min: float = 1e-3) -> CountingResult:
    """``N(lambda)``: eigenvalues of the branch with ``|lambda| <= lam``, multiplicities included.

    Returns the Weyl slope ``N(lam_max) pi / sqrt(lam_max)`` next to the sum of
    same-sign internal lengths it should approach.
    """
    _check_branch(branch)
    sign = "+" if branch == "positive" else "-"
    if g.externals(sign):
        raise GraphError(f"counting on the {branch} branch needs a graph without {sign} external edges")
    kmax = math.sqrt(lam_max)
    ev = find_eigenvalues(bc, g, branch, (k_min, kmax), step)
    roots = np.array([e.root for e in ev])
    mult = np.array([e.multiplicity for e in ev], dtype=int)
    lams = np.linspace(lam_max / samples, lam_max, samples)
    counts = np.array([int(mult[roots * roots <= lam].sum()) for lam in lams])
    expected = float(sum(e.length for e in g.internals(sign)))
    slope = counts[-1] * math.pi / kmax
    return CountingResult(branch, lams, counts, float(slope), expected)
