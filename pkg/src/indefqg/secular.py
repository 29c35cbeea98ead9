"""Parameter-dependent matrices of the secular equation.

On every edge the Ansatz is ``alpha e^{izx} + beta e^{-izx}`` (internal) or
``s e^{izx}`` (external), with ``z = z_plus`` on positive and ``z = z_minus``
on negative edges.  Boundary values ``psi(0), psi(a)`` and inward derivatives
``psi'(0), -psi'(a)`` of the Ansatz give ``X`` and ``Y``; the secular matrix
is ``Z = A X + B Y``.

Large ``|Im z| a`` makes ``e^{-iza}`` overflow.  The ``*_scaled`` variants
divide each internal coefficient column by ``max(1, |e^{+-iza}|)`` and track
the dropped factor in log form, so determinants and solves stay finite.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .conditions import BoundaryConditions, signature
from .graph import BoundaryIndex, MetricGraph

SINGULAR_RCOND = 1e3 * np.finfo(float).eps


class PoleError(ArithmeticError):
    """``A + B I`` is singular: the coefficient matrix has a pole here."""


class ResonanceError(ArithmeticError):
    """``Z`` is numerically singular at the requested parameters."""

    def __init__(self, message: str, params: "SpectralParams | None" = None):
        super().__init__(message)
        self.params = params


@dataclass(frozen=True)
class SpectralParams:
    z_plus: complex
    z_minus: complex

    def __post_init__(self):
        zp, zm = complex(self.z_plus), complex(self.z_minus)
        if zp == 0 or zm == 0:
            raise ValueError("spectral parameters must be nonzero")
        object.__setattr__(self, "z_plus", zp)
        object.__setattr__(self, "z_minus", zm)

    @classmethod
    def positive_energy(cls, k: complex) -> "SpectralParams":
        return cls(k, 1j * k)

    @classmethod
    def positive_energy_conjugate(cls, k: complex) -> "SpectralParams":
        return cls(-k, 1j * k)

    @classmethod
    def negative_energy(cls, kappa: complex) -> "SpectralParams":
        return cls(1j * kappa, kappa)

    @classmethod
    def negative_energy_conjugate(cls, kappa: complex) -> "SpectralParams":
        return cls(1j * kappa, -kappa)

    @classmethod
    def upper(cls, k: complex) -> "SpectralParams":
        """Resolvent branch for ``k`` in the open first quadrant."""
        return cls(k, 1j * k)

    @classmethod
    def lower(cls, k: complex) -> "SpectralParams":
        """Resolvent branch for ``k`` in the open fourth quadrant."""
        return cls(k, -1j * k)

    def for_sign(self, sign: int) -> complex:
        return self.z_plus if sign > 0 else self.z_minus

    def negated(self) -> "SpectralParams":
        return SpectralParams(-self.z_plus, -self.z_minus)

    @property
    def energy(self) -> complex:
        return self.z_plus ** 2


def slot_z(index: BoundaryIndex, params: SpectralParams) -> np.ndarray:
    return np.array([params.for_sign(s) for s in index.slot_signs], dtype=complex)


def _as_batch(zp, zm) -> tuple[np.ndarray, np.ndarray]:
    zp = np.atleast_1d(np.asarray(zp, dtype=complex))
    zm = np.atleast_1d(np.asarray(zm, dtype=complex))
    return np.broadcast_arrays(zp, zm)


def _edge_blocks(g: MetricGraph):
    """(slot, z-selector) for externals and (origin, terminus, length, selector) for internals."""
    idx = g.index
    ext = [(idx.slot(e.id), e.sign == "+") for e in g.external_edges]
    internal = [(idx.slot(e.id, "origin"), idx.slot(e.id, "terminus"), e.length, e.sign == "+")
                for e in g.internal_edges]
    return ext, internal


def build_XY_batch(g: MetricGraph, zp, zm, scaled: bool = True):
    """Stacked ``X, Y`` of shape ``(N, d, d)`` plus the log of the dropped column factors.

    With ``scaled=False`` the log factor is zero and entries are exact (may overflow).
    """
    zp, zm = _as_batch(zp, zm)
    N = zp.shape[0]
    d = g.index.dim
    X = np.zeros((N, d, d), dtype=complex)
    Y = np.zeros((N, d, d), dtype=complex)
    logscale = np.zeros(N)
    ext, internal = _edge_blocks(g)
    for s, plus in ext:
        z = zp if plus else zm
        X[:, s, s] = 1.0
        Y[:, s, s] = 1j * z
    for o, t, a, plus in internal:
        z = zp if plus else zm
        za = z * a
        # |e^{iza}| = e^{-Im za};  scale column o by e^{-max(0,-Im za)}, column t by e^{-max(0,Im za)}
        lo = np.maximum(0.0, -za.imag) if scaled else np.zeros(N)
        lt = np.maximum(0.0, za.imag) if scaled else np.zeros(N)
        co, ct = np.exp(-lo), np.exp(-lt)
        ep = np.exp(1j * za - lo)
        em = np.exp(-1j * za - lt)
        X[:, o, o], X[:, o, t] = co, ct
        X[:, t, o], X[:, t, t] = ep, em
        Y[:, o, o], Y[:, o, t] = 1j * z * co, -1j * z * ct
        Y[:, t, o], Y[:, t, t] = -1j * z * ep, 1j * z * em
        logscale += lo + lt
    return X, Y, logscale


def column_scales(g: MetricGraph, params: SpectralParams) -> np.ndarray:
    """Diagonal ``D`` with ``Z_scaled = Z D``."""
    D = np.ones(g.index.dim)
    for o, t, a, plus in _edge_blocks(g)[1]:
        za = (params.z_plus if plus else params.z_minus) * a
        D[o] = np.exp(-max(0.0, -za.imag))
        D[t] = np.exp(-max(0.0, za.imag))
    return D


def build_XY(g: MetricGraph, index: BoundaryIndex | None, params: SpectralParams):
    X, Y, _ = build_XY_batch(g, params.z_plus, params.z_minus, scaled=False)
    return X[0], Y[0]


def build_I(index: BoundaryIndex, params: SpectralParams) -> np.ndarray:
    return np.diag(1j * slot_z(index, params))


def build_W(index: BoundaryIndex, params: SpectralParams) -> np.ndarray:
    return np.diag(0.5j / slot_z(index, params))


def build_RT(g: MetricGraph, index: BoundaryIndex | None, params: SpectralParams):
    """Closed forms of ``R+``, ``R-`` and ``T = R- R+^{-1}``."""
    d = g.index.dim
    Rp = np.eye(d, dtype=complex)
    Rm = np.zeros((d, d), dtype=complex)
    T = np.zeros((d, d), dtype=complex)
    for o, t, a, plus in _edge_blocks(g)[1]:
        e = np.exp(1j * (params.z_plus if plus else params.z_minus) * a)
        Rp[t, t] = 1.0 / e
        Rm[o, t], Rm[t, o] = 1.0, e
        T[o, t], T[t, o] = e, e
    return Rp, Rm, T


def _rcond(M: np.ndarray) -> float:
    if M.size == 0:
        return 1.0
    with np.errstate(all="ignore"):
        c = np.linalg.cond(M, 1)
    return 0.0 if not np.isfinite(c) else 1.0 / c


def batch_det_scaled(bc: BoundaryConditions, g: MetricGraph, zp, zm) -> np.ndarray:
    """Hadamard-normalized determinant of the column-scaled ``Z``.

    ``|value| <= 1`` always, with equality iff the scaled columns are orthogonal.
    The zero set is that of ``det Z``.
    """
    X, Y, _ = build_XY_batch(g, zp, zm, scaled=True)
    Z = bc.A @ X + bc.B @ Y
    norms = np.linalg.norm(Z, axis=1)  # column norms, shape (N, d)
    norms = np.where(norms == 0, 1.0, norms)
    return np.linalg.det(Z / norms[:, None, :])


def det_scaled(bc: BoundaryConditions, g: MetricGraph, params: SpectralParams) -> complex:
    return complex(batch_det_scaled(bc, g, params.z_plus, params.z_minus)[0])


def secular_matrix(bc: BoundaryConditions, g: MetricGraph, params: SpectralParams):
    """``(Z, det Z, log det Z)``.

    ``log det Z`` is the complex log computed from the scaled matrix, valid even
    when ``det Z`` itself overflows (then ``det Z`` is reported as ``inf``).
    """
    with np.errstate(over="ignore", invalid="ignore"):
        X, Y = build_XY(g, None, params)
        Z = bc.A @ X + bc.B @ Y
    Xs, Ys, logscale = build_XY_batch(g, params.z_plus, params.z_minus, scaled=True)
    sign, logabs = np.linalg.slogdet(bc.A @ Xs[0] + bc.B @ Ys[0])
    logdet = (np.log(sign) if sign != 0 else -np.inf) + logabs + logscale[0]
    with np.errstate(over="ignore"):
        det = complex(np.exp(logdet)) if np.isfinite(logdet.real) else 0j
    return Z, det, complex(logdet)


@dataclass(frozen=True)
class CoefficientMatrix:
    Cm: np.ndarray
    rcond: float
    n: int

    @property
    def pp(self):
        return self.Cm[: self.n, : self.n]

    @property
    def pm(self):
        return self.Cm[: self.n, self.n:]

    @property
    def mp(self):
        return self.Cm[self.n:, : self.n]

    @property
    def mm(self):
        return self.Cm[self.n:, self.n:]


def coefficient_matrix(bc: BoundaryConditions, index: BoundaryIndex, params: SpectralParams) -> CoefficientMatrix:
    I = build_I(bc.index, params)
    M = bc.A + bc.B @ I
    rc = _rcond(M)
    if rc < SINGULAR_RCOND:
        raise PoleError(f"A + B I is singular at {params} (rcond {rc:.3g})")
    return CoefficientMatrix(-np.linalg.solve(M, bc.A - bc.B @ I), rc, bc.index.n)


def injection(g: MetricGraph) -> np.ndarray:
    """``E``: column j has a 1 in the slot of the j-th external edge (E+ first)."""
    idx = g.index
    order = g.external_order()
    E = np.zeros((idx.dim, len(order)))
    for j, e in enumerate(order):
        E[idx.slot(e.id), j] = 1.0
    return E


def transfer_scaled(bc: BoundaryConditions, g: MetricGraph, params: SpectralParams):
    """``(D, M)`` with the transform ``-Z^{-1}(A - B I) = D M``; raises on singular ``Z``."""
    Xs, Ys, _ = build_XY_batch(g, params.z_plus, params.z_minus, scaled=True)
    Zs = bc.A @ Xs[0] + bc.B @ Ys[0]
    rc = _rcond(Zs)
    if rc < SINGULAR_RCOND:
        raise ResonanceError(f"Z is singular at {params} (rcond {rc:.3g})", params)
    I = build_I(bc.index, params)
    return column_scales(g, params), -np.linalg.solve(Zs, bc.A - bc.B @ I)


def chi_coefficients(bc: BoundaryConditions, g: MetricGraph, index: BoundaryIndex | None,
                     params: SpectralParams) -> np.ndarray:
    """Coefficients of the generalized eigenfunctions, one column per external edge."""
    D, M = transfer_scaled(bc, g, params)
    return D[:, None] * (M @ injection(g))


@dataclass(frozen=True)
class SecularAssembly:
    params: SpectralParams
    X: np.ndarray
    Y: np.ndarray
    Z: np.ndarray
    I: np.ndarray
    R_plus: np.ndarray
    R_minus: np.ndarray
    T: np.ndarray
    W: np.ndarray
    J: np.ndarray
    Cm: np.ndarray | None
    transform: np.ndarray | None
    chi: np.ndarray | None
    singular: bool


def assemble(bc: BoundaryConditions, g: MetricGraph, params: SpectralParams) -> SecularAssembly:
    idx = g.index
    X, Y = build_XY(g, idx, params)
    Rp, Rm, T = build_RT(g, idx, params)
    try:
        Cm = coefficient_matrix(bc, idx, params).Cm
    except PoleError:
        Cm = None
    try:
        D, M = transfer_scaled(bc, g, params)
        transform = D[:, None] * M
        chi = transform @ injection(g)
        singular = False
    except ResonanceError:
        transform = chi = None
        singular = True
    return SecularAssembly(
        params=params, X=X, Y=Y, Z=bc.A @ X + bc.B @ Y, I=build_I(idx, params),
        R_plus=Rp, R_minus=Rm, T=T, W=build_W(idx, params), J=signature(idx),
        Cm=Cm, transform=transform, chi=chi, singular=singular,
    )
