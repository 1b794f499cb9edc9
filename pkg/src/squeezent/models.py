"""Liouvillians for the squeezed-light driven two-cavity system and its reductions.

Every builder returns a :class:`Liouvillian` acting on column-stacked density
matrices (see :mod:`squeezent.algebra`). Rates are in units where only ratios
matter; the experiments module uses ``kappa = g = 1``.

Rate conventions
----------------
* Cavity damping: with ``N = M = 0`` the photon number decays at ``2 kappa``.
* Spontaneous emission: ``Gamma D[sigma^-]``, i.e. atomic population decays at
  ``Gamma``.  Together these make the eliminated decay rate
  ``2 g^2/kappa + Gamma = (g^2/kappa)(2 + eps)`` with ``eps = Gamma kappa / g^2``.
* The two-mode correlation ``M`` is real and nonnegative at the interface.  The
  effective cross coefficient carries the sign, ``m = -M / (1 + eps/2)``.
* Squeezed cross terms are written in Lindblad-consistent order,
  ``kappa M (2 a rho b + 2 b rho a - 2 a b rho - 2 rho a b) + h.c.``; this is
  the form whose stationary state is the pure dark state of :func:`dark_state`.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from . import algebra as alg
from .algebra import HilbertSpace, StateVector
from .errors import ModelError

_PERFECT_TOL = 1e-12


@dataclass(frozen=True)
class SqueezingParams:
    N: float
    M: float

    def __post_init__(self):
        if not np.isfinite(self.N) or self.N < 0:
            raise ModelError(f"N={self.N} must be finite and >= 0")
        if not np.isfinite(self.M) or self.M < 0:
            raise ModelError(f"M={self.M} must be finite and >= 0 (phase convention: M real)")
        if self.M > np.sqrt(self.N * (self.N + 1.0)) + _PERFECT_TOL:
            raise ModelError(f"M={self.M} exceeds sqrt(N(N+1))={np.sqrt(self.N * (self.N + 1)):.12g}")

    @classmethod
    def perfect(cls, N: float) -> "SqueezingParams":
        return cls(float(N), float(np.sqrt(N * (N + 1.0))))

    @property
    def is_perfect(self) -> bool:
        return abs(self.M - np.sqrt(self.N * (self.N + 1.0))) <= _PERFECT_TOL


@dataclass(frozen=True)
class PhysicalParams:
    g_a: float
    g_b: float
    kappa: float = 1.0
    gamma_sp: float = 0.0

    def __post_init__(self):
        if not self.kappa > 0:
            raise ModelError(f"kappa={self.kappa} must be > 0")
        if self.g_a < 0 or self.g_b < 0:
            raise ModelError(f"couplings must be >= 0 (g_a={self.g_a}, g_b={self.g_b})")
        if self.gamma_sp < 0:
            raise ModelError(f"gamma_sp={self.gamma_sp} must be >= 0")

    @classmethod
    def from_epsilon(cls, epsilon: float, g: float = 1.0, kappa: float = 1.0) -> "PhysicalParams":
        """Symmetric couplings with ``Gamma = eps g^2 / kappa``."""
        return cls(g, g, kappa, epsilon * g * g / kappa)

    @property
    def symmetric(self) -> bool:
        return self.g_a == self.g_b

    @property
    def g(self) -> float:
        return float(np.sqrt(self.g_a * self.g_b))

    @property
    def epsilon(self) -> float:
        g2 = self.g_a * self.g_b
        if g2 == 0:
            return np.inf if self.gamma_sp > 0 else 0.0
        return self.gamma_sp * self.kappa / g2


@dataclass(frozen=True)
class EffectiveBathParams:
    gamma_eff: float
    n_eff: float
    m_eff: float


@dataclass(frozen=True)
class Liouvillian:
    space: HilbertSpace
    supermatrix: alg.Matrix
    model: str
    params: dict = field(default_factory=dict)
    mode_factors: tuple = ()

    def __post_init__(self):
        d = self.space.total
        if self.supermatrix.shape != (d * d, d * d):
            raise ModelError(f"supermatrix shape {self.supermatrix.shape} does not match d^2={d * d}")
        m = self.supermatrix
        m = sp.csr_matrix(m, dtype=complex) if sp.issparse(m) else alg._freeze(m)
        object.__setattr__(self, "supermatrix", m)

    @property
    def dim(self) -> int:
        return self.space.total

    @property
    def dims(self):
        return self.space.dims

    @property
    def is_sparse(self) -> bool:
        return sp.issparse(self.supermatrix)

    def apply(self, rho) -> np.ndarray:
        """Return ``L(rho)`` as a matrix."""
        rho = rho.matrix if hasattr(rho, "matrix") else np.asarray(rho)
        return alg.unvec(self.supermatrix @ alg.vec(rho), self.dim)

    def norm(self) -> float:
        m = self.supermatrix
        if sp.issparse(m):
            return float(np.sqrt(np.sum(np.abs(m.data) ** 2)))
        return float(np.linalg.norm(m))


def _qubit_ops(dims, sparse):
    sm = alg.sigma_minus().matrix
    return [alg.embed(sm, i, dims, sparse=sparse).matrix for i in range(len(dims)) if dims[i] == 2]


def _dag(m):
    return m.conj().T


def _densify(L, d):
    """Cavity models are assembled sparse; small ones are stored dense."""
    return L.toarray() if d * d <= alg.SUPER_DENSE_LIMIT else L.tocsr()


def _pair_cross(lo1, lo2, c):
    """``c (l1 rho l2 + l2 rho l1 - l1 l2 rho - rho l1 l2) + h.c.`` for commuting l1, l2."""
    p = lo1 @ lo2
    x = c * (alg.sprepost(lo1, lo2) + alg.sprepost(lo2, lo1) - alg.spre(p) - alg.spost(p))
    h1, h2, hp = _dag(lo1), _dag(lo2), _dag(p)
    xh = np.conj(c) * (alg.sprepost(h2, h1) + alg.sprepost(h1, h2) - alg.spost(hp) - alg.spre(hp))
    return x + xh


def squeezed_bath_dissipator(lo1, lo2, down, up, cross):
    """Two lowering operators coupled to a common two-mode squeezed reservoir.

    ``down``/``up`` are per-operator rate pairs multiplying ``D[l]`` and
    ``D[l^dag]``; ``cross`` is the (signed) correlation coefficient.
    """
    return (
        down[0] * alg.dissipator(lo1) + down[1] * alg.dissipator(lo2)
        + up[0] * alg.dissipator(_dag(lo1)) + up[1] * alg.dissipator(_dag(lo2))
        + _pair_cross(lo1, lo2, cross)
    )


def build_full_me(phys: PhysicalParams, sq: SqueezingParams, n_max: int) -> Liouvillian:
    """Atoms plus both cavity modes, factor order ``[atom A, atom B, mode a, mode b]``."""
    if n_max < 2:
        raise ModelError(f"n_max={n_max} must be >= 2")
    dims = (2, 2, n_max, n_max)
    d = 4 * n_max * n_max
    sa, sb = _qubit_ops(dims, True)
    a = alg.embed(alg.annihilation(n_max).matrix, 2, dims, sparse=True).matrix
    b = alg.embed(alg.annihilation(n_max).matrix, 3, dims, sparse=True).matrix
    k, N, M = phys.kappa, sq.N, sq.M

    H = phys.g_a * (a @ _dag(sa) + _dag(a) @ sa) + phys.g_b * (b @ _dag(sb) + _dag(b) @ sb)
    L = alg.commutator(H)
    # sum_alpha (alpha rho alpha^dag - alpha^dag alpha rho) + h.c. == 2 D[alpha]
    L = L + 2 * k * (N + 1) * (alg.dissipator(a) + alg.dissipator(b))
    L = L + 2 * k * N * (alg.dissipator(_dag(a)) + alg.dissipator(_dag(b)))
    L = L + _pair_cross(a, b, 2 * k * M)
    if phys.gamma_sp:
        L = L + phys.gamma_sp * (alg.dissipator(sa) + alg.dissipator(sb))
    return Liouvillian(HilbertSpace(dims), _densify(L, d), "full",
                       {"g_a": phys.g_a, "g_b": phys.g_b, "kappa": k, "gamma_sp": phys.gamma_sp,
                        "N": N, "M": M, "n_max": n_max}, mode_factors=(2, 3))


def tau_lowering(N: float, lo1, lo2):
    """``tau_1^- = sqrt(N+1) l1 - sqrt(N) l2^dag`` and its partner with 1 and 2 swapped."""
    cp, cn = np.sqrt(N + 1.0), np.sqrt(N)
    return cp * lo1 - cn * _dag(lo2), cp * lo2 - cn * _dag(lo1)


def build_transformed_me(phys: PhysicalParams, sq: SqueezingParams, n_max: int) -> Liouvillian:
    """Perfect-squeezing model in the Bogoliubov frame.

    Factors 2 and 3 are the transformed modes ``a~, b~``, each damped into
    vacuum; the atoms couple through ``tau`` operators.
    """
    if not sq.is_perfect:
        raise ModelError("the Bogoliubov frame exists only at perfect squeezing M = sqrt(N(N+1))")
    if phys.gamma_sp != 0:
        raise ModelError("the Bogoliubov-frame model assumes gamma_sp = 0")
    if not phys.symmetric:
        raise ModelError("the Bogoliubov-frame model assumes g_a = g_b")
    if n_max < 2:
        raise ModelError(f"n_max={n_max} must be >= 2")
    dims = (2, 2, n_max, n_max)
    d = 4 * n_max * n_max
    sa, sb = _qubit_ops(dims, True)
    at = alg.embed(alg.annihilation(n_max).matrix, 2, dims, sparse=True).matrix
    bt = alg.embed(alg.annihilation(n_max).matrix, 3, dims, sparse=True).matrix
    ta, tb = tau_lowering(sq.N, sa, sb)
    g, k = phys.g_a, phys.kappa
    H = g * (_dag(ta) @ at + _dag(at) @ ta) + g * (_dag(tb) @ bt + _dag(bt) @ tb)
    L = alg.commutator(H) + 2 * k * (alg.dissipator(at) + alg.dissipator(bt))
    return Liouvillian(HilbertSpace(dims), _densify(L, d), "transformed",
                       {"g": g, "kappa": k, "N": sq.N, "M": sq.M, "n_max": n_max}, mode_factors=(2, 3))


def effective_bath_params(phys: PhysicalParams, sq: SqueezingParams) -> EffectiveBathParams:
    if not phys.symmetric:
        raise ModelError("effective_bath_params is defined for g_a = g_b; use build_effective_me")
    g2, k = phys.g_a ** 2, phys.kappa
    if g2 == 0:
        raise ModelError("g = 0: no cavity-mediated coupling, effective bath undefined")
    eps = phys.gamma_sp * k / g2
    renorm = 1.0 / (1.0 + eps / 2.0)
    return EffectiveBathParams(g2 / k * (2.0 + eps), sq.N * renorm, -sq.M * renorm)


def build_effective_me(phys: PhysicalParams, sq: SqueezingParams) -> Liouvillian:
    """Two-atom master equation after eliminating both cavity modes.

    Symmetric couplings use the renormalized bath ``(gamma, n, m)``.  For
    ``g_a != g_b`` the cavity-mediated single-atom rates scale with
    ``2 g_alpha^2 / kappa`` and the correlation term with ``2 g_a g_b / kappa``.
    """
    dims = (2, 2)
    sa, sb = _qubit_ops(dims, False)
    if phys.symmetric and phys.g_a > 0:
        bath = effective_bath_params(phys, sq)
        gam, n, m = bath.gamma_eff, bath.n_eff, bath.m_eff
        L = squeezed_bath_dissipator(sa, sb, (gam * (n + 1),) * 2, (gam * n,) * 2, gam * m)
    else:
        k, N, M, G = phys.kappa, sq.N, sq.M, phys.gamma_sp
        ra, rb = 2 * phys.g_a ** 2 / k, 2 * phys.g_b ** 2 / k
        L = squeezed_bath_dissipator(
            sa, sb,
            (ra * (N + 1) + G, rb * (N + 1) + G),
            (ra * N, rb * N),
            -2 * phys.g_a * phys.g_b / k * M,
        )
    return Liouvillian(HilbertSpace(dims), L, "effective",
                       {"g_a": phys.g_a, "g_b": phys.g_b, "kappa": phys.kappa,
                        "gamma_sp": phys.gamma_sp, "N": sq.N, "M": sq.M})


# Network node B: four ground levels |i,j>, index 2*i + j.
_B_LEVELS = ((0, 0), (0, 1), (1, 0), (1, 1))


def node_b_raising() -> tuple[np.ndarray, np.ndarray]:
    """``sigma_b1^+`` flips the first label, ``sigma_b2^+`` the second."""
    idx = {lab: k for k, lab in enumerate(_B_LEVELS)}
    s1 = np.zeros((4, 4), dtype=complex)
    s2 = np.zeros((4, 4), dtype=complex)
    s1[idx[1, 0], idx[0, 0]] = s1[idx[1, 1], idx[0, 1]] = 1
    s2[idx[0, 1], idx[0, 0]] = s2[idx[1, 1], idx[1, 0]] = 1
    return s1, s2


def network_lowering_ops():
    """Lowering operators ``(sigma_a, sigma_b1, sigma_b2, sigma_c)`` on ``[2, 4, 2]``."""
    dims = (2, 4, 2)
    sm = alg.sigma_minus().matrix
    s1, s2 = node_b_raising()
    return (
        alg.embed(sm, 0, dims).matrix,
        alg.embed(_dag(s1), 1, dims).matrix,
        alg.embed(_dag(s2), 1, dims).matrix,
        alg.embed(sm, 2, dims).matrix,
    )


def build_network_me(phys: PhysicalParams, sq_pair, ideal: bool = False) -> Liouvillian:
    """Three-node chain A - B - C at the effective atomic level, factors ``[2, 4, 2]``.

    Link 1 couples ``(sigma_a, sigma_b1)`` and link 2 couples
    ``(sigma_c, sigma_b2)`` to independent squeezed reservoirs.  Spontaneous
    emission enters each link through the renormalized bath, as in
    :func:`effective_bath_params`.  ``ideal=True`` enforces ``gamma_sp = 0``
    and perfect squeezing on both links.
    """
    sq1, sq2 = sq_pair
    if ideal:
        if phys.gamma_sp != 0 or not (sq1.is_perfect and sq2.is_perfect):
            raise ModelError("ideal network requires gamma_sp = 0 and perfect squeezing on both links")
    la, lb1, lb2, lc = network_lowering_ops()
    L = 0
    for (l1, l2), sq in (((la, lb1), sq1), ((lc, lb2), sq2)):
        bath = effective_bath_params(phys, sq)
        gam, n, m = bath.gamma_eff, bath.n_eff, bath.m_eff
        L = L + squeezed_bath_dissipator(l1, l2, (gam * (n + 1),) * 2, (gam * n,) * 2, gam * m)
    return Liouvillian(HilbertSpace((2, 4, 2)), L, "network",
                       {"g": phys.g_a, "kappa": phys.kappa, "gamma_sp": phys.gamma_sp,
                        "N1": sq1.N, "M1": sq1.M, "N2": sq2.N, "M2": sq2.M})


def dark_state(N: float) -> StateVector:
    """``sqrt((N+1)/(2N+1)) |gg> + sqrt(N/(2N+1)) |ee>``."""
    if N < 0:
        raise ModelError(f"N={N} must be >= 0")
    v = np.zeros(4)
    v[0] = np.sqrt((N + 1.0) / (2 * N + 1.0))
    v[3] = np.sqrt(N / (2 * N + 1.0))
    return StateVector((2, 2), v)


def network_dark_state(N: float) -> StateVector:
    """Ideal steady state of the three-node chain on ``[2, 4, 2]``."""
    if N < 0:
        raise ModelError(f"N={N} must be >= 0")
    s = 2 * N + 1.0
    v = np.zeros((2, 4, 2))
    v[0, 0, 0] = (N + 1.0) / s                   # |g>|0,0>|g>
    v[1, 3, 1] = N / s                           # |e>|1,1>|e>
    v[0, 1, 1] = v[1, 2, 0] = np.sqrt(N * (N + 1.0)) / s   # |g>|0,1>|e>, |e>|1,0>|g>
    return StateVector.normalized((2, 4, 2), v.reshape(-1))
