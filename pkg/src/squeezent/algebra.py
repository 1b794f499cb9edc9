"""Operators and states on tensor-product Hilbert spaces with truncated Fock factors.

Factor order is fixed per model and always lists atoms first, then cavity
modes: ``[atom A, atom B, mode a, mode b]`` for the cavity models, ``[2, 2]``
for the effective two-atom model and ``[2, 4, 2]`` for the network.

Qubit convention: basis index 0 is the ground level ``|g>``, index 1 is the
excited level ``|e>``; ``sigma_minus = |g><e|``.

Superoperators act on column-stacked density matrices,
``vec(rho) = rho.reshape(-1, order="F")``, so that
``vec(A rho B) = (B^T kron A) vec(rho)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import Sequence, Union

import numpy as np
import scipy.sparse as sp

from .errors import InvalidStateError, ModelError

# Matrices of side <= DENSE_LIMIT are stored dense, larger ones as CSR.
DENSE_LIMIT = 4096
# Superoperators of side above this are kept sparse: a dense LU at side 4096
# already costs seconds, while sparse LU on cavity models stays fast.
SUPER_DENSE_LIMIT = 1024

Matrix = Union[np.ndarray, sp.spmatrix]


def _freeze(a):
    if sp.issparse(a):
        return a
    a = np.array(a, dtype=complex)
    a.flags.writeable = False
    return a


def to_dense(a) -> np.ndarray:
    return a.toarray() if sp.issparse(a) else np.asarray(a)


def kron(a, b):
    """Kronecker product, sparse if either argument is sparse."""
    if sp.issparse(a) or sp.issparse(b):
        return sp.kron(a, b, format="csr")
    return np.kron(a, b)


def identity(n: int, sparse: bool = False):
    if sparse:
        return sp.identity(n, dtype=complex, format="csr")
    return np.eye(n, dtype=complex)


@dataclass(frozen=True)
class HilbertSpace:
    dims: tuple

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        if not dims:
            raise ModelError("a Hilbert space needs at least one factor")
        for i, d in enumerate(dims):
            if d < 2:
                raise ModelError(f"factor {i} has dimension {d}; every factor needs dim >= 2")
        object.__setattr__(self, "dims", dims)

    @property
    def total(self) -> int:
        return int(np.prod(self.dims))

    def __len__(self):
        return len(self.dims)

    def subspace(self, keep: Sequence[int]) -> "HilbertSpace":
        return HilbertSpace(tuple(self.dims[k] for k in keep))


def _space(dims_or_space) -> HilbertSpace:
    if isinstance(dims_or_space, HilbertSpace):
        return dims_or_space
    return HilbertSpace(tuple(dims_or_space))


@dataclass(frozen=True)
class Operator:
    space: HilbertSpace
    matrix: Matrix

    def __post_init__(self):
        object.__setattr__(self, "space", _space(self.space))
        m = self.matrix
        if not sp.issparse(m):
            m = _freeze(m)
        else:
            m = sp.csr_matrix(m, dtype=complex)
        n = self.space.total
        if m.shape != (n, n):
            raise ModelError(f"matrix shape {m.shape} does not match space dimension {n}")
        object.__setattr__(self, "matrix", m)

    @property
    def dims(self):
        return self.space.dims

    @property
    def is_sparse(self) -> bool:
        return sp.issparse(self.matrix)

    def full(self) -> np.ndarray:
        return to_dense(self.matrix)

    def dag(self) -> "Operator":
        return Operator(self.space, self.matrix.conj().T)

    def _check(self, other: "Operator"):
        if not isinstance(other, Operator):
            return NotImplemented
        if other.dims != self.dims:
            raise ModelError(f"operator dims {self.dims} and {other.dims} differ")

    def __matmul__(self, other):
        if isinstance(other, Operator):
            self._check(other)
            return Operator(self.space, self.matrix @ other.matrix)
        return self.matrix @ other

    def __add__(self, other):
        self._check(other)
        return Operator(self.space, self.matrix + other.matrix)

    def __sub__(self, other):
        self._check(other)
        return Operator(self.space, self.matrix - other.matrix)

    def __mul__(self, c):
        if not np.isscalar(c):
            return NotImplemented
        return Operator(self.space, self.matrix * c)

    __rmul__ = __mul__

    def __neg__(self):
        return Operator(self.space, -self.matrix)

    def __truediv__(self, c):
        return Operator(self.space, self.matrix / c)


@dataclass(frozen=True)
class StateVector:
    space: HilbertSpace
    amplitudes: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "space", _space(self.space))
        v = _freeze(np.asarray(self.amplitudes, dtype=complex).reshape(-1))
        if v.size != self.space.total:
            raise InvalidStateError(f"{v.size} amplitudes for a space of dimension {self.space.total}")
        norm = np.linalg.norm(v)
        if abs(norm - 1.0) > 1e-12:
            raise InvalidStateError(f"state vector has norm {norm!r}, expected 1")
        object.__setattr__(self, "amplitudes", v)

    @property
    def dims(self):
        return self.space.dims

    @classmethod
    def normalized(cls, dims, amplitudes) -> "StateVector":
        v = np.asarray(amplitudes, dtype=complex).reshape(-1)
        return cls(dims, v / np.linalg.norm(v))

    @classmethod
    def basis(cls, dims, levels: Sequence[int]) -> "StateVector":
        space = _space(dims)
        v = np.zeros(space.total, dtype=complex)
        v[np.ravel_multi_index(tuple(levels), space.dims)] = 1.0
        return cls(space, v)

    def dm(self) -> "DensityMatrix":
        v = self.amplitudes
        return DensityMatrix(self.space, np.outer(v, v.conj()))

    def tensor(self, other: "StateVector") -> "StateVector":
        return StateVector(self.dims + other.dims, np.kron(self.amplitudes, other.amplitudes))


@dataclass(frozen=True)
class DensityMatrix:
    space: HilbertSpace
    matrix: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "space", _space(self.space))
        m = _freeze(to_dense(self.matrix))
        n = self.space.total
        if m.shape != (n, n):
            raise InvalidStateError(f"matrix shape {m.shape} does not match space dimension {n}")
        object.__setattr__(self, "matrix", m)

    @property
    def dims(self):
        return self.space.dims

    def trace(self) -> complex:
        return complex(np.trace(self.matrix))

    def validate(self, herm_tol=1e-10, trace_tol=1e-10, psd_tol=1e-8) -> "DensityMatrix":
        """Raise InvalidStateError unless Hermitian, unit-trace and PSD."""
        m = self.matrix
        herm = np.max(np.abs(m - m.conj().T)) if m.size else 0.0
        if herm > herm_tol:
            raise InvalidStateError(f"not Hermitian (max deviation {herm:.3e})")
        tr = np.trace(m)
        if abs(tr - 1.0) > trace_tol:
            raise InvalidStateError(f"trace {tr:.12g} differs from 1")
        lo = np.linalg.eigvalsh((m + m.conj().T) / 2)[0]
        if lo < -psd_tol:
            raise InvalidStateError(f"minimum eigenvalue {lo:.3e} is below -{psd_tol:g}")
        return self

    def fidelity(self, psi: StateVector) -> float:
        """Overlap <psi|rho|psi> with a pure reference state."""
        v = psi.amplitudes
        return float(np.real(v.conj() @ self.matrix @ v))

    def trace_distance(self, other: "DensityMatrix") -> float:
        diff = self.matrix - other.matrix
        return 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh((diff + diff.conj().T) / 2))))


def tensor(*factors, sparse: bool | None = None) -> Operator:
    """Kronecker product in the given order.

    Each factor is an :class:`Operator`, a raw square matrix, or an ``int``
    placeholder standing for the identity of that dimension.
    """
    if len(factors) == 1 and isinstance(factors[0], (list, tuple)):
        factors = tuple(factors[0])
    if not factors:
        raise ModelError("tensor() needs at least one factor")
    dims, mats = [], []
    for i, f in enumerate(factors):
        if isinstance(f, (int, np.integer)):
            if f < 2:
                raise ModelError(f"factor {i}: identity placeholder of dimension {f}")
            dims.append(int(f))
            mats.append(int(f))
            continue
        m = f.matrix if isinstance(f, Operator) else f
        if not sp.issparse(m):
            m = np.asarray(m, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ModelError(f"factor {i}: matrix of shape {m.shape} is not square")
        dims.extend(f.dims if isinstance(f, Operator) else (m.shape[0],))
        mats.append(m)
    space = HilbertSpace(tuple(dims))
    if sparse is None:
        sparse = space.total > DENSE_LIMIT or any(sp.issparse(m) for m in mats if not isinstance(m, int))
    blocks = []
    for m in mats:
        if isinstance(m, int):
            blocks.append(identity(m, sparse))
        else:
            blocks.append(sp.csr_matrix(m) if sparse else to_dense(m))
    return Operator(space, reduce(kron, blocks))


def embed(op, index: int, dims: Sequence[int], sparse: bool | None = None) -> Operator:
    """Place a single-factor operator at ``index`` with identities elsewhere."""
    m = op.matrix if isinstance(op, Operator) else op
    dims = tuple(dims)
    if not 0 <= index < len(dims):
        raise ModelError(f"factor index {index} out of range for {len(dims)} factors")
    if m.shape != (dims[index], dims[index]):
        raise ModelError(f"factor {index}: operator of shape {m.shape} does not fit dimension {dims[index]}")
    return tensor([m if i == index else d for i, d in enumerate(dims)], sparse=sparse)


def annihilation(n_max: int, sparse: bool = False) -> Operator:
    """Truncated bosonic lowering operator on ``n_max`` Fock levels.

    The creation operator is taken as the exact adjoint, so the top level
    ``|n_max-1>`` is annihilated by ``a^dagger``.
    """
    if n_max < 2:
        raise ModelError(f"Fock truncation n_max={n_max} must be >= 2")
    m = sp.diags(np.sqrt(np.arange(1, n_max)), 1, shape=(n_max, n_max), dtype=complex)
    return Operator((n_max,), m.tocsr() if sparse else m.toarray())


def sigma_minus() -> Operator:
    return Operator((2,), np.array([[0, 1], [0, 0]], dtype=complex))


def partial_trace(state: DensityMatrix, keep: Sequence[int]) -> DensityMatrix:
    """Reduced density matrix on the factors in ``keep`` (returned in factor order)."""
    dims = state.dims
    keep = sorted(set(int(k) for k in keep))
    if not keep:
        raise ModelError("partial_trace needs a nonempty keep set")
    if keep[0] < 0 or keep[-1] >= len(dims):
        raise ModelError(f"keep indices {keep} invalid for {len(dims)} factors")
    n = len(dims)
    traced = [i for i in range(n) if i not in keep]
    t = state.matrix.reshape(dims + dims)
    # einsum labels: ket factors 0..n-1, bra factors n..2n-1, traced bra = ket
    ket = list(range(n))
    bra = [i if i in traced else n + i for i in range(n)]
    out = keep + [n + k for k in keep]
    red = np.einsum(t, ket + bra, out)
    d = int(np.prod([dims[k] for k in keep]))
    return DensityMatrix(state.space.subspace(keep), red.reshape(d, d))


def reduced_pure(psi: StateVector, keep: Sequence[int]) -> DensityMatrix:
    """Reduced state of a pure vector without forming the full projector."""
    dims = psi.dims
    keep = sorted(set(int(k) for k in keep))
    if not keep or keep[0] < 0 or keep[-1] >= len(dims):
        raise ModelError(f"keep indices {keep} invalid for {len(dims)} factors")
    rest = [i for i in range(len(dims)) if i not in keep]
    t = psi.amplitudes.reshape(dims).transpose(keep + rest)
    dk = int(np.prod([dims[k] for k in keep]))
    t = t.reshape(dk, -1)
    return DensityMatrix(psi.space.subspace(keep), t @ t.conj().T)


def bogoliubov_modes(N: float, n_max: int, dims: Sequence[int] | None = None,
                     mode_factors: tuple = (0, 1)) -> tuple[Operator, Operator]:
    """Return ``(a~, b~) = (sqrt(N+1) a + sqrt(N) b^dag, sqrt(N+1) b + sqrt(N) a^dag)``.

    By default the space is the bare two-mode space ``[n_max, n_max]``; pass
    ``dims`` and ``mode_factors`` to build them inside a larger model.
    """
    if N < 0:
        raise ModelError(f"mean photon number N={N} must be >= 0")
    dims = (n_max, n_max) if dims is None else tuple(dims)
    ia, ib = mode_factors
    a = embed(annihilation(dims[ia]), ia, dims)
    b = embed(annihilation(dims[ib]), ib, dims)
    cp, cn = np.sqrt(N + 1.0), np.sqrt(N)
    return cp * a + cn * b.dag(), cp * b + cn * a.dag()


def two_mode_squeezed_vacuum(N: float, n_max: int) -> StateVector:
    """Truncated and renormalized vector annihilated by both Bogoliubov modes.

    Amplitudes are ``(-1)^k (N/(N+1))^(k/2)`` on ``|k, k>``; the alternating
    sign matches the ``+sqrt(N) b^dag`` convention of :func:`bogoliubov_modes`.
    """
    if N < 0:
        raise ModelError(f"mean photon number N={N} must be >= 0")
    x = N / (N + 1.0)
    v = np.zeros((n_max, n_max), dtype=complex)
    k = np.arange(n_max)
    v[k, k] = (-1.0) ** k * x ** (k / 2.0)
    return StateVector.normalized((n_max, n_max), v.reshape(-1))


# -- superoperators (column stacking) -------------------------------------

def vec(rho) -> np.ndarray:
    return np.asarray(rho).reshape(-1, order="F")


def unvec(v, d: int | None = None) -> np.ndarray:
    if d is None:
        d = int(round(np.sqrt(v.size)))
    return np.asarray(v).reshape(d, d, order="F")


def spre(a):
    """Superoperator for ``rho -> a rho``."""
    return kron(identity(a.shape[0], sp.issparse(a)), a)


def spost(b):
    """Superoperator for ``rho -> rho b``."""
    return kron(b.T, identity(b.shape[0], sp.issparse(b)))


def sprepost(a, b):
    """Superoperator for ``rho -> a rho b``."""
    return kron(b.T, a)


def dissipator(j):
    """Superoperator for ``D[j] rho = j rho j^dag - {j^dag j, rho}/2``."""
    jd = j.conj().T
    jdj = jd @ j
    return sprepost(j, jd) - 0.5 * spre(jdj) - 0.5 * spost(jdj)


def commutator(h):
    """Superoperator for ``rho -> -i [h, rho]``."""
    return -1j * (spre(h) - spost(h))
