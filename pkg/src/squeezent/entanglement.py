"""Two-qubit concurrence / entanglement of formation and pure-state entropies.

All entropies are in bits (ebits).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .algebra import DensityMatrix, StateVector, reduced_pure
from .errors import InvalidStateError

_SY = np.array([[0, -1j], [1j, 0]])
_YY = np.kron(_SY, _SY)


@dataclass(frozen=True)
class EntanglementReport:
    concurrence: float
    eof_bits: float
    method: str = "wootters"


def binary_entropy(x):
    """``h(x) = -x log2 x - (1-x) log2(1-x)`` with ``h(0) = h(1) = 0``; vectorized."""
    x = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        h = -x * np.log2(x) - (1 - x) * np.log2(1 - x)
    return np.where((x <= 0) | (x >= 1), 0.0, h)


def _as_matrix(rho) -> np.ndarray:
    if isinstance(rho, DensityMatrix):
        if rho.dims != (2, 2):
            raise InvalidStateError(f"two-qubit state expected, got factor dims {rho.dims}")
        return rho.matrix
    m = np.asarray(rho)
    if m.shape[-2:] != (4, 4):
        raise InvalidStateError(f"two-qubit state expected, got matrix shape {m.shape}")
    return m


def _sqrtm_psd(m):
    w, v = np.linalg.eigh((m + np.conj(np.swapaxes(m, -1, -2))) / 2)
    w = np.sqrt(np.clip(w, 0.0, None))
    return (v * w[..., None, :]) @ np.conj(np.swapaxes(v, -1, -2))


def concurrence(rho) -> float | np.ndarray:
    """Wootters concurrence; accepts a stack of 4x4 matrices for batch use.

    The ``lambda_i`` are taken as singular values of ``sqrt(rho) YY sqrt(rho)*``
    rather than square roots of eigenvalues, which keeps full precision near
    pure states.
    """
    m = _as_matrix(rho)
    r = _sqrtm_psd(m)
    lam = np.linalg.svd(r @ _YY @ r.conj(), compute_uv=False)
    c = lam[..., 0] - lam[..., 1] - lam[..., 2] - lam[..., 3]
    c = np.clip(c, 0.0, 1.0)
    return float(c) if np.ndim(c) == 0 else c


def eof_from_concurrence(c):
    c = np.clip(np.asarray(c, dtype=float), 0.0, 1.0)
    out = binary_entropy((1 + np.sqrt(1 - c * c)) / 2)
    return float(out) if out.ndim == 0 else out


def eof_two_qubit(rho) -> float | np.ndarray:
    return eof_from_concurrence(concurrence(rho))


def entanglement_report(rho) -> EntanglementReport:
    c = concurrence(rho)
    return EntanglementReport(c, eof_from_concurrence(c))


def von_neumann_entropy(rho) -> float:
    m = rho.matrix if isinstance(rho, DensityMatrix) else np.asarray(rho)
    w = np.linalg.eigvalsh((m + m.conj().T) / 2)
    w = w[w > 1e-15]
    return float(-np.sum(w * np.log2(w))) + 0.0


def entanglement_entropy(psi: StateVector, bipartition: Sequence[int]) -> float:
    """Entropy of the reduced state on the factors in ``bipartition``."""
    if not isinstance(psi, StateVector):
        raise InvalidStateError("entanglement_entropy needs a normalized StateVector")
    return von_neumann_entropy(reduced_pure(psi, bipartition))


def squeezed_state_eof(N: float) -> float:
    """Entanglement of the two-mode squeezed vacuum with mean photon number ``N`` per mode."""
    if N < 0:
        raise ValueError(f"N={N} must be >= 0")
    if N == 0:
        return 0.0
    return float((N + 1) * np.log2(N + 1) - N * np.log2(N))
