"""Local operations applied after the steady state is reached.

The storage step ``|e> -> |g'>`` is an exact relabeling, so filtering acts on
the same two-qubit matrix: level 0 is ``|g>``, level 1 is ``|g'>``.

Filtering is the no-click branch of a quantum-jump readout of an auxiliary
level ``|g''>``.  A pulse rotating the target level by ``theta`` leaves
``cos(theta)`` of its amplitude behind, so the Kraus element is
``F = diag(1, cos theta)`` (or ``diag(cos theta, 1)``) on each atom.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .algebra import DensityMatrix, StateVector
from .entanglement import eof_two_qubit
from .errors import FilteredOutError, InvalidStateError

MIN_SUCCESS = 1e-12
HALF_PI = np.pi / 2


@dataclass(frozen=True)
class FilterSpec:
    theta_a: float = 0.0
    theta_b: float = 0.0
    target_level: int = 0

    def __post_init__(self):
        for name in ("theta_a", "theta_b"):
            t = getattr(self, name)
            if not 0.0 <= t <= HALF_PI + 1e-15:
                raise ValueError(f"{name}={t} outside [0, pi/2]")
        if self.target_level not in (0, 1):
            raise ValueError(f"target_level={self.target_level} must be 0 (|g>) or 1 (|g'>)")

    def kraus(self) -> np.ndarray:
        return np.kron(_local(self.theta_a, self.target_level), _local(self.theta_b, self.target_level))


@dataclass(frozen=True)
class FilterOutcome:
    post_state: DensityMatrix
    success_prob: float
    eof_after: float


def _local(theta, level):
    f = np.ones(2)
    f[level] = np.cos(theta)
    return np.diag(f)


def balancing_filter(N: float) -> FilterSpec:
    """Filter that maps the ideal dark state onto a maximally entangled state.

    The ``|gg>`` amplitude exceeds the ``|ee>`` one by ``sqrt((N+1)/N)``, so
    each atom attenuates ``|g>`` by ``(N/(N+1))^(1/4)``.
    """
    if N <= 0:
        raise ValueError("balancing needs N > 0")
    theta = float(np.arccos((N / (N + 1.0)) ** 0.25))
    return FilterSpec(theta, theta, 0)


def filter_state(rho: DensityMatrix, spec: FilterSpec) -> FilterOutcome:
    if rho.dims != (2, 2):
        raise InvalidStateError(f"filtering acts on two-qubit states, got dims {rho.dims}")
    F = spec.kraus()
    out = F @ rho.matrix @ F.conj().T
    p = float(np.trace(out).real)
    if p < MIN_SUCCESS:
        raise FilteredOutError(f"filter success probability {p:.3e} is below {MIN_SUCCESS:g}")
    post = DensityMatrix((2, 2), out / p)
    return FilterOutcome(post, p, eof_two_qubit(post))


def _scan(m, thetas_a, thetas_b, level):
    """EoF and success probability on paired angle arrays (batched)."""
    ca, cb = np.cos(thetas_a), np.cos(thetas_b)
    fa = np.ones((len(ca), 2))
    fb = np.ones((len(cb), 2))
    fa[:, level] = ca
    fb[:, level] = cb
    f = (fa[:, :, None] * fb[:, None, :]).reshape(-1, 4)   # diagonal of F_a kron F_b
    out = f[:, :, None] * m[None] * f[:, None, :]
    p = np.einsum("kii->k", out).real
    ok = p >= MIN_SUCCESS
    e = np.full(len(p), -np.inf)
    if ok.any():
        e[ok] = eof_two_qubit(out[ok] / p[ok, None, None])
    return e, p


def _eof_at(m, ta, tb, level):
    e, _ = _scan(m, np.atleast_1d(ta), np.atleast_1d(tb), level)
    return float(e[0])


def optimize_filter(rho: DensityMatrix, symmetric: bool = True, grid: int = 181,
                    xtol: float = 1e-6) -> tuple[FilterSpec, FilterOutcome]:
    """Maximize the post-filter EoF over angles and over the attenuated level.

    The symmetric scan ties ``theta_a = theta_b``: a ``grid``-point sweep of
    ``[0, pi/2]`` followed by golden-section refinement.  ``symmetric=False``
    searches both angles (coarse 2-D grid, then bounded Nelder-Mead).
    """
    if rho.dims != (2, 2):
        raise InvalidStateError(f"filtering acts on two-qubit states, got dims {rho.dims}")
    m = np.asarray(rho.matrix)
    best = (eof_two_qubit(rho), 0.0, 0.0, 0)
    for level in (0, 1):
        if symmetric:
            th = np.linspace(0.0, HALF_PI, grid)
            e, _ = _scan(m, th, th, level)
            i = int(np.argmax(e))
            ta = tb = th[i]
            val = e[i]
            if 0 < i < grid - 1 and e[i] > max(e[i - 1], e[i + 1]):
                res = optimize.minimize_scalar(lambda t: -_eof_at(m, t, t, level), method="golden",
                                               bracket=(th[i - 1], th[i], th[i + 1]), tol=xtol)
                if -res.fun > val:
                    ta = tb = float(res.x)
                    val = -res.fun
        else:
            n2 = max(grid // 3, 31)
            th = np.linspace(0.0, HALF_PI, n2)
            A, B = np.meshgrid(th, th, indexing="ij")
            e, _ = _scan(m, A.ravel(), B.ravel(), level)
            i = int(np.argmax(e))
            ta, tb, val = A.ravel()[i], B.ravel()[i], e[i]
            res = optimize.minimize(lambda x: -_eof_at(m, x[0], x[1], level), x0=[ta, tb],
                                    method="Nelder-Mead", bounds=[(0, HALF_PI)] * 2,
                                    options={"xatol": xtol, "fatol": 1e-14})
            if np.isfinite(res.fun) and -res.fun > val:
                ta, tb = (float(x) for x in res.x)
                val = -res.fun
        if val > best[0]:
            best = (val, float(ta), float(tb), level)
    spec = FilterSpec(min(best[1], HALF_PI), min(best[2], HALF_PI), best[3])
    return spec, filter_state(rho, spec)


@dataclass(frozen=True)
class NodeBOutcome:
    label: str
    probability: float
    post_state: DensityMatrix | None


def bell_type_basis():
    """``{|0,0>, |1,1>, (|0,1> + |1,0>)/sqrt2, (|0,1> - |1,0>)/sqrt2}`` on node B."""
    s = 1 / np.sqrt(2)
    vecs = np.array([[1, 0, 0, 0], [0, 0, 0, 1], [0, s, s, 0], [0, s, -s, 0]], dtype=complex)
    return vecs, ["00", "11", "+", "-"]


def measure_node_B(state, basis=None, labels=None) -> list[NodeBOutcome]:
    """Projective measurement of the four-level atom B in a three-node state.

    ``basis`` holds the measurement vectors as rows.  Returns one entry per
    outcome with its probability and the conditional A-C state (None for
    zero-probability outcomes).
    """
    if basis is None:
        basis, default_labels = bell_type_basis()
        labels = labels or default_labels
    basis = np.asarray(basis, dtype=complex)
    if basis.shape != (4, 4):
        raise ValueError(f"node-B basis must be 4 vectors of length 4, got shape {basis.shape}")
    if np.max(np.abs(basis @ basis.conj().T - np.eye(4))) > 1e-10:
        raise ValueError("node-B basis is not orthonormal")
    labels = labels or [str(k) for k in range(4)]
    if isinstance(state, StateVector):
        state = state.dm()
    if state.dims != (2, 4, 2):
        raise InvalidStateError(f"network state on [2, 4, 2] expected, got {state.dims}")
    t = state.matrix.reshape(2, 4, 2, 2, 4, 2)
    out = []
    for vec, lab in zip(basis, labels):
        block = np.einsum("j,ajcbkd,k->acbd", vec.conj(), t, vec).reshape(4, 4)
        p = float(np.trace(block).real)
        post = DensityMatrix((2, 2), block / p) if p > 1e-14 else None
        out.append(NodeBOutcome(lab, max(p, 0.0), post))
    return out
