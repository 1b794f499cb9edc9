"""Stationary states of Liouvillians.

Two independent routes are provided: :func:`steady_state_direct` solves the
trace-constrained linear system, :func:`steady_state_evolve` integrates
``d rho/dt = L rho`` with classical RK4 until the residual ``||L rho||`` is
below tolerance.

Sparse Liouvillians are first restricted to the coordinate subspace reachable
from the seed (all populations for the direct solve, the support of ``rho0``
for evolution) through the sparsity graph of ``L``.  That subspace is exactly
invariant, so the restriction loses nothing; for the cavity models it removes
every coherence between sectors of different
``(a-excitations) - (b-excitations)`` and shrinks the problem by about 10x.
"""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spl

from . import algebra as alg
from .algebra import DensityMatrix
from .errors import ConvergenceError, NonUniqueSteadyStateError, SolverError
from .models import Liouvillian

log = logging.getLogger(__name__)

NEG_EIG_TOL = 1e-8
RCOND_TOL = 1e-13
SVD_LIMIT = 1024        # uniqueness via full SVD up to this supermatrix side
SPLU_LIMIT = 8000       # sparse LU up to this reduced size, ILU-GMRES above
RK4_STABILITY = 2.78    # real-axis extent of the RK4 stability region


@dataclass(frozen=True)
class SteadyStateReport:
    """Result of a steady-state computation.

    ``spectral_gap_estimate`` is the second-smallest singular value of ``L``
    when the full SVD is affordable, otherwise ``1/||A^-1||_1`` for the
    trace-bordered system ``A`` (a lower-bound proxy), and NaN for the
    evolution route.  ``unique`` is None when the method cannot decide.
    ``truncation_tail`` is the largest population held in the top two Fock
    levels of any cavity mode (NaN for models without modes).
    """
    state: DensityMatrix
    residual: float
    unique: bool | None
    spectral_gap_estimate: float
    truncation_tail: float
    method: str
    iterations: int = 0


def _diag_indices(d: int) -> np.ndarray:
    return np.arange(d) * (d + 1)


def reachable_indices(L: Liouvillian, seed) -> np.ndarray:
    """Sorted vec-indices reachable from ``seed`` under repeated application of ``L``."""
    n = L.supermatrix.shape[0]
    A = L.supermatrix
    A = (sp.csr_matrix(A) if not sp.issparse(A) else A).copy()
    A.data = (A.data != 0).astype(np.int8)
    A.eliminate_zeros()
    mask = np.zeros(n, dtype=bool)
    mask[np.asarray(seed)] = True
    while True:
        new = mask | (A @ mask.astype(np.int8) > 0)
        if np.array_equal(new, mask):
            return np.flatnonzero(mask)
        mask = new


def truncation_tail(state: DensityMatrix, mode_factors) -> float:
    if not mode_factors:
        return float("nan")
    tail = 0.0
    for k in mode_factors:
        p = np.real(np.diag(alg.partial_trace(state, [k]).matrix))
        tail = max(tail, float(p[-1] + p[-2]))
    return tail


def _clip_to_state(L: Liouvillian, rho: np.ndarray) -> DensityMatrix:
    rho = (rho + rho.conj().T) / 2
    tr = np.trace(rho).real
    if not np.isfinite(tr) or abs(tr) < 1e-300:
        raise SolverError("steady-state solve produced a state with vanishing or invalid trace")
    rho = rho / tr
    w, V = np.linalg.eigh(rho)
    if w[0] < -NEG_EIG_TOL:
        raise SolverError(f"steady state has eigenvalue {w[0]:.3e} < -{NEG_EIG_TOL:g}; model is not a valid generator")
    if w[0] < 0:
        w = np.clip(w, 0.0, None)
        rho = (V * w) @ V.conj().T
        rho = rho / np.trace(rho).real
    return DensityMatrix(L.space, rho).validate()


def _residual(L: Liouvillian, rho: DensityMatrix) -> float:
    return float(np.linalg.norm(L.supermatrix @ alg.vec(rho.matrix)))


def uniqueness_check(L: Liouvillian, tol: float = 1e-10):
    """Return ``(unique, gap)`` for a dense-size Liouvillian.

    Unique iff the null space of ``L`` is one-dimensional: the second-smallest
    singular value must exceed ``tol`` times the largest.  Larger systems fall
    back to the condition number of the trace-bordered system.
    """
    n = L.supermatrix.shape[0]
    if n <= SVD_LIMIT:
        s = sla.svdvals(alg.to_dense(L.supermatrix))
        if s[0] == 0:
            return False, 0.0
        return bool(s[-2] > tol * s[0]), float(s[-2])
    rcond, inv_norm = _bordered_condition(L)
    return bool(rcond > RCOND_TOL), float(1.0 / inv_norm) if np.isfinite(inv_norm) else 0.0


def _bordered_dense(L: Liouvillian):
    d = L.dim
    diag = _diag_indices(d)
    A = np.array(alg.to_dense(L.supermatrix), dtype=complex)
    r = diag[0]
    A[r, :] = 0
    A[r, diag] = 1
    b = np.zeros(d * d, dtype=complex)
    b[r] = 1
    return A, b


def _bordered_condition(L: Liouvillian):
    A, _ = _bordered_dense(L)
    anorm = np.linalg.norm(A, 1)
    lu, piv, info = sla.lapack.zgetrf(A)
    if info > 0:
        return 0.0, np.inf
    rcond, _ = sla.lapack.zgecon(lu, anorm)
    return float(rcond), (1.0 / (rcond * anorm) if rcond > 0 else np.inf)


def _solve_dense(L: Liouvillian):
    A, b = _bordered_dense(L)
    anorm = np.linalg.norm(A, 1)
    lu, piv, info = sla.lapack.zgetrf(A)
    if info > 0:
        raise NonUniqueSteadyStateError("trace-constrained system is singular: steady state is not unique")
    rcond, _ = sla.lapack.zgecon(lu, anorm)
    if rcond < RCOND_TOL:
        raise NonUniqueSteadyStateError(f"trace-constrained system is singular (rcond={rcond:.2e}): "
                                        "steady state is not unique")
    x, _ = sla.lapack.zgetrs(lu, piv, b)
    n = A.shape[0]
    if n <= SVD_LIMIT:
        unique, gap = uniqueness_check(L)
        if not unique:
            raise NonUniqueSteadyStateError(f"null space of L is degenerate (gap {gap:.2e})")
    else:
        unique, gap = True, rcond * anorm
    return x, unique, gap


def _solve_sparse(L: Liouvillian):
    d = L.dim
    diag = _diag_indices(d)
    idx = reachable_indices(L, diag)
    Ls = L.supermatrix[idx][:, idx].tocsr()
    pos = np.searchsorted(idx, diag)
    r = pos[0]
    A = Ls.tolil()
    A[r, :] = 0
    A[r, pos] = 1
    A = A.tocsc()
    b = np.zeros(len(idx), dtype=complex)
    b[r] = 1
    unique, gap = None, float("nan")
    method = "direct-splu"
    if len(idx) <= SPLU_LIMIT:
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("error", sp.linalg.MatrixRankWarning)
                lu = spl.splu(A)
        except (RuntimeError, sp.linalg.MatrixRankWarning) as exc:
            raise NonUniqueSteadyStateError(f"trace-constrained system is singular: {exc}") from exc
        xs = lu.solve(b)
        inv = spl.LinearOperator(A.shape, matvec=lu.solve, rmatvec=lambda y: lu.solve(y, trans="H"),
                                 dtype=complex)
        inv_norm = spl.onenormest(inv)
        anorm = spl.norm(A, 1)
        rcond = 1.0 / (inv_norm * anorm)
        if rcond < RCOND_TOL:
            raise NonUniqueSteadyStateError(f"trace-constrained system is singular (rcond~{rcond:.2e})")
        unique, gap = True, 1.0 / inv_norm
    else:
        method = "direct-gmres"
        ilu = spl.spilu(A, drop_tol=1e-5, fill_factor=20)
        M = spl.LinearOperator(A.shape, ilu.solve, dtype=complex)
        xs, info = spl.gmres(A, b, M=M, rtol=1e-13, atol=0.0, restart=200, maxiter=500)
        if info != 0:
            log.info("ILU-GMRES did not converge (info=%s); falling back to sparse LU", info)
            method = "direct-splu"
            xs = spl.splu(A).solve(b)
    x = np.zeros(d * d, dtype=complex)
    x[idx] = xs
    return x, unique, gap, method


def steady_state_direct(L: Liouvillian, rel_tol: float = 1e-8) -> SteadyStateReport:
    """Solve ``L rho = 0`` with one population row replaced by ``Tr rho = 1``.

    Raises NonUniqueSteadyStateError for a degenerate null space and
    ConvergenceError if the residual exceeds ``rel_tol * ||L||_F``.
    """
    if L.is_sparse:
        x, unique, gap, method = _solve_sparse(L)
    else:
        x, unique, gap = _solve_dense(L)
        method = "direct-dense"
    state = _clip_to_state(L, alg.unvec(x, L.dim))
    res = _residual(L, state)
    limit = rel_tol * L.norm()
    if res > limit:
        raise ConvergenceError(f"direct solve residual {res:.3e} exceeds {limit:.3e}", residual=res)
    return SteadyStateReport(state, res, unique, float(gap), truncation_tail(state, L.mode_factors), method)


def spectral_radius(A) -> float:
    n = A.shape[0]
    if n <= 256:
        return float(np.max(np.abs(np.linalg.eigvals(alg.to_dense(A)))))
    try:
        w = spl.eigs(A, k=1, which="LM", tol=1e-4, maxiter=5000, return_eigenvectors=False)
        return float(np.abs(w[0])) * 1.02
    except spl.ArpackNoConvergence:
        # Gershgorin bound
        B = sp.csr_matrix(A) if not sp.issparse(A) else A
        return float(np.max(np.asarray(abs(B).sum(axis=1)).ravel()))


def steady_state_evolve(L: Liouvillian, rho0: DensityMatrix, dt: float | None = None,
                        tol: float = 1e-9, max_steps: int = 2_000_000) -> SteadyStateReport:
    """Integrate with RK4 until ``||L rho||_F < tol``.

    ``dt`` defaults to ``2 / rho(L)`` with ``rho(L)`` the spectral radius; a
    ``dt`` outside the RK4 stability interval is rejected.
    """
    if rho0.dims != L.dims:
        raise SolverError(f"initial state dims {rho0.dims} differ from model dims {L.dims}")
    d = L.dim
    v_full = alg.vec(rho0.matrix)
    if L.is_sparse:
        idx = reachable_indices(L, np.flatnonzero(v_full))
        A = L.supermatrix[idx][:, idx].tocsr()
    else:
        idx = np.arange(d * d)
        A = np.asarray(L.supermatrix)
    v = np.array(v_full[idx], dtype=complex)
    radius = spectral_radius(A)
    if dt is None:
        dt = 2.0 / radius if radius > 0 else 1.0
    elif dt * radius > RK4_STABILITY:
        raise ValueError(f"dt={dt:g} is unstable for RK4: dt * spectral radius = {dt * radius:.3g} > {RK4_STABILITY}")
    h2, h6 = dt / 2.0, dt / 6.0
    steps = 0
    while True:
        k1 = A @ v
        res = float(np.linalg.norm(k1))
        if res < tol:
            break
        if steps >= max_steps:
            raise ConvergenceError(f"evolution did not reach ||L rho|| < {tol:g} within {max_steps} steps "
                                   f"(final residual {res:.3e})", residual=res)
        k2 = A @ (v + h2 * k1)
        k3 = A @ (v + h2 * k2)
        k4 = A @ (v + dt * k3)
        v = v + h6 * (k1 + 2.0 * (k2 + k3) + k4)
        steps += 1
    x = np.zeros(d * d, dtype=complex)
    x[idx] = v
    state = _clip_to_state(L, alg.unvec(x, d))
    log.debug("RK4 converged after %d steps (t=%g, residual %.3e)", steps, steps * dt, res)
    return SteadyStateReport(state, _residual(L, state), None, float("nan"),
                             truncation_tail(state, L.mode_factors), "evolve-rk4", steps)
