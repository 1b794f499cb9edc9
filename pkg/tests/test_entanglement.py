import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from squeezent import algebra as alg
from squeezent.algebra import DensityMatrix, StateVector
from squeezent.entanglement import (binary_entropy, concurrence, entanglement_entropy, entanglement_report,
                                    eof_from_concurrence, eof_two_qubit, squeezed_state_eof)
from squeezent.errors import InvalidStateError
from squeezent.models import dark_state, network_dark_state

from conftest import random_density, random_unitary

BELL = StateVector.normalized((2, 2), [1, 0, 0, 1])


def test_concurrence_basic():
    assert concurrence(BELL.dm()) == pytest.approx(1.0, abs=1e-14)
    assert concurrence(StateVector.basis((2, 2), (0, 1)).dm()) == pytest.approx(0.0, abs=1e-14)


@pytest.mark.parametrize("N", [0.3, 1.0, 4.0])
def test_dark_state_concurrence(N):
    assert concurrence(dark_state(N).dm()) == pytest.approx(2 * np.sqrt(N * (N + 1)) / (2 * N + 1), abs=1e-12)


def test_dark_state_eof():
    assert concurrence(dark_state(1).dm()) == pytest.approx(0.942809, abs=1e-6)
    assert eof_two_qubit(dark_state(1).dm()) == pytest.approx(0.918296, abs=1e-6)


def test_mixed_and_werner():
    assert eof_two_qubit(DensityMatrix((2, 2), np.eye(4) / 4)) == 0.0
    p = 1 / 3
    werner = p * BELL.dm().matrix + (1 - p) * np.eye(4) / 4
    assert eof_two_qubit(werner) < 1e-10
    # PPT oracle: partial transpose of the boundary state has a zero eigenvalue
    pt = werner.reshape(2, 2, 2, 2).transpose(0, 3, 2, 1).reshape(4, 4)
    assert np.min(np.linalg.eigvalsh(pt)) == pytest.approx(0.0, abs=1e-12)
    assert eof_two_qubit(0.5 * BELL.dm().matrix + 0.5 * np.eye(4) / 4) > 0


def test_wrong_shape_rejected():
    with pytest.raises(InvalidStateError):
        concurrence(DensityMatrix((2, 3), np.eye(6) / 6))
    with pytest.raises(InvalidStateError):
        concurrence(np.eye(3))


def test_batched_concurrence(rng):
    stack = np.array([random_density(rng, 4) for _ in range(5)])
    np.testing.assert_allclose(concurrence(stack), [concurrence(m) for m in stack], atol=1e-14)


def test_report_consistency():
    r = entanglement_report(dark_state(0.5).dm())
    assert r.method == "wootters"
    assert r.eof_bits == pytest.approx(binary_entropy((1 + np.sqrt(1 - r.concurrence ** 2)) / 2))
    assert 0 <= r.concurrence <= 1 and 0 <= r.eof_bits <= 1


def test_binary_entropy_edges():
    assert binary_entropy(0) == 0 and binary_entropy(1) == 0
    assert binary_entropy(0.5) == pytest.approx(1.0)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_local_unitary_invariance(seed):
    r = np.random.default_rng(seed)
    rho = random_density(r, 4, rank=int(r.integers(1, 5)))
    U = np.kron(random_unitary(r, 2), random_unitary(r, 2))
    assert concurrence(U @ rho @ U.conj().T) == pytest.approx(concurrence(rho), abs=1e-10)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_pure_state_consistency(seed):
    r = np.random.default_rng(seed)
    psi = StateVector.normalized((2, 2), r.normal(size=4) + 1j * r.normal(size=4))
    assert eof_two_qubit(psi.dm()) == pytest.approx(entanglement_entropy(psi, [0]), abs=1e-10)


def test_eof_strictly_increasing_in_concurrence():
    c = np.linspace(1e-4, 1, 2000)
    e = eof_from_concurrence(c)
    assert np.all(np.diff(e) > 0)
    assert np.all((e >= 0) & (e <= 1))


def test_entanglement_entropy_examples():
    assert entanglement_entropy(BELL, [0]) == pytest.approx(1.0)
    assert entanglement_entropy(StateVector.basis((2, 3), (1, 2)), [1]) == 0.0
    with pytest.raises(InvalidStateError):
        entanglement_entropy(BELL.dm(), [0])


@pytest.mark.parametrize("N", [0.5, 1.0, 50.0])
def test_network_bipartition_entropy(N):
    psi = network_dark_state(N)
    expected = binary_entropy((N + 1) / (2 * N + 1))
    assert entanglement_entropy(psi, [0]) == pytest.approx(expected, abs=1e-12)
    assert entanglement_entropy(psi, [2]) == pytest.approx(expected, abs=1e-12)
    if N == 50.0:
        assert entanglement_entropy(psi, [0]) > 0.999
        # B holds two ebits against A and C together
        assert entanglement_entropy(psi, [1]) == pytest.approx(2 * expected, abs=1e-12)


def test_squeezed_eof_values():
    assert squeezed_state_eof(0) == 0.0
    assert squeezed_state_eof(1) == pytest.approx(2.0)
    with pytest.raises(ValueError):
        squeezed_state_eof(-1)


def test_squeezed_eof_matches_truncated_vector():
    N = 0.4
    for n, tol in ((8, 1e-2), (20, 1e-6)):
        psi = alg.two_mode_squeezed_vacuum(N, n)
        assert entanglement_entropy(psi, [0]) == pytest.approx(squeezed_state_eof(N), abs=tol)
