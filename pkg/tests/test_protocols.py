import numpy as np
import pytest

from squeezent.algebra import DensityMatrix, StateVector
from squeezent.entanglement import eof_two_qubit
from squeezent.errors import FilteredOutError, InvalidStateError
from squeezent.models import PhysicalParams, SqueezingParams, build_effective_me, dark_state, network_dark_state
from squeezent.protocols import (FilterSpec, balancing_filter, bell_type_basis, filter_state, measure_node_B,
                                 optimize_filter)
from squeezent.steady import steady_state_direct

from conftest import random_density, random_unitary


def _steady(eps, N):
    return steady_state_direct(build_effective_me(PhysicalParams.from_epsilon(eps),
                                                  SqueezingParams.perfect(N))).state


def test_filter_spec_range():
    with pytest.raises(ValueError):
        FilterSpec(-0.1, 0.0)
    with pytest.raises(ValueError):
        FilterSpec(0.0, 2.0)
    with pytest.raises(ValueError):
        FilterSpec(0.1, 0.1, target_level=2)


def test_identity_filter(rng):
    rho = DensityMatrix((2, 2), random_density(rng, 4))
    out = filter_state(rho, FilterSpec())
    assert out.success_prob == pytest.approx(1.0, abs=1e-14)
    np.testing.assert_allclose(out.post_state.matrix, rho.matrix, atol=1e-14)


def test_success_prob_is_trace_of_unnormalized(rng):
    rho = DensityMatrix((2, 2), random_density(rng, 4))
    spec = FilterSpec(0.4, 1.1, 1)
    F = spec.kraus()
    out = filter_state(rho, spec)
    assert out.success_prob == pytest.approx(np.trace(F @ rho.matrix @ F.conj().T).real, abs=1e-14)
    assert np.trace(out.post_state.matrix).real == pytest.approx(1.0, abs=1e-14)


def test_filtered_out():
    rho = StateVector.basis((2, 2), (0, 0)).dm()
    with pytest.raises(FilteredOutError):
        filter_state(rho, FilterSpec(np.pi / 2, np.pi / 2, 0))


def test_balancing_dark_state():
    N = 1.0
    spec = balancing_filter(N)
    assert np.cos(spec.theta_a) == pytest.approx(0.5 ** 0.25)
    out = filter_state(dark_state(N).dm(), spec)
    assert out.eof_after == pytest.approx(1.0, abs=1e-12)
    assert out.success_prob == pytest.approx(2 / 3, abs=1e-12)


def test_optimize_bell_is_identity():
    bell = StateVector.normalized((2, 2), [1, 0, 0, 1]).dm()
    spec, out = optimize_filter(bell)
    assert (spec.theta_a, spec.theta_b) == (0.0, 0.0)
    assert out.eof_after == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("N", [0.3, 0.6, 1.0])
def test_optimize_recovers_balancing_angle(N):
    spec, out = optimize_filter(dark_state(N).dm())
    assert spec.target_level == 0
    assert spec.theta_a == pytest.approx(balancing_filter(N).theta_a, abs=1e-4)
    assert out.eof_after == pytest.approx(1.0, abs=1e-9)
    assert out.success_prob == pytest.approx(2 * N / (2 * N + 1), abs=1e-6)


def test_symmetric_and_full_scan_agree():
    rho = _steady(0.1, 0.6)
    s1, o1 = optimize_filter(rho, symmetric=True)
    s2, o2 = optimize_filter(rho, symmetric=False)
    assert o1.eof_after == pytest.approx(o2.eof_after, abs=1e-6)
    assert s2.theta_a == pytest.approx(s2.theta_b, abs=1e-3)


def test_filter_never_decreases_eof():
    for eps in (0.0, 0.1, 0.3, 0.5):
        for N in (0.1, 0.5, 1.0, 2.0):
            rho = _steady(eps, N)
            _, out = optimize_filter(rho)
            assert out.eof_after >= eof_two_qubit(rho) - 1e-12


def test_optimize_rejects_wrong_dims():
    with pytest.raises(InvalidStateError):
        optimize_filter(DensityMatrix((2, 3), np.eye(6) / 6))


def test_node_b_measurement_on_dark_network():
    N = 1.0
    out = {o.label: o for o in measure_node_B(network_dark_state(N))}
    p_pm = N * (N + 1) / (2 * N + 1) ** 2
    assert out["+"].probability == pytest.approx(p_pm, abs=1e-14)
    assert out["-"].probability == pytest.approx(p_pm, abs=1e-14)
    s = 1 / np.sqrt(2)
    plus = StateVector((2, 2), [0, s, s, 0])
    minus = StateVector((2, 2), [0, s, -s, 0])
    assert out["+"].post_state.fidelity(plus) == pytest.approx(1.0, abs=1e-12)
    assert out["-"].post_state.fidelity(minus) == pytest.approx(1.0, abs=1e-12)
    assert eof_two_qubit(out["+"].post_state) == pytest.approx(1.0, abs=1e-12)


def test_node_b_vacuum():
    out = measure_node_B(network_dark_state(0.0))
    assert out[0].probability == pytest.approx(1.0)
    assert eof_two_qubit(out[0].post_state) == 0.0
    assert all(o.post_state is None for o in out[1:])


def test_node_b_completeness_any_basis(rng):
    psi = network_dark_state(0.7)
    for _ in range(5):
        U = random_unitary(rng, 4)
        outs = measure_node_B(psi, U)
        assert sum(o.probability for o in outs) == pytest.approx(1.0, abs=1e-12)
        for o in outs:
            o.post_state.validate()


def test_node_b_reconstructs_marginal():
    rho = network_dark_state(0.7).dm()
    basis, _ = bell_type_basis()
    marg = np.einsum("ajcakc->jk", rho.matrix.reshape(2, 4, 2, 2, 4, 2))
    outs = measure_node_B(rho, basis)
    for vec, o in zip(basis, outs):
        assert o.probability == pytest.approx(np.real(vec.conj() @ marg @ vec), abs=1e-14)


def test_node_b_rejects_bad_basis():
    with pytest.raises(ValueError):
        measure_node_B(network_dark_state(1.0), np.ones((4, 4)))
    with pytest.raises(InvalidStateError):
        measure_node_B(dark_state(1.0))


def test_storage_relabeling_is_identity():
    # |e> -> |g'> keeps the qubit structure: level 1 means either
    rho = _steady(0.1, 0.6)
    out = filter_state(rho, FilterSpec(0.0, 0.0, 1))
    np.testing.assert_array_equal(out.post_state.matrix, rho.matrix)
