import math

import numpy as np
import pytest

from squeezent import algebra as alg
from squeezent import experiments as ex
from squeezent.entanglement import eof_two_qubit, squeezed_state_eof
from squeezent.errors import ConfigError, ModelError, TruncationError
from squeezent.models import HilbertSpace, Liouvillian, PhysicalParams, SqueezingParams, squeezed_bath_dissipator
from squeezent.steady import steady_state_direct


def test_parse_grid_forms():
    assert ex.parse_grid("0:0.5:0.1") == (0.0, 0.1, 0.2, 0.3, 0.4, 0.5)
    assert len(ex.parse_grid("0:0.5:0.01")) == 51
    assert len(ex.parse_grid("0.1:2.0:0.05")) == 39
    assert ex.parse_grid("0.1, 0.5,2") == (0.1, 0.5, 2.0)
    assert ex.parse_grid("3") == (3.0,)
    for bad in ("1:0:0.1", "0:1", "a,b", "0:1:0"):
        with pytest.raises(ConfigError):
            ex.parse_grid(bad)


def test_default_config():
    cfg = ex.SweepConfig()
    assert cfg.model == "effective" and cfg.M == "perfect" and cfg.quad_order == 15
    assert cfg.epsilon[0] == 0 and cfg.epsilon[-1] == 0.5
    assert cfg.N[0] == 0.1 and cfg.N[-1] == 2.0


def test_load_config_file_and_overrides(tmp_path):
    f = tmp_path / "run.cfg"
    f.write_text("# comment\nepsilon = 0.1\nN = 0.5,0.6  # trailing\n\nfilter = false\n", encoding="utf-8")
    cfg = ex.load_config(f, {"N": "0.7"})
    assert cfg.epsilon == (0.1,) and cfg.N == (0.7,) and cfg.filter is False


@pytest.mark.parametrize("over", [{"bogus": "1"}, {"tol": "-1"}, {"quad_order": "2"}, {"model": "other"},
                                  {"epsilon": "nan"}, {"N": "-0.1"}, {"filter": "maybe"}, {"M": "abc"},
                                  {"n_max": "x"}, {"solver": "magic"}])
def test_invalid_config(over):
    with pytest.raises(ConfigError):
        ex.load_config(None, over)


def test_m_policy_checked_against_grid():
    ex.load_config(None, {"N": "1,2", "M": "1.4"})
    with pytest.raises(ConfigError):
        ex.load_config(None, {"N": "0.1,2", "M": "1.4"})


def test_config_file_errors(tmp_path):
    f = tmp_path / "bad.cfg"
    f.write_text("epsilon 0.1\n")
    with pytest.raises(ConfigError):
        ex.load_config(f)
    with pytest.raises(ConfigError):
        ex.load_config(tmp_path / "missing.cfg")


def test_csv_format():
    text = ex.rows_to_csv([{"a": 1 / 3, "b": 2, "c": True, "d": None, "e": "x"}])
    assert text == "a,b,c,d,e\n0.333333333333,2,1,,x\n"
    assert "\r" not in text


def test_sweep_rows_and_marker():
    cfg = ex.load_config(None, {"epsilon": "0,0.1", "N": "0.3:0.9:0.1"})
    rows = ex.sweep_epsilon(cfg)
    assert len(rows) == 2 * 7
    assert [r.epsilon for r in rows[:7]] == [0.0] * 7
    for eps in (0.0, 0.1):
        block = [r for r in rows if r.epsilon == eps]
        assert sum(r.optimal_N for r in block) == 1
        assert all(math.isfinite(v) for r in block for v in r.as_dict().values() if isinstance(v, float))
    summary = ex.optimum_by_epsilon(rows)
    assert summary[1]["N_opt"] == pytest.approx(0.6)
    assert summary[1]["eof_filtered_at_N_opt"] > summary[1]["eof_opt"]


def test_sweep_rejects_other_models():
    with pytest.raises(ConfigError):
        ex.sweep_epsilon(ex.load_config(None, {"model": "full"}))


def test_sweep_parallel_matches_serial():
    base = {"epsilon": "0,0.2", "N": "0.2,0.8,1.5"}
    serial = ex.sweep_epsilon(ex.load_config(None, base))
    parallel = ex.sweep_epsilon(ex.load_config(None, {**base, "workers": "2"}))
    assert ex.rows_to_csv(serial) == ex.rows_to_csv(parallel)


def test_eof_grows_with_n_without_emission():
    rows = ex.sweep_epsilon(ex.load_config(None, {"epsilon": "0", "N": "0.1,0.5,1,5,50", "filter": "0"}))
    eofs = [r.eof for r in rows]
    assert all(np.diff(eofs) > 0)
    assert eofs[-1] > 0.99


def test_eof_nonincreasing_in_epsilon():
    cfg = ex.SweepConfig(filter=False)
    rows = ex.sweep_epsilon(cfg)
    for N in cfg.N:
        e = [r.eof for r in rows if r.N == N]
        assert all(np.diff(e) <= 1e-12)


def test_signed_coupling_equals_z_conjugation():
    eps, sq, ga, gb = 0.1, SqueezingParams.perfect(0.5), 0.8, -0.6
    sa, sb = (alg.embed(alg.sigma_minus(), i, (2, 2)).full() for i in (0, 1))
    L = squeezed_bath_dissipator(sa, sb, (2 * ga * ga * (sq.N + 1) + eps, 2 * gb * gb * (sq.N + 1) + eps),
                                 (2 * ga * ga * sq.N, 2 * gb * gb * sq.N), -2 * ga * gb * sq.M)
    ref = steady_state_direct(Liouvillian(HilbertSpace((2, 2)), L, "signed")).state
    got = ex.effective_steady_state(eps, sq, ga, gb).state
    assert ref.trace_distance(got) < 1e-12


def test_position_average_zero_spread_exact():
    row = ex.sweep_epsilon(ex.load_config(None, {"epsilon": "0.1", "N": "0.5"}))[0]
    e, ef = ex.position_average(0.0, 0.5, 0.1)
    assert e == row.eof
    e_sym, ef_sym = ex.position_average(0.0, 0.5, 0.1, filter_scan="symmetric")
    assert ef_sym == row.eof_filtered
    assert ef == pytest.approx(ef_sym, abs=1e-7)


def test_position_average_monotone_in_spread():
    vals = [ex.position_average(s, 0.5, 0.1) for s in (0, 0.1, 0.2, 0.3, 0.4, 0.5)]
    e, ef = np.array(vals).T
    assert np.all(np.diff(e) <= 1e-12)
    assert np.all(np.diff(ef) <= 1e-9)
    assert np.all(ef >= e)


def test_quadrature_order_doubling():
    a = ex.averaged_state(0.3, 0.5, 0.1, 15)
    b = ex.averaged_state(0.3, 0.5, 0.1, 30)
    assert abs(eof_two_qubit(a) - eof_two_qubit(b)) < 1e-6
    with pytest.raises(ConfigError):
        ex.position_average(0.3, 0.5, 0.1, quad_order=2)
    with pytest.raises(ValueError):
        ex.averaged_state(-0.1, 0.5, 0.1)


def test_transfer_curve():
    rows = ex.transfer_curve(ex.load_config(None, {"epsilon": "0", "N": "1,0,0.1"}))
    assert [r["N"] for r in rows] == [0.0, 0.1, 1.0]
    assert rows[0]["eof"] == 0 and rows[0]["squeezed_eof"] == 0
    assert rows[1]["eof"] / rows[1]["squeezed_eof"] > rows[2]["eof"] / rows[2]["squeezed_eof"]
    assert rows[2]["eof"] == pytest.approx(0.9183, abs=1e-4)
    assert rows[2]["squeezed_eof"] == pytest.approx(2.0)
    assert rows[2]["eof_filtered"] >= rows[2]["eof"]
    assert squeezed_state_eof(1e-9) < 1e-7


def test_validate_elimination_no_coupling():
    rep = ex.validate_elimination(PhysicalParams(0.0, 0.0, 1.0, 0.01), SqueezingParams.perfect(0.2), (4,),
                                  tail_tol=None)
    assert rep.distance_g < 1e-8


def test_validate_elimination_truncation_gate():
    phys, sq = PhysicalParams(0.05, 0.05), SqueezingParams.perfect(0.2)
    with pytest.raises(TruncationError) as err:
        ex.validate_elimination(phys, sq, (6,))
    assert err.value.tail > 1e-6
    rep = ex.validate_elimination(phys, sq, (6,), tail_tol=None)
    assert rep.distance_g < 5e-3
    assert rep.ratio > 0


def test_validate_elimination_rejects_asymmetric():
    with pytest.raises(ModelError):
        ex.validate_elimination(PhysicalParams(0.1, 0.05), SqueezingParams.perfect(0.2))


def test_run_network():
    rep = ex.run_network(1.0)
    assert rep.fidelity > 1 - 1e-8
    h = -(2 / 3) * np.log2(2 / 3) - (1 / 3) * np.log2(1 / 3)
    assert rep.entropy_A_BC == pytest.approx(h, abs=1e-10)
    assert rep.entropy_AB_C == pytest.approx(h, abs=1e-10)
    rows = ex.network_rows(rep)
    assert [r["outcome"] for r in rows] == ["00", "11", "+", "-"]
    assert sum(r["probability"] for r in rows) == pytest.approx(1.0)


def test_run_network_vacuum():
    rep = ex.run_network(0.0)
    assert rep.entropy_A_BC == 0 and rep.entropy_AB_C == 0
    assert all(r["eof_AC"] == 0 for r in ex.network_rows(rep))


def test_run_network_with_emission_is_mixed():
    rep = ex.run_network(1.0, epsilon=0.2)
    assert rep.purity < 1 - 1e-6
    assert rep.fidelity < 1


def test_steady_rows_full_model():
    cfg = ex.load_config(None, {"model": "full", "N": "0.05", "epsilon": "0", "n_max": "7", "g": "0.05"})
    rows = ex.steady_rows(cfg)
    assert rows[0]["truncation_tail"] < 1e-6
    assert rows[0]["dark_state_fidelity"] > 1 - 1e-8
    with pytest.raises(TruncationError):
        ex.steady_rows(ex.load_config(None, {"model": "full", "N": "0.3", "epsilon": "0", "n_max": "4"}))
