import numpy as np
import pytest

import risbf as rb
from conftest import make_instance
from risbf.ambf import final_processing, random_phases, solve_qos_no_ris, solve_qos_random_ris
from risbf.scenario import ChannelSet


class TestAmbfSolve:
    def test_unicast_beats_baselines(self):
        scenario, channels = make_instance(30, n_antennas=8, n_ris=64, group_sizes=(1, 1))
        res = rb.ambf_solve(scenario, channels, rng=np.random.default_rng(0))
        rnd = solve_qos_random_ris(scenario, channels, np.random.default_rng(1))
        bare = solve_qos_no_ris(scenario, channels)
        assert res.status == "converged"
        assert res.power < rnd.power
        assert res.power < bare.power

    def test_returns_feasible_unit_modulus_solution(self):
        scenario, channels = make_instance(31, n_antennas=8, n_ris=16, group_sizes=(2, 2))
        res = rb.ambf_solve(scenario, channels, rng=np.random.default_rng(2))
        assert res.beamformers.unit_modulus_error() <= 1e-12
        report = rb.check_qos_feasible(scenario, channels, res.beamformers, tol=1e-6)
        assert report.feasible

    def test_power_trace_strictly_decreasing(self):
        scenario, channels = make_instance(32, n_antennas=8, n_ris=16, group_sizes=(2, 2))
        res = rb.ambf_solve(scenario, channels, rng=np.random.default_rng(3))
        trace = res.power_trace
        assert all(b < a for a, b in zip(trace, trace[1:]))
        assert res.power_relaxed == pytest.approx(trace[-1])

    def test_deterministic_given_e0(self):
        scenario, channels = make_instance(33, n_antennas=8, n_ris=16, group_sizes=(1, 1))
        e0 = random_phases(16, np.random.default_rng(4))
        a = rb.ambf_solve(scenario, channels, e0=e0)
        b = rb.ambf_solve(scenario, channels, e0=e0)
        assert a.power == b.power
        assert np.array_equal(a.beamformers.e, b.beamformers.e)

    def test_infeasible_first_round_reports_status(self):
        channels = ChannelSet(h_bs_ris=np.zeros((0, 1), complex),
                              h_direct=np.array([[1.0], [1.0]], complex),
                              h_ris_user=np.zeros((2, 0), complex))
        scenario = rb.Scenario(1, 0, (1, 1), 10.0, 1.0)
        res = rb.ambf_solve(scenario, channels, e0=np.zeros(0, complex))
        assert res.status == "infeasible"
        assert np.isnan(res.power)
        assert res.ao_iterations == 0

    def test_config_validation(self):
        with pytest.raises(ValueError):
            rb.AmbfConfig(max_ao_iters=0)
        with pytest.raises(ValueError):
            rb.AmbfConfig(ao_tol=0.0)


class TestFinalProcessing:
    def test_projection_then_resolve_meets_targets(self):
        scenario, channels = make_instance(34, n_antennas=8, n_ris=16, group_sizes=(1, 1))
        rng = np.random.default_rng(5)
        e_relaxed = 0.7 * random_phases(16, rng)
        e_final, w_final, power = final_processing(scenario, channels, e_relaxed)
        assert np.allclose(np.abs(e_final), 1.0)
        sinrs = rb.all_sinrs(scenario, channels, rb.BeamformerSet(w=w_final, e=e_final))
        assert np.all(sinrs / scenario.sinr_targets >= 1.0 - 1e-9)
        assert power == pytest.approx(rb.total_power(w_final))


class TestBaselines:
    def test_no_ris_ignores_ris_channels(self):
        scenario, channels = make_instance(35, n_antennas=8, n_ris=16, group_sizes=(1, 1))
        res = solve_qos_no_ris(scenario, channels)
        assert res.beamformers.e.size == 0
        doubled = ChannelSet(h_bs_ris=2.0 * channels.h_bs_ris,
                             h_direct=channels.h_direct.copy(),
                             h_ris_user=channels.h_ris_user.copy())
        assert solve_qos_no_ris(scenario, doubled).power == pytest.approx(res.power)

    def test_random_ris_uses_unit_modulus_phases(self):
        scenario, channels = make_instance(36, n_antennas=8, n_ris=16, group_sizes=(1, 1))
        res = solve_qos_random_ris(scenario, channels, np.random.default_rng(6))
        assert np.allclose(np.abs(res.beamformers.e), 1.0)
        report = rb.check_qos_feasible(scenario, channels, res.beamformers, tol=1e-9)
        assert report.feasible
