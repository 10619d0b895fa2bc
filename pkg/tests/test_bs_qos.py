import numpy as np
import pytest

import risbf as rb
from conftest import make_instance, uplink_unicast_min_power
from risbf.bs_qos import build_covariance
from risbf.scenario import ChannelSet


class TestCovariance:
    def test_hermitian_and_reduces_to_identity(self):
        scenario, channels = make_instance(1, n_ris=4, group_sizes=(1, 1))
        e = np.exp(2j * np.pi * np.random.default_rng(0).random(4))
        r = build_covariance(scenario, channels, e, np.zeros(2))
        assert np.allclose(r, np.eye(scenario.n_antennas))
        r = build_covariance(scenario, channels, e, np.ones(2))
        assert np.allclose(r, r.conj().T)
        assert np.all(np.linalg.eigvalsh(r) >= 1.0 - 1e-12)

    def test_negative_multipliers_rejected(self):
        scenario, channels = make_instance(1, n_ris=4, group_sizes=(1, 1))
        with pytest.raises(ValueError):
            build_covariance(scenario, channels, np.ones(4, complex), np.array([1.0, -1.0]))


class TestFixedPoint:
    def test_converges_and_satisfies_equation(self):
        scenario, channels = make_instance(2, n_ris=4, group_sizes=(1, 1, 1), sinr_db=6.0)
        e = np.exp(2j * np.pi * np.random.default_rng(1).random(4))
        lam, converged = rb.fixed_point_multipliers(scenario, channels, e)
        assert converged
        h = rb.effective_channels(channels, e)
        r = build_covariance(scenario, channels, e, lam)
        for u in range(3):
            t = np.real(h[u].conj() @ np.linalg.solve(r, h[u]))
            expect = 1.0 / ((1.0 + scenario.sinr_targets[u]) * t)
            assert lam[u] == pytest.approx(expect, rel=1e-8)

    def test_zero_channel_raises(self):
        channels = ChannelSet(h_bs_ris=np.zeros((0, 2), complex),
                              h_direct=np.array([[1.0, 0.0], [0.0, 0.0]], complex),
                              h_ris_user=np.zeros((2, 0), complex))
        scenario = rb.Scenario(2, 0, (1, 1), 1.0, 1.0)
        with pytest.raises(rb.InfeasibleError):
            rb.fixed_point_multipliers(scenario, channels, np.zeros(0, complex))


class TestUnicast:
    def test_targets_met_with_equality_and_power_optimal(self):
        scenario, channels = make_instance(3, n_antennas=4, n_ris=4, group_sizes=(1, 1))
        e = np.exp(2j * np.pi * np.random.default_rng(2).random(4))
        lam, _ = rb.fixed_point_multipliers(scenario, channels, e)
        w, power = rb.solve_unicast_qos(scenario, channels, e, lam)
        sinrs = rb.all_sinrs(scenario, channels, rb.BeamformerSet(w=w, e=e))
        assert np.allclose(sinrs, scenario.sinr_targets, rtol=1e-9)
        oracle = uplink_unicast_min_power(rb.effective_channels(channels, e),
                                          scenario.sinr_targets, scenario.noise_power)
        assert power == pytest.approx(oracle, rel=1e-6)

    def test_infeasible_instance_raises(self):
        # two users sharing one antenna cannot both reach a 10 dB SINR
        channels = ChannelSet(h_bs_ris=np.zeros((0, 1), complex),
                              h_direct=np.array([[1.0], [1.0]], complex),
                              h_ris_user=np.zeros((2, 0), complex))
        scenario = rb.Scenario(1, 0, (1, 1), 10.0, 1.0)
        lam, _ = rb.fixed_point_multipliers(scenario, channels, np.zeros(0, complex),
                                            rb.QosSolverConfig(max_fixed_point_iters=50))
        with pytest.raises(rb.InfeasibleError):
            rb.solve_unicast_qos(scenario, channels, np.zeros(0, complex), lam)

    def test_rejects_multicast_groups(self):
        scenario, channels = make_instance(4, n_ris=4, group_sizes=(2, 1))
        with pytest.raises(ValueError):
            rb.solve_unicast_qos(scenario, channels, np.ones(4, complex), np.ones(3))


class TestMulticastSca:
    def test_solution_is_feasible(self):
        scenario, channels = make_instance(5, n_antennas=8, n_ris=16, group_sizes=(2, 2))
        e = np.exp(2j * np.pi * np.random.default_rng(3).random(16))
        w, power, status = rb.solve_multicast_qos(scenario, channels, e)
        report = rb.check_qos_feasible(scenario, channels, rb.BeamformerSet(w=w, e=e),
                                       tol=1e-9)
        assert report.feasible
        assert power == pytest.approx(rb.total_power(w))
        assert status in ("converged", "max-iters")

    def test_single_user_groups_match_closed_form(self):
        scenario, channels = make_instance(6, n_antennas=8, n_ris=16, group_sizes=(1, 1))
        e = np.exp(2j * np.pi * np.random.default_rng(4).random(16))
        _, p_sca, _ = rb.solve_multicast_qos(scenario, channels, e)
        lam, _ = rb.fixed_point_multipliers(scenario, channels, e)
        _, p_exact = rb.solve_unicast_qos(scenario, channels, e, lam)
        assert p_sca >= p_exact * (1 - 1e-9)
        assert p_sca == pytest.approx(p_exact, rel=0.02)

    def test_warm_start_never_hurts_feasibility(self):
        scenario, channels = make_instance(7, n_antennas=8, n_ris=16, group_sizes=(2, 2))
        e = np.exp(2j * np.pi * np.random.default_rng(5).random(16))
        a0 = np.full(4, 0.5, dtype=complex)
        w, _, _ = rb.solve_multicast_qos(scenario, channels, e, a_init=a0)
        assert rb.check_qos_feasible(scenario, channels, rb.BeamformerSet(w=w, e=e),
                                     tol=1e-9).feasible

    def test_dispatch_uses_closed_form_for_unicast(self):
        scenario, channels = make_instance(8, n_antennas=8, n_ris=16, group_sizes=(1, 1))
        e = np.exp(2j * np.pi * np.random.default_rng(6).random(16))
        w, power, status = rb.solve_qos(scenario, channels, e)
        sinrs = rb.all_sinrs(scenario, channels, rb.BeamformerSet(w=w, e=e))
        assert np.allclose(sinrs, scenario.sinr_targets, rtol=1e-9)
        assert status == "converged"
