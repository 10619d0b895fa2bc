import numpy as np
import pytest

import risbf as rb
from conftest import make_instance
from risbf.mmf import (
    beamformers_from_a,
    build_maps,
    build_r_tilde,
    init_point,
    power_from_a,
    project_joint,
    psa_mmf_solve,
    varphi,
)
from risbf.scenario import ChannelSet


def normalized_mmf_instance(seed, budget=10.0, **kwargs):
    scenario, channels = make_instance(seed, normalize=True,
                                       power_budget=budget, **kwargs)
    return scenario, channels


class TestRTilde:
    def test_hermitian_positive_definite(self):
        scenario, channels = normalized_mmf_instance(40, n_ris=16, group_sizes=(2, 2))
        e0 = np.exp(2j * np.pi * np.random.default_rng(0).random(16))
        r = build_r_tilde(scenario, channels, e0, 10.0)
        assert np.allclose(r, r.conj().T)
        assert np.all(np.linalg.eigvalsh(r) >= 1.0 - 1e-9)

    def test_zero_channel_raises(self):
        channels = ChannelSet(h_bs_ris=np.zeros((0, 2), complex),
                              h_direct=np.array([[1.0, 0.0], [0.0, 0.0]], complex),
                              h_ris_user=np.zeros((2, 0), complex))
        scenario = rb.Scenario(2, 0, (1, 1), 1.0, 1.0, power_budget=1.0)
        with pytest.raises(rb.DegenerateChannelError):
            build_r_tilde(scenario, channels, np.zeros(0, complex), 1.0)


class TestProjection:
    def test_scales_onto_budget_and_clips_disk(self):
        scenario, channels = normalized_mmf_instance(41, n_ris=16, group_sizes=(2, 2))
        rng = np.random.default_rng(1)
        e0 = np.exp(2j * np.pi * rng.random(16))
        maps = build_maps(scenario, channels, e0, 10.0)
        a = 100.0 * (rng.standard_normal(4) + 1j * rng.standard_normal(4))
        e = 3.0 * (rng.standard_normal(16) + 1j * rng.standard_normal(16))
        a_p, e_p = project_joint(scenario, maps, a, e, 10.0)
        assert power_from_a(scenario, maps, a_p) == pytest.approx(10.0)
        assert np.max(np.abs(e_p)) <= 1.0 + 1e-12
        # feasible points are untouched
        a_q, e_q = project_joint(scenario, maps, a_p, e_p, 10.0)
        assert np.allclose(a_q, a_p) and np.allclose(e_q, e_p)

    def test_power_from_a_matches_beamformers(self):
        scenario, channels = normalized_mmf_instance(42, n_ris=16, group_sizes=(2, 1))
        rng = np.random.default_rng(2)
        maps = build_maps(scenario, channels, np.ones(16, complex), 10.0)
        a = rng.standard_normal(3) + 1j * rng.standard_normal(3)
        w = beamformers_from_a(scenario, maps, a)
        assert power_from_a(scenario, maps, a) == pytest.approx(rb.total_power(w))


class TestVarphi:
    def test_matches_direct_sinr_evaluation(self):
        scenario, channels = normalized_mmf_instance(43, n_ris=9, group_sizes=(2, 2))
        rng = np.random.default_rng(3)
        e0 = np.exp(2j * np.pi * rng.random(9))
        maps = build_maps(scenario, channels, e0, 10.0)
        a = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        e = 0.9 * np.exp(2j * np.pi * rng.random(9))
        values, worst, wsinr, reward = varphi(scenario, channels, maps, a, e, 0.1)
        w = beamformers_from_a(scenario, maps, a)
        ref = rb.all_sinrs(scenario, channels, rb.BeamformerSet(w=w, e=e)) / scenario.sinr_targets
        assert np.allclose(values, -(ref + reward))
        assert wsinr == pytest.approx(ref.min())
        assert worst == int(np.argmin(ref))


class TestPsaMmf:
    def test_improves_on_init_and_respects_budget(self):
        scenario, channels = normalized_mmf_instance(44, n_ris=16, group_sizes=(2, 2))
        rng = np.random.default_rng(4)
        e0 = np.exp(2j * np.pi * rng.random(16))
        maps = build_maps(scenario, channels, e0, 10.0)
        a0 = init_point(scenario, channels, maps, 10.0)
        _, _, start, _ = varphi(scenario, channels, maps, a0, e0)
        a, e, wsinr, iters, stalled, _ = psa_mmf_solve(
            scenario, channels, maps, a0, e0, 10.0, rb.MmfConfig(max_iters=1500))
        assert wsinr >= start
        assert power_from_a(scenario, maps, a) <= 10.0 * (1 + 1e-9)
        assert np.max(np.abs(e)) <= 1.0 + 1e-12

    def test_freeze_e_keeps_reflection_fixed(self):
        scenario, channels = normalized_mmf_instance(45, n_ris=9, group_sizes=(1, 1))
        rng = np.random.default_rng(5)
        e0 = np.exp(2j * np.pi * rng.random(9))
        maps = build_maps(scenario, channels, e0, 10.0)
        a0 = init_point(scenario, channels, maps, 10.0)
        _, e, _, _, _, _ = psa_mmf_solve(scenario, channels, maps, a0, e0, 10.0,
                                         rb.MmfConfig(max_iters=300), freeze_e=True)
        assert np.array_equal(e, e0)


class TestSolveMmf:
    def test_full_pipeline_invariants(self):
        scenario, channels = make_instance(46, n_ris=16, group_sizes=(2, 2),
                                           power_budget=10.0)
        res = rb.solve_mmf(scenario, channels, rng=np.random.default_rng(6))
        assert res.beamformers.unit_modulus_error() <= 1e-12
        assert rb.total_power(res.beamformers.w) <= 10.0 * (1 + 1e-9)
        achieved, _ = rb.min_weighted_sinr(scenario, channels, res.beamformers)
        assert achieved == pytest.approx(res.min_weighted_sinr, rel=1e-9)

    def test_requires_power_budget(self):
        scenario, channels = make_instance(47, n_ris=16, group_sizes=(2, 2))
        with pytest.raises(ValueError):
            rb.solve_mmf(scenario, channels, rng=np.random.default_rng(0))

    def test_beats_fixed_phase_baseline_on_average(self):
        gains = []
        for seed in range(3):
            scenario, channels = make_instance(48 + seed, n_ris=64, group_sizes=(2, 2),
                                               power_budget=10.0)
            res = rb.solve_mmf(scenario, channels, rng=np.random.default_rng(seed))
            e = np.exp(2j * np.pi * np.random.default_rng(100 + seed).random(64))
            _, t = rb.mmf_via_qos_bisection(scenario, channels, e, 10.0, tol=1e-3)
            gains.append(res.min_weighted_sinr / t)
        assert np.median(gains) > 1.0


class TestBisectionAndInversion:
    def test_bisection_uses_full_budget_unicast(self):
        scenario, channels = make_instance(50, n_ris=4, group_sizes=(1, 1),
                                           power_budget=10.0)
        e = np.exp(2j * np.pi * np.random.default_rng(7).random(4))
        w, t = rb.mmf_via_qos_bisection(scenario, channels, e, 10.0, tol=1e-6)
        assert rb.total_power(w) == pytest.approx(10.0, rel=1e-3)
        sinrs = rb.all_sinrs(scenario, channels, rb.BeamformerSet(w=w, e=e))
        assert np.allclose(sinrs / scenario.sinr_targets, t, rtol=1e-5)

    def test_inversion_residual_small(self):
        scenario, channels = make_instance(51, n_ris=4, group_sizes=(1, 1, 1))
        resid = rb.qos_mmf_inversion_check(scenario, channels,
                                           np.ones(4, complex), 10.0)
        assert resid <= 1e-3
