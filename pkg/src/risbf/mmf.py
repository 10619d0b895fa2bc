"""Max-min-fair SINR optimization under a transmit power budget.

The joint variable is x = (a, e): low-dimensional beamforming weights a
and the RIS reflection vector e.  Beamformers are restricted to the
subspace w_i = C_i a_i where C_i maps through the inverse of an
approximate covariance built once at the initial reflection vector and
kept fixed.  A projected subgradient ascent then raises the worst
weighted SINR; the power budget is enforced by scaling a and the relaxed
RIS elements are kept inside the unit disk.  Final processing snaps e to
unit modulus and refines a alone.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .bs_qos import QosSolverConfig, solve_multicast_qos, solve_qos
from .errors import DegenerateChannelError, InfeasibleError
from .model import BeamformerSet, Scenario, effective_channels, phase_project, total_power
from .ris_psa import project_unit_disk
from .scenario import ChannelSet


@dataclass(frozen=True)
class MmfConfig:
    penalty: float = 0.1
    step_a: float = 1.0
    step_e: float = 10.0
    max_iters: int = 4000
    stall_tol: float = 1e-6
    stall_window: int = 200
    max_step_decays: int = 4
    qos: QosSolverConfig = QosSolverConfig()

    def __post_init__(self):
        if self.penalty < 0:
            raise ValueError("penalty must be nonnegative")
        if self.step_a <= 0 or self.step_e <= 0:
            raise ValueError("step sizes must be positive")
        if self.stall_window < 1:
            raise ValueError("stall_window must be at least 1")


@dataclass
class PrecomputedMaps:
    """Frozen weight-to-beamformer maps C_i = R_tilde^{-1} H_i(e0)."""

    e0: np.ndarray
    c_maps: list  # G arrays of shape (N, K_i)
    gram: list  # G arrays C_i^H C_i, for fast power evaluation


@dataclass
class MmfResult:
    beamformers: BeamformerSet
    min_weighted_sinr: float
    min_weighted_sinr_relaxed: float
    e_relaxed: np.ndarray
    a: np.ndarray
    iterations: int
    stalled: bool
    trace: list = field(default_factory=list)


def build_r_tilde(scenario: Scenario, channels: ChannelSet, e0: np.ndarray,
                  power_budget: float) -> np.ndarray:
    """Approximate transmit covariance at full power with equalized channels.

    Each user channel is rescaled to unit average entry power before the
    outer-product sum, and the harmonic mean of the per-user gains sets
    the overall loading.  This keeps the matrix well conditioned across
    the large dynamic range of path losses.
    """
    h = effective_channels(channels, e0)
    n = scenario.n_antennas
    beta = np.sum(np.abs(h) ** 2, axis=1) / n
    if np.any(beta == 0):
        raise DegenerateChannelError("user with zero equivalent channel")
    g = h / np.sqrt(beta)[:, None]
    beta_h = scenario.n_users / np.sum(1.0 / beta)
    load = power_budget * beta_h / (scenario.noise_power * scenario.n_users)
    return np.eye(n, dtype=complex) + load * (g.T @ g.conj())


def build_maps(scenario: Scenario, channels: ChannelSet, e0: np.ndarray,
               power_budget: float) -> PrecomputedMaps:
    """Build and freeze the per-group weight-to-beamformer maps at e0."""
    r = build_r_tilde(scenario, channels, e0, power_budget)
    h = effective_channels(channels, e0)
    c_maps = [np.linalg.solve(r, h[scenario.group_slice(i)].T)
              for i in range(scenario.n_groups)]
    return PrecomputedMaps(e0=np.asarray(e0, dtype=complex).copy(),
                           c_maps=c_maps, gram=[c.conj().T @ c for c in c_maps])


def beamformers_from_a(scenario: Scenario, maps: PrecomputedMaps, a: np.ndarray) -> np.ndarray:
    w = np.zeros((scenario.n_groups, scenario.n_antennas), dtype=complex)
    for i in range(scenario.n_groups):
        w[i] = maps.c_maps[i] @ a[scenario.group_slice(i)]
    return w


def power_from_a(scenario: Scenario, maps: PrecomputedMaps, a: np.ndarray) -> float:
    return float(sum(np.real(a[s].conj() @ (maps.gram[i] @ a[s]))
                     for i, s in ((i, scenario.group_slice(i)) for i in range(scenario.n_groups))))


def project_joint(scenario: Scenario, maps: PrecomputedMaps, a: np.ndarray,
                  e: np.ndarray, power_budget: float) -> tuple[np.ndarray, np.ndarray]:
    """Scale a back onto the power budget and clip e into the unit disk."""
    p = power_from_a(scenario, maps, a)
    if p > power_budget:
        a = a * np.sqrt(power_budget / p)
    return a, project_unit_disk(e)


def varphi(scenario: Scenario, channels: ChannelSet, maps: PrecomputedMaps,
           a: np.ndarray, e: np.ndarray, penalty: float = 0.1):
    """Per-user penalized objectives -(SINR/gamma + penalty ||e||^2 / M).

    Returns (values, worst_user, min_weighted_sinr, norm_reward).
    """
    h = effective_channels(channels, e)
    w = beamformers_from_a(scenario, maps, a)
    x = np.abs(w.conj() @ h.T) ** 2
    grp = scenario.group_of_user
    users = np.arange(scenario.n_users)
    sig = x[grp, users]
    interference = x.sum(axis=0) - sig
    wsinr = sig / (interference + scenario.noise_power) / scenario.sinr_targets
    reward = penalty * float(np.real(e.conj() @ e)) / max(e.size, 1)
    values = -(wsinr + reward)
    worst = int(np.argmax(values))
    return values, worst, float(wsinr[worst]), reward


def grad_a_varphi(scenario: Scenario, channels: ChannelSet, maps: PrecomputedMaps,
                  a: np.ndarray, e: np.ndarray, user: int) -> np.ndarray:
    """Conjugate Wirtinger gradient over a of the user's objective."""
    h_u = effective_channels(channels, e)[user]
    w = beamformers_from_a(scenario, maps, a)
    s = w.conj() @ h_u  # (G,) of w_j^H h_u
    g_u = int(scenario.group_of_user[user])
    sig = float(np.abs(s[g_u]) ** 2)
    interference = float(np.sum(np.abs(s) ** 2)) - sig + scenario.noise_power
    gamma = scenario.sinr_targets[user]
    grad = np.zeros(scenario.n_users, dtype=complex)
    for j in range(scenario.n_groups):
        b = maps.c_maps[j].conj().T @ h_u  # C_j^H h_u, (K_j,)
        block = b * np.conj(s[j])  # gradient of |a_j^H b|^2 wrt a_j^*
        if j == g_u:
            grad[scenario.group_slice(j)] = -block / (gamma * interference)
        else:
            grad[scenario.group_slice(j)] = sig * block / (gamma * interference ** 2)
    return grad


def grad_e_varphi(scenario: Scenario, channels: ChannelSet, maps: PrecomputedMaps,
                  a: np.ndarray, e: np.ndarray, user: int, penalty: float = 0.1) -> np.ndarray:
    """Conjugate Wirtinger gradient over e of the user's penalized objective."""
    if e.size == 0:
        return np.zeros(0, dtype=complex)
    h_u = effective_channels(channels, e)[user]
    w = beamformers_from_a(scenario, maps, a)
    s = w.conj() @ h_u
    g_u = int(scenario.group_of_user[user])
    sig = float(np.abs(s[g_u]) ** 2)
    interference = float(np.sum(np.abs(s) ** 2)) - sig + scenario.noise_power
    gamma = scenario.sinr_targets[user]
    # q_j = G_u^H w_j (w_j^H h_u)
    t = w.conj() @ channels.cascaded[user]  # (G, M), rows w_j^H G_u
    q = np.conj(t) * s[:, None]
    cross = q.sum(axis=0) - q[g_u]
    grad_sinr = (interference * q[g_u] - sig * cross) / interference ** 2
    return -grad_sinr / gamma - (penalty / e.size) * e


def psa_mmf_solve(scenario: Scenario, channels: ChannelSet, maps: PrecomputedMaps,
                  a0: np.ndarray, e0: np.ndarray, power_budget: float,
                  config: MmfConfig = MmfConfig(), freeze_e: bool = False,
                  keep_trace: bool = False):
    """Joint projected subgradient ascent from (a0, e0); best iterate wins.

    When the best objective stops improving over a stall window, the step
    sizes are halved and the ascent restarts from the best point; after
    max_step_decays such restarts the solve is declared stalled.
    Returns (a, e, min_weighted_sinr, iterations, stalled, trace).
    """
    a, e = project_joint(scenario, maps, np.asarray(a0, dtype=complex).copy(),
                         np.asarray(e0, dtype=complex).copy(), power_budget)
    penalty = config.penalty
    _, worst, wsinr, reward = varphi(scenario, channels, maps, a, e, penalty)
    best = (a.copy(), e.copy(), wsinr)
    best_obj = wsinr + reward
    window_anchor = best_obj
    anchor_iter = 0
    stalled = False
    trace: list = []
    it = 0
    step_a, step_e = config.step_a, config.step_e
    decays = 0

    for it in range(1, config.max_iters + 1):
        ga = grad_a_varphi(scenario, channels, maps, a, e, worst)
        a = a - step_a * ga
        if not freeze_e and e.size:
            ge = grad_e_varphi(scenario, channels, maps, a, e, worst, penalty)
            e = e - step_e * ge
        a, e = project_joint(scenario, maps, a, e, power_budget)
        _, worst, wsinr, reward = varphi(scenario, channels, maps, a, e, penalty)
        obj = wsinr + reward
        if obj > best_obj:
            best_obj = obj
            best = (a.copy(), e.copy(), wsinr)
        if keep_trace:
            trace.append((it, obj, wsinr))
        if it - anchor_iter >= config.stall_window:
            if best_obj - window_anchor <= config.stall_tol * max(abs(window_anchor), 1e-12):
                if decays >= config.max_step_decays:
                    stalled = True
                    break
                decays += 1
                step_a *= 0.5
                step_e *= 0.5
                a, e = best[0].copy(), best[1].copy()
                _, worst, wsinr, reward = varphi(scenario, channels, maps, a, e, penalty)
            window_anchor = best_obj
            anchor_iter = it

    a_best, e_best, wsinr_best = best
    return a_best, e_best, wsinr_best, it, stalled, trace


def init_point(scenario: Scenario, channels: ChannelSet, maps: PrecomputedMaps,
               power_budget: float) -> np.ndarray:
    """Equal-weight start scaled onto the power budget."""
    a = np.ones(scenario.n_users, dtype=complex)
    p = power_from_a(scenario, maps, a)
    if p <= 0:
        raise DegenerateChannelError("frozen maps produce zero-power beamformers")
    return a * np.sqrt(power_budget / p)


def mmf_via_qos_bisection(scenario: Scenario, channels: ChannelSet, e: np.ndarray,
                          power_budget: float,
                          qos_config: QosSolverConfig = QosSolverConfig(),
                          tol: float = 1e-4, max_iters: int = 60):
    """Max-min SINR at fixed reflection vector by inverting the QoS problem.

    Bisects a common scale t on the SINR targets until the minimum power
    of the QoS problem with targets t * gamma matches the budget.  Returns
    (w, t); by the monotonic coupling of the two problems t is the
    max-min weighted SINR the BS can reach at this e.
    """

    a_warm = None

    def qos_power(t):
        # successive probes sit close together; warm-starting the SCA on the
        # previous probe's weights cuts most of its rounds
        nonlocal a_warm
        sc_t = scenario.with_targets(t * scenario.sinr_targets)
        try:
            if scenario.unicast:
                w, p, _ = solve_qos(sc_t, channels, e, qos_config)
            else:
                w, p, _, a_warm = solve_multicast_qos(sc_t, channels, e, qos_config,
                                                      a_init=a_warm, full_output=True)
        except InfeasibleError:
            return None, np.inf
        return w, p

    t_lo, t_hi = 1.0, 1.0
    w_lo, p = qos_power(1.0)
    if p <= power_budget:
        while True:
            t_hi *= 2.0
            w, p = qos_power(t_hi)
            if p > power_budget or t_hi > 1e12:
                break
            t_lo, w_lo = t_hi, w
    else:
        while True:
            t_lo /= 2.0
            w, p = qos_power(t_lo)
            if p <= power_budget:
                w_lo = w
                break
            if t_lo < 1e-12:
                raise InfeasibleError("power budget unreachable even at tiny targets")
    if w_lo is None:
        raise InfeasibleError("no feasible point found during bisection")

    for _ in range(max_iters):
        if (t_hi - t_lo) <= tol * t_lo:
            break
        t_mid = 0.5 * (t_lo + t_hi)
        w, p = qos_power(t_mid)
        if p <= power_budget:
            t_lo, w_lo = t_mid, w
        else:
            t_hi = t_mid
    return w_lo, t_lo


def qos_mmf_inversion_check(scenario: Scenario, channels: ChannelSet, e: np.ndarray,
                            power_budget: float,
                            qos_config: QosSolverConfig = QosSolverConfig(),
                            tol: float = 1e-5) -> float:
    """Round-trip residual between the QoS and max-min problems at fixed e.

    Solves the max-min problem by bisection, feeds the achieved level t
    back into the QoS problem as a common target scale, and returns the
    relative gap between the resulting minimum power and the budget.
    """
    _, t = mmf_via_qos_bisection(scenario, channels, e, power_budget,
                                 qos_config, tol=tol)
    _, p, _ = solve_qos(scenario.with_targets(t * scenario.sinr_targets),
                        channels, e, qos_config)
    return abs(p - power_budget) / power_budget


def final_processing_mmf(scenario: Scenario, channels: ChannelSet, maps: PrecomputedMaps,
                         a: np.ndarray, e_relaxed: np.ndarray, power_budget: float,
                         config: MmfConfig = MmfConfig()):
    """Snap e to unit modulus, then refine a alone at the fixed e."""
    e_final = phase_project(e_relaxed)
    a_final, _, wsinr, _, _, _ = psa_mmf_solve(
        scenario, channels, maps, a, e_final, power_budget, config, freeze_e=True)
    return a_final, e_final, wsinr


def solve_mmf(scenario: Scenario, channels: ChannelSet,
              config: MmfConfig = MmfConfig(),
              rng: np.random.Generator | None = None,
              e0: np.ndarray | None = None) -> MmfResult:
    """Full max-min-fair pipeline; see the module docstring.

    Internally rescales channels so the noise power is one.  The rescaling
    leaves every SINR, the beamformers and the transmit power unchanged
    while making the default subgradient step sizes well matched to the
    variable magnitudes.
    """
    if scenario.power_budget is None:
        raise ValueError("scenario.power_budget is required for max-min-fair solves")
    budget = scenario.power_budget
    sc = scenario.with_noise(1.0)
    ch = channels.scaled(1.0 / np.sqrt(scenario.noise_power))

    if e0 is None:
        if rng is None:
            rng = np.random.default_rng()
        e0 = np.exp(2j * np.pi * rng.random(scenario.n_ris))
    else:
        e0 = np.asarray(e0, dtype=complex).copy()

    maps = build_maps(sc, ch, e0, budget)
    a0 = init_point(sc, ch, maps, budget)
    a, e_relaxed, wsinr_relaxed, iters, stalled, trace = psa_mmf_solve(
        sc, ch, maps, a0, e0, budget, config)
    a_final, e_final, wsinr_final = final_processing_mmf(
        sc, ch, maps, a, e_relaxed, budget, config)
    w = beamformers_from_a(sc, maps, a_final)
    return MmfResult(
        beamformers=BeamformerSet(w=w, e=e_final),
        min_weighted_sinr=wsinr_final,
        min_weighted_sinr_relaxed=wsinr_relaxed,
        e_relaxed=e_relaxed, a=a_final, iterations=iters, stalled=stalled,
        trace=trace)
