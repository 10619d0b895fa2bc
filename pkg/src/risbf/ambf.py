"""Alternating minimization for the QoS power-minimization problem.

Alternates between the BS beamforming subproblem at fixed RIS phases
(closed form for unicast, SCA otherwise) and the RIS subproblem at fixed
beamformers (projected subgradient over the relaxed unit disk).  A final
processing step snaps the relaxed reflection vector onto the unit circle
and re-solves the BS subproblem once.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .bs_qos import QosSolverConfig, solve_qos
from .errors import InfeasibleError
from .model import BeamformerSet, Scenario, phase_project
from .ris_psa import PsaConfig, psa_solve
from .scenario import ChannelSet


@dataclass(frozen=True)
class AmbfConfig:
    max_ao_iters: int = 30
    ao_tol: float = 1e-3
    psa: PsaConfig = PsaConfig()
    qos: QosSolverConfig = QosSolverConfig()

    def __post_init__(self):
        if self.max_ao_iters < 1:
            raise ValueError("max_ao_iters must be at least 1")
        if self.ao_tol <= 0:
            raise ValueError("ao_tol must be positive")


@dataclass
class AmbfResult:
    beamformers: BeamformerSet  # unit-modulus e, final w
    power: float
    e_relaxed: np.ndarray
    power_relaxed: float
    ao_iterations: int
    psa_iterations: int
    converged: bool
    status: str  # converged | max-iters | infeasible
    power_trace: list = field(default_factory=list)


def random_phases(m: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform random unit-modulus reflection vector of length m."""
    return np.exp(2j * np.pi * rng.random(m))


def _warm_start_weights(scenario: Scenario, w: np.ndarray) -> np.ndarray:
    """Rough per-group weight init for the next SCA round.

    Splits each previous beamformer's norm evenly over its group's weights;
    the scale is what matters, the direction is re-optimized anyway and the
    feasibility scale-up corrects any shortfall.
    """
    a = np.ones(scenario.n_users, dtype=complex)
    for i in range(scenario.n_groups):
        a[scenario.group_slice(i)] = np.linalg.norm(w[i]) / np.sqrt(scenario.group_sizes[i])
    return a


def ambf_solve(scenario: Scenario, channels: ChannelSet,
               config: AmbfConfig = AmbfConfig(),
               rng: np.random.Generator | None = None,
               e0: np.ndarray | None = None) -> AmbfResult:
    """Run the alternating QoS solver; see the module docstring.

    Infeasibility of the very first BS subproblem yields status
    "infeasible" with zero beamformers; a failure in a later round keeps
    the last feasible iterate instead.
    """
    m = scenario.n_ris
    if e0 is not None:
        e = np.asarray(e0, dtype=complex).copy()
    else:
        if rng is None:
            rng = np.random.default_rng()
        e = random_phases(m, rng)

    psa_total = 0
    trace: list = []
    w = np.zeros((scenario.n_groups, scenario.n_antennas), dtype=complex)
    power = float("nan")
    a_warm = None
    converged = False
    it = 0

    for it in range(1, config.max_ao_iters + 1):
        try:
            w_new, p_new, _ = solve_qos(scenario, channels, e, config.qos, a_init=a_warm)
        except InfeasibleError:
            if it == 1:
                return AmbfResult(
                    beamformers=BeamformerSet(w=w, e=phase_project(e)),
                    power=float("nan"), e_relaxed=e, power_relaxed=float("nan"),
                    ao_iterations=0, psa_iterations=0, converged=False,
                    status="infeasible")
            break
        rel = (power - p_new) / power if np.isfinite(power) and power > 0 else np.inf
        if rel > 0:
            w, power = w_new, p_new
            trace.append(power)
            if not scenario.unicast:
                a_warm = _warm_start_weights(scenario, w)
        if rel < config.ao_tol:
            # no further improvement worth another RIS update
            converged = True
            break
        if m > 0 and it < config.max_ao_iters:
            res = psa_solve(scenario, channels, w, e, config.psa)
            psa_total += res.iterations
            e = res.e

    e_final, w_final, power_final = final_processing(scenario, channels, e, config, a_warm)
    return AmbfResult(
        beamformers=BeamformerSet(w=w_final, e=e_final),
        power=power_final, e_relaxed=e, power_relaxed=power,
        ao_iterations=it, psa_iterations=psa_total, converged=converged,
        status="converged" if converged else "max-iters", power_trace=trace)


def final_processing(scenario: Scenario, channels: ChannelSet, e_relaxed: np.ndarray,
                     config: AmbfConfig = AmbfConfig(),
                     a_warm: np.ndarray | None = None):
    """Project e onto the unit circle and re-solve the BS subproblem there."""
    e_final = phase_project(e_relaxed)
    w_final, power_final, _ = solve_qos(scenario, channels, e_final, config.qos, a_init=a_warm)
    return e_final, w_final, power_final


def solve_qos_no_ris(scenario: Scenario, channels: ChannelSet,
                     config: AmbfConfig = AmbfConfig()) -> AmbfResult:
    """BS-only baseline: the RIS path is removed entirely."""
    bare = channels.without_ris_path()
    sc = Scenario(scenario.n_antennas, 0, scenario.group_sizes,
                  scenario.sinr_targets.copy(), scenario.noise_power, scenario.power_budget)
    e = np.zeros(0, dtype=complex)
    try:
        w, power, status = solve_qos(sc, bare, e, config.qos)
    except InfeasibleError:
        return AmbfResult(beamformers=BeamformerSet(np.zeros((sc.n_groups, sc.n_antennas), complex), e),
                          power=float("nan"), e_relaxed=e, power_relaxed=float("nan"),
                          ao_iterations=0, psa_iterations=0, converged=False, status="infeasible")
    return AmbfResult(beamformers=BeamformerSet(w=w, e=e), power=power,
                      e_relaxed=e, power_relaxed=power, ao_iterations=1,
                      psa_iterations=0, converged=True, status="converged",
                      power_trace=[power])


def solve_qos_random_ris(scenario: Scenario, channels: ChannelSet,
                         rng: np.random.Generator,
                         config: AmbfConfig = AmbfConfig()) -> AmbfResult:
    """Baseline: one BS solve at uniformly random unit-modulus RIS phases."""
    e = random_phases(scenario.n_ris, rng)
    try:
        w, power, status = solve_qos(scenario, channels, e, config.qos)
    except InfeasibleError:
        return AmbfResult(beamformers=BeamformerSet(np.zeros((scenario.n_groups, scenario.n_antennas), complex), e),
                          power=float("nan"), e_relaxed=e, power_relaxed=float("nan"),
                          ao_iterations=0, psa_iterations=0, converged=False, status="infeasible")
    return AmbfResult(beamformers=BeamformerSet(w=w, e=e), power=power,
                      e_relaxed=e, power_relaxed=power, ao_iterations=1,
                      psa_iterations=0, converged=True, status="converged",
                      power_trace=[power])
