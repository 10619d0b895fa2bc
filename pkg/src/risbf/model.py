"""Core problem types and exact SINR / power / feasibility evaluation."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .scenario import ChannelSet


@dataclass(frozen=True)
class Scenario:
    """Problem dimensions, SINR targets and power limits (linear units).

    group_sizes is the per-group user count; users are indexed flat in
    (group, user-in-group) lexicographic order throughout the package.
    """

    n_antennas: int
    n_ris: int
    group_sizes: tuple[int, ...]
    sinr_targets: np.ndarray
    noise_power: float
    power_budget: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "group_sizes", tuple(int(k) for k in self.group_sizes))
        targets = np.asarray(self.sinr_targets, dtype=float)
        if targets.ndim == 0:
            targets = np.full(self.n_users_from_sizes(), float(targets))
        object.__setattr__(self, "sinr_targets", targets)
        if self.n_users < 1:
            raise ValueError("need at least one user")
        if targets.shape != (self.n_users,):
            raise ValueError(f"sinr_targets must have {self.n_users} entries")
        if np.any(targets <= 0):
            raise ValueError("sinr_targets must be positive")
        if self.noise_power <= 0:
            raise ValueError("noise_power must be positive")
        if self.power_budget is not None and self.power_budget <= 0:
            raise ValueError("power_budget must be positive")

    def n_users_from_sizes(self) -> int:
        return int(sum(self.group_sizes))

    @property
    def n_groups(self) -> int:
        return len(self.group_sizes)

    @property
    def n_users(self) -> int:
        return self.n_users_from_sizes()

    @property
    def unicast(self) -> bool:
        return all(k == 1 for k in self.group_sizes)

    @property
    def group_of_user(self) -> np.ndarray:
        """Group index of each flat user."""
        return np.repeat(np.arange(self.n_groups), self.group_sizes)

    def group_slice(self, i: int) -> slice:
        start = int(sum(self.group_sizes[:i]))
        return slice(start, start + self.group_sizes[i])

    def user_index(self, i: int, k: int) -> int:
        """Flat index of user k (0-based) in group i (0-based)."""
        return int(sum(self.group_sizes[:i])) + k

    def user_of(self, flat: int) -> tuple[int, int]:
        """(group, user-in-group) of a flat user index."""
        g = self.group_of_user
        i = int(g[flat])
        return i, flat - int(sum(self.group_sizes[:i]))

    def with_targets(self, targets) -> "Scenario":
        return Scenario(self.n_antennas, self.n_ris, self.group_sizes,
                        np.asarray(targets, dtype=float), self.noise_power, self.power_budget)

    def with_noise(self, noise_power: float) -> "Scenario":
        return Scenario(self.n_antennas, self.n_ris, self.group_sizes,
                        self.sinr_targets.copy(), noise_power, self.power_budget)


@dataclass
class BeamformerSet:
    """BS beamformers w (G, N) and RIS reflection vector e (M,)."""

    w: np.ndarray
    e: np.ndarray

    def unit_modulus_error(self) -> float:
        if self.e.size == 0:
            return 0.0
        return float(np.max(np.abs(np.abs(self.e) - 1.0)))


@dataclass
class FeasibilityReport:
    feasible: bool
    min_weighted_sinr: float
    sinr_violations: list = field(default_factory=list)  # (group, user, weighted sinr)
    modulus_violations: list = field(default_factory=list)  # (element, |e_m|)


def effective_channels(channels: ChannelSet, e: np.ndarray) -> np.ndarray:
    """Equivalent BS-to-user channels h_direct + cascaded @ e, shape (K_tot, N)."""
    if channels.n_ris == 0:
        return channels.h_direct.copy()
    return channels.h_direct + channels.cascaded @ e


def effective_channel(channels: ChannelSet, e: np.ndarray, scenario: Scenario, user: tuple[int, int]) -> np.ndarray:
    """Equivalent channel of a single (group, user) pair."""
    return effective_channels(channels, e)[scenario.user_index(*user)]


def all_sinrs(scenario: Scenario, channels: ChannelSet, bf: BeamformerSet) -> np.ndarray:
    """SINR of every user, flat order."""
    h_eff = effective_channels(channels, bf.e)
    return sinrs_from_effective(scenario, h_eff, bf.w)


def sinrs_from_effective(scenario: Scenario, h_eff: np.ndarray, w: np.ndarray) -> np.ndarray:
    """SINRs given precomputed equivalent channels (K_tot, N) and beamformers (G, N)."""
    # x[j, u] = |w_j^H h_u|^2
    x = np.abs(w.conj() @ h_eff.T) ** 2
    g = scenario.group_of_user
    sig = x[g, np.arange(scenario.n_users)]
    interference = x.sum(axis=0) - sig
    return sig / (interference + scenario.noise_power)


def sinr(scenario: Scenario, channels: ChannelSet, bf: BeamformerSet, user: tuple[int, int]) -> float:
    """SINR of a single (group, user) pair."""
    return float(all_sinrs(scenario, channels, bf)[scenario.user_index(*user)])


def total_power(w: np.ndarray) -> float:
    """Total BS transmit power sum_i ||w_i||^2."""
    return float(np.sum(np.abs(w) ** 2))


def min_weighted_sinr(scenario: Scenario, channels: ChannelSet, bf: BeamformerSet) -> tuple[float, tuple[int, int]]:
    """Minimum of SINR/target over users and its argmin.

    Ties resolve to the first user in (group, user) lexicographic order.
    """
    ratios = all_sinrs(scenario, channels, bf) / scenario.sinr_targets
    u = int(np.argmin(ratios))  # argmin takes the first occurrence
    return float(ratios[u]), scenario.user_of(u)


def sum_rate(scenario: Scenario, channels: ChannelSet, bf: BeamformerSet) -> float:
    """Sum over users of log2(1 + SINR)."""
    return float(np.sum(np.log2(1.0 + all_sinrs(scenario, channels, bf))))


def check_qos_feasible(scenario: Scenario, channels: ChannelSet, bf: BeamformerSet,
                       tol: float = 1e-6) -> FeasibilityReport:
    """Check all weighted-SINR constraints and RIS unit-modulus constraints within tol."""
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    ratios = all_sinrs(scenario, channels, bf) / scenario.sinr_targets
    report = FeasibilityReport(feasible=True, min_weighted_sinr=float(ratios.min()))
    for u in np.flatnonzero(ratios < 1.0 - tol):
        report.sinr_violations.append((*scenario.user_of(int(u)), float(ratios[u])))
    moduli = np.abs(bf.e)
    for m in np.flatnonzero(np.abs(moduli - 1.0) > tol):
        report.modulus_violations.append((int(m), float(moduli[m])))
    report.feasible = not report.sinr_violations and not report.modulus_violations
    return report


def phase_project(e: np.ndarray) -> np.ndarray:
    """exp(j angle(e)) per element; a zero element gets phase 0 (value 1)."""
    return np.exp(1j * np.angle(e))
