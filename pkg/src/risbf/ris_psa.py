"""Projected subgradient ascent (PSA) over the RIS reflection vector.

At fixed BS beamformers the RIS subproblem maximizes the worst weighted
SINR plus a norm penalty that pushes the relaxed elements toward the unit
circle.  Each iteration descends the penalized negative weighted SINR of
the current worst user and projects every element back into the unit disk.
The best iterate seen is returned, so the reported objective never
degrades with more iterations.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .model import Scenario
from .scenario import ChannelSet


@dataclass(frozen=True)
class PsaConfig:
    penalty: float = 0.1
    step_size: float = 10.0
    max_iters: int = 2000
    stall_tol: float = 1e-6
    stall_window: int = 200

    def __post_init__(self):
        if self.penalty < 0:
            raise ValueError("penalty must be nonnegative")
        if self.step_size <= 0:
            raise ValueError("step_size must be positive")
        if self.stall_window < 1:
            raise ValueError("stall_window must be at least 1")


@dataclass
class PhiEvaluation:
    """Per-user penalized objectives at one reflection vector."""

    phi: np.ndarray  # (K_tot,) of -(SINR_u / gamma_u + penalty * ||e||^2 / M)
    worst_user: int  # flat index of argmax phi, first on ties
    min_weighted_sinr: float
    norm_penalty: float  # penalty * ||e||^2 / M


@dataclass
class PsaResult:
    e: np.ndarray
    objective: float  # min weighted SINR + norm reward at the returned e
    min_weighted_sinr: float
    iterations: int
    stalled: bool
    trace: list = field(default_factory=list)


class _PsaWorkspace:
    """Per-solve precomputation: w_j^H G_u and w_j^H h_direct_u for all (j, u)."""

    def __init__(self, scenario: Scenario, channels: ChannelSet, w: np.ndarray):
        self.scenario = scenario
        self.gamma = scenario.sinr_targets
        self.noise = scenario.noise_power
        self.grp = scenario.group_of_user
        self.users = np.arange(scenario.n_users)
        self.direct = w.conj() @ channels.h_direct.T  # (G, K_tot)
        if channels.n_ris > 0:
            self.t = np.einsum("gn,unm->gum", w.conj(), channels.cascaded)  # (G, K_tot, M)
        else:
            self.t = np.zeros((scenario.n_groups, scenario.n_users, 0), dtype=complex)

    def received(self, e: np.ndarray) -> np.ndarray:
        """s[j, u] = w_j^H h_u(e)."""
        return self.direct + self.t @ e

    def weighted_sinrs(self, e: np.ndarray) -> np.ndarray:
        x = np.abs(self.received(e)) ** 2
        sig = x[self.grp, self.users]
        interference = x.sum(axis=0) - sig
        return sig / (interference + self.noise) / self.gamma


def phi(scenario: Scenario, channels: ChannelSet, w: np.ndarray, e: np.ndarray,
        penalty: float = 0.1) -> PhiEvaluation:
    """Evaluate every user's penalized objective and pick the worst user."""
    ws = _PsaWorkspace(scenario, channels, w)
    return _phi_from_workspace(ws, e, penalty)


def _phi_from_workspace(ws: _PsaWorkspace, e: np.ndarray, penalty: float) -> PhiEvaluation:
    wsinr = ws.weighted_sinrs(e)
    reward = penalty * float(np.real(e.conj() @ e)) / max(e.size, 1)
    values = -(wsinr + reward)
    worst = int(np.argmax(values))  # first occurrence on ties
    return PhiEvaluation(phi=values, worst_user=worst,
                         min_weighted_sinr=float(wsinr[worst]), norm_penalty=reward)


def grad_phi_e(scenario: Scenario, channels: ChannelSet, w: np.ndarray, e: np.ndarray,
               user: int, penalty: float = 0.1) -> np.ndarray:
    """Conjugate Wirtinger gradient of user's phi with respect to e.

    The real-coordinate gradient over (Re e, Im e) is twice the real and
    imaginary parts of the returned vector.
    """
    ws = _PsaWorkspace(scenario, channels, w)
    return _grad_from_workspace(ws, e, user, penalty)


def _grad_from_workspace(ws: _PsaWorkspace, e: np.ndarray, user: int, penalty: float) -> np.ndarray:
    s = ws.received(e)[:, user]  # (G,)
    x = np.abs(s) ** 2
    g_u = ws.grp[user]
    sig = x[g_u]
    interference = x.sum() - sig + ws.noise
    # q_j = G_u^H w_j (w_j^H h_u) for every group j
    q = np.conj(ws.t[:, user, :]) * s[:, None]  # (G, M)
    cross = q.sum(axis=0) - q[g_u]
    grad_sinr = (interference * q[g_u] - sig * cross) / interference ** 2
    return -grad_sinr / ws.gamma[user] - (penalty / max(e.size, 1)) * e


def project_unit_disk(e: np.ndarray) -> np.ndarray:
    """Clip each element into the closed unit disk, preserving its phase."""
    mags = np.abs(e)
    scale = np.where(mags > 1.0, 1.0 / np.maximum(mags, 1e-300), 1.0)
    return e * scale


def psa_solve(scenario: Scenario, channels: ChannelSet, w: np.ndarray, e0: np.ndarray,
              config: PsaConfig = PsaConfig(), keep_trace: bool = False) -> PsaResult:
    """Run PSA from e0 and return the best iterate found.

    Stops early once the best objective has improved by less than
    stall_tol (relative) over the last stall_window iterations.
    """
    e = project_unit_disk(np.asarray(e0, dtype=complex).copy())
    if e.size == 0:
        return PsaResult(e=e, objective=0.0, min_weighted_sinr=0.0,
                         iterations=0, stalled=True)
    ws = _PsaWorkspace(scenario, channels, w)
    penalty = config.penalty

    ev = _phi_from_workspace(ws, e, penalty)
    best_obj = ev.min_weighted_sinr + ev.norm_penalty
    best_e = e.copy()
    best_wsinr = ev.min_weighted_sinr
    window_anchor = best_obj
    anchor_iter = 0
    trace: list = []
    stalled = False
    it = 0

    for it in range(1, config.max_iters + 1):
        grad = _grad_from_workspace(ws, e, ev.worst_user, penalty)
        e = project_unit_disk(e - config.step_size * grad)
        ev = _phi_from_workspace(ws, e, penalty)
        obj = ev.min_weighted_sinr + ev.norm_penalty
        if obj > best_obj:
            best_obj = obj
            best_e = e.copy()
            best_wsinr = ev.min_weighted_sinr
        if keep_trace:
            trace.append((it, obj, ev.min_weighted_sinr, ev.norm_penalty,
                          float(np.max(np.abs(e)))))
        if it - anchor_iter >= config.stall_window:
            if best_obj - window_anchor <= config.stall_tol * max(abs(window_anchor), 1e-12):
                stalled = True
                break
            window_anchor = best_obj
            anchor_iter = it

    return PsaResult(e=best_e, objective=best_obj, min_weighted_sinr=best_wsinr,
                     iterations=it, stalled=stalled, trace=trace)


def write_trace_csv(result: PsaResult, path) -> None:
    """Write a PSA trace as CSV with a fixed header."""
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(["iteration", "objective", "min_weighted_sinr",
                      "norm_penalty", "max_modulus"])
        for row in result.trace:
            out.writerow([row[0]] + [f"{v:.9g}" for v in row[1:]])
