"""BS beamforming QoS subproblem at fixed RIS phases.

Minimizes total transmit power subject to per-user SINR targets using the
weighted-MMSE beamformer structure w_i = R(lam)^{-1} H_i a_i:

* the multipliers lam come from a downlink-duality fixed point,
* unicast weights have an exact closed form via a G x G linear system,
* multicast weights are optimized by successive convex approximation
  (SCA) with a first-order penalized inner solver, followed by a minimal
  common power scale-up that restores hard feasibility.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .errors import InfeasibleError
from .model import Scenario, effective_channels, total_power
from .scenario import ChannelSet

#: Largest common scale factor tried when restoring feasibility.
FEASIBILITY_SCALE_CAP = 1e6


@dataclass(frozen=True)
class QosSolverConfig:
    max_fixed_point_iters: int = 500
    fixed_point_tol: float = 1e-11
    sca_max_iters: int = 40
    sca_tol: float = 1e-6
    inner_max_iters: int = 200

    def __post_init__(self):
        if self.fixed_point_tol <= 0 or self.sca_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.inner_max_iters < 1:
            raise ValueError("inner_max_iters must be at least 1")


def build_covariance(scenario: Scenario, channels: ChannelSet, e: np.ndarray,
                     lam: np.ndarray) -> np.ndarray:
    """Noise-plus-weighted-channel covariance I + sum lam_u gamma_u h_u h_u^H."""
    h = effective_channels(channels, e)
    return _covariance_from_effective(scenario, h, lam)


def _covariance_from_effective(scenario: Scenario, h_eff: np.ndarray, lam: np.ndarray) -> np.ndarray:
    lam = np.asarray(lam, dtype=float)
    if np.any(lam < 0):
        raise ValueError("multipliers must be nonnegative")
    weights = lam * scenario.sinr_targets
    r = np.eye(scenario.n_antennas, dtype=complex)
    r += (h_eff.T * weights) @ h_eff.conj()
    return r


def beamformer_from_weights(scenario: Scenario, channels: ChannelSet, e: np.ndarray,
                            lam: np.ndarray, weights: list[np.ndarray]) -> np.ndarray:
    """w_i = R(lam)^{-1} H_i a_i for per-group weight vectors a_i; returns (G, N)."""
    h = effective_channels(channels, e)
    r = _covariance_from_effective(scenario, h, lam)
    w = np.zeros((scenario.n_groups, scenario.n_antennas), dtype=complex)
    for i in range(scenario.n_groups):
        hi = h[scenario.group_slice(i)].T  # (N, K_i)
        w[i] = np.linalg.solve(r, hi @ np.asarray(weights[i], dtype=complex))
    return w


def fixed_point_multipliers(scenario: Scenario, channels: ChannelSet, e: np.ndarray,
                            config: QosSolverConfig = QosSolverConfig(),
                            lam0: np.ndarray | None = None) -> tuple[np.ndarray, bool]:
    """Duality fixed point lam_u <- 1 / ((1 + gamma_u) h_u^H R(lam)^{-1} h_u).

    With this iterate the covariance weights lam_u * gamma_u equal the
    classical dual uplink powers, so the resulting MMSE directions are the
    power-optimal unicast directions.  For multicast groups the same
    per-user multipliers are reused heuristically.  Returns (lam,
    converged); non-convergence is a soft failure carrying the last iterate.
    """
    h = effective_channels(channels, e)
    return _fixed_point_from_effective(scenario, h, config, lam0)


def _fixed_point_from_effective(scenario: Scenario, h_eff: np.ndarray,
                                config: QosSolverConfig,
                                lam0: np.ndarray | None = None) -> tuple[np.ndarray, bool]:
    gamma = scenario.sinr_targets
    norms = np.sum(np.abs(h_eff) ** 2, axis=1)
    if np.any(norms == 0):
        raise InfeasibleError("a user has a zero channel; SINR target unreachable")
    lam = np.asarray(lam0, dtype=float).copy() if lam0 is not None else 1.0 / ((1.0 + gamma) * norms)
    for _ in range(config.max_fixed_point_iters):
        r = _covariance_from_effective(scenario, h_eff, lam)
        sol = np.linalg.solve(r, h_eff.T)  # (N, K_tot)
        t = np.real(np.einsum("un,nu->u", h_eff.conj(), sol))
        lam_new = 1.0 / ((1.0 + gamma) * t)
        rel = np.max(np.abs(lam_new - lam) / np.maximum(lam, 1e-300))
        lam = lam_new
        if rel <= config.fixed_point_tol:
            return lam, True
    return lam, False


def solve_unicast_qos(scenario: Scenario, channels: ChannelSet, e: np.ndarray,
                      lam: np.ndarray) -> tuple[np.ndarray, float]:
    """Exact unicast QoS solution for given multipliers.

    Builds directions c_i = R^{-1} h_i and solves the G linear SINR-equality
    equations for the squared weights.  Raises InfeasibleError when the
    equality system has no positive solution.
    """
    if not scenario.unicast:
        raise ValueError("solve_unicast_qos requires one user per group")
    h = effective_channels(channels, e)
    return _unicast_from_effective(scenario, h, lam)


def _unicast_from_effective(scenario: Scenario, h_eff: np.ndarray,
                            lam: np.ndarray) -> tuple[np.ndarray, float]:
    g = scenario.n_groups
    gamma = scenario.sinr_targets
    r = _covariance_from_effective(scenario, h_eff, lam)
    c = np.linalg.solve(r, h_eff.T).T  # (G, N), row i = c_i
    cross = np.abs(c.conj() @ h_eff.T) ** 2  # cross[i, j] = |c_i^H h_j|^2
    # Row i enforces user i's SINR equality: the interference column for
    # group j carries |c_j^H h_i|^2 since w_j = a_j c_j.
    v = -cross.T.copy()
    np.fill_diagonal(v, np.diag(cross) / gamma)
    try:
        a_sq = scenario.noise_power * np.linalg.solve(v, np.ones(g))
    except np.linalg.LinAlgError as exc:
        raise InfeasibleError(f"singular SINR-equality system: {exc}") from exc
    if np.any(a_sq <= 0) or not np.all(np.isfinite(a_sq)):
        raise InfeasibleError(f"no positive power allocation meets all targets (a^2 = {a_sq})")
    w = np.sqrt(a_sq)[:, None] * c
    return w, total_power(w)


def _restore_feasibility(scenario: Scenario, s_mat: np.ndarray):
    """Smallest common scale >= 1 making all true SINR constraints hold.

    s_mat[j, u] = w_j^H h_u in noise-normalized units.  Returns (scale,
    power_factor) or None when no finite scale works.
    """
    x = np.abs(s_mat) ** 2
    g = scenario.group_of_user
    sig = x[g, np.arange(scenario.n_users)]
    interference = x.sum(axis=0) - sig
    margin = sig - scenario.sinr_targets * interference
    if np.any(margin <= 0):
        return None
    scale_sq = np.max(scenario.sinr_targets / margin)  # noise power is 1 in this frame
    scale = np.sqrt(max(scale_sq, 1.0))
    if scale > FEASIBILITY_SCALE_CAP:
        return None
    return scale


def solve_multicast_qos(scenario: Scenario, channels: ChannelSet, e: np.ndarray,
                        config: QosSolverConfig = QosSolverConfig(),
                        lam: np.ndarray | None = None,
                        a_init: np.ndarray | None = None,
                        full_output: bool = False):
    """Multicast QoS solve: fixed-point multipliers, then SCA over the weights.

    Each SCA round linearizes the signal powers at the current weights and
    minimizes a quadratically penalized form of the resulting convex
    program with L-BFGS; candidates are accepted only if their
    hard-feasible power improves, so the returned power trace is
    non-increasing.  Returns (w, power, status) with hard-feasible w;
    with full_output=True the final weight vector is appended, which
    makes a good warm start for a nearby instance.
    """
    h_phys = effective_channels(channels, e)
    sigma = np.sqrt(scenario.noise_power)
    h = h_phys / sigma  # noise-normalized frame: unit noise, physical w and power
    sc = scenario
    gamma = sc.sinr_targets
    g = sc.n_groups
    k_tot = sc.n_users
    grp = sc.group_of_user

    if lam is None:
        lam_scaled, _ = _fixed_point_from_effective(sc.with_noise(1.0), h, config)
    else:
        lam_scaled = np.asarray(lam, dtype=float) * scenario.noise_power

    r = _covariance_from_effective(sc, h, lam_scaled)
    c_maps = [np.linalg.solve(r, h[sc.group_slice(i)].T) for i in range(g)]  # (N, K_i)
    q_mats = [cm.conj().T @ cm for cm in c_maps]
    vg = [cm.conj().T @ h.T for cm in c_maps]  # vg[j][:, u] = C_j^H h_u, shape (K_j, K_tot)
    slices = [sc.group_slice(i) for i in range(g)]

    def s_matrix(a):
        """(G, K_tot) of w_j^H h_u."""
        return np.stack([a[slices[j]].conj() @ vg[j] for j in range(g)])

    def power_of(a):
        return float(sum(np.real(a[slices[i]].conj() @ (q_mats[i] @ a[slices[i]])) for i in range(g)))

    def feasible_power(a):
        """(a_scaled, power) after minimal scale-up, or None."""
        scale = _restore_feasibility(sc, s_matrix(a))
        if scale is None:
            return None
        a2 = scale * a
        return a2, power_of(a2)

    idx = np.arange(k_tot)
    own_mask = np.zeros((g, k_tot))
    own_mask[grp, idx] = 1.0
    other_mask = 1.0 - own_mask

    def feasibility_search(a):
        """Subgradient ascent on the worst scale-free margin S_u/gamma_u - I_u.

        A positive margin for every user means a common power scale-up can
        absorb the noise, so this only needs to find a direction.
        """
        a = a / np.linalg.norm(a)
        best_a, best_margin = a, -np.inf
        for _ in range(400):
            s = s_matrix(a)
            x = np.abs(s) ** 2
            sig = x[grp, idx]
            margins = sig / gamma - (x.sum(axis=0) - sig)
            u = int(np.argmin(margins))
            if margins[u] > best_margin:
                best_a, best_margin = a.copy(), float(margins[u])
                if best_margin > 0.1 * float(sig[u]) / gamma[u]:
                    break
            grad = np.zeros(k_tot, dtype=complex)
            for j in range(g):
                block = vg[j][:, u] * np.conj(s[j, u])
                grad[slices[j]] = block / gamma[u] if j == grp[u] else -block
            gn = np.linalg.norm(grad)
            if gn == 0:
                break
            a = a + (0.1 / gn) * grad
            a = a / np.linalg.norm(a)
        return best_a if best_margin > 0 else None

    a = np.ones(k_tot, dtype=complex) if a_init is None else np.asarray(a_init, dtype=complex).copy()
    start = feasible_power(a)
    if start is None and a_init is not None:
        a = np.ones(k_tot, dtype=complex)
        start = feasible_power(a)
    if start is None:
        a = feasibility_search(np.ones(k_tot, dtype=complex))
        start = feasible_power(a) if a is not None else None
    if start is None:
        raise InfeasibleError("no feasible weight direction found")
    a_best, p_best = start

    def objective_and_grad(x_re, ref, rho):
        """Penalized linearized objective and its gradient in stacked real coords.

        ref holds the linearization anchors w_bar_{g_u}^H h_u.
        """
        a = x_re[:k_tot] + 1j * x_re[k_tot:]
        s = s_matrix(a)
        x = np.abs(s) ** 2
        own = s[grp, idx]
        lin = 2.0 * np.real(np.conj(ref) * own) - np.abs(ref) ** 2
        interference = x.sum(axis=0) - x[grp, idx]
        hinge = np.maximum(0.0, gamma * (interference + 1.0) - lin)
        f = power_of(a) + rho * float(np.sum(hinge ** 2))
        coef = 2.0 * rho * hinge
        gc = np.zeros(k_tot, dtype=complex)
        for j in range(g):
            m = coef * (gamma * np.conj(s[j]) * other_mask[j] - np.conj(ref) * own_mask[j])
            gc[slices[j]] = q_mats[j] @ a[slices[j]] + vg[j] @ m
        return f, np.concatenate([2.0 * gc.real, 2.0 * gc.imag])

    def max_violation(a, ref):
        s = s_matrix(a)
        x = np.abs(s) ** 2
        lin = 2.0 * np.real(np.conj(ref) * s[grp, idx]) - np.abs(ref) ** 2
        interference = x.sum(axis=0) - x[grp, idx]
        need = gamma * (interference + 1.0)
        return float(np.max((need - lin) / need))

    def inner_solve(a_bar):
        ref = s_matrix(a_bar)[grp, idx]
        x0 = np.concatenate([a_bar.real, a_bar.imag])
        rho = 10.0 * max(1.0, power_of(a_bar))
        a = a_bar
        for _ in range(4):
            res = minimize(objective_and_grad, x0, args=(ref, rho), jac=True,
                           method="L-BFGS-B",
                           options={"maxiter": config.inner_max_iters})
            x0 = res.x
            a = res.x[:k_tot] + 1j * res.x[k_tot:]
            if max_violation(a, ref) <= 1e-8:
                break
            rho *= 20.0
        return a

    status = "max-iters"
    for _ in range(config.sca_max_iters):
        cand = inner_solve(a_best)
        res = feasible_power(cand)
        if res is None:
            status = "converged"
            break
        a_new, p_new = res
        if p_new >= p_best * (1.0 - 1e-12):
            status = "converged"
            break
        rel = (p_best - p_new) / p_best
        a_best, p_best = a_new, p_new
        if rel < config.sca_tol:
            status = "converged"
            break

    w = np.zeros((g, sc.n_antennas), dtype=complex)
    for i in range(g):
        w[i] = c_maps[i] @ a_best[slices[i]]
    if full_output:
        return w, total_power(w), status, a_best
    return w, total_power(w), status


def solve_qos(scenario: Scenario, channels: ChannelSet, e: np.ndarray,
              config: QosSolverConfig = QosSolverConfig(),
              a_init: np.ndarray | None = None) -> tuple[np.ndarray, float, str]:
    """Dispatch: exact closed form for unicast, SCA for multicast."""
    if scenario.unicast:
        lam, converged = fixed_point_multipliers(scenario, channels, e, config)
        w, power = solve_unicast_qos(scenario, channels, e, lam)
        return w, power, "converged" if converged else "max-iters"
    return solve_multicast_qos(scenario, channels, e, config, a_init=a_init)
