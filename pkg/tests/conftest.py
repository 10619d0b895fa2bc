"""Shared test helpers: instance builders and independent oracles."""

import numpy as np


from risbf import ChannelParams, GeometryConfig, Scenario, db_to_linear, generate_channels

GRIDS = {1: (1, 1), 2: (1, 2), 4: (2, 2), 6: (2, 3), 9: (3, 3), 16: (4, 4),
         64: (8, 8), 100: (10, 10), 144: (12, 12), 400: (20, 20)}


def make_instance(seed, n_antennas=8, n_ris=16, group_sizes=(1, 1), sinr_db=10.0,
                  normalize=False, power_budget=None):
    """One reproducible (scenario, channels) pair with default geometry.

    With normalize=True the channels are rescaled so the noise power is 1;
    every SINR is unchanged.
    """
    geometry = GeometryConfig(ris_grid=GRIDS[n_ris])
    params = ChannelParams()
    scenario = Scenario(
        n_antennas=n_antennas, n_ris=n_ris, group_sizes=group_sizes,
        sinr_targets=db_to_linear(sinr_db), noise_power=params.noise_power,
        power_budget=power_budget)
    channels = generate_channels(scenario, geometry, params, seed)
    if normalize:
        channels = channels.scaled(1.0 / np.sqrt(scenario.noise_power))
        scenario = scenario.with_noise(1.0)
    return scenario, channels


def random_beamformers(rng, n_groups, n_antennas, scale=1.0):
    shape = (n_groups, n_antennas)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def fd_wirtinger_grad(f, z, eps=1e-6):
    """Central-difference estimate of the conjugate Wirtinger gradient of real f.

    For real f the differential is df = 2 Re{g^H dz} with g = df/dz*, so
    g_k = (d f / d Re z_k + j d f / d Im z_k) / 2.
    """
    g = np.zeros(z.size, dtype=complex)
    for k in range(z.size):
        for part, unit in ((0, 1.0), (1, 1j)):
            zp = z.copy()
            zp[k] += eps * unit
            zm = z.copy()
            zm[k] -= eps * unit
            d = (f(zp) - f(zm)) / (2.0 * eps)
            g[k] += d if part == 0 else 1j * d
    return g / 2.0


def uplink_unicast_min_power(h_eff, gamma, noise_power, tol=1e-12):
    """Oracle for the unicast QoS minimum power via uplink duality.

    Solves the dual uplink power fixed point by nested bisection: the
    innermost user's power is closed-form given the others, each outer
    level bisects its own power against the fixed point residual.  The
    downlink minimum power equals the uplink sum power in the
    noise-normalized frame.
    """
    h = np.asarray(h_eff) / np.sqrt(noise_power)
    g = h.shape[0]
    gamma = np.asarray(gamma, dtype=float)
    n = h.shape[1]

    def needed(i, q):
        """Uplink power user i needs for its target given the other powers."""
        r = np.eye(n, dtype=complex)
        for j in range(g):
            if j != i:
                r += q[j] * np.outer(h[j], h[j].conj())
        t = float(np.real(h[i].conj() @ np.linalg.solve(r, h[i])))
        return gamma[i] / t

    def solve_level(i, q):
        """Fill q[i:] consistently given q[:i]; returns residual-free tail."""
        if i == g - 1:
            q[i] = needed(i, q)
            return q
        lo, hi = 0.0, max(needed(i, q), 1e-12)
        # expand until q_i = hi overshoots its own requirement
        for _ in range(200):
            q[i] = hi
            solve_level(i + 1, q)
            if hi >= needed(i, q):
                break
            lo, hi = hi, hi * 2.0
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            q[i] = mid
            solve_level(i + 1, q)
            if mid >= needed(i, q):
                hi = mid
            else:
                lo = mid
            if hi - lo <= tol * max(hi, 1.0):
                break
        q[i] = hi
        solve_level(i + 1, q)
        return q

    q = solve_level(0, np.zeros(g))
    return float(np.sum(q))


ACCEPTANCE_RESULTS = {}


def record_criterion(name, passed, detail=""):
    ACCEPTANCE_RESULTS[name] = (passed, detail)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(ACCEPTANCE_RESULTS):
        passed, detail = ACCEPTANCE_RESULTS[name]
        verdict = "PASS" if passed else "FAIL"
        suffix = f" ({detail})" if detail else ""
        terminalreporter.write_line(f"{name}: {verdict}{suffix}")
