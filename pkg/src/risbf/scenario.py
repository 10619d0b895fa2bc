"""Synthetic scenario and channel generation.

Builds reproducible channel realizations for an RIS-assisted downlink:
a Rician BS-RIS matrix with a geometry-driven LOS component, Rayleigh
RIS-user and BS-user vectors with distance-based path gains, and the
cascaded per-user matrices used by every solver.

Conventions
-----------
* Powers in milliwatts, path gains configured in dB.
* The BS array is a uniform linear array along the x-axis; RIS elements
  are indexed row-major along y then z.
* The dB path gain of the BS-RIS link is treated as a power gain; its
  square root scales the amplitude of the normalized Rician mixture, so
  each entry of the BS-RIS matrix has variance equal to the squared
  amplitude factor.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidGeometryError
from .units import db_to_linear

_DUMP_MAGIC = b"RBCS"
_DUMP_VERSION = 1


@dataclass(frozen=True)
class GeometryConfig:
    """Positions and array geometry, lengths in meters."""

    bs_position: tuple[float, float, float] = (0.0, 0.0, 0.0)
    ris_position: tuple[float, float, float] = (70.0, 70.0, 0.0)
    user_drop_radius: float = 20.0
    ris_grid: tuple[int, int] = (10, 10)
    element_spacing_wavelengths: float = 0.5
    antenna_spacing_wavelengths: float = 0.5

    def __post_init__(self):
        my, mz = self.ris_grid
        if my < 1 or mz < 1:
            raise InvalidGeometryError(f"RIS grid must be >= 1 in each dimension, got {self.ris_grid}")
        if self.user_drop_radius <= 0:
            raise InvalidGeometryError("user_drop_radius must be positive")
        if self.bs_ris_distance() <= 0:
            raise InvalidGeometryError("BS and RIS positions coincide")

    @property
    def n_ris(self) -> int:
        return self.ris_grid[0] * self.ris_grid[1]

    def bs_ris_distance(self) -> float:
        d = np.subtract(self.ris_position, self.bs_position)
        return float(np.linalg.norm(d))


@dataclass(frozen=True)
class ChannelParams:
    """Fading and path-loss parameters.

    Path-loss pairs are (intercept_db, slope_db) with gain
    intercept + slope * log10(distance_m).  noise_power is linear (mW).
    """

    rician_factor: float = 10.0
    bs_ris_pathloss: tuple[float, float] = (-30.0, -22.0)
    ris_user_pathloss: tuple[float, float] = (-30.0, -22.0)
    bs_user_pathloss: tuple[float, float] = (-32.6, -36.7)
    noise_power: float = 1e-10

    def __post_init__(self):
        if self.noise_power <= 0:
            raise ValueError("noise_power must be positive")
        if self.rician_factor < 0:
            raise ValueError("rician_factor must be nonnegative")


@dataclass
class ChannelSet:
    """One channel realization.

    h_bs_ris : (M, N) BS-to-RIS matrix.
    h_direct : (K_tot, N) BS-to-user vectors.
    h_ris_user : (K_tot, M) RIS-to-user vectors.
    cascaded : (K_tot, N, M), cascaded[u] = h_bs_ris^H diag(h_ris_user[u]).
    """

    h_bs_ris: np.ndarray
    h_direct: np.ndarray
    h_ris_user: np.ndarray
    cascaded: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.cascaded is None:
            self.cascaded = cascade(self.h_bs_ris, self.h_ris_user)

    @property
    def n_users(self) -> int:
        return self.h_direct.shape[0]

    @property
    def n_antennas(self) -> int:
        return self.h_direct.shape[1]

    @property
    def n_ris(self) -> int:
        return self.h_bs_ris.shape[0]

    def scaled(self, c: float) -> "ChannelSet":
        """All channels multiplied by amplitude factor c (SINR-preserving with noise * c^2)."""
        return ChannelSet(
            h_bs_ris=c * self.h_bs_ris,
            h_direct=c * self.h_direct,
            h_ris_user=self.h_ris_user.copy(),
            cascaded=c * self.cascaded,
        )

    def without_ris_path(self) -> "ChannelSet":
        """Copy with the RIS path removed (zero reflecting elements)."""
        return ChannelSet(
            h_bs_ris=np.zeros((0, self.n_antennas), dtype=complex),
            h_direct=self.h_direct.copy(),
            h_ris_user=np.zeros((self.n_users, 0), dtype=complex),
        )


def cascade(h_bs_ris: np.ndarray, h_ris_user: np.ndarray) -> np.ndarray:
    """Per-user cascaded channels H_r^H diag(h_ris_user[u]), shape (K_tot, N, M)."""
    hr_h = h_bs_ris.conj().T  # (N, M)
    return hr_h[None, :, :] * h_ris_user[:, None, :]


def steering_vector_bs(psi1: float, theta1: float, n_antennas: int, spacing: float = 0.5) -> np.ndarray:
    """ULA steering vector; entry n is exp(j 2pi (n-1) spacing cos(psi1) cos(theta1))."""
    if n_antennas < 1:
        raise InvalidGeometryError("n_antennas must be >= 1")
    d = np.cos(psi1) * np.cos(theta1)
    n = np.arange(n_antennas)
    return np.exp(2j * np.pi * n * spacing * d)


def steering_vector_ris(psi2: float, theta2: float, grid: tuple[int, int], spacing: float = 0.5) -> np.ndarray:
    """Planar RIS steering vector with row-major (y, then z) element indexing.

    Element m (1-based) uses y_m = mod(m-1, M_y), z_m = floor(m / M_y) + 1 and
    phase 2pi spacing [y_m sin(psi2) cos(theta2) + z_m sin(theta2)].
    """
    my, mz = grid
    if my < 1 or mz < 1:
        raise InvalidGeometryError("RIS grid must be >= 1 in each dimension")
    m = np.arange(1, my * mz + 1)
    y_m = np.mod(m - 1, my)
    z_m = np.floor_divide(m, my) + 1
    phase = 2.0 * np.pi * spacing * (y_m * np.sin(psi2) * np.cos(theta2) + z_m * np.sin(theta2))
    return np.exp(1j * phase)


def path_gain_db(distance: float, intercept_db: float, slope_db: float) -> float:
    """Distance-based path gain in dB: intercept + slope * log10(distance)."""
    if distance <= 0:
        raise InvalidGeometryError(f"distance must be positive, got {distance}")
    return intercept_db + slope_db * np.log10(distance)


def bs_ris_angles(geometry: GeometryConfig) -> tuple[float, float, float, float]:
    """(psi1, theta1, psi2, theta2) reproducing the geometric direction cosines.

    cos(psi1)cos(theta1) = (x_ris - x_bs)/d, sin(psi2)cos(theta2) = (y_bs - y_ris)/d,
    sin(theta2) = (z_bs - z_ris)/d.
    """
    bs = np.asarray(geometry.bs_position, dtype=float)
    ris = np.asarray(geometry.ris_position, dtype=float)
    d = geometry.bs_ris_distance()
    cos1 = np.clip((ris[0] - bs[0]) / d, -1.0, 1.0)
    psi1, theta1 = float(np.arccos(cos1)), 0.0
    sin_t2 = np.clip((bs[2] - ris[2]) / d, -1.0, 1.0)
    theta2 = float(np.arcsin(sin_t2))
    cos_t2 = np.cos(theta2)
    if cos_t2 > 1e-12:
        psi2 = float(np.arcsin(np.clip((bs[1] - ris[1]) / (d * cos_t2), -1.0, 1.0)))
    else:
        psi2 = 0.0
    return psi1, theta1, psi2, theta2


def drop_user_positions(geometry: GeometryConfig, n_users: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform-area user drop in the disk around the RIS (x, y) projection, z = 0."""
    r = geometry.user_drop_radius * np.sqrt(rng.uniform(size=n_users))
    ang = rng.uniform(0.0, 2.0 * np.pi, size=n_users)
    cx, cy = geometry.ris_position[0], geometry.ris_position[1]
    pos = np.zeros((n_users, 3))
    pos[:, 0] = cx + r * np.cos(ang)
    pos[:, 1] = cy + r * np.sin(ang)
    return pos


def _complex_gaussian(rng: np.random.Generator, shape, variance=1.0) -> np.ndarray:
    """i.i.d. CN(0, variance) entries (real/imag parts each with variance/2)."""
    scale = np.sqrt(np.asarray(variance, dtype=float) / 2.0)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def generate_channels(scenario, geometry: GeometryConfig, params: ChannelParams, seed: int) -> ChannelSet:
    """Draw one full channel realization; identical seed gives identical output.

    scenario provides n_antennas, n_ris and the total user count; geometry
    must satisfy ris_grid product == scenario.n_ris.
    """
    n = scenario.n_antennas
    m = scenario.n_ris
    k_tot = scenario.n_users
    if geometry.n_ris != m:
        raise InvalidGeometryError(f"ris_grid product {geometry.n_ris} != scenario n_ris {m}")
    rng = np.random.default_rng(seed)

    d_br = geometry.bs_ris_distance()
    psi1, theta1, psi2, theta2 = bs_ris_angles(geometry)
    b_bs = steering_vector_bs(psi1, theta1, n, geometry.antenna_spacing_wavelengths)
    b_ris = steering_vector_ris(psi2, theta2, geometry.ris_grid, geometry.element_spacing_wavelengths)
    h_los = np.outer(b_ris, b_bs.conj())

    kr = params.rician_factor
    beta_br_amp = np.sqrt(db_to_linear(path_gain_db(d_br, *params.bs_ris_pathloss)))
    h_nlos = _complex_gaussian(rng, (m, n))
    h_bs_ris = beta_br_amp * (
        np.sqrt(kr / (1.0 + kr)) * h_los + np.sqrt(1.0 / (1.0 + kr)) * h_nlos
    )

    users = drop_user_positions(geometry, k_tot, rng)
    d_ru = np.linalg.norm(users - np.asarray(geometry.ris_position), axis=1)
    d_bu = np.linalg.norm(users - np.asarray(geometry.bs_position), axis=1)
    if np.any(d_ru <= 0) or np.any(d_bu <= 0):
        raise InvalidGeometryError("user position coincides with BS or RIS")
    beta_r = db_to_linear([path_gain_db(d, *params.ris_user_pathloss) for d in d_ru])
    beta_d = db_to_linear([path_gain_db(d, *params.bs_user_pathloss) for d in d_bu])

    h_ris_user = _complex_gaussian(rng, (k_tot, m), beta_r[:, None])
    h_direct = _complex_gaussian(rng, (k_tot, n), beta_d[:, None])

    return ChannelSet(h_bs_ris=h_bs_ris, h_direct=h_direct, h_ris_user=h_ris_user)


def save_channelset(channels: ChannelSet, path) -> None:
    """Binary dump: magic, version, dims, then row-major complex pairs as float64."""
    with open(path, "wb") as f:
        f.write(_DUMP_MAGIC)
        f.write(struct.pack("<IIII", _DUMP_VERSION, channels.n_ris, channels.n_antennas, channels.n_users))
        for arr in (channels.h_bs_ris, channels.h_direct, channels.h_ris_user):
            pairs = np.empty(arr.shape + (2,), dtype="<f8")
            pairs[..., 0] = arr.real
            pairs[..., 1] = arr.imag
            f.write(pairs.tobytes())


def load_channelset(path) -> ChannelSet:
    """Inverse of save_channelset; cascaded channels are rebuilt from the dump."""
    with open(path, "rb") as f:
        magic = f.read(4)
        if magic != _DUMP_MAGIC:
            raise ValueError(f"not a channel dump: bad magic {magic!r}")
        version, m, n, k_tot = struct.unpack("<IIII", f.read(16))
        if version != _DUMP_VERSION:
            raise ValueError(f"unsupported channel dump version {version}")

        def read_arr(shape):
            count = int(np.prod(shape)) * 2
            flat = np.frombuffer(f.read(count * 8), dtype="<f8")
            pairs = flat.reshape(shape + (2,))
            return (pairs[..., 0] + 1j * pairs[..., 1]).astype(np.complex128)

        h_bs_ris = read_arr((m, n))
        h_direct = read_arr((k_tot, n))
        h_ris_user = read_arr((k_tot, m))
    return ChannelSet(h_bs_ris=h_bs_ris, h_direct=h_direct, h_ris_user=h_ris_user)
