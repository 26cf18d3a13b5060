"""Scenario geometry and channel construction.

The surface sits in the YZ-plane on a rectangular grid indexed row by row
from the bottom; users carry small linear arrays parallel to the y-axis in
the XY-plane. The feeder link from the base station is a multipath
geometric far-field channel, while each surface-to-user link is a pure
line-of-sight spherical-wave channel whose entries carry the exact
per-element distance in amplitude and phase.

Unit conventions (dB/dBm to linear) are centralized here.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

SPEED_OF_LIGHT = 299_792_458.0


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


def side_of_user(x: float) -> str:
    """Transmission side for x > 0, reflection side for x < 0."""
    if x > 0.0:
        return "T"
    if x < 0.0:
        return "R"
    raise ValueError("user x-coordinate must be nonzero to assign a side")


@dataclass(frozen=True)
class ScenarioGeometry:
    """Positions and spacings of the BS, the surface grid, and the users."""

    bs_position: np.ndarray  # (3,) m
    ris_reference: np.ndarray  # (3,) m, (0, y_f, z_f)
    ris_grid: tuple[int, int]  # (N_y, N_z)
    ris_spacing: float  # m
    user_positions: np.ndarray  # (K, 3) m, reference antenna of each user
    user_antennas: int
    user_spacing: float  # m
    wavelength: float  # m

    def __post_init__(self):
        object.__setattr__(self, "bs_position", np.asarray(self.bs_position, float))
        object.__setattr__(self, "ris_reference", np.asarray(self.ris_reference, float))
        object.__setattr__(self, "user_positions", np.atleast_2d(np.asarray(self.user_positions, float)))
        if self.ris_spacing <= 0 or self.user_spacing <= 0 or self.wavelength <= 0:
            raise ValueError("spacings and wavelength must be positive")
        ny, nz = self.ris_grid
        if ny < 1 or nz < 1:
            raise ValueError("surface grid dimensions must be >= 1")
        if abs(self.ris_reference[0]) > 0.0:
            raise ValueError("surface reference must lie in the YZ-plane (x = 0)")
        if np.any(np.abs(self.user_positions[:, 2]) > 0.0):
            raise ValueError("users must lie in the XY-plane (z = 0)")
        for x in self.user_positions[:, 0]:
            side_of_user(float(x))  # rejects x = 0

    @property
    def n_elements(self) -> int:
        return self.ris_grid[0] * self.ris_grid[1]

    @property
    def n_users(self) -> int:
        return self.user_positions.shape[0]

    def sides(self) -> list[str]:
        return [side_of_user(float(x)) for x in self.user_positions[:, 0]]


@dataclass(frozen=True)
class FarFieldPathSet:
    """Scatterer geometry of the BS-to-surface link."""

    bs_aods: np.ndarray  # (L,) rad
    ris_azimuth_aoas: np.ndarray  # (L,) rad
    ris_elevation_aoas: np.ndarray  # (L,) rad
    pathloss: float  # linear power gain

    def __post_init__(self):
        for name in ("bs_aods", "ris_azimuth_aoas", "ris_elevation_aoas"):
            object.__setattr__(self, name, np.atleast_1d(np.asarray(getattr(self, name), float)))
        if self.path_count < 1:
            raise ValueError("at least one path is required")
        if self.pathloss <= 0:
            raise ValueError("path loss gain must be positive")
        if not (
            np.all(np.isfinite(self.bs_aods))
            and np.all(np.isfinite(self.ris_azimuth_aoas))
            and np.all(np.isfinite(self.ris_elevation_aoas))
        ):
            raise ValueError("angles must be finite")

    @property
    def path_count(self) -> int:
        return self.bs_aods.shape[0]


@dataclass
class ChannelSet:
    """Feeder matrix, per-user surface channels, and side membership."""

    g: np.ndarray  # (N, M_b)
    h_per_user: list[np.ndarray]  # each (M, N)
    side_assignment: list[str] = field(default_factory=list)

    @property
    def n_users(self) -> int:
        return len(self.h_per_user)

    def users_on_side(self, side: str) -> list[int]:
        return [k for k, s in enumerate(self.side_assignment) if s == side]


def element_indices(n: int, n_y: int) -> tuple[int, int]:
    """(column, row) grid indices of 1-based element n, bottom row first."""
    return (n - 1) % n_y, (n - 1) // n_y


def element_position(n: int, geom: ScenarioGeometry) -> np.ndarray:
    """Cartesian position of the n-th surface element, n in 1..N."""
    if not 1 <= n <= geom.n_elements:
        raise IndexError(f"element index {n} out of range 1..{geom.n_elements}")
    iy, iz = element_indices(n, geom.ris_grid[0])
    ref = geom.ris_reference
    return np.array([0.0, iy * geom.ris_spacing + ref[1], iz * geom.ris_spacing + ref[2]])


def all_element_positions(geom: ScenarioGeometry) -> np.ndarray:
    """(N, 3) positions of every element in index order."""
    n = geom.n_elements
    idx = np.arange(n)
    iy = idx % geom.ris_grid[0]
    iz = idx // geom.ris_grid[0]
    pos = np.zeros((n, 3))
    pos[:, 1] = iy * geom.ris_spacing + geom.ris_reference[1]
    pos[:, 2] = iz * geom.ris_spacing + geom.ris_reference[2]
    return pos


def user_antenna_positions(geom: ScenarioGeometry, k: int) -> np.ndarray:
    """(M, 3) antenna positions of user k, array parallel to the y-axis."""
    ref = geom.user_positions[k]
    pos = np.tile(ref, (geom.user_antennas, 1))
    pos[:, 1] += np.arange(geom.user_antennas) * geom.user_spacing
    return pos


def build_nearfield_channel(geom: ScenarioGeometry, k: int) -> np.ndarray:
    """Spherical-wave LoS channel from the surface to user k, (M, N).

    Entry (m, n) is lambda/(4 pi d) * exp(-j 2 pi d / lambda) with d the
    exact distance between user antenna m and element n.
    """
    elems = all_element_positions(geom)  # (N, 3)
    ants = user_antenna_positions(geom, k)  # (M, 3)
    d = np.linalg.norm(ants[:, None, :] - elems[None, :, :], axis=2)
    if np.any(d <= 0.0):
        raise ValueError(f"user {k} antenna coincides with a surface element")
    lam = geom.wavelength
    return lam / (4.0 * np.pi * d) * np.exp(-2j * np.pi * d / lam)


def ula_steering(n_antennas: int, aod: float) -> np.ndarray:
    """Unit-norm ULA steering vector at half-wavelength spacing."""
    m = np.arange(n_antennas)
    return np.exp(1j * np.pi * m * np.sin(aod)) / np.sqrt(n_antennas)


def upa_steering(geom: ScenarioGeometry, azimuth: float, elevation: float) -> np.ndarray:
    """Unit-norm steering vector of the surface grid at its own spacing."""
    n = geom.n_elements
    idx = np.arange(n)
    iy = idx % geom.ris_grid[0]
    iz = idx // geom.ris_grid[0]
    phase = (
        2.0
        * np.pi
        * (geom.ris_spacing / geom.wavelength)
        * (iy * np.sin(elevation) * np.sin(azimuth) + iz * np.cos(elevation))
    )
    return np.exp(1j * phase) / np.sqrt(n)


def build_farfield_channel(geom: ScenarioGeometry, paths: FarFieldPathSet, m_b: int) -> np.ndarray:
    """Geometric multipath channel from an M_b-antenna BS to the surface, (N, M_b)."""
    n = geom.n_elements
    scale = np.sqrt(paths.pathloss * m_b * n / paths.path_count)
    g = np.zeros((n, m_b), dtype=np.complex128)
    for gamma, phi, theta in zip(paths.bs_aods, paths.ris_azimuth_aoas, paths.ris_elevation_aoas):
        g += np.outer(upa_steering(geom, phi, theta), ula_steering(m_b, gamma).conj())
    return scale * g


def pathloss(d: float, c0_db: float, d0: float, alpha: float) -> float:
    """Distance power law: linear gain c0 * (d/d0)^-alpha."""
    if d <= 0.0:
        raise ValueError("distance must be positive")
    return db_to_linear(c0_db) * (d / d0) ** (-alpha)


def rayleigh_distance(geom: ScenarioGeometry) -> float:
    """2 D^2 / lambda with D the diagonal of the surface aperture."""
    ny, nz = geom.ris_grid
    diag = geom.ris_spacing * np.hypot(ny - 1, nz - 1)
    return 2.0 * diag**2 / geom.wavelength


def draw_farfield_paths(
    geom: ScenarioGeometry, n_paths: int, beta: float, rng: np.random.Generator
) -> FarFieldPathSet:
    """Draw scatterer angles: AoD/azimuth uniform on [-pi/2, pi/2), elevation on [0, pi)."""
    return FarFieldPathSet(
        bs_aods=rng.uniform(-np.pi / 2, np.pi / 2, n_paths),
        ris_azimuth_aoas=rng.uniform(-np.pi / 2, np.pi / 2, n_paths),
        ris_elevation_aoas=rng.uniform(0.0, np.pi, n_paths),
        pathloss=beta,
    )


def build_channel_set(geom: ScenarioGeometry, paths: FarFieldPathSet, m_b: int) -> ChannelSet:
    """Assemble the feeder matrix and every user's spherical-wave channel."""
    g = build_farfield_channel(geom, paths, m_b)
    h = [build_nearfield_channel(geom, k) for k in range(geom.n_users)]
    return ChannelSet(g=g, h_per_user=h, side_assignment=geom.sides())
