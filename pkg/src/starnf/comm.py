"""Rate and MSE bookkeeping for the downlink model.

Holds the surface coefficient state, the precoder set, the WMMSE auxiliary
state, and the evaluation functions: effective channels, interference
covariances, per-user rates, MSE matrices, and the weighted-MMSE surrogate
objective. Logs are natural internally; rates convert to bits/s/Hz at the
single point `user_rate`.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import ChannelSet, ScenarioGeometry
from .linalg import inv_hpd, logdet_hpd

COUPLING_ATOL = 1e-9
POWER_RTOL = 1e-9
LN2 = float(np.log(2.0))


@dataclass
class TrcState:
    """Per-element transmission/reflection amplitudes and phases.

    Energy splitting: rho_t + rho_r = 1 per element, phases independent.
    """

    rho_t: np.ndarray
    rho_r: np.ndarray
    theta_t: np.ndarray
    theta_r: np.ndarray

    def __post_init__(self):
        self.rho_t = np.asarray(self.rho_t, float)
        self.rho_r = np.asarray(self.rho_r, float)
        self.theta_t = np.asarray(self.theta_t, float)
        self.theta_r = np.asarray(self.theta_r, float)
        n = self.rho_t.shape[0]
        if not (self.rho_r.shape[0] == self.theta_t.shape[0] == self.theta_r.shape[0] == n):
            raise ValueError("all coefficient arrays must have equal length")
        if np.any(self.rho_t < -COUPLING_ATOL) or np.any(self.rho_t > 1 + COUPLING_ATOL):
            raise ValueError("transmission amplitudes outside [0, 1]")
        if np.any(self.rho_r < -COUPLING_ATOL) or np.any(self.rho_r > 1 + COUPLING_ATOL):
            raise ValueError("reflection amplitudes outside [0, 1]")
        gap = np.abs(self.rho_t + self.rho_r - 1.0)
        if np.any(gap > COUPLING_ATOL):
            raise ValueError(f"energy-splitting coupling violated by {gap.max():.3e}")

    @property
    def n_elements(self) -> int:
        return self.rho_t.shape[0]

    def coefficients(self, side: str) -> np.ndarray:
        """Diagonal of the side's coefficient matrix, sqrt(rho) e^{j theta}."""
        if side == "T":
            return np.sqrt(np.clip(self.rho_t, 0.0, 1.0)) * np.exp(1j * self.theta_t)
        if side == "R":
            return np.sqrt(np.clip(self.rho_r, 0.0, 1.0)) * np.exp(1j * self.theta_r)
        raise ValueError(f"side must be 'T' or 'R', got {side!r}")

    def copy(self) -> "TrcState":
        return TrcState(self.rho_t.copy(), self.rho_r.copy(), self.theta_t.copy(), self.theta_r.copy())


def uniform_trc(n: int, rng: np.random.Generator | None = None) -> TrcState:
    """Half-power split with i.i.d. uniform phases (zero phases without rng)."""
    if rng is None:
        th_t = np.zeros(n)
        th_r = np.zeros(n)
    else:
        th_t = rng.uniform(0.0, 2.0 * np.pi, n)
        th_r = rng.uniform(0.0, 2.0 * np.pi, n)
    half = np.full(n, 0.5)
    return TrcState(half.copy(), half.copy(), th_t, th_r)


@dataclass
class BeamformerSet:
    """Per-user precoding matrices under a total power budget."""

    w_per_user: list[np.ndarray]  # each (M_b, M)
    power_budget: float
    weights: np.ndarray  # (K,) access priorities

    def __post_init__(self):
        self.w_per_user = [np.asarray(w, np.complex128) for w in self.w_per_user]
        self.weights = np.asarray(self.weights, float)
        if self.power_budget <= 0:
            raise ValueError("power budget must be positive")
        if np.any(self.weights < 0):
            raise ValueError("weights must be nonnegative")
        used = self.power_used
        if used > self.power_budget * (1.0 + POWER_RTOL):
            raise ValueError(f"power constraint violated: {used:.6e} > {self.power_budget:.6e}")

    @property
    def n_users(self) -> int:
        return len(self.w_per_user)

    @property
    def power_used(self) -> float:
        return float(sum(np.linalg.norm(w) ** 2 for w in self.w_per_user))

    def replace_w(self, w_per_user: list[np.ndarray]) -> "BeamformerSet":
        return BeamformerSet(w_per_user, self.power_budget, self.weights)


@dataclass
class WmmseState:
    """Combiners, auxiliary weights, and cached MSE matrices."""

    u_per_user: list[np.ndarray]  # each (M, M)
    z_per_user: list[np.ndarray]  # each (M, M), Hermitian PD
    e_per_user: list[np.ndarray] = field(default_factory=list)  # each (M, M), Hermitian PSD


@dataclass
class Scenario:
    """One simulated drop: channels plus the scalar link parameters."""

    channels: ChannelSet
    sigma2: float
    power: float
    weights: np.ndarray
    geometry: ScenarioGeometry | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.weights = np.asarray(self.weights, float)
        if self.sigma2 <= 0 or self.power <= 0:
            raise ValueError("noise power and transmit power must be positive")


def effective_channel(h_k: np.ndarray, trc: TrcState, g: np.ndarray, side: str) -> np.ndarray:
    """Aggregated BS-to-user channel H_k diag(v_side) G, shape (M, M_b)."""
    v = trc.coefficients(side)
    if h_k.shape[1] != v.shape[0] or g.shape[0] != v.shape[0]:
        raise ValueError(
            f"dimension mismatch: H is {h_k.shape}, G is {g.shape}, surface has {v.shape[0]} elements"
        )
    return (h_k * v[None, :]) @ g


def effective_channels(channels: ChannelSet, trc: TrcState) -> list[np.ndarray]:
    return [
        effective_channel(h, trc, channels.g, side)
        for h, side in zip(channels.h_per_user, channels.side_assignment)
    ]


def interference_covariance(
    k: int, ws: BeamformerSet, channels: ChannelSet, trc: TrcState, sigma2: float
) -> np.ndarray:
    """Interference-plus-noise covariance at user k, Hermitian PD."""
    if sigma2 <= 0:
        raise ValueError("noise power must be positive")
    hbar = effective_channel(channels.h_per_user[k], trc, channels.g, channels.side_assignment[k])
    m = hbar.shape[0]
    j = sigma2 * np.eye(m, dtype=np.complex128)
    for l, w in enumerate(ws.w_per_user):
        if l == k:
            continue
        hw = hbar @ w
        j += hw @ hw.conj().T
    return j


def user_rate(
    k: int, ws: BeamformerSet, channels: ChannelSet, trc: TrcState, sigma2: float
) -> float:
    """Achievable rate of user k in bits/s/Hz.

    Evaluated as logdet(J + S) - logdet(J) with S the signal covariance,
    which keeps both terms Hermitian PD and avoids forming J^-1.
    """
    hbar = effective_channel(channels.h_per_user[k], trc, channels.g, channels.side_assignment[k])
    j = interference_covariance(k, ws, channels, trc, sigma2)
    hw = hbar @ ws.w_per_user[k]
    s = hw @ hw.conj().T
    return (logdet_hpd(j + s) - logdet_hpd(j)) / LN2


def weighted_sum_rate(ws: BeamformerSet, channels: ChannelSet, trc: TrcState, sigma2: float) -> float:
    """Weighted sum of per-user rates in bits/s/Hz."""
    return float(
        sum(
            ws.weights[k] * user_rate(k, ws, channels, trc, sigma2)
            for k in range(channels.n_users)
        )
    )


def mse_matrix(
    k: int,
    ws: BeamformerSet,
    wmmse: WmmseState,
    channels: ChannelSet,
    trc: TrcState,
    sigma2: float,
) -> np.ndarray:
    """MSE matrix of user k for the current combiner, Hermitian PSD."""
    hbar = effective_channel(channels.h_per_user[k], trc, channels.g, channels.side_assignment[k])
    u = wmmse.u_per_user[k]
    m = u.shape[1]
    d = u.conj().T @ hbar @ ws.w_per_user[k] - np.eye(m, dtype=np.complex128)
    e = d @ d.conj().T + sigma2 * (u.conj().T @ u)
    for l, w in enumerate(ws.w_per_user):
        if l == k:
            continue
        t = u.conj().T @ hbar @ w
        e += t @ t.conj().T
    return 0.5 * (e + e.conj().T)


def surrogate_objective(
    ws: BeamformerSet,
    wmmse: WmmseState,
    channels: ChannelSet,
    trc: TrcState,
    sigma2: float,
) -> float:
    """Weighted-MMSE surrogate, in nats: sum_k eta_k (ln|Z_k| - tr(Z_k E_k) + M).

    E_k is recomputed from the current (U, W, surface) so the value tracks
    whichever block was updated last.
    """
    total = 0.0
    for k in range(channels.n_users):
        z = wmmse.z_per_user[k]
        e = mse_matrix(k, ws, wmmse, channels, trc, sigma2)
        m = z.shape[0]
        total += ws.weights[k] * (logdet_hpd(z) - float(np.trace(z @ e).real) + m)
    return float(total)


def matched_filter_beamformers(
    channels: ChannelSet, trc: TrcState, power: float, weights: np.ndarray
) -> BeamformerSet:
    """Matched-filter precoders scaled to spend the power budget exactly."""
    hbars = effective_channels(channels, trc)
    raw = [h.conj().T for h in hbars]
    total = sum(np.linalg.norm(w) ** 2 for w in raw)
    if total <= 0:
        raise ValueError("all-zero effective channels; cannot initialize precoders")
    c = np.sqrt(power / total)
    return BeamformerSet([c * w for w in raw], power, weights)
