"""Block coordinate descent over combiners, weights, precoders, surface.

One iteration updates, in order: the MMSE combiners (closed form), the
auxiliary weight matrices (inverse MSE), the precoders (Lagrangian water
level found by bisection on the monotone power curve), and the surface
coefficients (penalty solver, element-wise solver, or frozen). Every block
is an exact maximizer of the surrogate given the others, so the surrogate
trace is non-decreasing; the penalty solver's extraction step can lose
optimality, so its result is accepted only when the surrogate does not
drop (otherwise the previous surface is kept for that iteration).
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .comm import (
    BeamformerSet,
    Scenario,
    TrcState,
    WmmseState,
    effective_channels,
    matched_filter_beamformers,
    mse_matrix,
    surrogate_objective,
    uniform_trc,
    weighted_sum_rate,
)
from .geometry import ChannelSet
from .linalg import hermitian_eig, inv_hpd, solve_hpd
from .trc_ele import run_ele
from .trc_forms import build_trc_forms
from .trc_pen import PenConfig, run_pen

TRC_SOLVERS = ("PEN", "ELE", "FIXED")


@dataclass
class BcdConfig:
    epsilon_bcd: float = 1e-4  # fractional surrogate increase to stop
    max_iterations: int = 200
    trc_solver: str = "ELE"
    power_bisection_tol: float = 1e-9
    rng_seed: int | tuple = 0  # anything numpy's default_rng accepts as entropy
    ele_sweeps: int = 1
    freeze_amplitudes: bool = False  # phase-only surface updates (baselines)
    pen: PenConfig = field(default_factory=PenConfig)

    def __post_init__(self):
        if self.trc_solver not in TRC_SOLVERS:
            raise ValueError(f"trc_solver must be one of {TRC_SOLVERS}")
        if self.epsilon_bcd <= 0 or self.power_bisection_tol <= 0:
            raise ValueError("tolerances must be positive")


@dataclass
class RunTrace:
    """Per-iteration record of objectives, feasibility, and block timings."""

    surrogate_init: float = 0.0
    surrogate_after_u: list[float] = field(default_factory=list)
    surrogate_after_z: list[float] = field(default_factory=list)
    surrogate_after_w: list[float] = field(default_factory=list)
    surrogate_after_phi: list[float] = field(default_factory=list)
    sum_rate_bits: list[float] = field(default_factory=list)
    power_used: list[float] = field(default_factory=list)
    # spectral-normalized rank-one gap of the penalty solver's final lift
    # (zero for the element-wise and frozen surface paths)
    trc_violation: list[float] = field(default_factory=list)
    phi_accepted: list[bool] = field(default_factory=list)
    time_u: list[float] = field(default_factory=list)
    time_z: list[float] = field(default_factory=list)
    time_w: list[float] = field(default_factory=list)
    time_phi: list[float] = field(default_factory=list)
    time_total: list[float] = field(default_factory=list)

    @property
    def iterations(self) -> int:
        return len(self.surrogate_after_phi)

    def block_sequence(self) -> list[float]:
        """Surrogate values in block-update order, starting at the init value."""
        seq = [self.surrogate_init]
        for i in range(self.iterations):
            seq += [
                self.surrogate_after_u[i],
                self.surrogate_after_z[i],
                self.surrogate_after_w[i],
                self.surrogate_after_phi[i],
            ]
        return seq


@dataclass
class BcdResult:
    ws: BeamformerSet
    trc: TrcState
    wmmse: WmmseState
    trace: RunTrace
    iterations: int
    converged: bool


class BcdSubproblemError(RuntimeError):
    """A block update failed; carries the iteration and block it died in."""

    def __init__(self, iteration: int, block: str, cause: Exception):
        self.iteration = iteration
        self.block = block
        super().__init__(f"iteration {iteration}, {block} update: {cause}")


def update_combiners(
    ws: BeamformerSet, channels: ChannelSet, trc: TrcState, sigma2: float
) -> list[np.ndarray]:
    """MMSE combiners: (sum_l Hbar W_l W_l^H Hbar^H + sigma2 I)^-1 Hbar W_k."""
    out = []
    hbars = effective_channels(channels, trc)
    for k, hbar in enumerate(hbars):
        m = hbar.shape[0]
        cov = sigma2 * np.eye(m, dtype=np.complex128)
        for w in ws.w_per_user:
            hw = hbar @ w
            cov += hw @ hw.conj().T
        out.append(solve_hpd(cov, hbar @ ws.w_per_user[k]))
    return out


def update_weights(mse_per_user: list[np.ndarray]) -> list[np.ndarray]:
    """Auxiliary weights Z_k = E_k^-1, with a trace-scaled ridge when E_k
    is numerically singular."""
    out = []
    for e in mse_per_user:
        m = e.shape[0]
        w = np.linalg.eigvalsh(e)
        if w[0] < 1e-12 * max(w[-1], 0.0):
            e = e + (1e-12 * max(np.trace(e).real, 1e-300) / m) * np.eye(m)
        out.append(inv_hpd(e))
    return out


def build_quadratic_terms(
    ws: BeamformerSet,
    wmmse: WmmseState,
    channels: ChannelSet,
    trc: TrcState,
) -> tuple[np.ndarray, list[np.ndarray]]:
    """Precoder-subproblem data: A = sum eta Hbar^H U Z U^H Hbar, B_k = eta Z U^H Hbar."""
    hbars = effective_channels(channels, trc)
    m_b = hbars[0].shape[1]
    a = np.zeros((m_b, m_b), np.complex128)
    b_per_user = []
    for k, hbar in enumerate(hbars):
        eta = ws.weights[k]
        u = wmmse.u_per_user[k]
        z = wmmse.z_per_user[k]
        uh = u.conj().T @ hbar
        a += eta * (uh.conj().T @ z @ uh)
        b_per_user.append(eta * (z @ uh))
    return 0.5 * (a + a.conj().T), b_per_user


def update_beamformers(
    a: np.ndarray,
    b_per_user: list[np.ndarray],
    power: float,
    tol: float = 1e-9,
) -> tuple[list[np.ndarray], float]:
    """Minimize sum_k tr(W_k^H A W_k) - 2 Re tr(B_k W_k) under the power cap.

    The stationary precoders are W_k = (A + lam I)^-1 B_k^H with lam >= 0.
    In A's eigenbasis the spent power p(lam) = sum_i s_i / (lam_i + lam)^2
    is strictly decreasing, so the water level is found by bisection; when
    the unconstrained solution already fits, lam = 0 with a pseudo-solve on
    A's range.
    """
    eig = hermitian_eig(a, symmetrize=True)
    lam_a = np.maximum(eig.eigenvalues, 0.0)
    q = eig.eigenvectors
    r_per_user = [q.conj().T @ b.conj().T for b in b_per_user]
    s = np.zeros(lam_a.shape[0])
    for r in r_per_user:
        s += np.sum(np.abs(r) ** 2, axis=1)
    s_total = float(np.sum(s))
    if s_total == 0.0:
        zero = [np.zeros((q.shape[0], b.shape[0]), np.complex128) for b in b_per_user]
        return zero, 0.0
    null = lam_a <= 1e-14 * max(lam_a[0], 1e-300)
    null_energy = float(np.sum(s[null]))

    def power_at(lam: float) -> float:
        if lam == 0.0:
            if null_energy > 1e-14 * s_total:
                return np.inf
            denom = np.where(null, 1.0, lam_a) ** 2
            return float(np.sum(np.where(null, 0.0, s) / denom))
        return float(np.sum(s / (lam_a + lam) ** 2))

    def precoders(lam: float) -> list[np.ndarray]:
        if lam == 0.0:
            inv = np.where(null, 0.0, 1.0 / np.where(null, 1.0, lam_a))
        else:
            inv = 1.0 / (lam_a + lam)
        return [q @ (inv[:, None] * r) for r in r_per_user]

    if power_at(0.0) <= power:
        return precoders(0.0), 0.0
    lo, hi = 0.0, np.sqrt(s_total / power) + float(lam_a[0])
    p_hi = power_at(hi)  # <= power by the bracket construction
    for _ in range(300):
        if power - p_hi <= tol * power:
            break
        mid = 0.5 * (lo + hi)
        if not lo < mid < hi:  # float bracket exhausted
            break
        if power_at(mid) > power:
            lo = mid
        else:
            hi = mid
            p_hi = power_at(mid)
    return precoders(hi), float(hi)


def initialize_state(
    scenario: Scenario, rng: np.random.Generator, trc_init: TrcState | None = None
) -> tuple[BeamformerSet, TrcState]:
    """Feasible start: half-split surface with random phases, matched-filter
    precoders spending the whole budget."""
    n = scenario.channels.g.shape[0]
    trc = trc_init.copy() if trc_init is not None else uniform_trc(n, rng)
    ws = matched_filter_beamformers(scenario.channels, trc, scenario.power, scenario.weights)
    return ws, trc


def run_bcd(
    config: BcdConfig,
    scenario: Scenario,
    trc_init: TrcState | None = None,
    ws_init: BeamformerSet | None = None,
) -> BcdResult:
    """Cycle the four block updates until the surrogate stalls."""
    channels = scenario.channels
    sigma2 = scenario.sigma2
    rng = np.random.default_rng(config.rng_seed)
    ws, trc = initialize_state(scenario, rng, trc_init)
    if ws_init is not None:
        ws = ws_init
    k_users = channels.n_users
    m = channels.h_per_user[0].shape[0]
    wmmse = WmmseState(
        u_per_user=[np.zeros((m, m), np.complex128) for _ in range(k_users)],
        z_per_user=[np.eye(m, dtype=np.complex128) for _ in range(k_users)],
        e_per_user=[np.eye(m, dtype=np.complex128) for _ in range(k_users)],
    )
    trace = RunTrace()
    trace.surrogate_init = surrogate_objective(ws, wmmse, channels, trc, sigma2)
    prev_obj = trace.surrogate_init
    converged = False
    for it in range(config.max_iterations):
        t_start = time.perf_counter()
        block = "combiner"
        try:
            t0 = time.perf_counter()
            wmmse.u_per_user = update_combiners(ws, channels, trc, sigma2)
            trace.time_u.append(time.perf_counter() - t0)
            trace.surrogate_after_u.append(
                surrogate_objective(ws, wmmse, channels, trc, sigma2)
            )

            block = "weight"
            t0 = time.perf_counter()
            wmmse.e_per_user = [
                mse_matrix(k, ws, wmmse, channels, trc, sigma2) for k in range(k_users)
            ]
            wmmse.z_per_user = update_weights(wmmse.e_per_user)
            trace.time_z.append(time.perf_counter() - t0)
            trace.surrogate_after_z.append(
                surrogate_objective(ws, wmmse, channels, trc, sigma2)
            )

            block = "precoder"
            t0 = time.perf_counter()
            a, b_per_user = build_quadratic_terms(ws, wmmse, channels, trc)
            w_list, _lam = update_beamformers(
                a, b_per_user, scenario.power, tol=config.power_bisection_tol
            )
            ws = ws.replace_w(w_list)
            trace.time_w.append(time.perf_counter() - t0)
            trace.surrogate_after_w.append(
                surrogate_objective(ws, wmmse, channels, trc, sigma2)
            )

            block = "surface"
            t0 = time.perf_counter()
            violation = 0.0
            accepted = True
            if config.trc_solver != "FIXED":
                forms = build_trc_forms(ws, wmmse, channels)
                if config.trc_solver == "ELE":
                    trc = run_ele(
                        forms,
                        trc,
                        sweeps=config.ele_sweeps,
                        phase_only=config.freeze_amplitudes,
                    )
                else:
                    pen_out = run_pen(forms, config.pen, trc)
                    violation = pen_out.violation_rel
                    candidate = pen_out.trc
                    if config.freeze_amplitudes:
                        candidate = TrcState(
                            trc.rho_t.copy(),
                            trc.rho_r.copy(),
                            candidate.theta_t,
                            candidate.theta_r,
                        )
                    before = trace.surrogate_after_w[-1]
                    after = surrogate_objective(ws, wmmse, channels, candidate, sigma2)
                    if after >= before:
                        trc = candidate
                    else:
                        accepted = False
            trace.time_phi.append(time.perf_counter() - t0)
            trace.surrogate_after_phi.append(
                surrogate_objective(ws, wmmse, channels, trc, sigma2)
            )
        except Exception as exc:
            raise BcdSubproblemError(it + 1, block, exc) from exc
        trace.trc_violation.append(violation)
        trace.phi_accepted.append(accepted)
        trace.sum_rate_bits.append(weighted_sum_rate(ws, channels, trc, sigma2))
        trace.power_used.append(ws.power_used)
        trace.time_total.append(time.perf_counter() - t_start)

        obj = trace.surrogate_after_phi[-1]
        if obj - prev_obj < config.epsilon_bcd * max(abs(prev_obj), 1e-12):
            prev_obj = obj
            converged = True
            break
        prev_obj = obj
    return BcdResult(
        ws=ws,
        trc=trc,
        wmmse=wmmse,
        trace=trace,
        iterations=trace.iterations,
        converged=converged,
    )
