"""Penalty-based surface solver on a lifted SDP with a rank-one penalty.

The side's coefficient vector is augmented with a unit entry and lifted to
a Hermitian PSD matrix V whose diagonal carries the amplitudes. The
rank-one requirement on V is rewritten as nuclear norm minus spectral norm
equal to zero, added to the objective with an escalating penalty factor,
and the concave spectral-norm part is linearized at the previous iterate
(its leading eigenvector), leaving a convex SDP per iteration.

The SDP subproblems are solved by an embedded operator-splitting method:
the iterate is split between the affine/box diagonal-coupling set (closed
form projection) and the PSD cone (eigenvalue clipping), with scaled duals
and over-relaxation. No external conic modeler is used.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .comm import TrcState
from .linalg import hermitian_eig, nuclear_and_spectral_norms
from .trc_forms import TrcQuadraticForm

ADMM_ALPHA = 1.7  # over-relaxation
ADMM_TAU = 2e-3  # prox step scale on the unit-norm objective; fixed, not adapted
# (residual balancing was tried and consistently slowed convergence here: it
# drags tau toward equalized residuals, away from the fast small-tau regime)


@dataclass
class PenConfig:
    """Penalty-loop and embedded-solver parameters."""

    mu0: float | None = None  # absolute initial penalty; None -> mu0_rel * ||Fbar||_F
    mu0_rel: float = 1e-3
    omega: float = 10.0  # penalty escalation factor
    epsilon_sca: float = 1e-4  # inner fractional-decrease threshold
    epsilon_p: float = 1e-7  # rank-violation threshold
    sdp_tol: float = 1e-7
    max_inner: int = 50
    max_outer: int = 10
    sdp_max_iter: int = 20_000
    max_elements: int = 64  # cubic per-iteration cost gate

    def __post_init__(self):
        if self.omega <= 1.0:
            raise ValueError("penalty escalation factor must exceed 1")
        for name in ("mu0_rel", "epsilon_sca", "epsilon_p", "sdp_tol"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


LIFT_ATOL = 1e-8


@dataclass(frozen=True)
class AugmentedLift:
    """Augmented coefficient vectors and their rank-one lifts."""

    v_t_bar: np.ndarray  # (N+1,)
    v_r_bar: np.ndarray
    v_t: np.ndarray  # (N+1, N+1) Hermitian PSD
    v_r: np.ndarray
    rho_t: np.ndarray  # (N+1,) real diagonal (amplitudes, then the unit slot)
    rho_r: np.ndarray

    def __post_init__(self):
        n = self.rho_t.shape[0] - 1
        for v, rho in ((self.v_t, self.rho_t), (self.v_r, self.rho_r)):
            if np.max(np.abs(np.diag(v).real - rho)) > LIFT_ATOL:
                raise ValueError("lift diagonal does not match its amplitude vector")
            if abs(rho[-1] - 1.0) > LIFT_ATOL:
                raise ValueError("augmentation slot must be one")
        if np.max(np.abs(self.rho_t[:n] + self.rho_r[:n] - 1.0)) > LIFT_ATOL:
            raise ValueError("amplitude coupling violated in the lift")

    @classmethod
    def from_trc(cls, trc: TrcState) -> "AugmentedLift":
        vt = np.concatenate([trc.coefficients("T"), [1.0 + 0j]])
        vr = np.concatenate([trc.coefficients("R"), [1.0 + 0j]])
        return cls(
            v_t_bar=vt,
            v_r_bar=vr,
            v_t=np.outer(vt, vt.conj()),
            v_r=np.outer(vr, vr.conj()),
            rho_t=np.concatenate([trc.rho_t, [1.0]]),
            rho_r=np.concatenate([trc.rho_r, [1.0]]),
        )


def build_fbar(forms: TrcQuadraticForm) -> tuple[np.ndarray, np.ndarray]:
    """Border each side's (F, e) into the lifted objective matrix.

    The bordered matrix satisfies tr(V Fbar) = v^H F v - 2 Re(e^T v) for
    every rank-one lift with unit last diagonal entry.
    """

    def border(f: np.ndarray, e: np.ndarray) -> np.ndarray:
        n = f.shape[0]
        out = np.zeros((n + 1, n + 1), np.complex128)
        out[:n, :n] = f
        out[:n, n] = -e.conj()
        out[n, :n] = -e
        return out

    return border(forms.f_t, forms.e_t), border(forms.f_r, forms.e_r)


def sca_upper_bound(v: np.ndarray, v_prev: np.ndarray) -> tuple[float, np.ndarray]:
    """Convex majorant of nuclear-minus-spectral norm, tight at v_prev.

    Returns the bound value and the leading eigenvector of v_prev used to
    linearize the spectral norm (the subgradient data the SDP needs).
    """
    prev = hermitian_eig(v_prev, symmetrize=True)
    d_max = prev.eigenvectors[:, 0]
    nuc, _ = nuclear_and_spectral_norms(v)
    spec_prev = float(prev.eigenvalues[0])
    correction = float((d_max.conj() @ (v - v_prev) @ d_max).real)
    return nuc - spec_prev - correction, d_max


@dataclass
class SdpSolution:
    v_t: np.ndarray
    v_r: np.ndarray
    rho_t: np.ndarray  # (N+1,) real, exactly coupled and boxed
    rho_r: np.ndarray
    objective: float  # sum_i Re tr(V_i M_i) in solver (unscaled) units
    primal_residual: float
    dual_residual: float
    iterations: int
    converged: bool


class _SdpState:
    """Warm-startable splitting state shared across consecutive subproblems."""

    def __init__(self, v_pair: np.ndarray):
        self.z = v_pair.copy()  # (2, n, n), PSD iterates
        self.u = np.zeros_like(v_pair)  # scaled duals
        self.tau = ADMM_TAU


def _project_coupled_diagonal_inplace(x: np.ndarray, idx: np.ndarray) -> None:
    """Project the stacked pair onto the diagonal coupling/box/unit-slot set."""
    n1 = x.shape[-1]
    dt = x[0, idx, idx].real
    dr = x[1, idx, idx].real
    new_t = np.clip(0.5 * (dt - dr + 1.0), 0.0, 1.0)
    x[0, idx, idx] = new_t
    x[1, idx, idx] = 1.0 - new_t
    x[0, n1 - 1, n1 - 1] = 1.0
    x[1, n1 - 1, n1 - 1] = 1.0


def _project_psd_stack(x: np.ndarray) -> np.ndarray:
    # eigh reads the lower triangle, which absorbs round-off asymmetry
    w, q = np.linalg.eigh(x)
    np.maximum(w, 0.0, out=w)
    return q * w[:, None, :] @ np.conj(np.swapaxes(q, -1, -2))


def _solve_sdp(
    state: _SdpState,
    objective_pair: np.ndarray,
    sdp_tol: float,
    max_iter: int,
) -> SdpSolution:
    """Splitting iterations: affine/box projection, PSD projection, dual step."""
    scale = max(float(np.linalg.norm(objective_pair[0])), float(np.linalg.norm(objective_pair[1])))
    z, u, tau = state.z, state.u, state.tau
    m_over_tau = objective_pair / (scale * tau) if scale > 1e-300 else np.zeros_like(objective_pair)
    n1 = z.shape[-1]
    idx = np.arange(n1 - 1)
    r_p = r_d = np.inf
    it = 0
    converged = False
    x = z
    while it < max_iter:
        it += 1
        x = z - u
        x -= m_over_tau
        _project_coupled_diagonal_inplace(x, idx)
        x_relaxed = ADMM_ALPHA * x + (1.0 - ADMM_ALPHA) * z
        z_new = _project_psd_stack(x_relaxed + u)
        u += x_relaxed
        u -= z_new
        r_p = float(np.linalg.norm(x - z_new))
        r_d = tau * float(np.linalg.norm(z_new - z))
        z = z_new
        eps_p = sdp_tol * max(1.0, float(np.linalg.norm(x)), float(np.linalg.norm(z)))
        eps_d = sdp_tol * max(1.0, tau * float(np.linalg.norm(u)))
        if r_p <= eps_p and r_d <= eps_d:
            converged = True
            break
    state.z, state.u, state.tau = z, u, tau
    rho = z.copy()
    _project_coupled_diagonal_inplace(rho, idx)
    diag = np.arange(n1)
    obj = float(sum((z[i] * objective_pair[i].T).sum().real for i in (0, 1)))
    return SdpSolution(
        v_t=z[0],
        v_r=z[1],
        rho_t=rho[0, diag, diag].real,
        rho_r=rho[1, diag, diag].real,
        objective=obj,
        primal_residual=r_p,
        dual_residual=r_d,
        iterations=it,
        converged=converged,
    )


def solve_sdp_subproblem(
    fbar_pair: tuple[np.ndarray, np.ndarray],
    mu: float,
    v_prev_pair: tuple[np.ndarray, np.ndarray],
    sdp_tol: float = 1e-7,
    max_iter: int = 20_000,
    state: _SdpState | None = None,
) -> SdpSolution:
    """One linearized penalty subproblem over the coupled lifted pair.

    Minimizes sum_i tr(V_i Fbar_i) + mu (tr V_i - d_i^H V_i d_i) over PSD
    pairs whose diagonals are the box-coupled amplitude vectors with unit
    last slot; d_i is the leading eigenvector of the previous iterate.
    """
    n1 = fbar_pair[0].shape[0]
    objective_pair = np.zeros((2, n1, n1), np.complex128)
    for i, (fbar, v_prev) in enumerate(zip(fbar_pair, v_prev_pair)):
        d = hermitian_eig(v_prev, symmetrize=True).eigenvectors[:, 0]
        objective_pair[i] = fbar + mu * (np.eye(n1) - np.outer(d, d.conj()))
    if state is None:
        state = _SdpState(np.stack([v_prev_pair[0], v_prev_pair[1]]))
    return _solve_sdp(state, objective_pair, sdp_tol, max_iter)


@dataclass
class PenResult:
    trc: TrcState
    violation: float  # max over sides of nuclear - spectral at the final lift
    violation_rel: float  # same, normalized by the side's spectral norm
    violations_per_outer: list[float]
    outer_loops: int
    total_sdp_iterations: int
    converged: bool
    warning: str | None = None


def _penalized_objective(v_pair: np.ndarray, fbar_pair: tuple[np.ndarray, np.ndarray], mu: float) -> float:
    total = 0.0
    for i in (0, 1):
        nuc, spec = nuclear_and_spectral_norms(v_pair[i])
        total += float((v_pair[i] * fbar_pair[i].T).sum().real) + mu * (nuc - spec)
    return total


def _rank_violation(v_pair: np.ndarray) -> tuple[float, float]:
    """(absolute, spectral-normalized) worst-side nuclear-minus-spectral gap."""
    worst = 0.0
    worst_rel = 0.0
    for i in (0, 1):
        nuc, spec = nuclear_and_spectral_norms(v_pair[i])
        worst = max(worst, nuc - spec)
        worst_rel = max(worst_rel, (nuc - spec) / max(spec, 1e-300))
    return worst, worst_rel


def extract_trc(v_t: np.ndarray, v_r: np.ndarray) -> TrcState:
    """Recover a feasible coefficient state from (near-)rank-one lifts.

    Takes the scaled leading eigenvector per side, rotates and rescales so
    the augmentation slot is exactly one, clamps the transmission
    amplitudes to [0, 1], and slaves the reflection amplitudes to the
    coupling; phases are kept as extracted.
    """

    def principal(v: np.ndarray) -> np.ndarray:
        eig = hermitian_eig(v, symmetrize=True)
        vbar = np.sqrt(max(eig.eigenvalues[0], 0.0)) * eig.eigenvectors[:, 0]
        last = vbar[-1]
        if abs(last) < 1e-12:
            return vbar  # degenerate lift; keep as-is
        return vbar / last

    vt = principal(v_t)[:-1]
    vr = principal(v_r)[:-1]
    rho_t = np.clip(np.abs(vt) ** 2, 0.0, 1.0)
    theta_t = np.mod(np.angle(vt), 2.0 * np.pi)
    theta_r = np.mod(np.angle(vr), 2.0 * np.pi)
    return TrcState(rho_t, 1.0 - rho_t, theta_t, theta_r)


def run_pen(forms: TrcQuadraticForm, config: PenConfig, init: TrcState) -> PenResult:
    """Double penalty loop: inner SCA to stationarity, outer escalation.

    The inner loop solves linearized subproblems until the fractional
    decrease of the penalized objective falls under epsilon_sca; the outer
    loop multiplies the penalty by omega until the worst-side rank-one
    violation (nuclear minus spectral norm) drops under epsilon_p or the
    loop cap is hit, in which case the best iterate is returned flagged.
    """
    if forms.n_elements > config.max_elements:
        raise ValueError(
            f"penalty solver gated to N <= {config.max_elements} elements "
            f"(got {forms.n_elements}); use the element-wise solver instead"
        )
    fbar_pair = build_fbar(forms)
    fbar_norm = float(np.hypot(np.linalg.norm(fbar_pair[0]), np.linalg.norm(fbar_pair[1])))
    mu = config.mu0 if config.mu0 is not None else config.mu0_rel * max(fbar_norm, 1e-300)
    lift = AugmentedLift.from_trc(init)
    v_pair = np.stack([lift.v_t, lift.v_r])
    state = _SdpState(v_pair)
    violations: list[float] = []
    violation_rel = 0.0
    total_iters = 0
    converged = False
    outer_done = 0
    for _ in range(config.max_outer):
        outer_done += 1
        prev_q = _penalized_objective(v_pair, fbar_pair, mu)
        for _ in range(config.max_inner):
            sol = solve_sdp_subproblem(
                fbar_pair,
                mu,
                (v_pair[0], v_pair[1]),
                sdp_tol=config.sdp_tol,
                max_iter=config.sdp_max_iter,
                state=state,
            )
            total_iters += sol.iterations
            v_pair = np.stack([sol.v_t, sol.v_r])
            q = _penalized_objective(v_pair, fbar_pair, mu)
            if abs(prev_q - q) <= config.epsilon_sca * max(1.0, abs(prev_q)):
                prev_q = q
                break
            prev_q = q
        violation, violation_rel = _rank_violation(v_pair)
        violations.append(violation)
        if violation <= config.epsilon_p:
            converged = True
            break
        mu *= config.omega
    trc = extract_trc(v_pair[0], v_pair[1])
    warning = None
    if not converged:
        warning = (
            f"outer loop cap reached with rank violation {violations[-1]:.3e} "
            f"> {config.epsilon_p:.1e}"
        )
    return PenResult(
        trc=trc,
        violation=violations[-1],
        violation_rel=violation_rel,
        violations_per_outer=violations,
        outer_loops=outer_done,
        total_sdp_iterations=total_iters,
        converged=converged,
        warning=warning,
    )
