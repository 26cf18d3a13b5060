"""Element-wise surface solver: closed-form phases, bisection amplitudes.

Each element n is optimized with the other N-1 held fixed. In terms of the
side's quadratic form the single-element objective is

    |v_n|^2 A_n + 2 Re(B_n v_n) + C_n,

so the optimal phase turns B_n v_n maximally negative (theta = pi - ang B),
and the remaining amplitude problem in rho_t (with rho_r = 1 - rho_t) is
convex with a strictly increasing derivative, solved by bisection.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .comm import TrcState
from .trc_forms import TrcQuadraticForm

RHO_MIN = 1e-6  # amplitude floor; exact 0/1 would freeze an element's phase influence
BISECT_TOL = 1e-9
REFRESH_EVERY = 64  # full recompute of the cross terms to bound incremental drift


@dataclass(frozen=True)
class ElementCoeffs:
    """Single-element expansion coefficients for both sides."""

    a_t: float
    a_r: float
    b_t: complex
    b_r: complex
    c_t: float
    c_r: float


def _side_coeffs(f: np.ndarray, e: np.ndarray, v: np.ndarray, n: int) -> tuple[float, complex, float]:
    a = float(f[n, n].real)
    b = complex(v.conj() @ f[:, n] - v[n].conjugate() * f[n, n] - e[n])
    full = float((v.conj() @ f @ v).real - 2.0 * (e @ v).real)
    c = full - (abs(v[n]) ** 2 * a + 2.0 * (b * v[n]).real)
    return a, b, c


def element_coeffs(n: int, forms: TrcQuadraticForm, trc: TrcState) -> ElementCoeffs:
    """Expansion coefficients of element n (1-based) at the current state."""
    if not 1 <= n <= forms.n_elements:
        raise IndexError(f"element index {n} out of range 1..{forms.n_elements}")
    i = n - 1
    a_t, b_t, c_t = _side_coeffs(forms.f_t, forms.e_t, trc.coefficients("T"), i)
    a_r, b_r, c_r = _side_coeffs(forms.f_r, forms.e_r, trc.coefficients("R"), i)
    return ElementCoeffs(a_t=a_t, a_r=a_r, b_t=b_t, b_r=b_r, c_t=c_t, c_r=c_r)


def optimal_phase(b: complex, current: float = 0.0) -> float:
    """Phase minimizing Re(b e^{j theta}), in [0, 2 pi).

    For b = 0 every phase is optimal; the caller's current phase is kept.
    """
    if b == 0:
        return float(np.mod(current, 2.0 * np.pi))
    return float(np.mod(np.pi - np.angle(b), 2.0 * np.pi))


def _amp_derivative(rho: float, slope: float, babs_t: float, babs_r: float) -> float:
    return slope - babs_t / np.sqrt(rho) + babs_r / np.sqrt(1.0 - rho)


def optimal_amplitude(
    a_t: float,
    a_r: float,
    babs_t: float,
    babs_r: float,
    tol: float = BISECT_TOL,
    rho_min: float = RHO_MIN,
) -> float:
    """Transmission amplitude minimizing the phase-optimized element objective.

    Minimizes (a_t - a_r) rho - 2 sqrt(rho) |B_t| - 2 sqrt(1 - rho) |B_r|
    over rho in [rho_min, 1 - rho_min]. With both |B| > 0 the derivative is
    strictly increasing with infinite limits at the ends, so the root is
    bracketed and bisection converges in ~log2(1/tol) steps; with a vanishing
    |B| the minimizer sits at a boundary or has a closed form.
    """
    if tol <= 0:
        raise ValueError("tolerance must be positive")
    lo, hi = rho_min, 1.0 - rho_min
    slope = a_t - a_r
    if babs_t <= 0.0 and babs_r <= 0.0:
        if slope > 0.0:
            return lo
        if slope < 0.0:
            return hi
        return 0.5
    if babs_r <= 0.0:
        if slope <= babs_t:  # derivative negative up to the right boundary
            return hi
        return float(np.clip((babs_t / slope) ** 2, lo, hi))
    if babs_t <= 0.0:
        if -slope <= babs_r:  # derivative positive from the left boundary on
            return lo
        return float(np.clip(1.0 - (babs_r / (-slope)) ** 2, lo, hi))
    if _amp_derivative(lo, slope, babs_t, babs_r) >= 0.0:
        return lo
    if _amp_derivative(hi, slope, babs_t, babs_r) <= 0.0:
        return hi
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if _amp_derivative(mid, slope, babs_t, babs_r) < 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def run_ele(
    forms: TrcQuadraticForm,
    init: TrcState,
    sweeps: int = 1,
    phase_only: bool = False,
    tol: float = BISECT_TOL,
) -> TrcState:
    """Sweep the elements in index order, re-optimizing one at a time.

    Cross terms B_n are maintained incrementally (rank-one adjustment after
    each element change) with a periodic full refresh. Every single-element
    update is an exact minimization, so the quadratic objective never
    increases along the sweep.
    """
    n = forms.n_elements
    rho_t = init.rho_t.copy()
    rho_r = init.rho_r.copy()
    theta_t = init.theta_t.copy()
    theta_r = init.theta_r.copy()
    v_t = np.sqrt(np.clip(rho_t, 0.0, 1.0)) * np.exp(1j * theta_t)
    v_r = np.sqrt(np.clip(rho_r, 0.0, 1.0)) * np.exp(1j * theta_r)
    g_t = v_t.conj() @ forms.f_t  # row of cross terms, refreshed periodically
    g_r = v_r.conj() @ forms.f_r
    updates = 0
    for _ in range(sweeps):
        for i in range(n):
            b_t = complex(g_t[i] - v_t[i].conjugate() * forms.f_t[i, i] - forms.e_t[i])
            b_r = complex(g_r[i] - v_r[i].conjugate() * forms.f_r[i, i] - forms.e_r[i])
            theta_t[i] = optimal_phase(b_t, theta_t[i])
            theta_r[i] = optimal_phase(b_r, theta_r[i])
            if not phase_only:
                a_t = float(forms.f_t[i, i].real)
                a_r = float(forms.f_r[i, i].real)
                rt = optimal_amplitude(a_t, a_r, abs(b_t), abs(b_r), tol=tol)
                rho_t[i] = rt
                rho_r[i] = 1.0 - rt
            new_t = np.sqrt(rho_t[i]) * np.exp(1j * theta_t[i])
            new_r = np.sqrt(rho_r[i]) * np.exp(1j * theta_r[i])
            g_t += (new_t - v_t[i]).conjugate() * forms.f_t[i, :]
            g_r += (new_r - v_r[i]).conjugate() * forms.f_r[i, :]
            v_t[i] = new_t
            v_r[i] = new_r
            updates += 1
            if updates % REFRESH_EVERY == 0:
                g_t = v_t.conj() @ forms.f_t
                g_r = v_r.conj() @ forms.f_r
    return TrcState(rho_t, rho_r, theta_t, theta_r)
