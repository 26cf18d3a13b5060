"""Quadratic forms of the surface-coefficient subproblem.

With precoders, combiners, and auxiliary weights frozen, the surrogate
objective depends on the surface only through, per side i,

    v_i^H F_i v_i - 2 Re(e_i^T v_i),

where v_i is the side's coefficient vector. F_i is a sum over the side's
users of Hadamard products (C_k .* D^T) of PSD factors, hence Hermitian
PSD itself; e_i collects the diagonals of the linear coefficient matrices.
Both solvers (lifted SDP and element-wise) minimize this same form.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .comm import BeamformerSet, TrcState, WmmseState
from .geometry import ChannelSet


@dataclass(frozen=True)
class TrcQuadraticForm:
    """Per-side quadratic (F) and linear (e) coefficients of the subproblem."""

    f_t: np.ndarray  # (N, N) Hermitian PSD
    f_r: np.ndarray
    e_t: np.ndarray  # (N,) complex
    e_r: np.ndarray

    @property
    def n_elements(self) -> int:
        return self.f_t.shape[0]

    def side(self, side: str) -> tuple[np.ndarray, np.ndarray]:
        return (self.f_t, self.e_t) if side == "T" else (self.f_r, self.e_r)


def build_trc_forms(
    ws: BeamformerSet, wmmse: WmmseState, channels: ChannelSet
) -> TrcQuadraticForm:
    """Assemble F_i and e_i from the frozen precoders/combiners/weights.

    C_k = eta_k H_k^H U_k Z_k U_k^H H_k, D = G (sum_l W_l W_l^H) G^H,
    and the linear coefficient matrix eta_k G W_k Z_k U_k^H H_k; then
    F_i = sum_{k on side i} (C_k .* D^T) and e_i sums the diagonals.
    """
    g = channels.g
    n = g.shape[0]
    wsum = sum(w @ w.conj().T for w in ws.w_per_user)
    d = g @ wsum @ g.conj().T
    f = {"T": np.zeros((n, n), np.complex128), "R": np.zeros((n, n), np.complex128)}
    e = {"T": np.zeros(n, np.complex128), "R": np.zeros(n, np.complex128)}
    for k, side in enumerate(channels.side_assignment):
        eta = ws.weights[k]
        h = channels.h_per_user[k]
        u = wmmse.u_per_user[k]
        z = wmmse.z_per_user[k]
        uzu = u @ z @ u.conj().T
        c_k = eta * (h.conj().T @ uzu @ h)
        f[side] += c_k * d.T
        lin_k = eta * (g @ ws.w_per_user[k] @ z @ u.conj().T @ h)
        e[side] += np.diag(lin_k)
    f_t = 0.5 * (f["T"] + f["T"].conj().T)
    f_r = 0.5 * (f["R"] + f["R"].conj().T)
    return TrcQuadraticForm(f_t=f_t, f_r=f_r, e_t=e["T"], e_r=e["R"])


def side_objective(f: np.ndarray, e: np.ndarray, v: np.ndarray) -> float:
    """v^H F v - 2 Re(e^T v) for one side."""
    return float((v.conj() @ f @ v).real - 2.0 * (e @ v).real)


def quadratic_objective(forms: TrcQuadraticForm, trc: TrcState) -> float:
    """Total subproblem objective at the given surface state (both sides)."""
    return side_objective(forms.f_t, forms.e_t, trc.coefficients("T")) + side_objective(
        forms.f_r, forms.e_r, trc.coefficients("R")
    )
