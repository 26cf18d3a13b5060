"""Complex dense linear-algebra kernel used by every other module.

All routines operate on numpy complex128 arrays and are pure functions.
Tolerances below are fixed properties of this kernel, not configuration;
matrix sizes in this project never exceed a few hundred, so everything is
dense and double precision.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

HERMITICITY_RTOL = 1e-8
PSD_EIG_RTOL = 1e-8
RANK_ONE_RTOL = 1e-8


class NotHermitianError(ValueError):
    """Input deviates from Hermitian symmetry beyond tolerance."""


class NotPositiveDefiniteError(ValueError):
    """Cholesky factorization hit a non-positive pivot."""

    def __init__(self, pivot_index: int, pivot_value: float):
        self.pivot_index = pivot_index
        self.pivot_value = pivot_value
        super().__init__(
            f"matrix is not positive definite: pivot {pivot_index} is {pivot_value:.3e}"
        )


def as_cmatrix(a) -> np.ndarray:
    """Validate and return a 2-D complex128 array with finite entries."""
    m = np.asarray(a, dtype=np.complex128)
    if m.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got ndim={m.ndim}")
    if m.shape[0] < 1 or m.shape[1] < 1:
        raise ValueError(f"matrix dimensions must be positive, got {m.shape}")
    if not np.all(np.isfinite(m.view(np.float64))):
        raise ValueError("matrix contains NaN or Inf entries")
    return m


@dataclass(frozen=True)
class HermitianEig:
    """Descending-ordered spectrum with paired orthonormal eigenvectors."""

    eigenvalues: np.ndarray  # real, descending
    eigenvectors: np.ndarray  # unitary; column i pairs with eigenvalues[i]


def hermitian_eig(m, symmetrize: bool = False) -> HermitianEig:
    """Eigendecomposition of a Hermitian matrix, eigenvalues descending.

    With ``symmetrize`` set the input is replaced by (m + m^H)/2 first;
    otherwise a Hermiticity deviation beyond HERMITICITY_RTOL raises.
    """
    m = as_cmatrix(m)
    if m.shape[0] != m.shape[1]:
        raise ValueError(f"hermitian_eig needs a square matrix, got {m.shape}")
    if symmetrize:
        m = 0.5 * (m + m.conj().T)
    else:
        dev = np.linalg.norm(m - m.conj().T)
        if dev > HERMITICITY_RTOL * max(np.linalg.norm(m), 1e-300):
            raise NotHermitianError(
                f"Hermiticity deviation {dev:.3e} exceeds tolerance; "
                "pass symmetrize=True to force"
            )
    w, q = np.linalg.eigh(m)
    order = np.argsort(w)[::-1]
    return HermitianEig(eigenvalues=w[order], eigenvectors=q[:, order])


def _first_bad_pivot(a: np.ndarray) -> tuple[int, float]:
    """Locate the first non-positive Cholesky pivot (error path only)."""
    n = a.shape[0]
    l = np.zeros_like(a)
    for j in range(n):
        d = a[j, j].real - np.sum(np.abs(l[j, :j]) ** 2)
        if d <= 0.0:
            return j, float(d)
        l[j, j] = np.sqrt(d)
        if j + 1 < n:
            l[j + 1 :, j] = (a[j + 1 :, j] - l[j + 1 :, :j] @ l[j, :j].conj()) / l[j, j]
    return n - 1, float(a[n - 1, n - 1].real)


def cholesky_hpd(a) -> np.ndarray:
    """Lower Cholesky factor of a Hermitian positive-definite matrix."""
    a = as_cmatrix(a)
    if a.shape[0] != a.shape[1]:
        raise ValueError(f"cholesky_hpd needs a square matrix, got {a.shape}")
    try:
        return np.linalg.cholesky(0.5 * (a + a.conj().T))
    except np.linalg.LinAlgError:
        idx, val = _first_bad_pivot(0.5 * (a + a.conj().T))
        raise NotPositiveDefiniteError(idx, val) from None


def solve_hpd(a, b) -> np.ndarray:
    """Solve a X = b for Hermitian positive-definite a via Cholesky."""
    a = as_cmatrix(a)
    b = np.asarray(b, dtype=np.complex128)
    vector_input = b.ndim == 1
    if vector_input:
        b = b[:, None]
    if a.shape[0] != b.shape[0]:
        raise ValueError(f"shape mismatch: a is {a.shape}, b has {b.shape[0]} rows")
    l = cholesky_hpd(a)
    y = _forward_substitute(l, b)
    x = _backward_substitute(l.conj().T, y)
    return x[:, 0] if vector_input else x


def _forward_substitute(l: np.ndarray, b: np.ndarray) -> np.ndarray:
    n = l.shape[0]
    y = np.zeros_like(b)
    for i in range(n):
        y[i] = (b[i] - l[i, :i] @ y[:i]) / l[i, i]
    return y


def _backward_substitute(u: np.ndarray, b: np.ndarray) -> np.ndarray:
    n = u.shape[0]
    x = np.zeros_like(b)
    for i in range(n - 1, -1, -1):
        x[i] = (b[i] - u[i, i + 1 :] @ x[i + 1 :]) / u[i, i]
    return x


def inv_hpd(a) -> np.ndarray:
    """Inverse of a Hermitian positive-definite matrix."""
    a = as_cmatrix(a)
    return solve_hpd(a, np.eye(a.shape[0], dtype=np.complex128))


def logdet_hpd(a) -> float:
    """Natural-log determinant of a Hermitian positive-definite matrix."""
    l = cholesky_hpd(a)
    return float(2.0 * np.sum(np.log(np.diag(l).real)))


def nuclear_and_spectral_norms(m) -> tuple[float, float]:
    """(nuclear, spectral) norm pair of a Hermitian PSD matrix.

    For PSD input both norms reduce to the eigenvalue sum and maximum; the
    pair difference is zero exactly when the matrix is rank one, which is
    what the surface solver's penalty measures.
    """
    eig = hermitian_eig(m, symmetrize=True)
    w = eig.eigenvalues
    lam_max = float(w[0]) if w.size else 0.0
    if w.size and float(w[-1]) < -PSD_EIG_RTOL * max(lam_max, 0.0):
        raise ValueError(
            f"matrix is not PSD: min eigenvalue {w[-1]:.3e} vs max {lam_max:.3e}"
        )
    return float(np.sum(w)), lam_max


def numerical_rank(m, rtol: float = RANK_ONE_RTOL) -> int:
    """Count singular values above rtol times the largest."""
    s = np.linalg.svd(np.asarray(m, dtype=np.complex128), compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.sum(s > rtol * s[0]))
