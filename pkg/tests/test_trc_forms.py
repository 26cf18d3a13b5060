"""Subproblem quadratic forms: the matrix-trace versus vector identity."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from starnf.bcd import update_combiners, update_weights
from starnf.comm import BeamformerSet, TrcState, WmmseState, mse_matrix
from starnf.geometry import ChannelSet
from starnf.trc_forms import build_trc_forms, quadratic_objective, side_objective


def toy_channels(rng, n=5, m_b=4, m=2, k=3, sides=("T", "T", "R")):
    g = rng.normal(size=(n, m_b)) + 1j * rng.normal(size=(n, m_b))
    h = [rng.normal(size=(m, n)) + 1j * rng.normal(size=(m, n)) for _ in range(k)]
    return ChannelSet(g=g, h_per_user=h, side_assignment=list(sides))


def random_trc(rng, n):
    rho = rng.uniform(0.0, 1.0, n)
    return TrcState(rho, 1.0 - rho, rng.uniform(0, 2 * np.pi, n), rng.uniform(0, 2 * np.pi, n))


def wmmse_state(rng, ws, ch, trc, sigma2=0.3):
    k = ch.n_users
    u = update_combiners(ws, ch, trc, sigma2)
    wm = WmmseState(u, [np.eye(2, dtype=complex)] * k)
    wm.e_per_user = [mse_matrix(i, ws, wm, ch, trc, sigma2) for i in range(k)]
    wm.z_per_user = update_weights(wm.e_per_user)
    return wm


def random_ws(rng, m_b, m, k, power=8.0):
    raw = [rng.normal(size=(m_b, m)) + 1j * rng.normal(size=(m_b, m)) for _ in range(k)]
    c = np.sqrt(power / sum(np.linalg.norm(w) ** 2 for w in raw))
    return BeamformerSet([c * x for x in raw], power, np.ones(k))


def trace_form_objective(ws, wmmse, channels, trc):
    """Direct evaluation of the matrix-trace expression, user by user."""
    total = 0.0
    g = channels.g
    d = g @ sum(w @ w.conj().T for w in ws.w_per_user) @ g.conj().T
    for k, side in enumerate(channels.side_assignment):
        eta = ws.weights[k]
        h = channels.h_per_user[k]
        u = wmmse.u_per_user[k]
        z = wmmse.z_per_user[k]
        phi = np.diag(trc.coefficients(side))
        c_k = eta * (h.conj().T @ u @ z @ u.conj().T @ h)
        lin_k = eta * (g @ ws.w_per_user[k] @ z @ u.conj().T @ h)
        total += float(np.trace(phi.conj().T @ c_k @ phi @ d).real)
        total -= 2.0 * float(np.trace(lin_k @ phi).real)
    return total


class TestBuildTrcForms:
    def test_zero_precoders(self):
        rng = np.random.default_rng(0)
        ch = toy_channels(rng)
        trc = random_trc(rng, 5)
        ws = BeamformerSet([np.zeros((4, 2), complex)] * 3, 1.0, np.ones(3))
        u = [rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)) for _ in range(3)]
        wm = WmmseState(u, [np.eye(2, dtype=complex)] * 3)
        forms = build_trc_forms(ws, wm, ch)
        assert np.allclose(forms.f_t, 0) and np.allclose(forms.f_r, 0)
        assert np.allclose(forms.e_t, 0) and np.allclose(forms.e_r, 0)

    def test_empty_side_gives_zero_forms(self):
        rng = np.random.default_rng(1)
        ch = toy_channels(rng, k=2, sides=("R", "R"))
        trc = random_trc(rng, 5)
        ws = random_ws(rng, 4, 2, 2)
        wm = wmmse_state(rng, ws, ch, trc)
        forms = build_trc_forms(ws, wm, ch)
        assert np.allclose(forms.f_t, 0)
        assert np.allclose(forms.e_t, 0)
        assert not np.allclose(forms.f_r, 0)

    def test_identity_with_trace_form(self):
        rng = np.random.default_rng(2)
        ch = toy_channels(rng)
        trc = random_trc(rng, 5)
        ws = random_ws(rng, 4, 2, 3)
        wm = wmmse_state(rng, ws, ch, trc)
        forms = build_trc_forms(ws, wm, ch)
        lhs = quadratic_objective(forms, trc)
        rhs = trace_form_objective(ws, wm, ch, trc)
        assert lhs == pytest.approx(rhs, rel=1e-10, abs=1e-10)

    @settings(deadline=None, max_examples=100)
    @given(st.integers(0, 2**31 - 1))
    def test_identity_property(self, seed):
        rng = np.random.default_rng(seed)
        k = int(rng.integers(1, 5))
        sides = tuple(rng.choice(["T", "R"], size=k))
        ch = toy_channels(rng, k=k, sides=sides)
        trc = random_trc(rng, 5)
        ws = random_ws(rng, 4, 2, k)
        wm = wmmse_state(rng, ws, ch, trc, sigma2=float(rng.uniform(0.05, 1.0)))
        forms = build_trc_forms(ws, wm, ch)
        lhs = quadratic_objective(forms, trc)
        rhs = trace_form_objective(ws, wm, ch, trc)
        assert lhs == pytest.approx(rhs, rel=1e-10, abs=1e-10)

    def test_forms_hermitian_psd(self):
        rng = np.random.default_rng(3)
        ch = toy_channels(rng)
        trc = random_trc(rng, 5)
        ws = random_ws(rng, 4, 2, 3)
        wm = wmmse_state(rng, ws, ch, trc)
        forms = build_trc_forms(ws, wm, ch)
        for f in (forms.f_t, forms.f_r):
            assert np.linalg.norm(f - f.conj().T) <= 1e-12 * max(1.0, np.linalg.norm(f))
            w = np.linalg.eigvalsh(f)
            assert w.min() >= -1e-10 * max(w.max(), 1e-300)

    def test_side_objective_decomposition(self):
        rng = np.random.default_rng(4)
        ch = toy_channels(rng)
        trc = random_trc(rng, 5)
        ws = random_ws(rng, 4, 2, 3)
        wm = wmmse_state(rng, ws, ch, trc)
        forms = build_trc_forms(ws, wm, ch)
        total = quadratic_objective(forms, trc)
        t_part = side_objective(forms.f_t, forms.e_t, trc.coefficients("T"))
        r_part = side_objective(forms.f_r, forms.e_r, trc.coefficients("R"))
        assert total == pytest.approx(t_part + r_part, rel=1e-12)
