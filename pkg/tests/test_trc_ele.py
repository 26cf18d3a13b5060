"""Element-wise solver: closed-form phase, bisection amplitude, sweeps."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from starnf.comm import TrcState
from starnf.trc_ele import (
    RHO_MIN,
    element_coeffs,
    optimal_amplitude,
    optimal_phase,
    run_ele,
)
from starnf.trc_forms import TrcQuadraticForm, quadratic_objective


def random_forms(rng, n, rank=3):
    def one_side():
        b = rng.normal(size=(n, rank)) + 1j * rng.normal(size=(n, rank))
        f = b @ b.conj().T
        e = rng.normal(size=n) + 1j * rng.normal(size=n)
        return f, e

    f_t, e_t = one_side()
    f_r, e_r = one_side()
    return TrcQuadraticForm(f_t=f_t, f_r=f_r, e_t=e_t, e_r=e_r)


def random_trc(rng, n):
    rho = rng.uniform(0.0, 1.0, n)
    return TrcState(rho, 1.0 - rho, rng.uniform(0, 2 * np.pi, n), rng.uniform(0, 2 * np.pi, n))


class TestElementCoeffs:
    def test_single_element(self):
        rng = np.random.default_rng(0)
        forms = random_forms(rng, 1)
        trc = random_trc(rng, 1)
        c = element_coeffs(1, forms, trc)
        assert c.a_t == pytest.approx(forms.f_t[0, 0].real)
        assert c.b_t == pytest.approx(-forms.e_t[0])
        assert c.b_r == pytest.approx(-forms.e_r[0])

    def test_dormant_neighbors(self):
        rng = np.random.default_rng(1)
        n = 4
        forms = random_forms(rng, n)
        rho = np.zeros(n)
        rho[1] = 0.49  # only element 2 active, but we inspect element 2 itself
        trc = TrcState(rho, 1.0 - rho, np.zeros(n), np.zeros(n))
        # for element 2 the other elements' v are zero on the T side
        c = element_coeffs(2, forms, trc)
        assert c.b_t == pytest.approx(-forms.e_t[1])

    def test_reproduces_full_objective(self):
        rng = np.random.default_rng(2)
        n = 6
        forms = random_forms(rng, n)
        trc = random_trc(rng, n)
        for trial in range(50):
            n_idx = int(rng.integers(1, n + 1))
            c = element_coeffs(n_idx, forms, trc)
            rho_t = float(rng.uniform(0, 1))
            th_t = float(rng.uniform(0, 2 * np.pi))
            th_r = float(rng.uniform(0, 2 * np.pi))
            new = trc.copy()
            new.rho_t[n_idx - 1] = rho_t
            new.rho_r[n_idx - 1] = 1.0 - rho_t
            new.theta_t[n_idx - 1] = th_t
            new.theta_r[n_idx - 1] = th_r
            v_t = np.sqrt(rho_t) * np.exp(1j * th_t)
            v_r = np.sqrt(1.0 - rho_t) * np.exp(1j * th_r)
            local = (
                abs(v_t) ** 2 * c.a_t
                + 2.0 * (c.b_t * v_t).real
                + c.c_t
                + abs(v_r) ** 2 * c.a_r
                + 2.0 * (c.b_r * v_r).real
                + c.c_r
            )
            full = quadratic_objective(forms, new)
            assert abs(full - local) <= 1e-10 * max(1.0, abs(full))

    def test_index_out_of_range(self):
        rng = np.random.default_rng(3)
        forms = random_forms(rng, 3)
        trc = random_trc(rng, 3)
        with pytest.raises(IndexError):
            element_coeffs(0, forms, trc)
        with pytest.raises(IndexError):
            element_coeffs(4, forms, trc)


class TestOptimalPhase:
    def test_real_positive(self):
        assert optimal_phase(1.0 + 0j) == pytest.approx(np.pi)

    def test_negative_imaginary(self):
        theta = optimal_phase(-1j)
        assert theta == pytest.approx(3 * np.pi / 2)
        assert ((-1j) * np.exp(1j * theta)).real == pytest.approx(-1.0)

    def test_zero_keeps_current(self):
        assert optimal_phase(0j, current=1.234) == pytest.approx(1.234)

    def test_range(self):
        rng = np.random.default_rng(4)
        for _ in range(100):
            b = complex(rng.normal(), rng.normal())
            th = optimal_phase(b)
            assert 0.0 <= th < 2 * np.pi

    @settings(deadline=None, max_examples=200)
    @given(st.floats(-10, 10), st.floats(-10, 10))
    def test_beats_dense_grid(self, re, im):
        b = complex(re, im)
        theta = optimal_phase(b)
        grid = np.linspace(0.0, 2 * np.pi, 360, endpoint=False)
        ours = (b * np.exp(1j * theta)).real
        best_grid = np.min((b * np.exp(1j * grid)).real)
        assert ours <= best_grid + 1e-12


def grid_minimize_amplitude(a_t, a_r, bt, br, step=1e-5):
    rho = np.arange(step, 1.0, step)
    f = (a_t - a_r) * rho - 2.0 * np.sqrt(rho) * bt - 2.0 * np.sqrt(1.0 - rho) * br
    return float(rho[np.argmin(f)])


class TestOptimalAmplitude:
    def test_symmetric_root(self):
        assert optimal_amplitude(1.0, 1.0, 0.5, 0.5, tol=1e-12) == pytest.approx(0.5, abs=1e-9)

    def test_one_sided_boundary(self):
        # |B_r| = 0 and slope below |B_t|: derivative negative throughout
        got = optimal_amplitude(1.0, 0.5, 2.0, 0.0)
        assert got == pytest.approx(1.0 - RHO_MIN)

    def test_one_sided_interior(self):
        # |B_r| = 0, slope exceeds |B_t|: interior root (|B_t|/slope)^2
        got = optimal_amplitude(3.0, 1.0, 1.0, 0.0)
        assert got == pytest.approx((1.0 / 2.0) ** 2, rel=1e-9)

    def test_degenerate_linear(self):
        assert optimal_amplitude(2.0, 1.0, 0.0, 0.0) == pytest.approx(RHO_MIN)
        assert optimal_amplitude(1.0, 2.0, 0.0, 0.0) == pytest.approx(1.0 - RHO_MIN)
        assert optimal_amplitude(1.0, 1.0, 0.0, 0.0) == pytest.approx(0.5)

    @settings(deadline=None, max_examples=150)
    @given(st.integers(0, 2**31 - 1))
    def test_matches_grid_oracle(self, seed):
        rng = np.random.default_rng(seed)
        a_t, a_r = rng.uniform(0.0, 5.0, 2)
        bt, br = rng.uniform(0.01, 5.0, 2)
        got = optimal_amplitude(a_t, a_r, bt, br, tol=1e-5)
        want = grid_minimize_amplitude(a_t, a_r, bt, br)
        assert abs(got - want) <= 1e-4 or abs(got - np.clip(want, RHO_MIN, 1 - RHO_MIN)) <= 1e-4


class TestRunEle:
    def test_zero_sweeps_returns_init(self):
        rng = np.random.default_rng(5)
        forms = random_forms(rng, 4)
        trc = random_trc(rng, 4)
        out = run_ele(forms, trc, sweeps=0)
        assert np.allclose(out.rho_t, trc.rho_t)
        assert np.allclose(out.theta_t, trc.theta_t)

    def test_single_element_global_optimum(self):
        rng = np.random.default_rng(6)
        forms = random_forms(rng, 1)
        trc = random_trc(rng, 1)
        out = run_ele(forms, trc, sweeps=1)
        got = quadratic_objective(forms, out)
        # dense separable grid: the phase minimum decouples per side given rho
        rhos = np.linspace(RHO_MIN, 1 - RHO_MIN, 2000)
        phases = np.exp(1j * np.linspace(0, 2 * np.pi, 720, endpoint=False))
        a_t, a_r = forms.f_t[0, 0].real, forms.f_r[0, 0].real
        b_t, b_r = -forms.e_t[0], -forms.e_r[0]
        t_min = np.array([np.min((b_t * np.sqrt(r) * phases).real) for r in rhos])
        r_min = np.array([np.min((b_r * np.sqrt(1 - r) * phases).real) for r in rhos])
        totals = rhos * a_t + (1 - rhos) * a_r + 2 * t_min + 2 * r_min
        best = float(np.min(totals))
        # grid resolution slack
        assert got <= best + 1e-3 * max(1.0, abs(best))

    def test_objective_monotone_across_updates(self):
        rng = np.random.default_rng(7)
        n = 8
        forms = random_forms(rng, n)
        trc = random_trc(rng, n)
        prev = quadratic_objective(forms, trc)
        cur = trc
        for _ in range(3):
            cur = run_ele(forms, cur, sweeps=1)
            now = quadratic_objective(forms, cur)
            assert now <= prev + 1e-10 * max(1.0, abs(prev))
            prev = now

    def test_elementwise_monotone_trace(self):
        # every single-element update lowers (or keeps) the objective
        rng = np.random.default_rng(8)
        n = 6
        forms = random_forms(rng, n)
        cur = random_trc(rng, n)
        prev_obj = quadratic_objective(forms, cur)
        for i in range(1, n + 1):
            nxt = cur.copy()
            c = element_coeffs(i, forms, cur)
            th_t = optimal_phase(c.b_t, cur.theta_t[i - 1])
            th_r = optimal_phase(c.b_r, cur.theta_r[i - 1])
            rho = optimal_amplitude(c.a_t, c.a_r, abs(c.b_t), abs(c.b_r))
            nxt.theta_t[i - 1] = th_t
            nxt.theta_r[i - 1] = th_r
            nxt.rho_t[i - 1] = rho
            nxt.rho_r[i - 1] = 1.0 - rho
            obj = quadratic_objective(forms, nxt)
            assert obj <= prev_obj + 1e-10 * max(1.0, abs(prev_obj))
            prev_obj = obj
            cur = nxt

    def test_coupling_exact_after_updates(self):
        rng = np.random.default_rng(9)
        forms = random_forms(rng, 10)
        out = run_ele(forms, random_trc(rng, 10), sweeps=2)
        assert np.all(out.rho_t + out.rho_r == 1.0)

    def test_cross_solver_agreement_n16(self):
        # five sweeps land within 2% of the lifted-SDP solver on the same
        # forms from the same start
        from starnf.trc_pen import PenConfig, run_pen

        rng = np.random.default_rng(21)
        n = 16
        forms = random_forms(rng, n, rank=4)
        init = random_trc(rng, n)
        ele_obj = quadratic_objective(forms, run_ele(forms, init, sweeps=5))
        pen_obj = quadratic_objective(forms, run_pen(forms, PenConfig(), init).trc)
        scale = max(abs(ele_obj), abs(pen_obj))
        assert abs(ele_obj - pen_obj) <= 0.02 * scale

    def test_phase_only_mode_keeps_amplitudes(self):
        rng = np.random.default_rng(10)
        forms = random_forms(rng, 5)
        trc = random_trc(rng, 5)
        out = run_ele(forms, trc, sweeps=2, phase_only=True)
        assert np.allclose(out.rho_t, trc.rho_t)
        assert quadratic_objective(forms, out) <= quadratic_objective(forms, trc) + 1e-10

    def test_per_element_grid_optimality(self):
        # right after element n's own update, no 64^3 grid point over
        # (th_t, th_r, rho) improves its local objective beyond grid error
        rng = np.random.default_rng(11)
        n = 4
        forms = random_forms(rng, n)
        cur = random_trc(rng, n)
        grid = np.exp(1j * np.linspace(0, 2 * np.pi, 64, endpoint=False))
        rhos = np.linspace(RHO_MIN, 1 - RHO_MIN, 64)
        for i in range(1, n + 1):
            c = element_coeffs(i, forms, cur)
            th_t = optimal_phase(c.b_t, cur.theta_t[i - 1])
            th_r = optimal_phase(c.b_r, cur.theta_r[i - 1])
            rho = optimal_amplitude(c.a_t, c.a_r, abs(c.b_t), abs(c.b_r))
            chosen = (
                rho * c.a_t
                + 2 * (c.b_t * np.sqrt(rho) * np.exp(1j * th_t)).real
                + (1 - rho) * c.a_r
                + 2 * (c.b_r * np.sqrt(1 - rho) * np.exp(1j * th_r)).real
            )
            best = np.inf
            for r in rhos:
                t_min = np.min((c.b_t * np.sqrt(r) * grid).real)
                r_min = np.min((c.b_r * np.sqrt(1 - r) * grid).real)
                best = min(best, r * c.a_t + (1 - r) * c.a_r + 2 * t_min + 2 * r_min)
            # phase grid step 2pi/64 -> relative cosine error ~ (pi/64)^2/2
            assert chosen <= best + 5e-3 * max(1.0, abs(best))
            cur.theta_t[i - 1] = th_t
            cur.theta_r[i - 1] = th_r
            cur.rho_t[i - 1] = rho
            cur.rho_r[i - 1] = 1.0 - rho
