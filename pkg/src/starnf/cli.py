"""Command-line entry point.

Subcommands:
  run       full sweep from a config file, CSV output per cell
  trace     single-cell run with a per-iteration convergence dump
  validate  built-in oracle and property self-checks

The default output directory comes from STARNF_OUT (falling back to
./results). `run` exits 0 only if every cell succeeded.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from .config import SystemConfig, load_config
from .harness import determinism_hash, generate_scenario, run_cell, run_experiment, write_trace_csv


def _out_dir(args) -> str:
    if args.out:
        return args.out
    return os.environ.get("STARNF_OUT", "results")


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    rows, path = run_experiment(cfg, _out_dir(args), workers=args.workers)
    failures = [r for r in rows if r.status != "ok"]
    print(f"wrote {len(rows)} rows to {path}")
    print(f"determinism hash: {determinism_hash(path)}")
    for r in failures:
        print(
            f"cell failed: seed={r.seed} scheme={r.scheme} setup={r.setup} "
            f"N={r.n_elements} P={r.power_dbm} dBm: {r.error}",
            file=sys.stderr,
        )
    return 1 if failures else 0


def cmd_trace(args) -> int:
    cfg = load_config(args.config)
    cell = (args.seed, args.setup, args.scheme, args.n, args.power)
    row, result = run_cell(cfg, cell)
    if result is None:
        print(f"cell failed: {row.error}", file=sys.stderr)
        return 1
    out = _out_dir(args)
    os.makedirs(out, exist_ok=True)
    name = f"trace_seed{args.seed}_{args.scheme}_{args.setup}_N{args.n}_P{args.power:g}.csv"
    path = os.path.join(out, name)
    write_trace_csv(result.trace, path)
    print(f"{row.bcd_iterations} iterations, sum rate {row.wsr_bits:.4f} bits/s/Hz")
    print(f"wrote {path}")
    return 0


def _check(name: str, ok: bool, detail: str = "") -> bool:
    print(f"{'PASS' if ok else 'FAIL'}  {name}" + (f"  ({detail})" if detail else ""))
    return ok


def cmd_validate(_args) -> int:
    """Quick self-checks of the core oracles and invariants."""
    from . import comm, geometry, linalg, trc_ele, trc_forms, trc_pen
    from .bcd import update_combiners, update_weights
    from .comm import WmmseState, mse_matrix, surrogate_objective, weighted_sum_rate

    ok = True
    rng = np.random.default_rng(7)

    # channel ranks and the near-field reach of the reference grid
    cfg = SystemConfig()
    scen = generate_scenario(cfg, "random", seed=0, n_elements=40, power_dbm=30.0)
    h0 = scen.channels.h_per_user[0]
    ok &= _check(
        "near-field user channel is rank-sufficient",
        linalg.numerical_rank(h0, rtol=1e-3) >= 2,
        f"rank {linalg.numerical_rank(h0, rtol=1e-3)}",
    )
    rd = geometry.rayleigh_distance(scen.geometry)
    ok &= _check("Rayleigh distance of the 5x8 grid", abs(rd - 3.9) < 0.05, f"{rd:.3f} m")

    # WMMSE equivalence at the optimum of U and Z
    ws, trc = _random_state(scen, rng)
    u = update_combiners(ws, scen.channels, trc, scen.sigma2)
    wm = WmmseState(u_per_user=u, z_per_user=[np.eye(u[0].shape[1])] * len(u))
    wm.e_per_user = [
        mse_matrix(k, ws, wm, scen.channels, trc, scen.sigma2) for k in range(len(u))
    ]
    wm.z_per_user = update_weights(wm.e_per_user)
    sur = surrogate_objective(ws, wm, scen.channels, trc, scen.sigma2)
    wsr_nats = weighted_sum_rate(ws, scen.channels, trc, scen.sigma2) * np.log(2.0)
    ok &= _check(
        "surrogate equals weighted sum rate at optimal (U, Z)",
        abs(sur - wsr_nats) <= 1e-8 * max(1.0, abs(wsr_nats)),
        f"gap {abs(sur - wsr_nats):.2e}",
    )

    # element-wise phase formula against a dense grid
    worst = 0.0
    for _ in range(200):
        b = complex(rng.normal(), rng.normal())
        th = trc_ele.optimal_phase(b)
        grid = np.linspace(0.0, 2 * np.pi, 360, endpoint=False)
        worst = max(worst, float((b * np.exp(1j * th)).real - np.min((b * np.exp(1j * grid)).real)))
    ok &= _check("closed-form phase beats the 360-point grid", worst <= 1e-12, f"margin {worst:.1e}")

    # quadratic-form identity between matrix and vector forms
    wm_forms = trc_forms.build_trc_forms(ws, wm, scen.channels)
    lhs = trc_forms.quadratic_objective(wm_forms, trc)
    rhs = _trace_form_objective(ws, wm, scen.channels, trc)
    ok &= _check(
        "vectorized subproblem matches the trace form",
        abs(lhs - rhs) <= 1e-8 * max(1.0, abs(rhs)),
        f"gap {abs(lhs - rhs):.2e}",
    )

    # embedded SDP solver against the two-variable grid at N=1
    ok &= _check("embedded SDP solver matches the N=1 grid oracle", _sdp_n1_check(rng))
    return 0 if ok else 1


def _random_state(scen, rng):
    from .comm import BeamformerSet, TrcState

    n = scen.channels.g.shape[0]
    m_b = scen.channels.g.shape[1]
    m = scen.channels.h_per_user[0].shape[0]
    k = scen.channels.n_users
    rho = rng.uniform(0.0, 1.0, n)
    trc = TrcState(rho, 1.0 - rho, rng.uniform(0, 2 * np.pi, n), rng.uniform(0, 2 * np.pi, n))
    raw = [rng.normal(size=(m_b, m)) + 1j * rng.normal(size=(m_b, m)) for _ in range(k)]
    scale = np.sqrt(scen.power / sum(np.linalg.norm(w) ** 2 for w in raw))
    ws = BeamformerSet([scale * w for w in raw], scen.power, scen.weights)
    return ws, trc


def _trace_form_objective(ws, wmmse, channels, trc) -> float:
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


def _sdp_n1_check(rng) -> bool:
    from .trc_pen import solve_sdp_subproblem

    u = rng.normal(size=2) + 1j * rng.normal(size=2)
    u /= np.linalg.norm(u)
    fbar_t = -np.outer(u, u.conj())
    fbar_r = np.zeros((2, 2), complex)
    v0 = np.array([np.sqrt(0.5), 1.0], complex)
    prev = (np.outer(v0, v0.conj()), np.outer(v0, v0.conj()))
    sol = solve_sdp_subproblem((fbar_t, fbar_r), 0.0, prev, sdp_tol=1e-9)
    got = float((sol.v_t * fbar_t.T).sum().real)
    best = np.inf
    for rho in np.linspace(0.0, 1.0, 201):
        for frac in np.linspace(0.0, 1.0, 21):
            mag = frac * np.sqrt(rho)
            for psi in np.linspace(0.0, 2 * np.pi, 90, endpoint=False):
                c = mag * np.exp(1j * psi)
                v = np.array([[rho, c], [np.conjugate(c), 1.0]])
                best = min(best, float((v * fbar_t.T).sum().real))
    return abs(got - best) < 1e-4


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="starnf", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run the configured sweep")
    p_run.add_argument("--config", default=None, help="INI config path (defaults built in)")
    p_run.add_argument("--out", default=None, help="output directory (or $STARNF_OUT)")
    p_run.add_argument("--workers", type=int, default=1)
    p_run.set_defaults(func=cmd_run)

    p_trace = sub.add_parser("trace", help="dump one cell's convergence trace")
    p_trace.add_argument("--config", default=None)
    p_trace.add_argument("--out", default=None)
    p_trace.add_argument("--seed", type=int, default=0)
    p_trace.add_argument("--scheme", default="proposed")
    p_trace.add_argument("--setup", default="random")
    p_trace.add_argument("--n", type=int, default=40)
    p_trace.add_argument("--power", type=float, default=30.0)
    p_trace.set_defaults(func=cmd_trace)

    p_val = sub.add_parser("validate", help="run the built-in self checks")
    p_val.set_defaults(func=cmd_validate)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
