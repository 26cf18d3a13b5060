"""Experiment driver: seeded scenario generation, Monte-Carlo sweeps, CSV.

Cells of the sweep (seed x setup x scheme x element count x power) run
independently; each cell derives its own random stream from the master seed
through a counter-based seed split, so results are reproducible per cell
regardless of execution order or worker count. Timing columns live apart
from the result columns and are excluded from the determinism hash.
"""

from __future__ import annotations

import csv
import hashlib
import multiprocessing
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .baselines import BaselineKind, run_scheme
from .bcd import BcdResult
from .comm import Scenario
from .config import SystemConfig, grid_for_elements
from .geometry import (
    ScenarioGeometry,
    build_channel_set,
    dbm_to_watts,
    draw_farfield_paths,
    pathloss,
)

SCHEMA_VERSION = 1
CSV_COLUMNS = [
    "schema_version",
    "seed",
    "scheme",
    "solver",
    "setup",
    "n_elements",
    "power_dbm",
    "status",
    "wsr_bits",
    "bcd_iterations",
    "converged",
    "trc_violation",
    "error",
    "wall_time_s",
]
TIMING_COLUMNS = {"wall_time_s"}

# streams of the per-seed seed split
_STREAM_SCENARIO = 0
_STREAM_BCD = 1


@dataclass
class ResultRow:
    seed: int
    scheme: str
    solver: str
    setup: str
    n_elements: int
    power_dbm: float
    status: str = "ok"
    wsr_bits: float = 0.0
    bcd_iterations: int = 0
    converged: bool = False
    trc_violation: float = 0.0
    error: str = ""
    wall_time_s: float = 0.0

    def as_csv(self) -> dict[str, str]:
        return {
            "schema_version": str(SCHEMA_VERSION),
            "seed": str(self.seed),
            "scheme": self.scheme,
            "solver": self.solver,
            "setup": self.setup,
            "n_elements": str(self.n_elements),
            "power_dbm": f"{self.power_dbm:.6g}",
            "status": self.status,
            "wsr_bits": f"{self.wsr_bits:.12g}",
            "bcd_iterations": str(self.bcd_iterations),
            "converged": str(self.converged).lower(),
            "trc_violation": f"{self.trc_violation:.6g}",
            "error": self.error,
            "wall_time_s": f"{self.wall_time_s:.6g}",
        }


def generate_scenario(
    cfg: SystemConfig,
    setup: str,
    seed: int,
    n_elements: int | None = None,
    power_dbm: float | None = None,
) -> Scenario:
    """Deterministic scenario for one (seed, setup, element count) cell.

    Users sit on circles around the surface reference in the XY-plane,
    alternating between the inner and outer radius within each side. In the
    random setup every user draws its own angle on its side's half-circle;
    in the inline setup all same-side users share one drawn angle and are
    separated only by radius (collinear with the surface reference).
    """
    rng = np.random.default_rng(np.random.SeedSequence(entropy=(seed, _STREAM_SCENARIO)))
    n = n_elements if n_elements is not None else cfg.n_elements[0]
    grid = grid_for_elements(n)
    ris_ref = np.asarray(cfg.ris_position, float)
    radii = (cfg.user_radius_inner_m, cfg.user_radius_outer_m)
    positions = np.zeros((cfg.users, 3))
    sides = ["T"] * cfg.t_side_users + ["R"] * (cfg.users - cfg.t_side_users)
    angle_shared = {
        "T": rng.uniform(-np.pi / 2, np.pi / 2),
        "R": rng.uniform(np.pi / 2, 3 * np.pi / 2),
    }
    per_side_count = {"T": 0, "R": 0}
    for k, side in enumerate(sides):
        if setup == "inline":
            angle = angle_shared[side]
        elif setup == "random":
            lo, hi = (-np.pi / 2, np.pi / 2) if side == "T" else (np.pi / 2, 3 * np.pi / 2)
            angle = rng.uniform(lo, hi)
        else:
            raise ValueError(f"unknown setup {setup!r}")
        r = radii[per_side_count[side] % 2]
        per_side_count[side] += 1
        positions[k] = ris_ref + np.array([r * np.cos(angle), r * np.sin(angle), 0.0])
        positions[k, 2] = 0.0
    geom = ScenarioGeometry(
        bs_position=np.asarray(cfg.bs_position, float),
        ris_reference=ris_ref,
        ris_grid=grid,
        ris_spacing=cfg.wavelength_m,
        user_positions=positions,
        user_antennas=cfg.user_antennas,
        user_spacing=cfg.wavelength_m / 2.0,
        wavelength=cfg.wavelength_m,
    )
    d_feeder = float(np.linalg.norm(ris_ref - np.asarray(cfg.bs_position, float)))
    beta = pathloss(d_feeder, cfg.pathloss_c0_db, cfg.pathloss_d0_m, cfg.pathloss_exponent)
    paths = draw_farfield_paths(geom, cfg.n_paths, beta, rng)
    channels = build_channel_set(geom, paths, cfg.bs_antennas)
    p_dbm = power_dbm if power_dbm is not None else cfg.powers_dbm[0]
    return Scenario(
        channels=channels,
        sigma2=dbm_to_watts(cfg.noise_dbm),
        power=dbm_to_watts(p_dbm),
        weights=np.full(cfg.users, cfg.user_weight),
        geometry=geom,
        meta={"seed": seed, "setup": setup, "power_dbm": p_dbm, "n_elements": n},
    )


def build_cells(cfg: SystemConfig) -> list[tuple[int, str, str, int, float]]:
    return [
        (seed, setup, scheme, n, p)
        for seed in cfg.seeds
        for setup in cfg.setups
        for scheme in cfg.schemes
        for n in cfg.n_elements
        for p in cfg.powers_dbm
    ]


def run_cell(cfg: SystemConfig, cell: tuple[int, str, str, int, float]) -> tuple[ResultRow, BcdResult | None]:
    """Run one sweep cell; failures are captured as error rows."""
    import time

    seed, setup, scheme, n, p_dbm = cell
    row = ResultRow(
        seed=seed, scheme=scheme, solver=cfg.trc_solver, setup=setup, n_elements=n, power_dbm=p_dbm
    )
    t0 = time.perf_counter()
    try:
        scenario = generate_scenario(cfg, setup, seed, n_elements=n, power_dbm=p_dbm)
        bcd_cfg = cfg.bcd_config(seed_entropy=(seed, _STREAM_BCD))
        out = run_scheme(BaselineKind(scheme), scenario, bcd_cfg)
        row.wsr_bits = out.wsr_true
        row.bcd_iterations = out.result.iterations
        row.converged = out.result.converged
        row.trc_violation = max(out.result.trace.trc_violation, default=0.0)
    except Exception as exc:  # keep the sweep alive; record the failure
        row.status = "error"
        row.error = f"{type(exc).__name__}: {exc}"
        row.wall_time_s = time.perf_counter() - t0
        return row, None
    row.wall_time_s = time.perf_counter() - t0
    return row, out.result


def _run_cell_payload(args):
    cfg, cell = args
    row, result = run_cell(cfg, cell)
    return row, (result.trace if result is not None else None)


def cell_name(row: ResultRow) -> str:
    return (
        f"seed{row.seed}_{row.scheme}_{row.setup}_N{row.n_elements}_P{row.power_dbm:g}"
    )


def run_experiment(
    cfg: SystemConfig,
    out_dir: str,
    workers: int = 1,
    csv_name: str = "results.csv",
    write_traces: bool = True,
) -> tuple[list[ResultRow], str]:
    """Run every sweep cell, write one CSV row per cell plus trace files.

    Rows are emitted in canonical cell order whatever the worker
    interleaving, so repeated runs produce byte-identical non-timing
    columns. Per-iteration convergence traces land under out_dir/traces/.
    """
    cells = build_cells(cfg)
    if workers > 1 and len(cells) > 1:
        # spawned workers get a fresh BLAS state; forked ones can inherit a
        # broken thread pool and crawl
        ctx = multiprocessing.get_context("spawn")
        with ProcessPoolExecutor(max_workers=workers, mp_context=ctx) as pool:
            outputs = list(pool.map(_run_cell_payload, [(cfg, c) for c in cells]))
    else:
        outputs = [_run_cell_payload((cfg, c)) for c in cells]
    rows = [row for row, _ in outputs]
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, csv_name)
    write_csv(rows, path)
    if write_traces:
        trace_dir = os.path.join(out_dir, "traces")
        os.makedirs(trace_dir, exist_ok=True)
        for row, trace in outputs:
            if trace is not None:
                write_trace_csv(trace, os.path.join(trace_dir, f"trace_{cell_name(row)}.csv"))
    return rows, path


def write_csv(rows: list[ResultRow], path: str) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS)
        writer.writeheader()
        for row in rows:
            writer.writerow(row.as_csv())


def determinism_hash(csv_path: str) -> str:
    """SHA-256 over the non-timing columns of a results CSV."""
    digest = hashlib.sha256()
    with open(csv_path, "r", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        keep = [c for c in reader.fieldnames or [] if c not in TIMING_COLUMNS]
        for row in reader:
            digest.update("\x1f".join(row[c] for c in keep).encode())
            digest.update(b"\x1e")
    return digest.hexdigest()


def write_trace_csv(trace, path: str) -> None:
    """Per-iteration convergence dump for one cell (takes a RunTrace)."""
    tr = trace
    cols = [
        "iteration",
        "surrogate_after_u",
        "surrogate_after_z",
        "surrogate_after_w",
        "surrogate_after_phi",
        "sum_rate_bits",
        "power_used",
        "trc_violation",
        "phi_accepted",
        "time_u_s",
        "time_z_s",
        "time_w_s",
        "time_phi_s",
        "time_total_s",
    ]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(cols)
        for i in range(tr.iterations):
            writer.writerow(
                [
                    i + 1,
                    f"{tr.surrogate_after_u[i]:.12g}",
                    f"{tr.surrogate_after_z[i]:.12g}",
                    f"{tr.surrogate_after_w[i]:.12g}",
                    f"{tr.surrogate_after_phi[i]:.12g}",
                    f"{tr.sum_rate_bits[i]:.12g}",
                    f"{tr.power_used[i]:.12g}",
                    f"{tr.trc_violation[i]:.6g}",
                    str(tr.phi_accepted[i]).lower(),
                    f"{tr.time_u[i]:.6g}",
                    f"{tr.time_z[i]:.6g}",
                    f"{tr.time_w[i]:.6g}",
                    f"{tr.time_phi[i]:.6g}",
                    f"{tr.time_total[i]:.6g}",
                ]
            )
