"""Experiment configuration: defaults, file parsing, derived quantities.

The config file is INI-style (key = value under [system], [sweep],
[solver] sections); every key is optional and falls back to the defaults
below, which reproduce the reference simulation setup (10 GHz carrier,
16-antenna BS, four 4-antenna users split two per side on 2 m / 4 m
circles around the surface, -110 dBm noise, unit weights).
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field, replace

import numpy as np

from .bcd import BcdConfig
from .trc_pen import PenConfig

KNOWN_GRIDS: dict[int, tuple[int, int]] = {16: (4, 4), 40: (5, 8), 100: (10, 10), 400: (20, 20)}

SETUPS = ("random", "inline")
SCHEMES = ("proposed", "conventional", "uniform", "farfield")


def grid_for_elements(n: int) -> tuple[int, int]:
    """Near-square (N_y, N_z) factorization, with the reference shapes pinned."""
    if n in KNOWN_GRIDS:
        return KNOWN_GRIDS[n]
    ny = int(np.floor(np.sqrt(n)))
    while ny > 1 and n % ny != 0:
        ny -= 1
    return ny, n // ny


@dataclass
class SystemConfig:
    # physical layer
    carrier_hz: float = 10e9
    wavelength_m: float = 0.03
    bs_antennas: int = 16
    user_antennas: int = 4
    users: int = 4
    t_side_users: int = 2
    n_paths: int = 16
    noise_dbm: float = -110.0
    pathloss_c0_db: float = -30.0
    pathloss_d0_m: float = 1.0
    pathloss_exponent: float = 2.2
    bs_position: tuple[float, float, float] = (0.0, 0.0, 0.0)
    ris_position: tuple[float, float, float] = (0.0, 50.0, 0.0)
    user_radius_inner_m: float = 2.0
    user_radius_outer_m: float = 4.0
    user_weight: float = 1.0
    # sweep
    n_elements: tuple[int, ...] = (40,)
    powers_dbm: tuple[float, ...] = (20.0, 25.0, 30.0, 35.0, 40.0)
    seeds: tuple[int, ...] = (0, 1, 2)
    setups: tuple[str, ...] = ("random",)
    schemes: tuple[str, ...] = ("proposed",)
    # solver
    trc_solver: str = "ELE"
    epsilon_bcd: float = 1e-4
    max_iterations: int = 200
    power_bisection_tol: float = 1e-9
    ele_sweeps: int = 1
    pen: PenConfig = field(default_factory=PenConfig)

    def __post_init__(self):
        if self.t_side_users > self.users:
            raise ValueError("transmission-side user count exceeds total users")
        for name in ("wavelength_m", "user_radius_inner_m", "user_radius_outer_m"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        for s in self.setups:
            if s not in SETUPS:
                raise ValueError(f"unknown setup {s!r}; choose from {SETUPS}")
        for s in self.schemes:
            if s not in SCHEMES:
                raise ValueError(f"unknown scheme {s!r}; choose from {SCHEMES}")

    def bcd_config(self, seed_entropy=0) -> BcdConfig:
        return BcdConfig(
            epsilon_bcd=self.epsilon_bcd,
            max_iterations=self.max_iterations,
            trc_solver=self.trc_solver,
            power_bisection_tol=self.power_bisection_tol,
            rng_seed=seed_entropy,
            ele_sweeps=self.ele_sweeps,
            pen=replace(self.pen),
        )


def _parse_floats(text: str) -> tuple[float, ...]:
    return tuple(float(tok) for tok in text.replace(",", " ").split())


def _parse_ints(text: str) -> tuple[int, ...]:
    return tuple(int(tok) for tok in text.replace(",", " ").split())


def _parse_strs(text: str) -> tuple[str, ...]:
    return tuple(tok.strip().lower() for tok in text.replace(",", " ").split())


def load_config(path: str | None = None) -> SystemConfig:
    """Read an INI config file; missing file or keys use the defaults."""
    cfg = SystemConfig()
    if path is None:
        return cfg
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    with open(path, "r", encoding="utf-8") as fh:
        parser.read_file(fh)
    sys_s = parser["system"] if parser.has_section("system") else {}
    sweep = parser["sweep"] if parser.has_section("sweep") else {}
    solver = parser["solver"] if parser.has_section("solver") else {}

    def fget(sec, key, cur):
        return float(sec[key]) if key in sec else cur

    def iget(sec, key, cur):
        return int(sec[key]) if key in sec else cur

    kwargs = dict(
        carrier_hz=fget(sys_s, "carrier_hz", cfg.carrier_hz),
        wavelength_m=fget(sys_s, "wavelength_m", cfg.wavelength_m),
        bs_antennas=iget(sys_s, "bs_antennas", cfg.bs_antennas),
        user_antennas=iget(sys_s, "user_antennas", cfg.user_antennas),
        users=iget(sys_s, "users", cfg.users),
        t_side_users=iget(sys_s, "t_side_users", cfg.t_side_users),
        n_paths=iget(sys_s, "n_paths", cfg.n_paths),
        noise_dbm=fget(sys_s, "noise_dbm", cfg.noise_dbm),
        pathloss_c0_db=fget(sys_s, "pathloss_c0_db", cfg.pathloss_c0_db),
        pathloss_d0_m=fget(sys_s, "pathloss_d0_m", cfg.pathloss_d0_m),
        pathloss_exponent=fget(sys_s, "pathloss_exponent", cfg.pathloss_exponent),
        user_radius_inner_m=fget(sys_s, "user_radius_inner_m", cfg.user_radius_inner_m),
        user_radius_outer_m=fget(sys_s, "user_radius_outer_m", cfg.user_radius_outer_m),
        user_weight=fget(sys_s, "user_weight", cfg.user_weight),
        n_elements=_parse_ints(sweep["n_elements"]) if "n_elements" in sweep else cfg.n_elements,
        powers_dbm=_parse_floats(sweep["powers_dbm"]) if "powers_dbm" in sweep else cfg.powers_dbm,
        seeds=_parse_ints(sweep["seeds"]) if "seeds" in sweep else cfg.seeds,
        setups=_parse_strs(sweep["setups"]) if "setups" in sweep else cfg.setups,
        schemes=_parse_strs(sweep["schemes"]) if "schemes" in sweep else cfg.schemes,
        trc_solver=solver.get("trc_solver", cfg.trc_solver).upper() if "trc_solver" in solver else cfg.trc_solver,
        epsilon_bcd=fget(solver, "epsilon_bcd", cfg.epsilon_bcd),
        max_iterations=iget(solver, "max_iterations", cfg.max_iterations),
        power_bisection_tol=fget(solver, "power_bisection_tol", cfg.power_bisection_tol),
        ele_sweeps=iget(solver, "ele_sweeps", cfg.ele_sweeps),
    )
    if "bs_position" in sys_s:
        kwargs["bs_position"] = tuple(_parse_floats(sys_s["bs_position"]))
    if "ris_position" in sys_s:
        kwargs["ris_position"] = tuple(_parse_floats(sys_s["ris_position"]))
    pen = PenConfig(
        mu0_rel=fget(solver, "pen_mu0_rel", cfg.pen.mu0_rel),
        omega=fget(solver, "pen_omega", cfg.pen.omega),
        epsilon_sca=fget(solver, "pen_epsilon_sca", cfg.pen.epsilon_sca),
        epsilon_p=fget(solver, "pen_epsilon_p", cfg.pen.epsilon_p),
        sdp_tol=fget(solver, "pen_sdp_tol", cfg.pen.sdp_tol),
        max_inner=iget(solver, "pen_max_inner", cfg.pen.max_inner),
        max_outer=iget(solver, "pen_max_outer", cfg.pen.max_outer),
        sdp_max_iter=iget(solver, "pen_sdp_max_iter", cfg.pen.sdp_max_iter),
        max_elements=iget(solver, "pen_max_elements", cfg.pen.max_elements),
    )
    kwargs["pen"] = pen
    return SystemConfig(**kwargs)


DEFAULT_CONFIG_TEXT = """\
# Experiment configuration. Every key is optional; absent keys use the
# built-in defaults shown here.

[system]
carrier_hz = 10e9
wavelength_m = 0.03
bs_antennas = 16
user_antennas = 4
users = 4
t_side_users = 2
n_paths = 16
noise_dbm = -110
pathloss_c0_db = -30
pathloss_d0_m = 1
pathloss_exponent = 2.2
bs_position = 0 0 0
ris_position = 0 50 0
user_radius_inner_m = 2
user_radius_outer_m = 4
user_weight = 1

[sweep]
n_elements = 40
powers_dbm = 20 25 30 35 40
seeds = 0 1 2
setups = random          # random | inline
schemes = proposed       # proposed | conventional | uniform | farfield

[solver]
trc_solver = ELE         # ELE | PEN | FIXED
epsilon_bcd = 1e-4
max_iterations = 200
power_bisection_tol = 1e-9
ele_sweeps = 1
pen_mu0_rel = 1e-3
pen_omega = 10
pen_epsilon_sca = 1e-4
pen_epsilon_p = 1e-7
pen_sdp_tol = 1e-7
pen_max_inner = 50
pen_max_outer = 10
pen_sdp_max_iter = 20000
pen_max_elements = 64
"""


def write_default_config(path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(DEFAULT_CONFIG_TEXT)
