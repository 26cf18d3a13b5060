"""Baseline schemes: conventional split RIS, uniform energy splitting, and
planar-wave (far-field) channel-model beamforming.

The first two reuse the BCD pipeline with the surface amplitudes frozen to
the scheme's pattern (phase-only element sweeps). The third designs the
whole system against rank-one planar-wave surrogates of the surface-user
links and is then scored on the true spherical-wave channels.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from .bcd import BcdConfig, BcdResult, run_bcd
from .comm import Scenario, TrcState, uniform_trc, weighted_sum_rate
from .geometry import (
    ChannelSet,
    ScenarioGeometry,
    all_element_positions,
    user_antenna_positions,
)


class BaselineKind(Enum):
    PROPOSED = "proposed"
    CONVENTIONAL_RIS = "conventional"
    UNIFORM_ES = "uniform"
    FARFIELD_BF = "farfield"


def conventional_ris_constraint(trc: TrcState, split: np.ndarray | None = None) -> TrcState:
    """Clamp to two single-function surfaces of N/2 elements each.

    Elements where ``split`` is True become pure reflectors (rho_r = 1),
    the rest pure transmitters. The default split reflects the first N/2
    elements (the rows nearest the ground, given bottom-up indexing).
    """
    n = trc.n_elements
    if split is None:
        if n % 2 != 0:
            raise ValueError("conventional-RIS baseline needs an even element count")
        split = np.arange(n) < n // 2
    split = np.asarray(split, bool)
    rho_r = np.where(split, 1.0, 0.0)
    return TrcState(1.0 - rho_r, rho_r, trc.theta_t.copy(), trc.theta_r.copy())


def uniform_es_constraint(trc: TrcState) -> TrcState:
    """Clamp every element to the half/half amplitude split, phases kept."""
    n = trc.n_elements
    half = np.full(n, 0.5)
    return TrcState(half.copy(), half.copy(), trc.theta_t.copy(), trc.theta_r.copy())


def build_farfield_user_channel(geom: ScenarioGeometry, k: int) -> np.ndarray:
    """Rank-one planar-wave surrogate of the surface-to-user k channel.

    First-order expansion of the exact distance around the aperture
    midpoints: a flat gain at the center-to-center distance and linear
    phase ramps over both apertures along the center direction. Expanding
    at the midpoints (rather than a corner element) halves the worst-case
    offset and with it the planar phase error.
    """
    elems = all_element_positions(geom)
    ants = user_antenna_positions(geom, k)
    p_ref = elems.mean(axis=0)
    u_ref = ants.mean(axis=0)
    center = u_ref - p_ref
    d0 = float(np.linalg.norm(center))
    if d0 <= 0.0:
        raise ValueError("user array center coincides with the surface center")
    s_hat = center / d0
    lam = geom.wavelength
    elem_phase = np.exp(2j * np.pi * ((elems - p_ref) @ s_hat) / lam)  # (N,)
    ant_phase = np.exp(-2j * np.pi * ((ants - u_ref) @ s_hat) / lam)  # (M,)
    gain = lam / (4.0 * np.pi * d0) * np.exp(-2j * np.pi * d0 / lam)
    return gain * np.outer(ant_phase, elem_phase)


def farfield_channel_set(channels: ChannelSet, geom: ScenarioGeometry) -> ChannelSet:
    """Channel set with every user link replaced by its planar-wave surrogate."""
    surrogate = [build_farfield_user_channel(geom, k) for k in range(geom.n_users)]
    return ChannelSet(g=channels.g, h_per_user=surrogate, side_assignment=list(channels.side_assignment))


@dataclass
class SchemeResult:
    kind: BaselineKind
    result: BcdResult
    wsr_design: float  # on the channels the design was run against
    wsr_true: float  # on the true spherical-wave channels


def run_scheme(kind: BaselineKind, scenario: Scenario, config: BcdConfig) -> SchemeResult:
    """Design under the scheme's constraints and score on the true channels."""
    n = scenario.channels.g.shape[0]
    rng = np.random.default_rng(config.rng_seed)
    base_trc = uniform_trc(n, rng)
    if kind is BaselineKind.PROPOSED:
        res = run_bcd(config, scenario, trc_init=base_trc)
        wsr = scenario_wsr(scenario, res)
        return SchemeResult(kind, res, wsr, wsr)
    if kind is BaselineKind.CONVENTIONAL_RIS:
        cfg = replace(config, trc_solver="ELE", freeze_amplitudes=True)
        res = run_bcd(cfg, scenario, trc_init=conventional_ris_constraint(base_trc))
        wsr = scenario_wsr(scenario, res)
        return SchemeResult(kind, res, wsr, wsr)
    if kind is BaselineKind.UNIFORM_ES:
        cfg = replace(config, trc_solver="ELE", freeze_amplitudes=True)
        res = run_bcd(cfg, scenario, trc_init=uniform_es_constraint(base_trc))
        wsr = scenario_wsr(scenario, res)
        return SchemeResult(kind, res, wsr, wsr)
    if kind is BaselineKind.FARFIELD_BF:
        if scenario.geometry is None:
            raise ValueError("far-field baseline needs scenario geometry")
        surrogate = Scenario(
            channels=farfield_channel_set(scenario.channels, scenario.geometry),
            sigma2=scenario.sigma2,
            power=scenario.power,
            weights=scenario.weights,
            geometry=scenario.geometry,
        )
        res = run_bcd(config, surrogate, trc_init=base_trc)
        wsr_design = weighted_sum_rate(res.ws, surrogate.channels, res.trc, scenario.sigma2)
        wsr_true = weighted_sum_rate(res.ws, scenario.channels, res.trc, scenario.sigma2)
        return SchemeResult(kind, res, wsr_design, wsr_true)
    raise ValueError(f"unknown scheme {kind}")


def scenario_wsr(scenario: Scenario, res: BcdResult) -> float:
    return weighted_sum_rate(res.ws, scenario.channels, res.trc, scenario.sigma2)
