#!/usr/bin/env python3
"""Near-field versus planar-wave beamforming under both user setups.

Runs the spherical-wave design and the planar-wave-designed baseline on the
same drops (both scored on the true channels) for the random and inline
user setups, at a configurable surface size.
"""

import argparse

import numpy as np

from starnf.baselines import BaselineKind, run_scheme
from starnf.bcd import BcdConfig
from starnf.config import SystemConfig
from starnf.harness import generate_scenario


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seeds", type=int, default=11)
    ap.add_argument("--n-elements", type=int, default=100)
    ap.add_argument("--power-dbm", type=float, default=30.0)
    args = ap.parse_args()

    cfg = SystemConfig()
    for setup in ("random", "inline"):
        near, far = [], []
        for seed in range(args.seeds):
            scen = generate_scenario(
                cfg, setup, seed=seed, n_elements=args.n_elements, power_dbm=args.power_dbm
            )
            bcd = BcdConfig(trc_solver="ELE", max_iterations=300, rng_seed=(seed, 1))
            near.append(run_scheme(BaselineKind.PROPOSED, scen, bcd).wsr_true)
            far.append(run_scheme(BaselineKind.FARFIELD_BF, scen, bcd).wsr_true)
        print(
            f"{setup:7s}: near-field median {np.median(near):6.2f} bits/s/Hz, "
            f"planar-wave median {np.median(far):6.2f} bits/s/Hz "
            f"({args.seeds} seeds, N={args.n_elements})"
        )
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
