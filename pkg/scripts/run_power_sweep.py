#!/usr/bin/env python3
"""Sum rate versus transmit power for the proposed scheme and the baselines.

Writes one CSV row per (seed, scheme, power) cell at N=40, random user
setup. Plot the wsr_bits column against power_dbm, one line per scheme.
"""

import argparse

from starnf.config import SystemConfig
from starnf.harness import determinism_hash, run_experiment


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="results/power_sweep")
    ap.add_argument("--seeds", type=int, default=20)
    ap.add_argument("--workers", type=int, default=2)
    ap.add_argument("--n-elements", type=int, default=40)
    args = ap.parse_args()

    cfg = SystemConfig(
        n_elements=(args.n_elements,),
        powers_dbm=(20.0, 25.0, 30.0, 35.0, 40.0),
        seeds=tuple(range(args.seeds)),
        setups=("random",),
        schemes=("proposed", "conventional", "uniform"),
        trc_solver="ELE",
        max_iterations=300,
    )
    rows, path = run_experiment(cfg, args.out, workers=args.workers)
    bad = [r for r in rows if r.status != "ok"]
    print(f"{len(rows)} cells -> {path}")
    print(f"determinism hash: {determinism_hash(path)}")
    if bad:
        for r in bad:
            print(f"FAILED cell seed={r.seed} scheme={r.scheme} P={r.power_dbm}: {r.error}")
        return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
