"""Count random instances at small K with no deterministic stationary NE.

For each one found, also reports the smallest worst-case deviation gain over
all deterministic profiles, i.e. how far the best candidate is from an NE.
"""
import argparse

import numpy as np

from ruingame.equilibrium import exhaustive_enumeration, profile_from_index, h_count, verify_ne
from ruingame.game import GameParams


def closest(params):
    best = (np.inf, None)
    for idx in range(h_count(params.K)):
        prof = profile_from_index(params.K, idx)
        gain = verify_ne(params, prof).max_gain
        if gain < best[0]:
            best = (gain, prof)
    return best


def run():
    ap = argparse.ArgumentParser()
    ap.add_argument("--K", type=int, default=4)
    ap.add_argument("--count", type=int, default=50)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    rng = np.random.default_rng(args.seed)
    missing = 0
    for _ in range(args.count):
        params = GameParams(*rng.uniform(1e-6, 1 - 1e-6, 3), args.K)
        if exhaustive_enumeration(params).equilibria:
            continue
        missing += 1
        msg = f"no NE at p={tuple(round(float(v), 6) for v in params.p)}"
        if args.K <= 4:
            gain, prof = closest(params)
            msg += f"; closest profile has max gain {gain:.3e}: {prof.x.astype(int).tolist()}"
        print(msg)
    print(f"{missing}/{args.count} instances at K={args.K} lack a deterministic stationary NE")


if __name__ == "__main__":
    run()
