"""Search for profitable ordinal misreports under PS and exact RSD.

Every agent tries all m! Borda-scored reports. With --exhaustive the search
covers every Borda profile of the given size instead of random ones.
"""
import argparse
import itertools

import numpy as np

from egalassign.gen import sample_profile, score_utilities
from egalassign.model import ValuationProfile, misreport_gain


def profiles(n, m, count, seed, exhaustive):
    if exhaustive:
        rows = [score_utilities(r, "borda") for r in itertools.permutations(range(m))]
        for combo in itertools.product(rows, repeat=n):
            yield ValuationProfile(np.array(combo))
    else:
        rng = np.random.default_rng(seed)
        for _ in range(count):
            yield sample_profile(n, m, 1.0, "borda", rng)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=4)
    ap.add_argument("--m", type=int, default=4)
    ap.add_argument("--count", type=int, default=200)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--exhaustive", action="store_true")
    a = ap.parse_args()

    cands = [score_utilities(r, "borda") for r in itertools.permutations(range(a.m))]
    best = {"ps": (0.0, None), "rsd_exact": (0.0, None)}
    trials = hits = 0
    for v in profiles(a.n, a.m, a.count, a.seed, a.exhaustive):
        for i in range(a.n):
            trials += 1
            for mech in best:
                g = misreport_gain(mech, v, i, cands)
                if mech == "ps" and g > 1e-9:
                    hits += 1
                if g > best[mech][0]:
                    best[mech] = (g, (v.values.astype(int).tolist(), i))
    print(f"{trials} agent trials; PS manipulable in {hits} ({hits / trials:.2%})")
    for mech, (g, where) in best.items():
        print(f"{mech}: max gain {g:.6f}" + (f" at profile {where[0]} agent {where[1]}" if where else ""))


if __name__ == "__main__":
    main()
