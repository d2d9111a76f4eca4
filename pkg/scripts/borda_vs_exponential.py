"""Compare Borda and exponential scores at matched seeds, cell by cell.

For each mechanism and each (n, phi) cell pooled over m, prints the Borda and
exponential min/mean aar side by side and the share of cells where Borda is
at least as high.
"""
import argparse
from collections import defaultdict
from dataclasses import replace

from egalassign.experiment import ExperimentConfig, aggregate, run_grid


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--instances", type=int, default=4)
    ap.add_argument("--seed", type=int, default=2015)
    ap.add_argument("--agents", type=int, nargs="+", default=list(range(2, 10)))
    ap.add_argument("--workers", type=int, default=1)
    a = ap.parse_args()

    cfg = ExperimentConfig(a.agents, list(range(2, 10)), [k / 10 for k in range(11)],
                           mechanisms=["ps", "rsd_exact", "oeef"], instances_per_cell=a.instances,
                           master_seed=a.seed)
    recs = [replace(r, mechanism="rsd") if r.mechanism.startswith("rsd") else r
            for r in run_grid(cfg, a.workers)]
    table = {(g.n, g.phi, g.model, g.mechanism): g for g in aggregate(recs)}
    wins = defaultdict(lambda: [0, 0])
    for mech in ("ps", "rsd", "oeef"):
        print(f"\n{mech}:  n   phi   borda min/mean   exponential min/mean")
        for n in cfg.agents:
            for phi in cfg.phis:
                b, e = table[(n, phi, "borda", mech)], table[(n, phi, "exponential", mech)]
                for metric in ("min_aar", "mean_aar"):
                    w = wins[(mech, metric)]
                    w[0] += getattr(b, metric) >= getattr(e, metric) - 1e-9
                    w[1] += 1
                print(f"      {n:2d}  {phi:.1f}   {b.min_aar:.3f} / {b.mean_aar:.3f}    "
                      f"{e.min_aar:.3f} / {e.mean_aar:.3f}")
    print()
    for (mech, metric), (k, total) in sorted(wins.items()):
        print(f"{mech:5s} {metric:9s} borda >= exponential in {k}/{total} = {k / total:.1%}")


if __name__ == "__main__":
    main()
