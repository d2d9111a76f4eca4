"""Worst achieved ratio of the optimal envy-free allocation on small markets.

Grid: n in 2..6, m in {3, 4}, phi in 0.0..1.0, both utility models.
"""
import argparse

from egalassign.experiment import ExperimentConfig, aggregate, render_heatmap, run_grid


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--instances", type=int, default=200)
    ap.add_argument("--seed", type=int, default=2015)
    ap.add_argument("--workers", type=int, default=1)
    a = ap.parse_args()

    cfg = ExperimentConfig(list(range(2, 7)), [3, 4], [k / 10 for k in range(11)],
                           mechanisms=["oeef"], instances_per_cell=a.instances, master_seed=a.seed)
    records = run_grid(cfg, a.workers)
    worst = min(records, key=lambda r: r.aar)
    print(f"min aar {worst.aar:.4f} over {len(records)} instances "
          f"(n={worst.n}, m={worst.m}, phi={worst.phi}, model={worst.model}, seed={worst.seed})")
    print(render_heatmap(aggregate(records), "min"))


if __name__ == "__main__":
    main()
