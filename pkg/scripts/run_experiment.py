"""Run a grid config, write records and aggregates, and print min/mean heatmaps.

    python3 scripts/run_experiment.py configs/smoke.cfg --workers 4
"""
import argparse
import logging
import time

from egalassign.experiment import aggregate, load_config, render_heatmap, run_grid


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("config")
    ap.add_argument("--workers", type=int)
    ap.add_argument("--instances", type=int, help="override instances_per_cell")
    a = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(message)s")

    cfg = load_config(a.config)
    if a.instances:
        cfg.instances_per_cell = a.instances
    t0 = time.perf_counter()
    records = run_grid(cfg, a.workers)
    aggs = aggregate(records)
    print(f"{len(records)} records in {time.perf_counter() - t0:.1f}s")
    for metric in ("min", "mean"):
        print(render_heatmap(aggs, metric))


if __name__ == "__main__":
    main()
