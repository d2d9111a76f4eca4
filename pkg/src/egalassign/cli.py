"""Command-line entry point: ``egalassign <subcommand> ...``."""
from __future__ import annotations

import argparse
import contextlib
import logging
import sys

import numpy as np

from . import gen
from .egal_lp import solve_oeef, solve_oev
from .experiment import aggregate, load_config, read_csv, render_heatmap, run_grid, CellAggregate
from .mechanisms import RSD_DEFAULT_CAP, ps, rsd_exact, rsd_sampled, uniform
from .model import FormatError, PreconditionError, format_matrix, property_report, read_allocation, read_profile


class UsageError(Exception):
    pass


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="egalassign", description="Egalitarian random assignment toolkit.")
    sub = p.add_subparsers(dest="cmd", required=True)

    s = sub.add_parser("solve", help="optimal egalitarian value of a profile")
    s.add_argument("profile")
    s.add_argument("--envy-free", action="store_true", help="restrict to envy-free allocations")

    s = sub.add_parser("run-mechanism", help="expected allocation of a mechanism")
    s.add_argument("mechanism", choices=["ps", "rsd", "uniform"])
    s.add_argument("profile")
    s.add_argument("--samples", type=int, help="Monte Carlo RSD with this many orders")
    s.add_argument("--seed", type=int, help="seed for --samples")
    s.add_argument("--cap", type=int, default=RSD_DEFAULT_CAP, help="largest n for exact RSD")

    s = sub.add_parser("check", help="fairness report for an allocation")
    s.add_argument("profile")
    s.add_argument("allocation")

    s = sub.add_parser("gen", help="sample a Mallows profile")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--m", type=int, required=True)
    s.add_argument("--phi", type=float, required=True)
    s.add_argument("--model", choices=gen.UTILITY_MODELS, required=True)
    s.add_argument("--seed", type=int, required=True)

    s = sub.add_parser("adversarial", help="emit a worst-case profile family member")
    fam = s.add_subparsers(dest="family", required=True)
    f = fam.add_parser("fav-share")
    f.add_argument("--n", type=int, required=True)
    f.add_argument("--eps", type=float, default=1e-3)
    f = fam.add_parser("lower-bound")
    f.add_argument("--n1", type=int, required=True)
    f.add_argument("--variant", type=int, help="misreport variant index (1-based)")
    f = fam.add_parser("cyclic")
    f.add_argument("--n", type=int, required=True)
    f.add_argument("--eps", type=float, default=1e-3)

    s = sub.add_parser("experiment", help="run a seeded experiment grid")
    s.add_argument("--config", required=True)
    s.add_argument("--workers", type=int)

    s = sub.add_parser("heatmap", help="phi x n text grid from an aggregates CSV")
    s.add_argument("aggregates")
    s.add_argument("--metric", choices=["min", "mean"], required=True)
    s.add_argument("--model")
    s.add_argument("--mechanism")
    return p


def _solve(a, out):
    v = read_profile(a.profile)
    sol = solve_oeef(v) if a.envy_free else solve_oev(v)
    out.write(f"lambda: {sol.value!r}\n")
    out.write(format_matrix(sol.allocation))


def _run_mechanism(a, out, err):
    if a.mechanism != "rsd" and (a.samples is not None or a.seed is not None):
        raise UsageError("--samples/--seed only apply to rsd")
    if (a.samples is None) != (a.seed is None):
        raise UsageError("--samples and --seed must be given together")
    v = read_profile(a.profile)
    if a.mechanism == "ps":
        res = ps(v)
    elif a.mechanism == "uniform":
        res = uniform(v)
    elif a.samples is not None:
        res = rsd_sampled(v, a.samples, a.seed)
    else:
        res = rsd_exact(v, a.cap)
    err.write(f"mechanism={res.mechanism} exact={res.exact} samples={res.samples} seed={res.seed}\n")
    out.write(format_matrix(res.allocation))


def _check(a, out):
    v = read_profile(a.profile)
    p = read_allocation(a.allocation)
    out.write("\n".join(property_report(v, p).lines()) + "\n")


def _gen(a, out):
    v = gen.sample_profile(a.n, a.m, a.phi, a.model, np.random.default_rng(a.seed))
    out.write(format_matrix(v))


def _adversarial(a, out):
    if a.family == "fav-share":
        v = gen.fav_share_profile(a.n, a.eps)
    elif a.family == "cyclic":
        v = gen.cyclic_ordinal_profile(a.n, a.eps)
    elif a.variant is not None:
        v = gen.lower_bound_variant(a.n1, a.variant)
    else:
        v = gen.lower_bound_profile(a.n1)
    out.write(format_matrix(v))


def _experiment(a, out, err):
    cfg = load_config(a.config)
    if not cfg.output_path:
        raise UsageError("experiment config must set output_path")
    records = run_grid(cfg, a.workers)
    aggs = aggregate(records)
    err.write(f"{len(records)} records, {len(aggs)} aggregate cells\n")
    out.write(f"{cfg.output_path}\n")


def _heatmap(a, out):
    rows = read_csv(a.aggregates)
    if rows and not isinstance(rows[0], CellAggregate):
        rows = aggregate(rows)
    out.write(render_heatmap(rows, a.metric, a.model, a.mechanism))


def dispatch(argv=None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    parser = _parser()
    try:
        with contextlib.redirect_stdout(out), contextlib.redirect_stderr(err):
            a = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        if a.cmd == "solve":
            _solve(a, out)
        elif a.cmd == "run-mechanism":
            _run_mechanism(a, out, err)
        elif a.cmd == "check":
            _check(a, out)
        elif a.cmd == "gen":
            _gen(a, out)
        elif a.cmd == "adversarial":
            _adversarial(a, out)
        elif a.cmd == "experiment":
            _experiment(a, out, err)
        elif a.cmd == "heatmap":
            _heatmap(a, out)
    except UsageError as e:
        err.write(parser.format_usage())
        err.write(f"egalassign: error: {e}\n")
        return 2
    except FileNotFoundError as e:
        err.write(f"egalassign: error: no such file: {e.filename}\n")
        return 1
    except (FormatError, PreconditionError, ValueError, OSError) as e:
        err.write(f"egalassign: error: {e}\n")
        return 1
    return 0


def main():
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    sys.exit(dispatch())


if __name__ == "__main__":
    main()
