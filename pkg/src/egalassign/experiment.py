"""Seeded Mallows grids: sample profiles, run mechanisms, score them against the OEV."""
from __future__ import annotations

import csv
import logging
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .egal_lp import solve_oev
from .gen import UTILITY_MODELS, sample_profile
from .mechanisms import MECHANISMS, RSD_DEFAULT_CAP, RSD_HARD_CAP, run_mechanism
from .model import TOL, FormatError, egalitarian_value

log = logging.getLogger(__name__)

RECORD_HEADER = ["n", "m", "phi", "model", "mechanism", "instance_id", "seed", "ev", "oev", "aar"]
AGGREGATE_HEADER = ["n", "phi", "model", "mechanism", "min_aar", "mean_aar", "count"]
_RSD_STREAM = 1


def _g12(x: float) -> float:
    """Round to the 12 significant digits the CSV format stores."""
    return float(f"{x:.12g}")


def derive_seed(master: int, *keys: int) -> int:
    """64-bit seed from a master seed and integer keys (counter-based, order-free)."""
    ss = np.random.SeedSequence([int(master), *map(int, keys)])
    return int(ss.generate_state(1, np.uint64)[0])


def phi_key(phi: float) -> int:
    return int(round(phi * 1_000_000))


@dataclass
class ExperimentConfig:
    agents: list[int]
    objects: list[int]
    phis: list[float]
    models: list[str] = field(default_factory=lambda: list(UTILITY_MODELS))
    mechanisms: list[str] = field(default_factory=lambda: ["ps", "rsd_exact"])
    instances_per_cell: int = 200
    master_seed: int = 0
    rsd_exact_cap: int = RSD_DEFAULT_CAP
    rsd_mc_samples: int = 100_000
    output_path: str | None = None
    aggregate_path: str | None = None
    workers: int = 1

    def __post_init__(self):
        for name in ("agents", "objects", "phis", "models", "mechanisms"):
            if not getattr(self, name):
                raise ValueError(f"config list {name!r} is empty")
        if any(n < 2 for n in self.agents) or any(m < 2 for m in self.objects):
            raise ValueError("agent and object counts must be >= 2")
        if any(not 0.0 <= p <= 1.0 for p in self.phis):
            raise ValueError("phis must lie in [0, 1]")
        bad = set(self.models) - set(UTILITY_MODELS)
        if bad:
            raise ValueError(f"unknown utility models {sorted(bad)}")
        bad = set(self.mechanisms) - set(MECHANISMS)
        if bad:
            raise ValueError(f"unknown mechanisms {sorted(bad)}")
        if self.instances_per_cell < 1:
            raise ValueError("instances_per_cell must be >= 1")
        if not 0 <= self.master_seed < 2**64:
            raise ValueError("master_seed must be a 64-bit unsigned integer")
        if not 1 <= self.rsd_exact_cap <= RSD_HARD_CAP:
            raise ValueError(f"rsd_exact_cap must lie in 1..{RSD_HARD_CAP}")
        if self.rsd_mc_samples < 1:
            raise ValueError("rsd_mc_samples must be >= 1")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")


_LIST_KEYS = {"agents": int, "objects": int, "phis": float, "models": str, "mechanisms": str}
_SCALAR_KEYS = {"instances_per_cell": int, "master_seed": int, "rsd_exact_cap": int,
                "rsd_mc_samples": int, "output_path": str, "aggregate_path": str, "workers": int}


def parse_config(text: str) -> ExperimentConfig:
    """Flat ``key = value`` lines; lists are comma-separated; ``#`` starts a comment."""
    kw = {}
    for k, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise FormatError(f"expected key=value, got {line!r}", k)
        key, val = (s.strip() for s in line.split("=", 1))
        try:
            if key in _LIST_KEYS:
                kw[key] = [_LIST_KEYS[key](s.strip()) for s in val.split(",") if s.strip()]
            elif key in _SCALAR_KEYS:
                kw[key] = _SCALAR_KEYS[key](val)
            else:
                raise FormatError(f"unknown config key {key!r}", k)
        except ValueError as e:
            if isinstance(e, FormatError):
                raise
            raise FormatError(f"bad value for {key}: {val!r}", k) from None
    missing = {"agents", "objects", "phis"} - kw.keys()
    if missing:
        raise FormatError(f"config is missing {sorted(missing)}")
    return ExperimentConfig(**kw)


def load_config(path) -> ExperimentConfig:
    return parse_config(Path(path).read_text(encoding="utf-8"))


@dataclass(frozen=True)
class ExperimentRecord:
    n: int
    m: int
    phi: float
    model: str
    mechanism: str
    instance_id: int
    seed: int
    ev: float
    oev: float
    aar: float

    def __post_init__(self):
        if not 0 < self.oev <= 1 + TOL:
            raise ValueError(f"oev {self.oev} outside (0, 1]")
        if not -TOL <= self.aar <= 1 + TOL:
            raise ValueError(f"aar {self.aar} outside [0, 1]")
        if abs(self.aar - self.ev / self.oev) > TOL:
            raise ValueError("aar does not equal ev/oev")


@dataclass(frozen=True)
class CellAggregate:
    n: int
    phi: float
    model: str
    mechanism: str
    min_aar: float
    mean_aar: float
    count: int


def resolve_mechanism(name: str, n: int, cap: int) -> str:
    return "rsd_mc" if name == "rsd_exact" and n > cap else name


def _instance_records(cfg: ExperimentConfig, n: int, m: int, phi: float, inst: int) -> list[ExperimentRecord]:
    seed = derive_seed(cfg.master_seed, n, m, phi_key(phi), inst)
    out = []
    for model in cfg.models:
        v = sample_profile(n, m, phi, model, np.random.default_rng(seed))
        oev = solve_oev(v).value
        for mech in cfg.mechanisms:
            name = resolve_mechanism(mech, n, cfg.rsd_exact_cap)
            res = run_mechanism(name, v, samples=cfg.rsd_mc_samples,
                                seed=derive_seed(seed, _RSD_STREAM), cap=cfg.rsd_exact_cap)
            ev = egalitarian_value(v, res.allocation)
            out.append(ExperimentRecord(n, m, _g12(phi), model, name, inst, seed,
                                        _g12(ev), _g12(oev), _g12(ev / oev)))
    return out


def _units(cfg: ExperimentConfig):
    for n in cfg.agents:
        for m in cfg.objects:
            for phi in cfg.phis:
                for inst in range(cfg.instances_per_cell):
                    yield n, m, phi, inst


def _run_unit(args):
    cfg, unit = args
    return _instance_records(cfg, *unit)


def run_grid(cfg: ExperimentConfig, workers: int | None = None) -> list[ExperimentRecord]:
    """One record per (cell, instance, mechanism), in grid order.

    Each instance seed is derived from ``(master_seed, n, m, phi, instance)``,
    so results do not depend on scheduling, and both utility models score the
    same sampled rankings.
    """
    workers = cfg.workers if workers is None else workers
    if cfg.output_path:
        _ensure_writable(cfg.output_path)
    units = list(_units(cfg))
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            chunks = list(pool.map(_run_unit, [(cfg, u) for u in units], chunksize=8))
    else:
        chunks = [_instance_records(cfg, *u) for u in units]
    # restore (n, m, phi, model, instance, mechanism) order
    model_rank = {md: k for k, md in enumerate(cfg.models)}
    keyed = []
    for k, recs in enumerate(chunks):
        for j, r in enumerate(recs):
            keyed.append(((k // cfg.instances_per_cell, model_rank[r.model], r.instance_id, j), r))
    records = [r for _, r in sorted(keyed, key=lambda t: t[0])]
    if cfg.output_path:
        write_csv(records, cfg.output_path)
        agg_path = cfg.aggregate_path or _default_aggregate_path(cfg.output_path)
        write_csv(aggregate(records), agg_path)
        log.info("wrote %d records to %s and aggregates to %s", len(records), cfg.output_path, agg_path)
    return records


def _default_aggregate_path(path: str) -> str:
    p = Path(path)
    return str(p.with_name(p.stem + "_agg" + (p.suffix or ".csv")))


def _ensure_writable(path):
    p = Path(path)
    try:
        p.parent.mkdir(parents=True, exist_ok=True)
        with open(p, "a", encoding="utf-8"):
            pass
    except OSError as e:
        raise OSError(f"cannot write experiment output to {path}: {e.strerror}") from e


def aggregate(records: Iterable[ExperimentRecord]) -> list[CellAggregate]:
    """Min and mean aar per (n, phi, model, mechanism), pooling all m."""
    groups: dict[tuple, list[float]] = defaultdict(list)
    for r in records:
        groups[(r.n, r.phi, r.model, r.mechanism)].append(r.aar)
    if not groups:
        raise ValueError("cannot aggregate an empty record list")
    return [CellAggregate(n, phi, model, mech, _g12(min(a)), _g12(float(np.mean(a))), len(a))
            for (n, phi, model, mech), a in sorted(groups.items())]


# -- CSV ---------------------------------------------------------------------------

def _fmt(x) -> str:
    if isinstance(x, float):
        return f"{x:.12g}"
    return str(x)


def write_csv(rows: Sequence, path, kind: str | None = None):
    """Write records or aggregates; ``kind`` ('records' | 'aggregates') is only
    needed to pick the header of an empty list."""
    rows = list(rows)
    if kind is None:
        kind = "aggregates" if rows and isinstance(rows[0], CellAggregate) else "records"
    header = AGGREGATE_HEADER if kind == "aggregates" else RECORD_HEADER
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(getattr(r, h)) for h in header])


def read_csv(path) -> list:
    """Inverse of :func:`write_csv`; the header decides the row type."""
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header == RECORD_HEADER:
            cls = ExperimentRecord
        elif header == AGGREGATE_HEADER:
            cls = CellAggregate
        else:
            raise FormatError(f"unrecognized header {header}", 1)
        types = {f.name: f.type for f in fields(cls)}
        conv = {"int": int, "float": float, "str": str}
        out = []
        for row in reader:
            line = reader.line_num
            if len(row) != len(header):
                raise FormatError(f"expected {len(header)} fields, got {len(row)}", line)
            try:
                out.append(cls(**{h: conv[types[h]](val) for h, val in zip(header, row)}))
            except ValueError as e:
                raise FormatError(str(e), line) from None
        return out


# -- text heatmap ----------------------------------------------------------------

def render_heatmap(aggs: Sequence[CellAggregate], metric: str = "min",
                   model: str | None = None, mechanism: str | None = None) -> str:
    """phi-by-n grid of min or mean aar, one block per (model, mechanism)."""
    if metric not in ("min", "mean"):
        raise ValueError(f"metric must be 'min' or 'mean', got {metric!r}")
    attr = f"{metric}_aar"
    blocks = defaultdict(dict)
    for a in aggs:
        if (model is None or a.model == model) and (mechanism is None or a.mechanism == mechanism):
            blocks[(a.model, a.mechanism)][(a.phi, a.n)] = getattr(a, attr)
    if not blocks:
        raise ValueError("no aggregates match the requested model/mechanism")
    out = []
    for (md, mech), cells in sorted(blocks.items()):
        ns = sorted({n for _, n in cells})
        phis = sorted({p for p, _ in cells})
        out.append(f"{metric} aar  model={md}  mechanism={mech}")
        out.append("phi\\n " + " ".join(f"{n:>6d}" for n in ns))
        for p in phis:
            vals = [f"{cells[(p, n)]:6.3f}" if (p, n) in cells else "     -" for n in ns]
            out.append(f"{p:5.2f} " + " ".join(vals))
        out.append("")
    return "\n".join(out)
