"""Valuation profiles, allocations, egalitarian metrics and fairness checkers.

All comparisons share a single absolute tolerance ``TOL``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

TOL = 1e-9


class DimensionError(ValueError):
    """Shapes of a profile and an allocation (or an index) disagree."""


class PreconditionError(ValueError):
    """An operation was called on an input outside its domain."""


class FormatError(ValueError):
    """A profile/allocation text file could not be parsed."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class ValuationProfile:
    """An ``n x m`` matrix of nonnegative values; row ``i`` is agent ``i``'s valuation."""

    values: np.ndarray

    def __post_init__(self):
        v = _frozen(self.values)
        if v.ndim != 2 or v.shape[0] < 1 or v.shape[1] < 1:
            raise DimensionError(f"valuation profile must be a nonempty 2-d matrix, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise PreconditionError("valuations must be finite")
        if np.any(v < 0):
            raise PreconditionError("valuations must be nonnegative")
        zero_rows = np.flatnonzero(v.sum(axis=1) <= 0)
        if zero_rows.size:
            raise PreconditionError(f"agents {zero_rows.tolist()} value every object at zero")
        object.__setattr__(self, "values", v)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def m(self) -> int:
        return self.values.shape[1]

    @property
    def totals(self) -> np.ndarray:
        """``u_i(O)``: each agent's value for the whole object set."""
        return self.values.sum(axis=1)

    def with_row(self, i: int, row: Sequence[float]) -> "ValuationProfile":
        _check_agent(self, i)
        v = self.values.copy()
        row = np.asarray(row, dtype=float)
        if row.shape != (self.m,):
            raise DimensionError(f"replacement row has shape {row.shape}, expected ({self.m},)")
        v[i] = row
        return ValuationProfile(v)

    def __eq__(self, other):
        if not isinstance(other, ValuationProfile):
            return NotImplemented
        return np.array_equal(self.values, other.values)

    __hash__ = None


@dataclass(frozen=True, eq=False)
class Allocation:
    """An ``n x m`` matrix of assignment probabilities.

    Construction only checks shape; use :func:`check_feasible` for the
    feasibility region.
    """

    probs: np.ndarray

    def __post_init__(self):
        p = _frozen(self.probs)
        if p.ndim != 2:
            raise DimensionError(f"allocation must be a 2-d matrix, got shape {p.shape}")
        object.__setattr__(self, "probs", p)

    @property
    def n(self) -> int:
        return self.probs.shape[0]

    @property
    def m(self) -> int:
        return self.probs.shape[1]

    @property
    def column_mass(self) -> np.ndarray:
        return self.probs.sum(axis=0)

    @property
    def row_mass(self) -> np.ndarray:
        return self.probs.sum(axis=1)

    def __eq__(self, other):
        if not isinstance(other, Allocation):
            return NotImplemented
        return np.array_equal(self.probs, other.probs)

    __hash__ = None


@dataclass(frozen=True)
class Ranking:
    """Weak order over objects: ``tiers[0]`` is the most preferred indifference class."""

    tiers: tuple[frozenset[int], ...]

    def __post_init__(self):
        tiers = tuple(frozenset(t) for t in self.tiers)
        if any(not t for t in tiers):
            raise PreconditionError("ranking tiers must be nonempty")
        seen: set[int] = set()
        for t in tiers:
            if seen & t:
                raise PreconditionError("ranking tiers must be disjoint")
            seen |= t
        if seen != set(range(len(seen))):
            raise PreconditionError("ranking tiers must cover objects 0..m-1")
        object.__setattr__(self, "tiers", tiers)

    @classmethod
    def from_values(cls, row: Sequence[float]) -> "Ranking":
        row = np.asarray(row, dtype=float)
        levels = sorted(set(row.tolist()), reverse=True)
        return cls(tuple(frozenset(np.flatnonzero(row == lv).tolist()) for lv in levels))

    @property
    def m(self) -> int:
        return sum(len(t) for t in self.tiers)

    @property
    def is_strict(self) -> bool:
        return all(len(t) == 1 for t in self.tiers)

    def order(self) -> tuple[int, ...]:
        """Objects best-first, ties by ascending index."""
        return tuple(j for t in self.tiers for j in sorted(t))


@dataclass(frozen=True)
class Violation:
    kind: str  # "entry" | "column"
    index: tuple[int, ...]
    amount: float

    def __str__(self):
        where = "column %d" % self.index[0] if self.kind == "column" else "entry (%d, %d)" % self.index
        return f"{where} out of range by {self.amount:.3g}"


@dataclass(frozen=True)
class PropertyReport:
    proportional: bool
    envy_free: bool
    sd_envy_free: bool
    worst_violation: float
    feasibility: tuple[Violation, ...] = field(default=())

    def __post_init__(self):
        if self.sd_envy_free and not self.envy_free:
            raise AssertionError("SD envy-free report must also be envy-free")

    def lines(self) -> list[str]:
        out = [
            f"feasible: {str(not self.feasibility).lower()}",
            f"proportional: {str(self.proportional).lower()}",
            f"envy_free: {str(self.envy_free).lower()}",
            f"sd_envy_free: {str(self.sd_envy_free).lower()}",
            f"worst_violation: {self.worst_violation:.12g}",
        ]
        out += [f"violation: {v}" for v in self.feasibility]
        return out


def as_profile(v) -> ValuationProfile:
    return v if isinstance(v, ValuationProfile) else ValuationProfile(v)


def as_allocation(p) -> Allocation:
    return p if isinstance(p, Allocation) else Allocation(p)


def _pair(v, p) -> tuple[ValuationProfile, Allocation]:
    v, p = as_profile(v), as_allocation(p)
    if v.values.shape != p.probs.shape:
        raise DimensionError(f"profile shape {v.values.shape} != allocation shape {p.probs.shape}")
    return v, p


def _check_agent(v: ValuationProfile, i: int):
    if not 0 <= i < v.n:
        raise DimensionError(f"agent index {i} out of range for n={v.n}")


# -- utilities and egalitarian metrics ---------------------------------------

def utility_matrix(v, p) -> np.ndarray:
    """``U[i, k]`` = agent ``i``'s value for agent ``k``'s bundle."""
    v, p = _pair(v, p)
    return v.values @ p.probs.T


def agent_utility(v, p, i: int) -> float:
    v, p = _pair(v, p)
    _check_agent(v, i)
    return float(p.probs[i] @ v.values[i])


def normalized_utilities(v, p) -> np.ndarray:
    v, p = _pair(v, p)
    return np.einsum("ij,ij->i", p.probs, v.values) / v.totals


def egalitarian_value(v, p) -> float:
    """Smallest fraction of its own total value that any agent receives."""
    return float(normalized_utilities(v, p).min())


def achieved_ratio(v, p, oev: float) -> float:
    if not oev > 0:
        raise PreconditionError(f"optimal egalitarian value must be positive, got {oev}")
    return egalitarian_value(v, p) / oev


# -- checkers -----------------------------------------------------------------

def check_feasible(p, tol: float = TOL) -> list[Violation]:
    p = as_allocation(p)
    out = []
    for i, j in zip(*np.nonzero(p.probs < -tol)):
        out.append(Violation("entry", (int(i), int(j)), float(-p.probs[i, j])))
    for i, j in zip(*np.nonzero(p.probs > 1 + tol)):
        out.append(Violation("entry", (int(i), int(j)), float(p.probs[i, j] - 1)))
    col = p.column_mass
    for j in np.flatnonzero(col > 1 + tol):
        out.append(Violation("column", (int(j),), float(col[j] - 1)))
    return out


# Deficits are measured on row-normalized utilities so one tolerance fits every
# value scale and an SD deficit bounds the envy deficit.

def _proportional_deficit(v: ValuationProfile, p: Allocation) -> float:
    own = np.einsum("ij,ij->i", p.probs, v.values) / v.totals
    return float(np.max(1 / v.n - own))


def _envy_deficit(v: ValuationProfile, p: Allocation) -> float:
    U = (v.values / v.totals[:, None]) @ p.probs.T
    return float(np.max(U - np.diag(U)[:, None]))


def _sd_envy_deficit(v: ValuationProfile, p: Allocation) -> float:
    worst = -np.inf
    for i in range(v.n):
        row = v.values[i]
        for t in np.unique(row):
            upper = row >= t
            mass = p.probs[:, upper].sum(axis=1)
            worst = max(worst, float(np.max(mass - mass[i])))
    return worst


def check_proportional(v, p, tol: float = TOL) -> bool:
    v, p = _pair(v, p)
    return _proportional_deficit(v, p) <= tol


def check_envy_free(v, p, tol: float = TOL) -> bool:
    v, p = _pair(v, p)
    return _envy_deficit(v, p) <= tol


def check_sd_envy_free(v, p, tol: float = TOL) -> bool:
    """Dominance of own row over every rival on each of ``i``'s upper contour sets.

    One constraint per distinct value level of row ``i``, so ties are handled
    without enumerating tie-breaking permutations.
    """
    v, p = _pair(v, p)
    return _sd_envy_deficit(v, p) <= tol


def common_top(v) -> int | None:
    """Index of the object that is every agent's unique favourite, if one exists."""
    v = as_profile(v)
    tops = set()
    for row in v.values:
        best = np.flatnonzero(row == row.max())
        if best.size != 1:
            return None
        tops.add(int(best[0]))
    return tops.pop() if len(tops) == 1 else None


def check_favourite_share(v, p, tol: float = TOL) -> bool:
    v, p = _pair(v, p)
    top = common_top(v)
    if top is None:
        raise PreconditionError("favourite share is undefined: agents lack a common unique top object")
    return bool(np.all(np.abs(p.probs[:, top] - 1 / v.n) <= tol))


def property_report(v, p, tol: float = TOL) -> PropertyReport:
    v, p = _pair(v, p)
    prop, envy, sd = _proportional_deficit(v, p), _envy_deficit(v, p), _sd_envy_deficit(v, p)
    return PropertyReport(
        proportional=prop <= tol,
        envy_free=envy <= tol,
        sd_envy_free=sd <= tol,
        worst_violation=max(prop, envy, sd),
        feasibility=tuple(check_feasible(p, tol)),
    )


def misreport_gain(mechanism: str | Callable, v, i: int, candidates: Iterable[Sequence[float]]) -> float:
    """Best improvement agent ``i`` can get, under its true values, by reporting a candidate row.

    ``mechanism`` is an id accepted by :func:`egalassign.mechanisms.resolve_deterministic`
    or a callable mapping a profile to an :class:`Allocation`.
    """
    from .mechanisms import resolve_deterministic

    v = as_profile(v)
    _check_agent(v, i)
    run = resolve_deterministic(mechanism)
    truthful = agent_utility(v, run(v), i)
    best = -np.inf
    for row in candidates:
        lie = v.with_row(i, row)
        best = max(best, agent_utility(v, run(lie), i))
    if best == -np.inf:
        raise PreconditionError("no candidate misreports given")
    return best - truthful


# -- text format ----------------------------------------------------------------

def format_matrix(a) -> str:
    a = np.asarray(a.values if isinstance(a, ValuationProfile) else
                   a.probs if isinstance(a, Allocation) else a, dtype=float)
    lines = [f"{a.shape[0]} {a.shape[1]}"]
    lines += [" ".join(repr(float(x)) for x in row) for row in a]
    return "\n".join(lines) + "\n"


def parse_matrix(text: str) -> np.ndarray:
    lines = [(k, ln) for k, ln in enumerate(text.splitlines(), start=1) if ln.strip()]
    if not lines:
        raise FormatError("empty input", 1)
    k, head = lines[0]
    try:
        n, m = (int(tok) for tok in head.split())
    except ValueError:
        raise FormatError(f"expected header 'n m', got {head!r}", k) from None
    if n < 1 or m < 1:
        raise FormatError("n and m must be positive", k)
    body = lines[1:]
    if len(body) != n:
        raise FormatError(f"expected {n} rows, found {len(body)}", body[-1][0] if body else k)
    out = np.empty((n, m))
    for r, (k, ln) in enumerate(body):
        toks = ln.split()
        if len(toks) != m:
            raise FormatError(f"expected {m} values, found {len(toks)}", k)
        try:
            out[r] = [float(t) for t in toks]
        except ValueError:
            raise FormatError(f"non-numeric value in {ln.strip()!r}", k) from None
    return out


def read_profile(path) -> ValuationProfile:
    return ValuationProfile(parse_matrix(Path(path).read_text(encoding="utf-8")))


def read_allocation(path) -> Allocation:
    return Allocation(parse_matrix(Path(path).read_text(encoding="utf-8")))
