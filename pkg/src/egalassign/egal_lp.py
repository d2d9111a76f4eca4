"""Optimal egalitarian value via linear programming.

``solve_lp`` is a dense two-phase tableau simplex. Pivoting uses the largest
reduced cost and switches to Bland's rule after a run of degenerate pivots,
which rules out cycling.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
import numpy as np

from .model import Allocation, PreconditionError, as_profile

_PIV = 1e-11
_DEGENERATE_STREAK = 8
_TAIL_ROWS = 4_000_000


class UnboundedError(RuntimeError):
    pass


@dataclass
class LinearProgram:
    """``maximize objective @ x`` subject to row constraints and variable bounds."""

    objective: np.ndarray
    constraints: list[tuple[np.ndarray, str, float]] = field(default_factory=list)
    bounds: list[tuple[float, float]] | None = None

    def __post_init__(self):
        self.objective = np.asarray(self.objective, dtype=float)
        d = self.objective.size
        if self.bounds is None:
            self.bounds = [(0.0, math.inf)] * d
        if len(self.bounds) != d:
            raise ValueError(f"{len(self.bounds)} bounds for {d} variables")
        for lo, hi in self.bounds:
            if lo > hi:
                raise ValueError(f"bound lo={lo} exceeds hi={hi}")
        cons = []
        for a, rel, b in self.constraints:
            a = np.asarray(a, dtype=float)
            if a.shape != (d,):
                raise ValueError(f"constraint of length {a.size}, expected {d}")
            if rel not in ("<=", ">=", "="):
                raise ValueError(f"unknown relation {rel!r}")
            cons.append((a, rel, float(b)))
        self.constraints = cons

    @property
    def dim(self) -> int:
        return self.objective.size

    def add(self, coeffs, rel: str, bound: float):
        self.constraints.append((np.asarray(coeffs, dtype=float), rel, float(bound)))
        self.__post_init__()


@dataclass
class LPResult:
    status: str  # "optimal" | "infeasible"
    x: np.ndarray | None
    objective: float | None
    pivots: int = 0


class _Tableau:
    """Rows ``A x = b`` with ``b >= 0``; last row holds negated reduced costs."""

    def __init__(self, T: np.ndarray, basis: list[int]):
        self.T = T
        self.basis = basis
        self.pivots = 0

    def pivot(self, r: int, c: int):
        T = self.T
        T[r] /= T[r, c]
        col = T[:, c].copy()
        col[r] = 0.0
        T -= np.outer(col, T[r])
        T[:, c] = 0.0
        T[r, c] = 1.0
        self.basis[r] = c
        self.pivots += 1

    def run(self, allowed: np.ndarray, max_pivots: int):
        """Maximize; ``allowed`` masks columns that may enter the basis."""
        T = self.T
        streak = 0
        while True:
            cost = T[-1, :-1]
            cand = np.flatnonzero((cost < -_PIV) & allowed)
            if cand.size == 0:
                return
            if streak >= _DEGENERATE_STREAK:
                c = int(cand[0])  # Bland: lowest index
            else:
                c = int(cand[np.argmin(cost[cand])])
            colv = T[:-1, c]
            rows = np.flatnonzero(colv > _PIV)
            if rows.size == 0:
                raise UnboundedError("objective is unbounded")
            ratios = T[rows, -1] / colv[rows]
            best = ratios.min()
            tied = rows[ratios <= best + 1e-12 * max(1.0, best)]
            # lowest basic variable index among ties (Bland's leaving rule)
            r = int(min(tied, key=lambda k: self.basis[k]))
            streak = streak + 1 if best <= 1e-12 else 0
            self.pivot(r, c)
            if self.pivots > max_pivots:
                raise RuntimeError(f"simplex exceeded {max_pivots} pivots")


def solve_lp(lp: LinearProgram, max_pivots: int = 50_000) -> LPResult:
    d = lp.dim
    # substitute x = lo + y (y >= 0), or x = y+ - y- for free variables
    cols: list[tuple[int, float]] = []  # (original var, sign) per structural column
    shift = np.zeros(d)
    extra_rows: list[tuple[np.ndarray, str, float]] = []
    for k, (lo, hi) in enumerate(lp.bounds):
        if math.isfinite(lo):
            shift[k] = lo
            cols.append((k, 1.0))
        elif math.isfinite(hi):
            shift[k] = hi
            cols.append((k, -1.0))
        else:
            cols.append((k, 1.0))
            cols.append((k, -1.0))
    ns = len(cols)
    M = np.zeros((d, ns))
    for c, (k, s) in enumerate(cols):
        M[k, c] = s
    for k, (lo, hi) in enumerate(lp.bounds):
        if math.isfinite(lo) and math.isfinite(hi):
            a = np.zeros(d)
            a[k] = 1.0
            extra_rows.append((a, "<=", hi))

    rows = []
    for a, rel, b in list(lp.constraints) + extra_rows:
        ay = a @ M
        rhs = b - a @ shift
        if rhs < 0:
            ay, rhs = -ay, -rhs
            rel = {"<=": ">=", ">=": "<=", "=": "="}[rel]
        rows.append((ay, rel, rhs))

    nr = len(rows)
    n_slack = sum(rel != "=" for _, rel, _ in rows)
    n_art = sum(rel != "<=" for _, rel, _ in rows)
    width = ns + n_slack + n_art
    T = np.zeros((nr + 1, width + 1))
    basis = [0] * nr
    s_at, a_at = ns, ns + n_slack
    art_cols = []
    for r, (ay, rel, rhs) in enumerate(rows):
        T[r, :ns] = ay
        T[r, -1] = rhs
        if rel == "<=":
            T[r, s_at] = 1.0
            basis[r] = s_at
            s_at += 1
        else:
            if rel == ">=":
                T[r, s_at] = -1.0
                s_at += 1
            T[r, a_at] = 1.0
            basis[r] = a_at
            art_cols.append(a_at)
            a_at += 1

    tab = _Tableau(T, basis)
    allowed = np.ones(width, dtype=bool)
    if art_cols:
        # phase 1: maximize -sum(artificials)
        T[-1, :] = 0.0
        T[-1, art_cols] = 1.0
        for r, b in enumerate(basis):
            if b in art_cols:
                T[-1] -= T[r]
        tab.run(allowed, max_pivots)
        if T[-1, -1] < -1e-9 * max(1.0, np.abs(T[:-1, -1]).max()):
            return LPResult("infeasible", None, None, tab.pivots)
        allowed[art_cols] = False
        # drive remaining artificials out of the basis; drop redundant rows
        keep = []
        for r in range(nr):
            if tab.basis[r] in art_cols:
                nz = np.flatnonzero((np.abs(T[r, :-1]) > 1e-9) & allowed)
                if nz.size:
                    tab.pivot(r, int(nz[0]))
                    keep.append(r)
            else:
                keep.append(r)
        if len(keep) < nr:
            tab.T = T = np.vstack([T[keep], T[-1:]])
            tab.basis = [tab.basis[r] for r in keep]
        T[:, art_cols] = 0.0

    # phase 2
    T[-1, :] = 0.0
    T[-1, :ns] = -(lp.objective @ M)
    for r, b in enumerate(tab.basis):
        if T[-1, b] != 0.0:
            T[-1] -= T[-1, b] * T[r]
    tab.run(allowed, max_pivots)

    y = np.zeros(width)
    for r, b in enumerate(tab.basis):
        y[b] = T[r, -1]
    x = shift + M @ y[:ns]
    return LPResult("optimal", x, float(lp.objective @ x), tab.pivots)


# -- egalitarian formulations ---------------------------------------------------

@dataclass
class EgalSolution:
    value: float | None
    allocation: Allocation | None
    status: str = "optimal"


def egal_program(v, envy_free: bool = False) -> LinearProgram:
    """LP over ``(p[0,0], ..., p[n-1,m-1], lam)`` maximizing ``lam``.

    Rows are normalized by each agent's total value so ``lam`` is directly the
    egalitarian value. ``p <= 1`` is implied by the column caps and left out.
    """
    v = as_profile(v)
    n, m = v.n, v.m
    W = v.values / v.totals[:, None]
    d = n * m + 1
    obj = np.zeros(d)
    obj[-1] = 1.0
    cons = []
    for i in range(n):
        a = np.zeros(d)
        a[i * m:(i + 1) * m] = -W[i]
        a[-1] = 1.0
        cons.append((a, "<=", 0.0))
    for j in range(m):
        a = np.zeros(d)
        a[j:n * m:m] = 1.0
        cons.append((a, "<=", 1.0))
    if envy_free:
        for i in range(n):
            for k in range(n):
                if i == k:
                    continue
                a = np.zeros(d)
                a[k * m:(k + 1) * m] += W[i]
                a[i * m:(i + 1) * m] -= W[i]
                cons.append((a, "<=", 0.0))
    bounds = [(0.0, math.inf)] * (n * m) + [(0.0, math.inf)]
    return LinearProgram(obj, cons, bounds)


def _solve_egal(v, envy_free: bool) -> EgalSolution:
    v = as_profile(v)
    res = solve_lp(egal_program(v, envy_free))
    if res.status != "optimal":
        return EgalSolution(None, None, res.status)
    p = res.x[:-1].reshape(v.n, v.m)
    p = np.clip(np.where(np.abs(p) < 1e-13, 0.0, p), 0.0, 1.0)
    return EgalSolution(float(res.x[-1]), Allocation(p))


def solve_oev(v) -> EgalSolution:
    """Largest egalitarian value over all feasible fractional allocations."""
    return _solve_egal(v, envy_free=False)


def solve_oeef(v) -> EgalSolution:
    """Largest egalitarian value over envy-free feasible allocations."""
    return _solve_egal(v, envy_free=True)


# -- brute-force oracle -----------------------------------------------------------

def _grid_columns(n: int, k: int) -> np.ndarray:
    """All length-``n`` vectors of grid units (step = 1/k) with total at most ``k``."""
    cols = np.zeros((1, 0), dtype=np.int64)
    for _ in range(n):
        room = k - cols.sum(axis=1)
        reps = np.repeat(np.arange(len(cols)), room + 1)
        # offsets restart at 0 for each parent row
        nxt = np.arange(len(reps)) - np.repeat(np.cumsum(room + 1) - (room + 1), room + 1)
        cols = np.column_stack([cols[reps], nxt])
    return cols / k


def oev_grid_oracle(v, step: float = 0.05) -> float:
    """Exhaustive max of the egalitarian value over allocations on a grid.

    Every matrix with entries in ``{0, step, ..., 1}`` and column sums at most
    one is scored; the result is a lower bound on the LP optimum.
    """
    v = as_profile(v)
    if not 0 < step <= 0.5:
        raise PreconditionError(f"grid step must lie in (0, 0.5], got {step}")
    if v.n * v.m > 6:
        raise PreconditionError(f"grid oracle limited to n*m <= 6, got {v.n * v.m}")
    k = round(1 / step)
    if not math.isclose(k * step, 1.0):
        raise PreconditionError("grid step must divide 1")
    W = v.values / v.totals[:, None]
    cols = _grid_columns(v.n, k)
    # gains[j][c, i]: normalized utility agent i gets from grid column c of object j
    gains = [cols * W[:, j] for j in range(v.m)]
    # broadcast-sum a tail of objects, loop over the head
    tail = np.zeros((1, v.n))
    split = v.m
    while split > 0 and tail.shape[0] * len(gains[split - 1]) <= _TAIL_ROWS:
        split -= 1
        tail = (tail[:, None, :] + gains[split][None, :, :]).reshape(-1, v.n)
    best = 0.0
    for pick in itertools.product(*(range(len(g)) for g in gains[:split])):
        base = sum((g[c] for g, c in zip(gains, pick)), np.zeros(v.n))
        best = max(best, float((base + tail).min(axis=1).max()))
    return best
