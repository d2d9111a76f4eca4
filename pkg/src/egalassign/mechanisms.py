"""Randomized assignment mechanisms returning expected allocations."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import numpy as np

from .model import Allocation, PreconditionError, ValuationProfile, as_profile

RSD_DEFAULT_CAP = 8
RSD_HARD_CAP = 9
_CHUNK = 1 << 15

MECHANISMS = ("ps", "rsd_exact", "rsd_mc", "uniform", "oeef")


@dataclass(frozen=True)
class MechanismOutcome:
    allocation: Allocation
    mechanism: str
    exact: bool = True
    samples: int = 0
    seed: int = 0

    def __post_init__(self):
        if self.mechanism not in MECHANISMS:
            raise ValueError(f"unknown mechanism {self.mechanism!r}")
        if self.exact and self.samples:
            raise ValueError("exact outcomes carry no sample count")


def uniform(v) -> MechanismOutcome:
    v = as_profile(v)
    return MechanismOutcome(Allocation(np.full((v.n, v.m), 1 / v.n)), "uniform")


def preference_orders(v) -> np.ndarray:
    """Row ``i`` lists objects best-first for agent ``i``; ties by ascending index."""
    v = as_profile(v)
    # lexsort keys: last key is primary
    return np.array([np.lexsort((np.arange(v.m), -row)) for row in v.values], dtype=np.intp)


def serial_dictatorship(v, order) -> Allocation:
    """Agents in ``order`` each take ``m/n`` units of their best remaining objects."""
    v = as_profile(v)
    order = list(order)
    if sorted(order) != list(range(v.n)):
        raise PreconditionError(f"order {order} is not a permutation of 0..{v.n - 1}")
    quota = v.m / v.n
    prefs = preference_orders(v)
    left = [1.0] * v.m
    p = np.zeros((v.n, v.m))
    for i in order:
        need = quota
        for j in prefs[i]:
            if need <= 0:
                break
            take = min(need, left[j])
            p[i, j] += take
            left[j] -= take
            need -= take
    return Allocation(p)


def _sd_batch(prefs: np.ndarray, orders: np.ndarray, quota: float) -> np.ndarray:
    """Sum of serial dictatorship allocations over the rows of ``orders``."""
    n, m = prefs.shape
    P = orders.shape[0]
    rows = np.arange(P)
    left = np.ones((P, m))
    total = np.zeros(n * m)
    for step in range(n):
        agents = orders[:, step]
        need = np.full(P, quota)
        for r in range(m):
            obj = prefs[agents, r]
            take = np.minimum(need, left[rows, obj])
            left[rows, obj] -= take
            need -= take
            total += np.bincount(agents * m + obj, weights=take, minlength=n * m)
            if not need.any():
                break
    return total.reshape(n, m)


def _sd_tree(prefs: np.ndarray, quota: float) -> np.ndarray:
    """Sum of serial dictatorship allocations over all ``n!`` orders.

    Orders are expanded one position at a time in lexicographic order, so a
    shared prefix is simulated once and its takings are weighted by the number
    of completions. The last agent always receives exactly the leftover supply.
    """
    n, m = prefs.shape
    left = np.ones((1, m))
    used = np.zeros((1, n), dtype=bool)
    total = np.zeros(n * m)
    for k in range(n - 1):
        parent, agents = np.nonzero(~used)
        left = left[parent]
        used = used[parent]
        rows = np.arange(len(parent))
        used[rows, agents] = True
        weight = math.factorial(n - k - 1)
        need = np.full(len(parent), quota)
        for r in range(m):
            obj = prefs[agents, r]
            take = np.minimum(need, left[rows, obj])
            left[rows, obj] -= take
            need -= take
            total += np.bincount(agents * m + obj, weights=take * weight, minlength=n * m)
            if not need.any():
                break
    last = np.argmin(used, axis=1)
    idx = (last[:, None] * m + np.arange(m)).ravel()
    total += np.bincount(idx, weights=left.ravel(), minlength=n * m)
    return total.reshape(n, m)


def rsd_exact(v, cap: int = RSD_DEFAULT_CAP) -> MechanismOutcome:
    """Average of serial dictatorship over all ``n!`` agent orders."""
    v = as_profile(v)
    if cap > RSD_HARD_CAP:
        raise PreconditionError(f"enumeration cap {cap} exceeds hard cap {RSD_HARD_CAP}")
    if v.n > cap:
        raise PreconditionError(f"n={v.n} exceeds the enumeration cap {cap}; use rsd_sampled")
    total = _sd_tree(preference_orders(v), v.m / v.n)
    return MechanismOutcome(Allocation(total / math.factorial(v.n)), "rsd_exact")


def draw_orders(n: int, samples: int, seed: int) -> np.ndarray:
    """The ``samples`` uniform agent orders used by :func:`rsd_sampled`."""
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    return rng.permuted(np.tile(np.arange(n, dtype=np.intp), (samples, 1)), axis=1)


def rsd_sampled(v, samples: int, seed: int) -> MechanismOutcome:
    v = as_profile(v)
    if samples < 1:
        raise PreconditionError("rsd_sampled needs at least one sample")
    if not 0 <= seed < 2**64:
        raise PreconditionError("seed must be a 64-bit unsigned integer")
    orders = draw_orders(v.n, samples, seed)
    prefs = preference_orders(v)
    total = np.zeros((v.n, v.m))
    for start in range(0, samples, _CHUNK):
        total += _sd_batch(prefs, orders[start:start + _CHUNK], v.m / v.n)
    return MechanismOutcome(Allocation(total / samples), "rsd_mc", exact=False, samples=samples, seed=seed)


def ps(v) -> MechanismOutcome:
    """Probabilistic serial by exact event simulation.

    Agents eat at unit speed, splitting it equally over the best tier of
    objects that still have mass. Between events all rates are constant, so
    each step jumps to the next exhaustion time. Times and masses are kept as
    fractions, so outputs are exact up to the final float conversion.
    """
    v = as_profile(v)
    n, m = v.n, v.m
    vals = v.values.tolist()
    left = [Fraction(1)] * m
    eaten = [[Fraction(0)] * m for _ in range(n)]
    alive = list(range(m))
    while alive:
        menus = []
        rate = [Fraction(0)] * m
        for i in range(n):
            best = max(vals[i][j] for j in alive)
            tier = [j for j in alive if vals[i][j] == best]
            share = Fraction(1, len(tier))
            menus.append((tier, share))
            for j in tier:
                rate[j] += share
        dt = min(left[j] / rate[j] for j in alive if rate[j])
        for i, (tier, share) in enumerate(menus):
            for j in tier:
                eaten[i][j] += share * dt
        for j in alive:
            left[j] -= rate[j] * dt
        alive = [j for j in alive if left[j] > 0]
    return MechanismOutcome(Allocation(np.array([[float(x) for x in row] for row in eaten])), "ps")


def oeef(v) -> MechanismOutcome:
    from .egal_lp import solve_oeef

    return MechanismOutcome(solve_oeef(v).allocation, "oeef")


def run_mechanism(name: str, v, *, samples: int = 0, seed: int = 0, cap: int = RSD_DEFAULT_CAP) -> MechanismOutcome:
    if name == "ps":
        return ps(v)
    if name == "uniform":
        return uniform(v)
    if name == "oeef":
        return oeef(v)
    if name == "rsd_exact":
        return rsd_exact(v, cap)
    if name == "rsd_mc":
        return rsd_sampled(v, samples, seed)
    raise ValueError(f"unknown mechanism {name!r}; expected one of {', '.join(MECHANISMS)}")


def resolve_deterministic(mechanism: str | Callable) -> Callable[[ValuationProfile], Allocation]:
    """Profile -> allocation map for mechanisms whose expected outcome is a function of the profile."""
    if callable(mechanism):
        def run(v):
            out = mechanism(v)
            return out.allocation if isinstance(out, MechanismOutcome) else out
        return run
    table = {"ps": ps, "rsd_exact": rsd_exact, "uniform": uniform, "oeef": oeef}
    if mechanism not in table:
        raise ValueError(f"unknown or non-deterministic mechanism {mechanism!r}")
    f = table[mechanism]
    return lambda v: f(v).allocation
