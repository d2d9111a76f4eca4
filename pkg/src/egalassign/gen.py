"""Preference generation (Mallows, Borda/exponential scoring) and adversarial profiles."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .model import PreconditionError, ValuationProfile

UTILITY_MODELS = ("borda", "exponential")
TINY = 1e-6


@dataclass(frozen=True)
class MallowsConfig:
    sigma: tuple[int, ...]
    phi: float

    def __post_init__(self):
        sigma = tuple(int(x) for x in self.sigma)
        if sorted(sigma) != list(range(len(sigma))):
            raise PreconditionError(f"reference order {sigma} is not a permutation")
        if not 0.0 <= self.phi <= 1.0:
            raise PreconditionError(f"dispersion phi must lie in [0, 1], got {self.phi}")
        object.__setattr__(self, "sigma", sigma)


def _strict(r: Sequence[int]) -> tuple[int, ...]:
    r = tuple(int(x) for x in r)
    if len(set(r)) != len(r):
        raise PreconditionError(f"ranking {r} repeats an object")
    return r


def kendall_tau(r1: Sequence[int], r2: Sequence[int]) -> int:
    """Number of object pairs the two best-first rankings order differently."""
    r1, r2 = _strict(r1), _strict(r2)
    if set(r1) != set(r2):
        raise PreconditionError("rankings are over different object sets")
    pos = {o: k for k, o in enumerate(r2)}
    seq = [pos[o] for o in r1]
    return sum(1 for a in range(len(seq)) for b in range(a + 1, len(seq)) if seq[a] > seq[b])


def mallows_sample(cfg: MallowsConfig, rng: np.random.Generator) -> tuple[int, ...]:
    """Repeated insertion: the k-th object of ``sigma`` lands ``j`` slots above the
    bottom with probability ``phi**j / (1 + phi + ... + phi**(k-1))``."""
    if not 0.0 <= cfg.phi <= 1.0:
        raise PreconditionError(f"dispersion phi must lie in [0, 1], got {cfg.phi}")
    out: list[int] = []
    for k, obj in enumerate(cfg.sigma, start=1):
        j = 0
        if k > 1:
            cum = np.cumsum(cfg.phi ** np.arange(k))
            j = min(int(np.searchsorted(cum, rng.random() * cum[-1], side="right")), k - 1)
        out.insert(len(out) - j, obj)
    return tuple(out)


def mallows_probability(r: Sequence[int], cfg: MallowsConfig) -> float:
    """Exact ``phi**d / Z`` for a ranking ``r`` (``0**0 == 1``)."""
    m = len(cfg.sigma)
    Z = math.prod(sum(cfg.phi ** j for j in range(k)) for k in range(1, m + 1))
    return cfg.phi ** kendall_tau(cfg.sigma, r) / Z


def score_utilities(r: Sequence[int], model: str) -> np.ndarray:
    """Values in object order for a best-first ranking: ``m - i`` (Borda) or
    ``2**(m - i)`` (exponential) for the ``i``-th ranked object."""
    r = _strict(r)
    m = len(r)
    if sorted(r) != list(range(m)):
        raise PreconditionError(f"ranking {r} is not over objects 0..{m - 1}")
    if model == "borda":
        if m < 2:
            raise PreconditionError("Borda scores with m=1 give an all-zero row")
        scores = [m - i for i in range(1, m + 1)]
    elif model == "exponential":
        scores = [2.0 ** (m - i) for i in range(1, m + 1)]
    else:
        raise ValueError(f"unknown utility model {model!r}")
    row = np.zeros(m)
    row[list(r)] = scores
    return row


def sample_profile(n: int, m: int, phi: float, model: str, rng: np.random.Generator) -> ValuationProfile:
    """Fresh uniform reference order, then ``n`` i.i.d. Mallows rankings scored by ``model``.

    The draws do not depend on ``model``, so two models sampled from equal
    seeds see the same rankings.
    """
    if n < 2 or m < 2:
        raise PreconditionError(f"need n, m >= 2, got n={n}, m={m}")
    if model not in UTILITY_MODELS:
        raise ValueError(f"unknown utility model {model!r}")
    cfg = MallowsConfig(tuple(rng.permutation(m).tolist()), phi)
    ranks = [mallows_sample(cfg, rng) for _ in range(n)]
    return ValuationProfile(np.array([score_utilities(r, model) for r in ranks]))


# -- adversarial families ------------------------------------------------------

def fav_share_profile(n: int, eps: float = 1e-3) -> ValuationProfile:
    """Agent 0 values only object 0; agent i>0 splits 0.5+eps / 0.5-eps over objects 0 and i."""
    if n < 2:
        raise PreconditionError("need n >= 2")
    if not 0 < eps < 0.5:
        raise PreconditionError(f"eps must lie in (0, 0.5), got {eps}")
    v = np.zeros((n, n))
    v[0, 0] = 1.0
    for i in range(1, n):
        v[i, 0] = 0.5 + eps
        v[i, i] = 0.5 - eps
    return ValuationProfile(v)


def _root(n1: int) -> int:
    r = math.isqrt(n1)
    if n1 < 4 or r * r != n1:
        raise PreconditionError(f"n1 must be a perfect square >= 4, got {n1}")
    return r


def lower_bound_epsilon(n1: int) -> float:
    return 1 / (n1 - _root(n1))


def lower_bound_profile(n1: int) -> ValuationProfile:
    """``n1`` agents wanting object 0 only; ``n1**2`` agents with 1-eps on object 0 and
    eps on their own object; ``sqrt(n1)`` agents per own object wanting it alone.

    Agents: ``n1 + n1**2 + n1**2.5``; objects: ``n1**2 + 1``.
    """
    r = _root(n1)
    eps = lower_bound_epsilon(n1)
    nb = n1 * n1
    n = n1 + nb + nb * r
    v = np.zeros((n, nb + 1))
    v[:n1, 0] = 1.0
    for ell in range(1, nb + 1):
        b = n1 + ell - 1
        v[b, 0] = 1 - eps
        v[b, ell] = eps
        c0 = n1 + nb + (ell - 1) * r
        v[c0:c0 + r, ell] = 1.0
    return ValuationProfile(v)


def lower_bound_variant(n1: int, ell: int) -> ValuationProfile:
    """Base profile with B-agent ``ell`` (1-based) reporting value 1 for its own object only."""
    nb = n1 * n1
    if not 1 <= ell <= nb:
        raise PreconditionError(f"variant index must lie in 1..{nb}, got {ell}")
    base = lower_bound_profile(n1)
    row = np.zeros(base.m)
    row[ell] = 1.0
    return base.with_row(n1 + ell - 1, row)


def cyclic_order(n: int, i: int) -> list[int]:
    """Agent ``i``'s (0-based) best-first order over ``o_0..o_{n-1}``: a left rotation by ``i``."""
    return [(i + k) % n for k in range(n)]


def cyclic_ordinal_profile(n: int, eps: float = 1e-3, tiny: float = TINY) -> ValuationProfile:
    """Everyone ranks ``o*`` (column 0) first, then ``o_0..o_{n-1}`` (columns 1..n)
    in the rotated order of :func:`cyclic_order`.

    Agent 0 values ``o*`` at 1; agent ``i > 0`` values ``o*`` at 0.5+eps and its
    favourite ``o_i`` at 0.5-eps. The k-th remaining position gets ``tiny * 2**-k``
    so every row is positive and realizes its ranking strictly.
    """
    if n < 2:
        raise PreconditionError("need n >= 2")
    if not 0 < eps < 0.5:
        raise PreconditionError(f"eps must lie in (0, 0.5), got {eps}")
    v = np.zeros((n, n + 1))
    for i in range(n):
        order = cyclic_order(n, i)
        for k, o in enumerate(order):
            v[i, o + 1] = tiny * 2.0 ** -k
        if i == 0:
            v[i, 0] = 1.0
        else:
            v[i, 0] = 0.5 + eps
            v[i, order[0] + 1] = 0.5 - eps
    return ValuationProfile(v)
