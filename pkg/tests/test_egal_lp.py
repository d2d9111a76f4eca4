import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import linprog

from egalassign.egal_lp import (
    LinearProgram, UnboundedError, oev_grid_oracle, solve_lp, solve_oeef, solve_oev,
)
from egalassign.gen import fav_share_profile, lower_bound_profile, lower_bound_epsilon
from egalassign.mechanisms import ps
from egalassign.model import PreconditionError, check_envy_free, check_feasible, egalitarian_value

from conftest import profiles


def test_solve_lp_trivial():
    assert solve_lp(LinearProgram([1], [([1], "<=", 3)])).objective == pytest.approx(3)
    assert solve_lp(LinearProgram([1, 1], [([1, 1], "<=", 1)])).objective == pytest.approx(1)


def test_solve_lp_mixed_relations_and_bounds():
    # min x + y  s.t. x + 2y >= 3, x = y  ->  x = y = 1
    res = solve_lp(LinearProgram([-1, -1], [([1, 2], ">=", 3), ([1, -1], "=", 0)]))
    assert res.x == pytest.approx([1, 1])
    # free variable with a finite upper bound only
    res = solve_lp(LinearProgram([1, 0], [([1, 1], "<=", 10)], [(-math.inf, 2), (-5, 5)]))
    assert res.x[0] == pytest.approx(2)
    # x in [-3, -1]: maximize x -> -1
    res = solve_lp(LinearProgram([1], [], [(-3, -1)]))
    assert res.objective == pytest.approx(-1)


def test_solve_lp_infeasible_and_unbounded():
    assert solve_lp(LinearProgram([1], [([1], ">=", 3), ([1], "<=", 2)])).status == "infeasible"
    with pytest.raises(UnboundedError):
        solve_lp(LinearProgram([1, 0], [([1, -1], "<=", 1)]))


def test_solve_lp_beale_cycling_example():
    # Dantzig's rule cycles on this LP without an anti-cycling safeguard
    c = [0.75, -20, 0.5, -6]
    cons = [([0.25, -8, -1, 9], "<=", 0), ([0.5, -12, -0.5, 3], "<=", 0), ([0, 0, 1, 0], "<=", 1)]
    assert solve_lp(LinearProgram(c, cons)).objective == pytest.approx(1.25)


def test_linear_program_validation():
    with pytest.raises(ValueError):
        LinearProgram([1, 1], [([1], "<=", 1)])
    with pytest.raises(ValueError):
        LinearProgram([1], [([1], "<", 1)])
    with pytest.raises(ValueError):
        LinearProgram([1], [], [(2, 1)])


@settings(max_examples=80)
@given(st.integers(1, 5), st.integers(1, 6), st.integers(0, 2**32 - 1))
def test_solve_lp_agrees_with_scipy(d, k, seed):
    r = np.random.default_rng(seed)
    c = r.normal(size=d)
    A = r.normal(size=(k, d))
    b = r.uniform(0.1, 2, size=k) * r.choice([-1, 1], size=k)
    hi = r.uniform(0.5, 3, size=d)
    lp = LinearProgram(c, [(A[i], "<=", b[i]) for i in range(k)], [(0.0, h) for h in hi])
    ref = linprog(-c, A_ub=A, b_ub=b, bounds=list(zip([0.0] * d, hi)), method="highs")
    got = solve_lp(lp)
    if ref.status == 2:
        assert got.status == "infeasible"
    else:
        assert got.status == "optimal"
        assert got.objective == pytest.approx(-ref.fun, abs=1e-7)
        assert np.all(A @ got.x <= b + 1e-9)


def test_oev_examples():
    assert solve_oev(np.eye(3) * 5).value == pytest.approx(1)
    assert solve_oev([[1, 0, 0]] * 4).value == pytest.approx(0.25)
    # equalize p = 0.51 (1 - p) + 0.49  ->  p = 1/1.51
    assert solve_oev([[1, 0], [0.51, 0.49]]).value == pytest.approx(1 / 1.51, abs=1e-12)
    # utilitarian cap u1 + u2 <= 4 with totals 3 gives min <= 2/3, attained by the PS outcome
    assert solve_oev([[2, 1, 0], [2, 0, 1]]).value == pytest.approx(2 / 3, abs=1e-12)


def test_oev_solution_is_consistent(rng):
    for _ in range(20):
        v = rng.random((rng.integers(2, 7), rng.integers(2, 7)))
        sol = solve_oev(v)
        assert sol.status == "optimal"
        assert check_feasible(sol.allocation) == []
        assert egalitarian_value(v, sol.allocation) == pytest.approx(sol.value, abs=1e-9)


def test_oeef_examples():
    v = np.tile([3.0, 2, 1], (4, 1))
    sol = solve_oeef(v)
    assert sol.value == pytest.approx(0.25)
    assert solve_oeef(np.eye(4)).value == pytest.approx(1)


@given(profiles(max_n=5, max_m=5))
def test_sandwich_and_envy_freeness(v):
    n = v.shape[0]
    oev, oeef = solve_oev(v), solve_oeef(v)
    assert 1 / n - 1e-9 <= oeef.value <= oev.value + 1e-9 <= 1 + 2e-9
    assert check_envy_free(v, oeef.allocation)
    assert check_feasible(oeef.allocation) == []
    assert oeef.value >= egalitarian_value(v, ps(v).allocation) - 1e-9


@given(profiles(max_n=4, max_m=4), st.integers(0, 3), st.floats(0.01, 1000))
def test_lp_values_scale_invariant(v, i, c):
    i %= v.shape[0]
    w = v.copy()
    w[i] *= c
    assert solve_oev(w).value == pytest.approx(solve_oev(v).value, abs=1e-9)
    assert solve_oeef(w).value == pytest.approx(solve_oeef(v).value, abs=1e-9)


@pytest.mark.parametrize("n", [2, 3, 5, 8])
def test_oev_fav_share_dominates_explicit_point(n):
    eps = 1e-3
    assert solve_oev(fav_share_profile(n, eps)).value >= 0.5 - eps - 1e-9


def test_oev_lower_bound_family():
    v = lower_bound_profile(4)
    assert lower_bound_epsilon(4) == 0.5
    assert solve_oev(v).value >= 1 / 4 - 1e-9


def test_grid_oracle_examples():
    assert oev_grid_oracle([[1, 0], [1, 0]], 0.5) == pytest.approx(0.5)
    assert oev_grid_oracle(np.eye(2), 0.5) == pytest.approx(1)
    got = oev_grid_oracle([[1, 0], [0.51, 0.49]], 0.05)
    assert abs(got - 1 / 1.51) <= 0.05
    assert got <= solve_oev([[1, 0], [0.51, 0.49]]).value + 1e-12


@pytest.mark.parametrize("shape", [(1, 6), (2, 3), (3, 2), (6, 1)])
def test_grid_oracle_shapes(shape, rng):
    v = rng.random(shape) + 0.05
    got = oev_grid_oracle(v, 0.25)
    assert got <= solve_oev(v).value + 1e-12
    assert abs(got - solve_oev(v).value) <= 0.25 * v.size


def test_grid_oracle_guards():
    with pytest.raises(PreconditionError):
        oev_grid_oracle(np.ones((3, 3)), 0.5)
    with pytest.raises(PreconditionError):
        oev_grid_oracle(np.ones((2, 2)), 0.6)
    with pytest.raises(PreconditionError):
        oev_grid_oracle(np.ones((2, 2)), 0.3)
