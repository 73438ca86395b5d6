import itertools
import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import linprog

from badcodes.ensemble import EdgeDistribution, design_rate
from badcodes.interference import LlrGrid
from badcodes.optimizer import (
    LpProblem, SeedNotAdmissible, optimize_interference, optimize_relay, solve_lp, solve_lp_lazy,
)
from badcodes.rates import InterferenceParams
from badcodes.relay import RelayParams


def random_lp(seed, n, m, with_eq):
    rng = np.random.default_rng(seed)
    x = rng.random(n)
    a = rng.normal(size=(m, n))
    b = a @ x + rng.random(m) * 0.5
    c = rng.normal(size=n)
    eq = (np.ones((1, n)), [x.sum()]) if with_eq else (None, None)
    return LpProblem.build(c, a, b, *eq), x


def highs(p: LpProblem):
    r = linprog(-p.c, A_ub=p.a_ub if p.a_ub.size else None, b_ub=p.b_ub if p.b_ub.size else None,
                A_eq=p.a_eq if p.a_eq.size else None, b_eq=p.b_eq if p.b_eq.size else None,
                bounds=[(0, 1)] * p.n, method="highs")
    return -r.fun


def vertex_max(p: LpProblem):
    n = p.n
    rows = np.vstack([p.a_ub, np.eye(n), -np.eye(n), p.a_eq, -p.a_eq])
    rhs = np.r_[p.b_ub, np.ones(n), np.zeros(n), p.b_eq, -p.b_eq]
    best = -np.inf
    for idx in itertools.combinations(range(rows.shape[0]), n):
        m = rows[list(idx)]
        if abs(np.linalg.det(m)) < 1e-12:
            continue
        x = np.linalg.solve(m, rhs[list(idx)])
        if np.all(rows @ x <= rhs + 1e-9):
            best = max(best, float(p.c @ x))
    return best


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 6), st.integers(1, 10), st.booleans())
def test_lp_matches_highs(seed, n, m, with_eq):
    p, x = random_lp(seed, n, m, with_eq)
    ref = highs(p)
    for res in (solve_lp(p), solve_lp(p, start=x), solve_lp_lazy(p, batch=2, start=x)):
        assert res.ok
        assert res.objective == pytest.approx(ref, abs=1e-7)
        assert np.all(p.a_ub @ res.x <= p.b_ub + 1e-8)
        assert np.all((res.x >= -1e-9) & (res.x <= 1 + 1e-9))
        assert np.allclose(p.a_eq @ res.x, p.b_eq, atol=1e-8)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 3), st.integers(1, 5), st.booleans())
def test_lp_matches_vertex_enumeration(seed, n, m, with_eq):
    p, x = random_lp(seed, n, m, with_eq)
    assert solve_lp(p).objective == pytest.approx(vertex_max(p), abs=1e-8)
    assert solve_lp(p, start=x).objective == pytest.approx(vertex_max(p), abs=1e-8)


def test_lp_small_cases():
    p = LpProblem.build([1.0], [[1.0]], [0.3])
    assert solve_lp(p).x == pytest.approx([0.3])
    assert solve_lp(LpProblem.build([1.0], [[-1.0]], [-2.0])).status == "infeasible"
    assert solve_lp(LpProblem.build([1.0, 1.0], a_eq=[[1.0, 1.0]], b_eq=[3.0])).status == "infeasible"
    # degenerate: many constraints tight at the optimum
    a = [[1, 1], [1, 2], [2, 1], [1, 0], [0, 1]]
    res = solve_lp(LpProblem.build([1, 1], a, [1, 1.5, 1.5, 0.5, 0.5]))
    assert res.objective == pytest.approx(1.0)
    with pytest.raises(ValueError):
        LpProblem.build([1, 2], [[1.0]], [1.0])
    with pytest.raises(ValueError):
        LpProblem.build([np.nan])


HEADLINE = RelayParams(0.5, 0.82, 0.9, 0.212)


def test_relay_eta_zero_is_a_fixed_point():
    seed = EdgeDistribution({2: 0.3, 3: 0.7}, {5: 1.0})
    state = optimize_relay(seed, RelayParams(0.3, 0.6, 0.9, 0.0), eta=0.0, dhat2=0.0, max_iters=2,
                           t=400, epsilon=1e-3)
    assert state.current == seed
    assert state.accepted_rates == [design_rate(seed)]


def test_relay_rejects_bad_seed():
    with pytest.raises(SeedNotAdmissible):
        optimize_relay(EdgeDistribution.regular(3, 6), HEADLINE, dhat2=0.212, t=200)
    with pytest.raises(ValueError):
        optimize_relay(EdgeDistribution.regular(3, 6), HEADLINE, eta=-1)


def test_relay_steps_increase_rate():
    seed = EdgeDistribution({2: 0.3, 3: 0.7}, {5: 1.0})
    p = RelayParams(0.3, 0.6, 0.9, 0.0)
    state = optimize_relay(seed, p, eta=0.1, dhat2=0.0, max_iters=3, t=400, epsilon=1e-3,
                           candidates=range(2, 9))
    rates = state.accepted_rates
    assert len(rates) >= 3
    assert all(b > a for a, b in zip(rates, rates[1:]))
    for rec in state.records():
        d = json.loads(rec)
        assert set(d) >= {"lam", "design_rate", "admissible", "accepted", "figure"}


IC = InterferenceParams(0.839, 1.075)
IC_SEED = EdgeDistribution({2: 0.2, 3: 0.2, 30: 0.6}, {6: 1.0})


@pytest.mark.slow
def test_interference_run_is_monotone():
    grid = LlrGrid(half_bins=256)
    state = optimize_interference(IC_SEED, IC, eta=0.1, t=300, max_iters=3, enforce_partial=0.3,
                                  grid=grid, candidates=(2, 3, 4, 6, 10, 20, 30))
    rates = state.accepted_rates
    assert len(rates) >= 3
    assert all(b > a for a, b in zip(rates, rates[1:]))
    assert all(r.figure <= 1e-5 for r in state.log if r.accepted)


def test_interference_rejects_bad_seed():
    with pytest.raises(SeedNotAdmissible):
        optimize_interference(EdgeDistribution.regular(3, 6), IC, t=30, grid=LlrGrid(half_bins=256))
