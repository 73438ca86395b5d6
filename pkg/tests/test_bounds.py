import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import minimize, minimize_scalar

from badcodes.bounds import (
    A_term, BoundContext, f_alpha, golden_min, good_code_min_dhat2, good_code_quantization_mi, h2,
    i_plus, i_plus_parts, min_dhat2, min_quantization_noise, naive_bound, pmap_good,
)
from badcodes.ensemble import RELAY_ENSEMBLE, EdgeDistribution, design_rate, node_fractions
from badcodes.erasure import circ, spawn_streams


@pytest.fixture(scope="module")
def relay_ctx():
    return BoundContext.from_ensemble(RELAY_ENSEMBLE, 0.5, 0.82)


def toy_ctx(dbp=0.3, d2=0.5, d3=0.82):
    return BoundContext(d2, d3, dbp, EdgeDistribution.regular(3, 6))


def test_h2():
    assert h2(0.5) == 1.0 and h2(0.0) == 0.0 and h2(1.0) == 0.0
    assert h2(0.11) == pytest.approx(0.4999, abs=1e-4)


def test_golden_min_parabola():
    x, fx, _ = golden_min(lambda v: (v - 0.3) ** 2, 0.0, 1.0)
    assert x == pytest.approx(0.3, abs=1e-6) and fx == pytest.approx(0.0, abs=1e-12)


def test_naive_bound_cases():
    ctx = toy_ctx()
    assert naive_bound(ctx, 0.0) == pytest.approx(h2(0.3) + 0.7 * 0.82)
    assert naive_bound(ctx, 1.0) == pytest.approx(0.0, abs=1e-12)


def test_naive_bound_reduces_to_good_code():
    ctx = toy_ctx(dbp=0.5)
    for dh in (0.0, 0.1, 0.5, 0.9):
        assert naive_bound(ctx, dh) == pytest.approx(good_code_quantization_mi(0.5, 0.82, dh))


def test_a_term_cases():
    ctx = toy_ctx()
    assert A_term(ctx, 1.0) == pytest.approx(0.0, abs=1e-12)
    assert A_term(ctx, 0.0) == pytest.approx(0.82 * 0.5)
    same = toy_ctx(dbp=0.5)
    for dh in (0.1, 0.4):
        assert A_term(same, dh) == pytest.approx(0.82 * (1 - dh) * 0.5 - 0.5 * h2(dh))


def test_good_code_values():
    assert good_code_quantization_mi(0.5, 0.82, 0.223) == pytest.approx(0.9, abs=3e-3)
    assert good_code_quantization_mi(0.5, 0.82, 0.0) == pytest.approx(1.41, abs=1e-2)
    assert good_code_min_dhat2(0.5, 0.82, 0.9) == pytest.approx(0.223, abs=3e-3)


def test_pmap_good():
    assert pmap_good(0.7, 0.5) == 0.7
    assert pmap_good(0.3, 0.5) == 0.0
    assert pmap_good(1.0, 0.2) == 1.0
    with pytest.raises(ValueError):
        pmap_good(0.5, 0.5)


# ---- f(alpha) against an independent convex-minimization oracle -----------


def f_oracle(ed, alpha, betas=400):
    """Dense beta scan; inner infima by quasi-Newton in (log x, log y)."""
    lt = node_fractions(ed)
    deg = np.array(list(lt), float)
    w = np.array(list(lt.values()))
    d = ed.right_degree
    R = design_rate(ed)
    gamma = float(np.dot(deg, w))

    def var_inf(beta):
        fn = lambda z: float(np.dot(w, np.logaddexp(0, z[0] + deg * z[1])) - alpha * z[0] - beta * z[1])
        return min(minimize(fn, x0, method="BFGS", options={"gtol": 1e-10}).fun
                   for x0 in ([0.0, 0.0], [-3.0, 1.0], [3.0, -1.0]))

    def chk_inf(beta):
        def fn(u):
            x = math.exp(u)
            return (1 - R) * math.log((1 + x) ** d - d * x) - beta * u
        return minimize_scalar(fn, bounds=(-30, 30), method="bounded", options={"xatol": 1e-12}).fun

    def total(beta):
        hb = -(beta / gamma) * math.log2(beta / gamma) - (1 - beta / gamma) * math.log2(1 - beta / gamma)
        return (var_inf(beta) + chk_inf(beta)) / math.log(2) - gamma * hb

    if deg.min() == deg.max():
        # one variable degree pins the edge count: beta = alpha * degree
        return total(alpha * deg[0])
    lo, hi = alpha * deg.min() + 1e-6, min(alpha * deg.max(), gamma) - 1e-6
    grid = np.linspace(lo, hi, betas)
    vals = [total(b) for b in grid]
    k = int(np.argmax(vals))
    res = minimize_scalar(lambda b: -total(b), bounds=(grid[max(k - 1, 0)], grid[min(k + 1, betas - 1)]),
                          method="bounded", options={"xatol": 1e-10})
    return max(-res.fun, vals[k])


@pytest.mark.parametrize("ed,alpha", [
    (EdgeDistribution.regular(3, 6), 0.2),
    (EdgeDistribution.regular(3, 6), 0.5),
    (EdgeDistribution({2: 0.5, 3: 0.5}, {6: 1.0}), 0.3),
])
def test_f_alpha_matches_oracle(ed, alpha):
    ctx = BoundContext(0.0, 0.0, 0.0, ed)
    assert f_alpha(ctx, alpha) == pytest.approx(f_oracle(ed, alpha, betas=120), abs=1e-4)


def test_f_alpha_frozen():
    ctx = BoundContext(0.0, 0.0, 0.0, EdgeDistribution.regular(3, 6))
    assert f_alpha(ctx, 0.2) == pytest.approx(0.3575896874333271, abs=1e-9)


def test_f_alpha_continuity():
    ctx = BoundContext(0.0, 0.0, 0.0, EdgeDistribution.regular(3, 6))
    vals = [f_alpha(ctx, a) for a in np.arange(0.01, 0.955, 0.01)]
    assert max(abs(np.diff(vals))) < 5e-2
    # close to alpha = 1 the slope is entropy-like and steep, but the
    # jump still halves with the step, as it must for a continuous curve
    j1 = abs(f_alpha(ctx, 0.99) - f_alpha(ctx, 0.98))
    j2 = abs(f_alpha(ctx, 0.99) - f_alpha(ctx, 0.985))
    assert j2 == pytest.approx(j1 / 2, rel=0.2)


def test_f_alpha_cycle_heavy_large_sets():
    ctx = BoundContext(0.0, 0.0, 0.0, EdgeDistribution.regular(2, 3))
    assert f_alpha(ctx, 0.95) >= 0.0


def test_f_alpha_bounds_stopping_set_counts():
    from badcodes.ensemble import enumerate_stopping_sets, sample_graph

    ed = EdgeDistribution.regular(3, 6)
    ctx = BoundContext(0.0, 0.0, 0.0, ed)
    n, graphs = 15, 120
    tot = np.zeros(n + 1)
    for r in spawn_streams(11, graphs):
        c = enumerate_stopping_sets(sample_graph(ed, n, r), n)
        tot += [c[s] for s in range(n + 1)]
    slack = math.log2(n + 1) / n
    for s in (3, 6):
        assert math.log2(tot[s] / graphs) / n <= f_alpha(ctx, s / n) + slack


# ---- I+ and the solver ------------------------------------------------------


def test_i_plus_parts_formula(relay_ctx):
    ctx = relay_ctx
    i1, i2 = i_plus_parts(ctx, 0.2)
    a = A_term(ctx, 0.2)
    assert i1 == pytest.approx(a + h2(circ(ctx.delta2_bp, 0.2)))
    assert i2 == pytest.approx(a + ctx.f_at_bp + (1 - ctx.delta2_bp) * h2(0.2))


@settings(max_examples=30, deadline=None)
@given(st.floats(0.0, 1.0), st.floats(0.0, 1.0))
def test_i_plus_non_increasing(a, b):
    ctx = BoundContext.from_ensemble(RELAY_ENSEMBLE, 0.5, 0.82)
    lo, hi = min(a, b), max(a, b)
    assert i_plus(ctx, hi) <= i_plus(ctx, lo) + 1e-12
    assert i_plus(ctx, lo) <= min(i_plus_parts(ctx, lo)) + 1e-12


def test_relay_context_frozen(relay_ctx):
    assert relay_ctx.delta2_bp == pytest.approx(0.3015591747218257, abs=1e-12)
    assert i_plus(relay_ctx, 0.0) == pytest.approx(1.2638846117772855, abs=1e-9)
    assert min_quantization_noise(relay_ctx, 0.9) == pytest.approx(0.21761306359970672, abs=1e-6)


def test_min_quantization_noise_edges(relay_ctx):
    assert min_quantization_noise(relay_ctx, 0.0) == 1.0
    assert min_quantization_noise(relay_ctx, i_plus(relay_ctx, 0.0) + 1e-9) == 0.0
    with pytest.raises(ValueError):
        min_quantization_noise(relay_ctx, -0.1)


def test_min_dhat2_on_linear():
    assert min_dhat2(lambda x: 1.0 - x, 0.25) == pytest.approx(0.75, abs=1e-6)
