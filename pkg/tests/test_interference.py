import math

import numpy as np
import pytest
from scipy import integrate

from badcodes.ensemble import EdgeDistribution
from badcodes.interference import (
    FactorGraphPair, GridOverflow, LlrDensity, LlrGrid, _ops, bitwise_interference_ber, coset_syndrome,
    phi_functional, run_ic_trials, sample_interference_channel, soft_ic_bp, soft_ic_de,
    state_to_variable_llr,
)
from badcodes.rates import InterferenceParams

OP = InterferenceParams(0.839, 1.075)
SMALL = LlrGrid(half_bins=256, l_max=30.0)
R36 = EdgeDistribution.regular(3, 6)


def gaussian_density(grid, m):
    """Symmetric consistent Gaussian N(m, 2m) binned by magnitude."""
    mags = grid.magnitudes[:-1]
    d = grid.delta
    w = np.exp(-0.25 * (mags - m) ** 2 / m) + np.exp(-0.25 * (mags + m) ** 2 / m)
    w[0] *= 0.5
    q = np.r_[w, 0.0]
    return LlrDensity.from_magnitudes(grid, q / q.sum())


def sample_density(d: LlrDensity, size, rng):
    idx = rng.choice(d.grid.size, size=size, p=d.mass / d.mass.sum())
    return d.grid.values[idx]


def test_channel_statistics(rng):
    n = 200_000
    x1 = np.ones(n)
    x2 = -np.ones(n)
    y = sample_interference_channel(x1, x2, OP, rng)
    assert y.mean() == pytest.approx(1 - 0.839, abs=5 * OP.sigma / math.sqrt(n))
    assert y.var() == pytest.approx(OP.sigma ** 2, rel=2e-2)
    with pytest.raises(ValueError):
        sample_interference_channel([1, 0.5], [1, 1], OP, rng)
    with pytest.raises(ValueError):
        sample_interference_channel([1], [1, 1], OP, rng)


def test_state_llr_limits():
    s2 = OP.sigma ** 2
    y = np.linspace(-3, 3, 13)
    known = state_to_variable_llr(y, np.full(13, np.inf), "primary", OP)
    assert np.allclose(known, 2 * (y - OP.h) / s2)
    near = state_to_variable_llr(y, np.full(13, 40.0), "primary", OP)
    assert np.allclose(near, known, atol=1e-6)
    flat = state_to_variable_llr(y, np.zeros(13), "primary", InterferenceParams(0.0, OP.sigma))
    assert np.allclose(flat, 2 * y / s2)
    with pytest.raises(ValueError):
        state_to_variable_llr(y, y, "other", OP)


def test_state_llr_matches_bayes():
    # direct posterior with the other bit weighted by its prior
    p = OP
    y, m = 0.37, 1.3
    pr = 1 / (1 + math.exp(-m))
    g = lambda mean: math.exp(-0.5 * (y - mean) ** 2 / p.sigma ** 2)
    num = pr * g(1 + p.h) + (1 - pr) * g(1 - p.h)
    den = pr * g(-1 + p.h) + (1 - pr) * g(-1 - p.h)
    assert float(state_to_variable_llr(y, m, "primary", p)) == pytest.approx(math.log(num / den), abs=1e-12)


def test_phi_functional_examples():
    assert phi_functional(LlrDensity.point(SMALL, math.inf)) == 0.0
    assert phi_functional(LlrDensity.point(SMALL, 0.0)) == pytest.approx(math.log(2))
    c = 40 * SMALL.delta
    q = np.zeros(SMALL.half_bins + 2)
    q[40] = 1.0
    d = LlrDensity.from_magnitudes(SMALL, q)
    a, b = 1 / (1 + math.exp(-c)), 1 / (1 + math.exp(c))
    assert phi_functional(d) == pytest.approx(a * math.log1p(math.exp(-c)) + b * math.log1p(math.exp(c)))
    assert d.symmetry_error() < 1e-15


def test_grid_validation():
    with pytest.raises(ValueError):
        LlrGrid(half_bins=4)
    with pytest.raises(ValueError):
        LlrDensity(SMALL, np.zeros(5))
    with pytest.raises(ValueError):
        LlrDensity.point(SMALL, 1e3)


def test_check_node_against_sampling(rng):
    grid = LlrGrid(half_bins=1024)
    d = gaussian_density(grid, 2.5)
    out = LlrDensity.from_magnitudes(grid, _ops(grid).check(d.magnitudes(), {3: 1.0}))
    a, b = sample_density(d, 400_000, rng), sample_density(d, 400_000, rng)
    l = 2 * np.arctanh(np.tanh(a / 2) * np.tanh(b / 2))
    pe = np.mean(l < 0) + 0.5 * np.mean(l == 0)
    assert out.error_probability() == pytest.approx(pe, abs=3e-3)
    assert phi_functional(out) == pytest.approx(np.mean(np.logaddexp(0, -l)), abs=3e-3)
    assert out.symmetry_error() < 1e-12


@pytest.mark.parametrize("mu", [0.0, 2.0])
def test_state_kernel_against_sampling(rng, mu):
    grid = LlrGrid(half_bins=1024)
    ops = _ops(grid)
    kern = ops.state_kernel(1.0, OP.h, OP.sigma)
    k = int(round(mu / grid.delta))
    out = LlrDensity.from_magnitudes(grid, kern[k])
    n = 400_000
    x2 = rng.choice([-1.0, 1.0], n)
    y = sample_interference_channel(np.ones(n), x2, OP, rng)
    # incoming message about x2 has magnitude mu and the right sign w.p. 1/(1+e^-mu)
    right = rng.random(n) < 1 / (1 + math.exp(-k * grid.delta))
    m = np.where(right, x2, -x2) * k * grid.delta
    l = state_to_variable_llr(y, m, "primary", OP)
    assert out.error_probability() == pytest.approx(np.mean(l < 0), abs=3e-3)
    assert phi_functional(out) == pytest.approx(np.mean(np.logaddexp(0, -l)), abs=3e-3)


def test_grid_overflow():
    with pytest.raises(GridOverflow):
        _ops(LlrGrid(half_bins=64, l_max=2.0)).state_kernel(1.0, 0.5, 0.3)


def test_de_symmetry_over_long_runs():
    res = soft_ic_de(R36, OP, t=200, grid=SMALL, check_symmetry=True)
    assert res.iterations == 200
    assert res.max_symmetry_error <= 1e-6


def test_de_decoupled_without_cross_gain(rng):
    p = InterferenceParams(0.0, 0.9)
    res = soft_ic_de(R36, p, t=1, grid=LlrGrid(half_bins=1024))
    assert res.interference_ber[0] == pytest.approx(0.5, abs=1e-9)
    # one round of a p2p BIAWGN (3,6) decoder by sampling
    n = 400_000
    s2 = p.sigma ** 2
    ch = lambda size: 2 / s2 + 2 / math.sqrt(s2) * rng.standard_normal(size)
    t = np.prod(np.tanh(ch((3, 5, n)) / 2), axis=1)
    l = ch(n) + np.sum(2 * np.arctanh(np.clip(t, -1 + 1e-16, 1 - 1e-16)), axis=0)
    assert res.primary_ber[0] == pytest.approx(np.mean(l < 0), abs=2e-3)


def test_de_grid_refinement():
    coarse = soft_ic_de(R36, OP, t=6, grid=LlrGrid(half_bins=1024))
    fine = soft_ic_de(R36, OP, t=6)
    assert np.max(np.abs(np.subtract(coarse.primary_ber, fine.primary_ber))) < 2e-3


def test_monte_carlo_tracks_de():
    t = 6
    de = soft_ic_de(R36, OP, t=t)
    mc = run_ic_trials(R36, OP, n=20_000, t=t, trials=8, seed=3)
    for it in range(t):
        assert abs(mc.primary_ber[it] - de.primary_ber[it]) <= 4 * mc.primary_se[it] + 3e-3
        assert abs(mc.interference_ber[it] - de.interference_ber[it]) <= 4 * mc.interference_se[it] + 3e-3


def test_campaign_reproducible():
    a = run_ic_trials(R36, OP, n=600, t=3, trials=3, seed=5, threads=1)
    b = run_ic_trials(R36, OP, n=600, t=3, trials=3, seed=5, threads=3)
    assert np.array_equal(a.primary_ber, b.primary_ber)


def test_coset_decoding_noiseless(rng):
    fg = FactorGraphPair.sample(R36, 300, rng)
    x1 = np.ones(300)
    x2 = rng.choice([-1.0, 1.0], 300)
    p = InterferenceParams(0.5, 0.05)
    y = sample_interference_channel(x1, x2, p, rng)
    res = soft_ic_bp(fg, y, p, 5, syndromes=(None, coset_syndrome(fg.interference, x2)), truth=(x1, x2))
    assert res.ber_trace[-1] == (0.0, 0.0)
    assert np.all(res.decisions == 1)


def test_bitwise_ber_against_quadrature():
    p = OP
    f = lambda y, x2: 0.5 * sum(math.exp(-0.5 * ((y - x1 - p.h * x2) / p.sigma) ** 2)
                                for x1 in (1, -1)) / (p.sigma * math.sqrt(2 * math.pi))
    span = 2 + 14 * p.sigma
    ref = integrate.quad(lambda y: 0.5 * min(f(y, 1), f(y, -1)), -span, span, limit=500,
                         points=[0.0], epsabs=1e-13)[0]
    assert bitwise_interference_ber(p) == pytest.approx(ref, abs=1e-8)
    assert bitwise_interference_ber(p) == pytest.approx(0.3015, abs=1e-4)


def test_bitwise_ber_limits():
    assert bitwise_interference_ber(InterferenceParams(0.0, 1.0)) == 0.5
    assert bitwise_interference_ber(InterferenceParams(0.839, 0.02)) < 1e-9
