import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from badcodes.density_evolution import (
    capacity_gap, de_bec, de_threshold, pair_gamma, pair_init, pair_odot, pair_oplus, sim_de,
)
from badcodes.ensemble import RELAY_ENSEMBLE, EdgeDistribution, design_rate, node_fractions

# pair-density coordinates: index 2*a + b with a, b in {0 (known), 1 (erased)}
P00, P0E, PE0, PEE = np.eye(4)
R36 = EdgeDistribution.regular(3, 6)


def reference_recursion(ed, delta, t):
    """Plain erasure-probability recursion written out degree by degree."""
    lam, rho, lt = ed.lam_dict, ed.rho_dict, node_fractions(ed)
    x = delta
    for _ in range(t - 1):
        y = 1 - sum(f * (1 - x) ** (j - 1) for j, f in rho.items())
        x = delta * sum(f * y ** (i - 1) for i, f in lam.items())
    y = 1 - sum(f * (1 - x) ** (j - 1) for j, f in rho.items())
    return delta * sum(f * y ** i for i, f in lt.items())


@pytest.mark.parametrize("ed,delta", [(R36, 0.4), (RELAY_ENSEMBLE, 0.5), (R36, 0.45)])
@pytest.mark.parametrize("t", [1, 2, 7, 40])
def test_de_bec_matches_reference(ed, delta, t):
    assert de_bec(ed, delta, t=t, tol=0).final_bit_erasure == pytest.approx(
        reference_recursion(ed, delta, t), rel=1e-12, abs=1e-15)


def test_de_bec_zero():
    r = de_bec(R36, 0.0)
    assert all(x == 0 for x in r.per_iteration) and r.final_bit_erasure == 0


def test_threshold_bracket():
    assert de_bec(R36, 0.42, t=500).final_bit_erasure < 1e-6
    assert de_bec(R36, 0.44, t=500).final_bit_erasure > 1e-2


def test_thresholds():
    assert de_threshold(R36) == pytest.approx(0.4294, abs=1e-3)
    assert de_threshold(EdgeDistribution.regular(2, 3)) == pytest.approx(0.5, abs=1e-3)
    assert de_threshold(R36) <= 1 - design_rate(R36)
    assert capacity_gap(R36, 0.4294) == pytest.approx(0.0706, abs=1e-4)


def test_relay_fixed_point():
    assert de_bec(RELAY_ENSEMBLE, 0.5).final_bit_erasure == pytest.approx(0.3016, abs=2e-3)


def test_pair_init():
    assert np.allclose(pair_init(0, 0), P00)
    assert np.allclose(pair_init(1, 1), PEE)
    assert pair_init(0.5, 0.82)[3] == pytest.approx(0.41)


def test_pair_odot_units():
    b = pair_init(0.3, 0.6)
    assert np.allclose(pair_odot(P00, b), P00)
    assert np.allclose(pair_odot(PEE, b), b)
    q = 0.37
    a = (1 - q) * P00 + q * PEE
    assert pair_odot(a, a)[3] == pytest.approx(q * q)


@given(st.floats(0, 1), st.floats(0, 1), st.floats(0, 1), st.floats(0, 1))
def test_pair_oplus_composes_marginals(a2, a3, b2, b3):
    from badcodes.erasure import circ

    out = pair_oplus(pair_init(a2, a3), pair_init(b2, b3))
    assert np.allclose(pair_oplus(pair_init(a2, a3), P00), pair_init(a2, a3))
    assert np.allclose(pair_oplus(pair_init(a2, a3), PEE), PEE)
    assert out[2] + out[3] == pytest.approx(circ(a2, b2), abs=1e-12)
    assert out[1] + out[3] == pytest.approx(circ(a3, b3), abs=1e-12)


def test_pair_gamma_examples():
    p = pair_init(0.4, 0.7)
    full = pair_gamma(p, 1.0)
    assert full[1] + full[3] == pytest.approx(p[1] + p[3])
    zero = pair_gamma(p, 0.0)
    assert zero[1] + zero[3] == pytest.approx(p[3])
    out = pair_gamma(P0E, 0.3)
    assert out[0] == pytest.approx(0.7) and out[1] == pytest.approx(0.3)


@pytest.mark.parametrize("ed", [R36, RELAY_ENSEMBLE])
@pytest.mark.parametrize("d2,d3", [(0.5, 0.82), (0.3, 0.45)])
def test_sim_de_reductions(ed, d2, d3):
    t = 60
    relayless = sim_de(ed, d2, d3, 1.0, t=t, tol=0).final_bit_erasure
    assert relayless == pytest.approx(de_bec(ed, d3, t=t, tol=0).final_bit_erasure, abs=1e-12)
    for dh in (0.2, 0.6):
        perfect = sim_de(ed, 0.0, d3, dh, t=t, tol=0).final_bit_erasure
        assert perfect == pytest.approx(de_bec(ed, dh * d3, t=t, tol=0).final_bit_erasure, abs=1e-12)


def test_sim_de_headline():
    r = sim_de(RELAY_ENSEMBLE, 0.5, 0.82, 0.212)
    assert r.final_bit_erasure <= 1.54e-5
    # frozen value of this implementation
    assert r.final_bit_erasure == pytest.approx(3.953122800103248e-06, rel=1e-9)


def test_sim_de_singletons_mix_back():
    degs = [2, 3, 5, 40]
    r = sim_de(RELAY_ENSEMBLE, 0.5, 0.82, 0.212, t=30, keep_singletons=True, extra_degrees=degs)
    lam = RELAY_ENSEMBLE.lam_dict
    for traj, singles in zip(r.per_iteration, r.singletons):
        d = dict(singles)
        assert set(degs) <= set(d)
        mix = sum(f * d[i] for i, f in lam.items())
        assert np.allclose(mix, traj, atol=1e-12)


def test_bad_arguments():
    with pytest.raises(ValueError):
        de_bec(R36, 1.5)
    with pytest.raises(ValueError):
        sim_de(R36, 0.5, 0.5, 0.2, t=0)
