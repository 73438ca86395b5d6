import numpy as np
import pytest
from hypothesis import given, strategies as st

from badcodes.erasure import (
    E, ErasureConflict, circ, erasure_add, erasure_mul, erasure_rate, is_degraded,
    make_stream, noise_word, sample_bec, spawn_streams, to_str, word,
)

sym = st.sampled_from([0, 1, E])
prob = st.floats(0.0, 1.0, allow_nan=False)


def test_word_parsing_roundtrip():
    w = word("01e0")
    assert to_str(w) == "01e0"
    assert not w.flags.writeable
    with pytest.raises(ValueError):
        word("01x")
    with pytest.raises(ValueError):
        word("")


@pytest.mark.parametrize("a,b,out", [(E, 0, E), (1, 1, 0), (0, 1, 1), (E, E, E)])
def test_add_table(a, b, out):
    assert erasure_add(a, b) == out


@pytest.mark.parametrize("a,b,out", [(E, 1, 1), (E, E, E), (0, 0, 0), (1, E, 1)])
def test_mul_table(a, b, out):
    assert erasure_mul(a, b) == out


def test_mul_conflict():
    with pytest.raises(ErasureConflict):
        erasure_mul(0, 1)


@given(sym, sym, sym)
def test_add_commutative_associative(a, b, c):
    assert erasure_add(a, b) == erasure_add(b, a)
    assert erasure_add(erasure_add(a, b), c) == erasure_add(a, erasure_add(b, c))


@given(sym, sym)
def test_mul_commutative_when_defined(a, b):
    if a != E and b != E and a != b:
        return
    assert erasure_mul(a, b) == erasure_mul(b, a)


def test_circ_examples():
    assert circ(0.5, 0.212) == pytest.approx(0.606)
    assert circ(0.3, 0.0) == 0.3
    assert circ(0.3, 1.0) == 1.0
    with pytest.raises(ValueError):
        circ(1.2, 0.1)


@given(prob, prob)
def test_circ_matches_composed_channels(a, b):
    # surviving both channels is the product of survivals
    assert 1.0 - circ(a, b) == pytest.approx((1.0 - a) * (1.0 - b), abs=1e-12)
    assert circ(a, b) == pytest.approx(circ(b, a), abs=1e-12)


def test_erasure_rate():
    assert erasure_rate(word("ee01")) == 0.5
    assert erasure_rate(word("000")) == 0.0
    assert erasure_rate(word("eee")) == 1.0


def test_degradedness_examples():
    assert is_degraded(word("ee0"), word("e00"))
    assert not is_degraded(word("0e"), word("ee"))
    w = word("0e1")
    assert is_degraded(w, w)


@given(st.lists(sym, min_size=1, max_size=30), st.lists(sym, min_size=1, max_size=30))
def test_adding_noise_degrades(x, noise):
    n = min(len(x), len(noise))
    x, noise = np.array(x[:n], np.uint8), np.array(noise[:n], np.uint8)
    assert is_degraded(erasure_add(x, noise), x)


def test_bec_edges(rng):
    x = np.zeros(50, np.uint8)
    assert np.array_equal(sample_bec(x, 0.0, rng), x)
    assert np.all(sample_bec(x, 1.0, rng) == E)


def test_bec_concentration(rng):
    # Hoeffding: P(|rate - 0.5| > 0.01) <= 2 exp(-2 n 1e-4) ~ 4e-9 at n = 1e5
    rate = erasure_rate(noise_word(100_000, 0.5, rng))
    assert 0.49 <= rate <= 0.51


def test_streams_reproducible():
    a = make_stream(7).random(5)
    b = make_stream(7).random(5)
    assert np.array_equal(a, b)
    s1 = [g.random() for g in spawn_streams(3, 4)]
    s2 = [g.random() for g in spawn_streams(3, 4)]
    assert s1 == s2 and len(set(s1)) == 4
