"""Erasure alphabet {0, 1, e} and the binary erasure channel.

Symbols are stored as ``uint8``: 0 and 1 are bits, ``E`` (= 2) is the
erasure.  Words are 1-d read-only ``uint8`` arrays.  Every function that
accepts scalars also accepts arrays and works elementwise.
"""

from __future__ import annotations

import numpy as np

E = 2
"""The erasure symbol."""

_CHARS = {"0": 0, "1": 1, "e": E}


class ErasureConflict(ArithmeticError):
    """Two revealed bits disagree inside an erasure product.

    Correct decoders never hit this; reaching it means a bug upstream.
    """


def make_stream(seed: int) -> np.random.Generator:
    """Counter-based random stream from an explicit 64-bit seed."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed))))


def spawn_streams(seed: int, count: int) -> list[np.random.Generator]:
    """Independent substreams, one per trial, derived from one seed."""
    children = np.random.SeedSequence(int(seed)).spawn(count)
    return [np.random.Generator(np.random.Philox(c)) for c in children]


def word(symbols) -> np.ndarray:
    """Build a read-only word from a string over {0,1,e} or a sequence."""
    if isinstance(symbols, str):
        try:
            arr = np.array([_CHARS[c] for c in symbols], dtype=np.uint8)
        except KeyError as exc:
            raise ValueError(f"bad erasure symbol {exc.args[0]!r}") from None
    else:
        arr = np.array(symbols, dtype=np.uint8).ravel()
        if arr.size and arr.max() > E:
            raise ValueError("symbols must be 0, 1 or 2 (erasure)")
    if arr.size == 0:
        raise ValueError("a word needs length n >= 1")
    arr.setflags(write=False)
    return arr


def to_str(w) -> str:
    return "".join("01e"[s] for s in np.asarray(w, dtype=np.uint8))


def erasure_add(a, b):
    """Modulo-2 sum; erasure is absorbing."""
    a = np.asarray(a, dtype=np.uint8)
    b = np.asarray(b, dtype=np.uint8)
    out = np.where((a == E) | (b == E), E, a ^ b).astype(np.uint8)
    return out[()] if out.ndim == 0 else out


def erasure_mul(a, b):
    """Combine two observations of the same bit; erasure is the identity.

    Raises ``ErasureConflict`` when two revealed bits disagree.
    """
    a = np.asarray(a, dtype=np.uint8)
    b = np.asarray(b, dtype=np.uint8)
    if np.any((a != E) & (b != E) & (a != b)):
        raise ErasureConflict("erasure product of disagreeing bits")
    out = np.where(a == E, b, a).astype(np.uint8)
    return out[()] if out.ndim == 0 else out


def _check_prob(d: float, name: str = "delta") -> float:
    d = float(d)
    if not 0.0 <= d <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {d}")
    return d


def circ(d1: float, d2: float) -> float:
    """Erasure probability of two cascaded erasure noises."""
    d1 = _check_prob(d1, "d1")
    d2 = _check_prob(d2, "d2")
    return d1 + d2 * (1.0 - d1)


def erasure_rate(w) -> float:
    w = np.asarray(w)
    if w.size == 0:
        raise ValueError("empty word")
    return float(np.count_nonzero(w == E)) / w.size


def is_degraded(y, x) -> bool:
    """True iff every erasure of ``x`` is also an erasure of ``y``."""
    y = np.asarray(y)
    x = np.asarray(x)
    if y.shape != x.shape:
        raise ValueError(f"length mismatch: {y.size} vs {x.size}")
    return bool(np.all((y == E) | (x != E)))


def erasure_mask(n: int, delta: float, rng: np.random.Generator) -> np.ndarray:
    """Boolean erasure pattern of a BEC(delta) over n uses."""
    delta = _check_prob(delta)
    return rng.random(n) < delta


def noise_word(n: int, delta: float, rng: np.random.Generator) -> np.ndarray:
    """Erasure noise as a word over {0, e}; add it to a codeword to erase."""
    w = np.where(erasure_mask(n, delta, rng), E, 0).astype(np.uint8)
    w.setflags(write=False)
    return w


def sample_bec(x, delta: float, rng: np.random.Generator) -> np.ndarray:
    x = np.asarray(x, dtype=np.uint8)
    if np.any(x == E):
        raise ValueError("channel input must not contain erasures")
    out = np.where(erasure_mask(x.size, delta, rng), E, x).astype(np.uint8)
    out.setflags(write=False)
    return out
