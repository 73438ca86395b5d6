"""Soft interference cancellation on the symmetric BIAWGN interference channel.

Destination 1 sees ``y = x1 + h*x2 + z``.  Its joint decoder runs belief
propagation on the primary and interference Tanner graphs in parallel and
couples them through one state node per channel use.  Variable node i of
each graph is wired to state node i, and paired nodes share a degree.

Density evolution is carried out on a quantized LLR alphabet.  Each graph
is conditioned on its own transmitted bit being +1.  The other user's bit
at the same state node is then uniform, which is what a random coset of
the other code produces.  Every density met along the way is symmetric,
``P(-l) = exp(-l) P(l)``, so check and state nodes act on magnitude laws
and the sign split is reinstated with a rule that keeps the symmetry
exact on the grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property, lru_cache

import numpy as np
from scipy.special import ndtr

from .ensemble import EdgeDistribution, TannerGraph, node_fractions, sample_graph
from .erasure import spawn_streams
from .rates import InterferenceParams

L_MAX = 30.0
HALF_BINS = 2048
OVERFLOW_MASS = 1e-3
Y_SPAN = 9.0          # state-node quadrature covers +-9 sigma around the means
ROLES = ("primary", "interference")


class GridOverflow(ArithmeticError):
    """Too much channel mass saturates the LLR grid."""


# ---------------------------------------------------------------------------
# channel and state node


def sample_interference_channel(x1, x2, p: InterferenceParams, rng: np.random.Generator) -> np.ndarray:
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    if x1.shape != x2.shape:
        raise ValueError("x1 and x2 must have equal lengths")
    if not (np.all(np.abs(x1) == 1.0) and np.all(np.abs(x2) == 1.0)):
        raise ValueError("inputs must be bipolar (+1/-1)")
    return x1 + p.h * x2 + p.sigma * rng.standard_normal(x1.shape)


def _logcosh(x):
    x = np.abs(x)
    return x + np.log1p(np.exp(-2.0 * x))


def _state_llr(y, m, a: float, b: float, s2: float):
    """LLR of a bit seen with gain ``a`` next to one seen with gain ``b``.

    ``m`` is the prior LLR of the other bit.  Infinite priors are handled
    in closed form (the interference is then known and subtracted).
    """
    y = np.asarray(y, dtype=float)
    m = np.asarray(m, dtype=float)
    y, m = np.broadcast_arrays(y, m)
    fin = np.isfinite(m)
    mf = np.where(fin, m, 0.0)
    out = 2.0 * a * y / s2 + _logcosh(0.5 * mf + b * (y - a) / s2) - _logcosh(0.5 * mf + b * (y + a) / s2)
    if not fin.all():
        known = 2.0 * a * (y - np.sign(m) * b) / s2
        out = np.where(fin, out, known)
    return out


def _gains(role: str, p: InterferenceParams) -> tuple[float, float]:
    if role == "primary":
        return 1.0, p.h
    if role == "interference":
        return p.h, 1.0
    raise ValueError(f"role must be one of {ROLES}")


def state_to_variable_llr(y, incoming_other, role: str, p: InterferenceParams):
    """Message from a state node to its ``role`` variable node.

    ``incoming_other`` is the variable-to-state LLR from the other graph.
    """
    a, b = _gains(role, p)
    return _state_llr(y, incoming_other, a, b, p.sigma ** 2)


# ---------------------------------------------------------------------------
# quantized densities


@dataclass(frozen=True)
class LlrGrid:
    """Bins at ``k * delta`` for ``|k| <= half_bins`` plus two saturation bins.

    Signed arrays have length ``2*half_bins + 3``: index 0 is -inf, index
    ``half_bins + 1`` is zero and the last index is +inf.  Magnitude arrays
    have length ``half_bins + 2`` with the last entry standing for inf.
    """

    half_bins: int = HALF_BINS
    l_max: float = L_MAX

    def __post_init__(self):
        if self.half_bins < 8 or not self.l_max > 0:
            raise ValueError("grid needs at least 8 half-bins and a positive range")

    @property
    def delta(self) -> float:
        return self.l_max / self.half_bins

    @property
    def size(self) -> int:
        return 2 * self.half_bins + 3

    @property
    def zero(self) -> int:
        return self.half_bins + 1

    @cached_property
    def values(self) -> np.ndarray:
        k = np.arange(-self.half_bins, self.half_bins + 1) * self.delta
        return np.r_[-np.inf, k, np.inf]

    @cached_property
    def magnitudes(self) -> np.ndarray:
        return np.r_[np.arange(self.half_bins + 1) * self.delta, np.inf]

    @cached_property
    def neg_share(self) -> np.ndarray:
        # fraction of a symmetric law at magnitude c that sits at -c
        e = np.exp(-self.magnitudes[:-1])
        s = e / (1.0 + e)
        s[0] = 0.0
        return np.r_[s, 0.0]


@dataclass
class LlrDensity:
    grid: LlrGrid
    mass: np.ndarray

    def __post_init__(self):
        self.mass = np.asarray(self.mass, dtype=float)
        if self.mass.shape != (self.grid.size,):
            raise ValueError("mass length does not match the grid")

    @classmethod
    def point(cls, grid: LlrGrid, value: float) -> LlrDensity:
        mass = np.zeros(grid.size)
        if math.isinf(value):
            mass[-1 if value > 0 else 0] = 1.0
        else:
            k = int(round(value / grid.delta))
            if abs(k) > grid.half_bins:
                raise ValueError("value lies beyond the grid; use +-inf")
            mass[grid.zero + k] = 1.0
        return cls(grid, mass)

    @classmethod
    def from_magnitudes(cls, grid: LlrGrid, q: np.ndarray) -> LlrDensity:
        K = grid.half_bins
        mass = np.zeros(grid.size)
        neg = q * grid.neg_share
        mass[grid.zero:grid.zero + K + 1] = q[:-1] - neg[:-1]
        mass[grid.zero - K:grid.zero][::-1] = neg[1:K + 1]
        mass[grid.zero] = q[0]
        mass[-1] = q[-1]
        return cls(grid, mass)

    def magnitudes(self) -> np.ndarray:
        K, z, m = self.grid.half_bins, self.grid.zero, self.mass
        q = np.empty(K + 2)
        q[0] = m[z]
        q[1:K + 1] = m[z + 1:z + K + 1] + m[z - K:z][::-1]
        q[-1] = m[0] + m[-1]
        return q

    def total(self) -> float:
        return float(self.mass.sum())

    def error_probability(self) -> float:
        """Mass below zero plus half the mass at zero."""
        z = self.grid.zero
        return float(self.mass[:z].sum() + 0.5 * self.mass[z])

    def symmetry_error(self) -> float:
        K, z, m = self.grid.half_bins, self.grid.zero, self.mass
        k = np.arange(1, K + 1)
        gap = m[z - k] - np.exp(-k * self.grid.delta) * m[z + k]
        return float(max(np.abs(gap).max(), m[0]))

    def expect(self, fn) -> float:
        # the -inf bin holds saturated mass below -l_max; evaluating fn
        # there would turn a 1e-15 rounding residue into an infinity
        vals = np.maximum(self.grid.values, -self.grid.l_max)
        w = self.mass > 0
        return float(np.dot(self.mass[w], fn(vals[w])))

    def bhattacharyya(self) -> float:
        return self.expect(lambda l: np.exp(-0.5 * l))


def phi_functional(d: LlrDensity) -> float:
    """E[log(1 + exp(-L))] in nats."""
    return d.expect(lambda l: np.logaddexp(0.0, -l))


# ---------------------------------------------------------------------------
# node operations


class _Ops:
    """Grid-specific tables shared by every run on the same grid."""

    def __init__(self, grid: LlrGrid):
        self.grid = grid
        K = grid.half_bins
        self.nfft = 1 << int(math.ceil(math.log2(4 * K + 1)))
        self._states: dict = {}

    @staticmethod
    def _phi(x):
        # -log tanh(x/2), an involution on [0, inf]
        with np.errstate(divide="ignore"):
            return np.log1p(np.exp(-x)) - np.log(-np.expm1(-x))

    def _deposit(self, c: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Lower magnitude bin and its weight for magnitudes ``c``.

        The split between bins k and k+1 is the one that keeps a symmetric
        pair of masses at +-c symmetric after it lands on the grid.
        """
        g = self.grid
        K, d = g.half_bins, g.delta
        sat = ~(c < K * d)
        cc = np.where(sat, 0.0, c)
        k = np.minimum(np.floor(cc / d).astype(np.int64), K - 1)
        lo, hi = k * d, (k + 1) * d
        w = (np.exp(-cc) - np.exp(-hi)) / (np.exp(-lo) - np.exp(-hi))
        w = np.clip(w, 0.0, 1.0)
        omega = w * (1.0 + np.exp(-lo)) / (1.0 + np.exp(-cc))
        omega = np.clip(omega, 0.0, 1.0)
        exact_top = np.isfinite(c) & (c >= K * d) & (c <= K * d * (1 + 1e-12))
        k = np.where(sat, K + 1, k)
        k = np.where(exact_top, K, k)
        omega = np.where(sat | exact_top, 1.0, omega)
        return k, omega

    def _spread(self, k, omega, weights, rows: int | None = None) -> np.ndarray:
        n = self.grid.half_bins + 3
        if rows is None:
            lo = np.bincount(k, weights * omega, minlength=n)
            hi = np.bincount(k + 1, weights * (1.0 - omega), minlength=n)
            out = lo + hi
            out[-2] += out[-1]       # spill from the inf bin is still inf
            return out[:-1]
        base = np.arange(rows)[:, None] * n
        lo = np.bincount((k + base).ravel(), (weights * omega).ravel(), minlength=rows * n)
        hi = np.bincount((k + 1 + base).ravel(), (weights * (1.0 - omega)).ravel(), minlength=rows * n)
        out = (lo + hi).reshape(rows, n)
        out[:, -2] += out[:, -1]
        return out[:, :-1]

    @cached_property
    def _check_table(self) -> tuple[np.ndarray, np.ndarray]:
        phi = self._phi(self.grid.magnitudes)
        c = self._phi(phi[:, None] + phi[None, :])
        k, omega = self._deposit(c.ravel())
        return k, omega

    def check_pair(self, p: np.ndarray, q: np.ndarray) -> np.ndarray:
        """Magnitude law of a degree-3 check output given two input laws."""
        k, omega = self._check_table
        return self._spread(k, omega, np.outer(p, q).ravel())

    def check(self, q: np.ndarray, rho: dict[int, float]) -> np.ndarray:
        memo = {1: q}

        def power(j):
            if j not in memo:
                memo[j] = self.check_pair(power(j // 2), power(j - j // 2))
            return memo[j]

        out = np.zeros_like(q)
        for j, r in rho.items():
            if j == 1:
                out[-1] += r            # a degree-1 check pins its bit
            else:
                out += r * power(j - 1)
        return out

    # signed convolution -------------------------------------------------

    def spectrum(self, d: np.ndarray) -> np.ndarray:
        return np.fft.rfft(d[1:-1], self.nfft)

    def conv(self, a: np.ndarray, b: np.ndarray, fa=None, fb=None) -> np.ndarray:
        K = self.grid.half_bins
        fa = self.spectrum(a) if fa is None else fa
        fb = self.spectrum(b) if fb is None else fb
        full = np.fft.irfft(fa * fb, self.nfft)[:4 * K + 1]
        np.maximum(full, 0.0, out=full)
        out = np.empty_like(a)
        out[1:-1] = full[K:3 * K + 1]
        fin_a, fin_b = a[1:-1].sum(), b[1:-1].sum()
        out[0] = full[:K].sum() + a[0] * (fin_b + b[0]) + fin_a * b[0]
        out[-1] = full[3 * K + 1:].sum() + a[-1] * (fin_b + b[-1]) + fin_a * b[-1]
        out[1 + K] += a[0] * b[-1] + a[-1] * b[0]
        return out / out.sum()

    # state node ---------------------------------------------------------

    def state_kernel(self, a: float, b: float, sigma: float) -> np.ndarray:
        """Row mu: magnitude law of the state output when |incoming| = mu."""
        key = (round(a, 15), round(b, 15), round(sigma, 15))
        if key not in self._states:
            self._states[key] = self._build_state(a, b, sigma)
        return self._states[key]

    def _build_state(self, a: float, b: float, sigma: float) -> np.ndarray:
        g = self.grid
        s2 = sigma * sigma
        slope = 2.0 * (a + b) / s2
        dy = min(g.delta / max(slope, 1e-12), sigma / 64.0)
        lo, hi = a - b - Y_SPAN * sigma, a + b + Y_SPAN * sigma
        edges = np.arange(math.floor(lo / dy), math.ceil(hi / dy) + 1) * dy
        mid = 0.5 * (edges[1:] + edges[:-1])
        cell_p = np.diff(ndtr((edges - (a + b)) / sigma))   # other bit agrees
        cell_m = np.diff(ndtr((edges - (a - b)) / sigma))   # other bit differs
        mu = g.magnitudes
        e = np.exp(-mu[:-1])
        post = np.r_[1.0 / (1.0 + e), 1.0]     # P(incoming has the right sign)
        rows = []
        chunk = max(1, 2_000_000 // mid.size)
        for s in range(0, mu.size, chunk):
            m = mu[s:s + chunk, None]
            pr = post[s:s + chunk, None]
            # Other bit agrees with its message: m>0 at y ~ a+b, m<0 at y ~ a-b.
            l_pos = np.abs(_state_llr(mid[None, :], m, a, b, s2))
            l_neg = np.abs(_state_llr(mid[None, :], -m, a, b, s2))
            w_pos = 0.5 * (pr * cell_p + (1.0 - pr) * cell_m)
            w_neg = 0.5 * (pr * cell_m + (1.0 - pr) * cell_p)
            k1, o1 = self._deposit(l_pos)
            k2, o2 = self._deposit(l_neg)
            n = m.shape[0]
            rows.append(self._spread(k1, o1, w_pos, n) + self._spread(k2, o2, w_neg, n))
        kern = np.vstack(rows)
        kern /= kern.sum(axis=1, keepdims=True)
        sat = float(kern[:, -1].max())
        if sat > OVERFLOW_MASS:
            raise GridOverflow(
                f"{sat:.2e} of the channel mass saturates at |L| = {g.l_max}; raise l_max")
        return kern


@lru_cache(maxsize=4)
def _ops(grid: LlrGrid) -> _Ops:
    return _Ops(grid)


# ---------------------------------------------------------------------------
# density evolution


@dataclass
class IcDeResult:
    primary_ber: list
    interference_ber: list
    iterations: int
    converged: bool
    frozen_at: int | None = None
    decision: tuple | None = None
    # per-iteration functionals for the optimizer, keyed by graph (1, 2)
    s: dict = field(default_factory=dict)
    s_deg: dict = field(default_factory=dict)
    s_tilde: dict = field(default_factory=dict)
    s_tilde_deg: dict = field(default_factory=dict)
    bhattacharyya_deg2: float | None = None
    max_symmetry_error: float = 0.0

    def to_csv_rows(self) -> list[tuple]:
        return [(i + 1, p, q) for i, (p, q) in enumerate(zip(self.primary_ber, self.interference_ber))]


class _Graph:
    """Evolving state of one Tanner graph."""

    def __init__(self, ops: _Ops, ed: EdgeDistribution, extra=()):
        self.ops = ops
        self.lam = ed.lam_dict
        self.degs = sorted(set(self.lam) | {int(i) for i in extra})
        self.rho = ed.rho_dict
        self.frac = node_fractions(ed)
        self.left = LlrDensity.point(ops.grid, 0.0).mass
        self.frozen = False
        self.last_s = math.inf
        self._powers()

    def _powers(self):
        ops = self.ops
        memo = {1: (self.left, ops.spectrum(self.left))}

        def power(k):
            if k not in memo:
                (a, fa), (b, fb) = power(k // 2), power(k - k // 2)
                c = ops.conv(a, b, fa, fb)
                memo[k] = (c, ops.spectrum(c))
            return memo[k]

        for i in self.degs:
            power(i)
            if i > 1:
                power(i - 1)
        self.pw = memo

    def to_state(self) -> dict[int, np.ndarray]:
        return {i: self.pw[i][0] for i in self.degs}


def soft_ic_de(ed: EdgeDistribution, p: InterferenceParams, t: int = 1000,
               grid: LlrGrid | None = None, tol: float = 0.0,
               freeze_interference_below: float | None = None,
               keep_functionals: bool = False, check_symmetry: bool = False,
               extra_degrees=()) -> IcDeResult:
    """Quantized density evolution of soft-IC-BP at destination 1.

    One iteration is variable-to-state, state-to-variable, rightbound and
    leftbound on both graphs in parallel.  The state density entering a
    degree-i node mixes over the other graph's degree-i variable-to-state
    law.  Stops after ``t`` iterations, or earlier once neither BER moves
    by more than ``tol``.  With ``freeze_interference_below`` set, the
    interference graph stops updating once the log-loss functional of its
    rightbound law drops below the threshold.

    ``keep_functionals`` records the log-loss functionals of the rightbound
    and variable-to-state laws per iteration, overall and per degree; the
    per-degree ones also cover ``extra_degrees``.
    """
    if t < 1:
        raise ValueError("t must be positive")
    grid = grid or LlrGrid()
    ops = _ops(grid)
    kern = {1: ops.state_kernel(*_gains("primary", p), p.sigma),
            2: ops.state_kernel(*_gains("interference", p), p.sigma)}
    extra = extra_degrees if keep_functionals else ()
    gs = {1: _Graph(ops, ed, extra), 2: _Graph(ops, ed, extra)}
    res = IcDeResult([], [], 0, False)
    if keep_functionals:
        for key in (1, 2):
            for store in (res.s, res.s_deg, res.s_tilde, res.s_tilde_deg):
                store[key] = []
    sym = (lambda m: LlrDensity(grid, m).symmetry_error()) if check_symmetry else (lambda m: 0.0)
    v2s = {k: g.to_state() for k, g in gs.items()}
    state, dec = {}, {}
    for it in range(t):
        for key, other in ((1, 2), (2, 1)):
            if not gs[key].frozen:
                state[key] = {i: LlrDensity.from_magnitudes(
                    grid, LlrDensity(grid, v2s[other][i]).magnitudes() @ kern[key]).mass
                    for i in gs[key].degs}
        for key in (1, 2):
            g = gs[key]
            if not g.frozen:
                right_deg = {i: state[key][i] if i == 1 else
                             ops.conv(state[key][i], g.pw[i - 1][0], fb=g.pw[i - 1][1])
                             for i in g.degs}
                right = sum(g.lam[i] * right_deg[i] for i in g.lam)
                res.max_symmetry_error = max(res.max_symmetry_error, sym(right))
                g.last_s = _phi_mass(grid, right)
                if keep_functionals:
                    _record(res, key, g, grid, right_deg, v2s[key])
                if key == 1 and 2 in g.lam:
                    res.bhattacharyya_deg2 = LlrDensity(grid, state[1][2]).bhattacharyya()
                q = ops.check(LlrDensity(grid, right).magnitudes(), g.rho)
                g.left = LlrDensity.from_magnitudes(grid, q).mass
                g._powers()
                dec[key] = sum(g.frac[i] * ops.conv(state[key][i], g.pw[i][0], fb=g.pw[i][1])
                               for i in g.lam)
                res.max_symmetry_error = max(res.max_symmetry_error, sym(dec[key]))
            elif keep_functionals:
                for store in (res.s, res.s_deg, res.s_tilde, res.s_tilde_deg):
                    store[key].append(store[key][-1])
        for key in (1, 2):
            if not gs[key].frozen:
                v2s[key] = gs[key].to_state()
        res.primary_ber.append(LlrDensity(grid, dec[1]).error_probability())
        res.interference_ber.append(LlrDensity(grid, dec[2]).error_probability())
        res.iterations = it + 1
        if (freeze_interference_below is not None and not gs[2].frozen
                and gs[2].last_s < freeze_interference_below):
            gs[2].frozen = True
            res.frozen_at = it + 1
        if it > 0 and tol > 0:
            d1 = abs(res.primary_ber[-1] - res.primary_ber[-2])
            d2 = abs(res.interference_ber[-1] - res.interference_ber[-2])
            if d1 <= tol and d2 <= tol:
                res.converged = True
                break
    res.decision = (LlrDensity(grid, dec[1]), LlrDensity(grid, dec[2]))
    return res


def _phi_mass(grid: LlrGrid, mass: np.ndarray) -> float:
    return phi_functional(LlrDensity(grid, mass))


def _record(res: IcDeResult, key: int, g: _Graph, grid: LlrGrid, right_deg, v2s_deg):
    s_deg = {i: _phi_mass(grid, d) for i, d in right_deg.items()}
    st_deg = {i: _phi_mass(grid, d) for i, d in v2s_deg.items()}
    res.s[key].append(sum(g.lam[i] * s_deg[i] for i in g.lam))
    res.s_deg[key].append(s_deg)
    res.s_tilde[key].append(sum(g.frac[i] * st_deg[i] for i in g.lam))
    res.s_tilde_deg[key].append(st_deg)


# ---------------------------------------------------------------------------
# Monte-Carlo decoder


@dataclass(frozen=True)
class FactorGraphPair:
    """Primary and interference Tanner graphs paired index by index."""

    primary: TannerGraph
    interference: TannerGraph

    def __post_init__(self):
        if self.primary.n != self.interference.n:
            raise ValueError("paired graphs must share the block length")
        if not np.array_equal(self.primary.var_degrees(), self.interference.var_degrees()):
            raise ValueError("paired variable nodes must have equal degrees")

    @property
    def n(self) -> int:
        return self.primary.n

    @classmethod
    def sample(cls, ed: EdgeDistribution, n: int, rng: np.random.Generator) -> FactorGraphPair:
        # sample_graph lays out variable degrees in a fixed order, so two
        # draws are automatically paired degree for degree
        a, b = rng.spawn(2)
        return cls(sample_graph(ed, n, a), sample_graph(ed, n, b))


MSG_CAP = 60.0


def _phi_msg(x):
    x = np.clip(x, 1e-15, MSG_CAP)
    return np.log1p(np.exp(-x)) - np.log(-np.expm1(-x))


class _SumProduct:
    def __init__(self, g: TannerGraph, syndrome=None):
        self.g = g
        self.var = g.edge_var
        self.chk = g.edge_chk
        flip = np.zeros(g.m, dtype=np.int64) if syndrome is None else np.asarray(syndrome, dtype=np.int64) % 2
        self.flip = flip
        self.left = np.zeros(g.num_edges)

    def var_sums(self) -> np.ndarray:
        return np.bincount(self.var, self.left, minlength=self.g.n)

    def iterate(self, state_msg: np.ndarray, sums: np.ndarray):
        right = state_msg[self.var] + sums[self.var] - self.left
        mag = _phi_msg(np.abs(right))
        neg = right < 0
        tot = np.bincount(self.chk, mag, minlength=self.g.m)
        par = (np.bincount(self.chk, neg, minlength=self.g.m).astype(np.int64) + self.flip) % 2
        out = _phi_msg(np.maximum(tot[self.chk] - mag, 1e-300))
        sign = 1 - 2 * ((par[self.chk] + neg) % 2)
        self.left = np.clip(sign * out, -MSG_CAP, MSG_CAP)


@dataclass
class IcBpResult:
    primary_llr: np.ndarray
    interference_llr: np.ndarray
    ber_trace: list = field(default_factory=list)

    @property
    def decisions(self) -> np.ndarray:
        return np.sign(self.primary_llr).astype(np.int8)


def _ber(llr: np.ndarray, x: np.ndarray) -> float:
    s = llr * x
    return float(np.mean(s < 0) + 0.5 * np.mean(s == 0))


def soft_ic_bp(fg: FactorGraphPair, y, p: InterferenceParams, t: int,
               syndromes=(None, None), truth=None) -> IcBpResult:
    """Run ``t`` parallel soft-IC-BP iterations on the received word ``y``.

    ``syndromes`` turns either graph into a coset code: check c then
    expects the product of its bits to be ``(-1)**syndrome[c]``.  With
    ``truth = (x1, x2)`` the per-iteration bit error rates are traced.
    """
    y = np.asarray(y, dtype=float)
    if y.shape != (fg.n,):
        raise ValueError("received word length does not match the graphs")
    if t < 1:
        raise ValueError("t must be positive")
    dec = (_SumProduct(fg.primary, syndromes[0]), _SumProduct(fg.interference, syndromes[1]))
    trace = []
    for _ in range(t):
        sums = [d.var_sums() for d in dec]
        s1 = state_to_variable_llr(y, sums[1], "primary", p)
        s2 = state_to_variable_llr(y, sums[0], "interference", p)
        dec[0].iterate(s1, sums[0])
        dec[1].iterate(s2, sums[1])
        l1 = s1 + dec[0].var_sums()
        l2 = s2 + dec[1].var_sums()
        if truth is not None:
            trace.append((_ber(l1, truth[0]), _ber(l2, truth[1])))
    return IcBpResult(l1, l2, trace)


def coset_syndrome(g: TannerGraph, x) -> np.ndarray:
    """Parity pattern a bipolar word leaves on the checks of ``g``."""
    bits = (np.asarray(x) < 0).astype(np.int64)
    return np.bincount(g.edge_chk, bits[g.edge_var], minlength=g.m) % 2


@dataclass
class IcCampaign:
    """Mean BER per iteration with between-block standard errors."""

    primary_ber: np.ndarray
    interference_ber: np.ndarray
    primary_se: np.ndarray
    interference_se: np.ndarray
    trials: int
    n: int


def _ic_trial(ed, p, n, t, rng, random_interference):
    gr, wr, nr = rng.spawn(3)
    fg = FactorGraphPair.sample(ed, n, gr)
    x1 = np.ones(n)
    x2 = wr.choice([-1.0, 1.0], size=n) if random_interference else np.ones(n)
    y = sample_interference_channel(x1, x2, p, nr)
    res = soft_ic_bp(fg, y, p, t, syndromes=(None, coset_syndrome(fg.interference, x2)),
                     truth=(x1, x2))
    return np.array(res.ber_trace)


def run_ic_trials(ed: EdgeDistribution, p: InterferenceParams, n: int, t: int,
                  trials: int, seed: int = 0, threads: int | None = None,
                  random_interference: bool = True) -> IcCampaign:
    """Monte-Carlo BER trajectories of soft-IC-BP averaged over fresh graphs.

    The primary word is all +1.  The interference word is uniform and its
    code is shifted to the matching coset, the conditioning used by
    :func:`soft_ic_de`.
    """
    from concurrent.futures import ThreadPoolExecutor
    from .relay import default_threads

    if trials < 1:
        raise ValueError("trials must be positive")
    streams = spawn_streams(seed, trials)
    threads = threads or default_threads()
    with ThreadPoolExecutor(max_workers=threads) as pool:
        runs = list(pool.map(lambda r: _ic_trial(ed, p, n, t, r, random_interference), streams))
    arr = np.stack(runs)                       # trials x t x 2
    mean = arr.mean(axis=0)
    if trials > 1:
        # errors inside one block are correlated, so the spread across
        # blocks is the honest error bar
        se = arr.std(axis=0, ddof=1) / math.sqrt(trials)
    else:
        se = np.sqrt(np.clip(mean * (1 - mean), 0, None) / n)
    return IcCampaign(mean[:, 0], mean[:, 1], se[:, 0], se[:, 1], trials, n)


# ---------------------------------------------------------------------------
# bitwise benchmark


def bitwise_interference_ber(p: InterferenceParams, points: int = 20001) -> float:
    """Symbol-wise MAP error rate for x2 from y with x1 uniform and unknown."""
    if p.h == 0.0:
        return 0.5
    from scipy.optimize import brentq

    s2 = p.sigma ** 2
    llr = lambda y: float(_state_llr(y, 0.0, p.h, 1.0, s2))
    span = 1.0 + p.h + 14.0 * p.sigma
    ys = np.linspace(-span, span, points)
    ls = _state_llr(ys, 0.0, p.h, 1.0, s2)
    roots = [0.0]
    for j in np.flatnonzero(np.sign(ls[1:]) * np.sign(ls[:-1]) < 0):
        if ys[j] < 0.0 < ys[j + 1]:
            continue
        roots.append(brentq(llr, ys[j], ys[j + 1], xtol=1e-14))
    cuts = np.unique(np.r_[-np.inf, roots, np.inf])
    mids = np.clip(0.5 * (cuts[1:] + cuts[:-1]), -span, span)
    mids[0], mids[-1] = cuts[1] - 1.0, cuts[-2] + 1.0
    wrong = _state_llr(mids, 0.0, p.h, 1.0, s2) < 0
    err = 0.0
    for x1 in (1.0, -1.0):
        cdf = ndtr((cuts - (x1 + p.h)) / p.sigma)
        err += 0.5 * float(np.sum(np.diff(cdf)[wrong]))
    return err
