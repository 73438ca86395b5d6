"""Upper bounds on the rate needed to forward a BP-decoded relay estimate.

All quantities are in bits per channel use and drop the o(1) terms of
their finite-n versions, so they are asymptotic formulas.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .density_evolution import de_bec
from .ensemble import EdgeDistribution, design_rate, node_fractions
from .erasure import _check_prob, circ

LN2 = math.log(2.0)
GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
BETA_CLAMP = 1e-9
LDF_GRID = 1024
ASYMPTOTIC = "asymptotic formula (o(1) dropped)"


class OptimizerError(RuntimeError):
    """Raised when an inner minimization runs out of budget."""

    def __init__(self, msg: str, best=None):
        super().__init__(msg)
        self.best = best


def h2(p) -> float:
    """Binary entropy in bits, with h(0) = h(1) = 0."""
    p = float(p)
    if p <= 0.0 or p >= 1.0:
        return 0.0
    return -p * math.log2(p) - (1.0 - p) * math.log2(1.0 - p)


def golden_min(fn, lo: float, hi: float, tol: float = 1e-9, budget: int = 10_000):
    """Minimize a unimodal function on [lo, hi]; returns (x, f(x), evaluations)."""
    a, b = lo, hi
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = fn(c), fn(d)
    evals = 2
    while b - a > tol:
        if evals >= budget:
            x = c if fc < fd else d
            raise OptimizerError("golden-section budget exhausted", best=(x, min(fc, fd)))
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = fn(d)
        evals += 1
    x = 0.5 * (a + b)
    return x, fn(x), evals + 1


@dataclass(frozen=True)
class BoundContext:
    """Relay link parameters plus the relay BP erasure rate of the ensemble."""

    delta2: float
    delta3: float
    delta2_bp: float
    ensemble: EdgeDistribution
    notes: tuple = field(default=(ASYMPTOTIC,), compare=False)

    def __post_init__(self):
        _check_prob(self.delta2, "delta2")
        _check_prob(self.delta3, "delta3")
        if not 0.0 <= self.delta2_bp <= self.delta2 + 1e-12:
            raise ValueError("delta2_bp must lie in [0, delta2]")
        if self.d < 2:
            raise ValueError("right degree must be >= 2")

    @classmethod
    def from_ensemble(cls, ed: EdgeDistribution, delta2: float, delta3: float,
                      t: int = 2000) -> "BoundContext":
        return cls(delta2, delta3, de_bec(ed, delta2, t=t).final_bit_erasure, ed)

    @property
    def d(self) -> int:
        return self.ensemble.right_degree

    @property
    def rate(self) -> float:
        return design_rate(self.ensemble)

    @cached_property
    def f_at_bp(self) -> float:
        return f_alpha(self, self.delta2_bp) if self.delta2_bp > 0 else 0.0


def _cf_expression(dd: float, d3: float, dh: float) -> float:
    c = circ(dd, dh)
    return h2(c) + (1.0 - c) * d3 - h2(dh) * (1.0 - dd)


def naive_bound(ctx: BoundContext, dhat2: float) -> float:
    return _cf_expression(ctx.delta2_bp, ctx.delta3, _check_prob(dhat2, "dhat2"))


def good_code_quantization_mi(delta2: float, delta3: float, dhat2: float) -> float:
    """Rate the relay needs with capacity-achieving codes at noise dhat2."""
    return _cf_expression(_check_prob(delta2, "delta2"), _check_prob(delta3, "delta3"),
                          _check_prob(dhat2, "dhat2"))


def pmap_good(delta: float, R: float) -> float:
    """Bitwise MAP erasure rate of a capacity-achieving sequence of rate R."""
    delta = _check_prob(delta)
    if delta == 1.0 - R:
        raise ValueError("undefined exactly at delta = 1 - R")
    return delta if delta > 1.0 - R else 0.0


def A_term(ctx: BoundContext, dhat2: float) -> float:
    dh = _check_prob(dhat2, "dhat2")
    d2, d3, dbp = ctx.delta2, ctx.delta3, ctx.delta2_bp
    inner = (1.0 - d2) + (d2 - dbp) * (1.0 - (1.0 - dh) ** (ctx.d - 1))
    return d3 * (1.0 - dh) * inner - (1.0 - dbp) * h2(dh)


# ---- stopping-set growth rate --------------------------------------------

def _log1pexp(z):
    return np.logaddexp(0.0, z)


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


class _VarTerm:
    """inf over (u, v) of sum_i lt_i log(1 + e^(u + i v)) - alpha u - beta v."""

    def __init__(self, degrees: np.ndarray, weights: np.ndarray, alpha: float):
        self.deg = degrees.astype(float)
        self.w = weights
        self.alpha = alpha

    def best_u(self, v: float) -> float:
        # d/du rises monotonically from 0 to 1: bisect to a narrow bracket,
        # then polish with Newton steps that stay inside it
        iv = self.deg * v
        lo, hi = -40.0 - iv.max(), 40.0 - iv.min()

        def g(u):
            return float(np.dot(self.w, _sigmoid(u + iv))) - self.alpha

        while hi - lo > 1e-3:
            mid = 0.5 * (lo + hi)
            if g(mid) > 0:
                hi = mid
            else:
                lo = mid
        u = 0.5 * (lo + hi)
        for _ in range(50):
            s = _sigmoid(u + iv)
            gu = float(np.dot(self.w, s)) - self.alpha
            if gu > 0:
                hi = u
            else:
                lo = u
            dg = float(np.dot(self.w, s * (1.0 - s)))
            nxt = u - gu / dg if dg > 0 else 0.5 * (lo + hi)
            if not lo <= nxt <= hi:
                nxt = 0.5 * (lo + hi)
            if abs(nxt - u) < 1e-13 * max(1.0, abs(u)):
                return nxt
            u = nxt
        return u

    def partial(self, v: float, beta: float) -> float:
        u = self.best_u(v)
        return float(np.dot(self.w, _log1pexp(u + self.deg * v))) - self.alpha * u - beta * v


def _check_log(u: float, d: int) -> float:
    """log((1 + x)^d - d x) at x = e^u."""
    if u > 0:
        lp = d * math.log1p(math.exp(-u)) + d * u  # log (1+x)^d
        return lp + math.log1p(-d * math.exp(u - lp))
    x = math.exp(u)
    return math.log1p(math.expm1(d * math.log1p(x)) - d * x)


def degree_sum_range(lt: dict[int, float], alpha: float) -> tuple[float, float]:
    """Smallest and largest edge count per n over node sets of size alpha*n.

    Outside this range no variable set of that size exists, so the
    variable-side infimum is minus infinity.
    """

    def fill(order):
        left, total = alpha, 0.0
        for deg in order:
            take = min(left, lt[deg])
            total += take * deg
            left -= take
        return total

    return fill(sorted(lt)), fill(sorted(lt, reverse=True))


V_RANGE = (-40.0, 10.0)
U_RANGE = (-40.0, 40.0)


def f_alpha(ctx: BoundContext, alpha: float, beta_grid: int = 64, tol: float = 1e-9) -> float:
    """Exponential growth rate (bits) of the expected number of stopping sets of size alpha*n."""
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    ed = ctx.ensemble
    d = ctx.d
    R = design_rate(ed)
    lt = node_fractions(ed)
    var = _VarTerm(np.array(list(lt)), np.array(list(lt.values())), alpha)
    gamma = ed.gamma

    def objective(beta: float) -> float:
        _, t1, _ = golden_min(lambda v: var.partial(v, beta), *V_RANGE, tol=tol)
        _, t2, _ = golden_min(lambda u: (1.0 - R) * _check_log(u, d) - beta * u, *U_RANGE, tol=tol)
        return (t1 + t2) / LN2 - gamma * h2(beta / gamma)

    b_lo, b_hi = degree_sum_range(lt, alpha)
    lo = max(BETA_CLAMP, b_lo + BETA_CLAMP)
    hi = min(gamma - BETA_CLAMP, b_hi - BETA_CLAMP)
    grid = np.linspace(lo, hi, beta_grid)
    vals = [objective(b) for b in grid]
    k = int(np.argmax(vals))
    a, b = grid[max(k - 1, 0)], grid[min(k + 1, beta_grid - 1)]
    _, neg, _ = golden_min(lambda bb: -objective(bb), a, b, tol=1e-7)
    return max(-neg, vals[k])


# ---- I+ and the quantization-noise solver --------------------------------

def i_plus_parts(ctx: BoundContext, dhat2: float) -> tuple[float, float]:
    a = A_term(ctx, dhat2)
    i1 = a + h2(circ(ctx.delta2_bp, dhat2))
    i2 = a + ctx.f_at_bp + (1.0 - ctx.delta2_bp) * h2(dhat2)
    return i1, i2


def _i_min(ctx: BoundContext, dhat2: float) -> float:
    return min(i_plus_parts(ctx, dhat2))


def _grid(ctx: BoundContext):
    key = "_ldf_grid"
    cached = ctx.__dict__.get(key)
    if cached is None:
        xs = np.linspace(0.0, 1.0, LDF_GRID)
        vals = np.array([_i_min(ctx, x) for x in xs])
        cached = (xs, vals, np.minimum.accumulate(vals))
        ctx.__dict__[key] = cached
    return cached


def i_plus(ctx: BoundContext, dhat2: float) -> float:
    """Largest non-increasing function below min(I1+, I2+), evaluated at dhat2."""
    dh = _check_prob(dhat2, "dhat2")
    xs, _, prefix = _grid(ctx)
    k = int(np.searchsorted(xs, dh, side="right")) - 1
    return float(min(prefix[k], _i_min(ctx, dh)))


def i_plus_curve(ctx: BoundContext, points=None) -> list[tuple[float, float, float, float, float]]:
    """Rows (dhat2, I+, I1+, I2+, naive) for export."""
    xs = np.linspace(0.0, 1.0, 101) if points is None else points
    rows = []
    for x in xs:
        i1, i2 = i_plus_parts(ctx, x)
        rows.append((float(x), i_plus(ctx, x), i1, i2, naive_bound(ctx, x)))
    return rows


def min_dhat2(fn, c_o: float, grid: int = LDF_GRID, tol: float = 1e-6) -> float:
    """Smallest dhat2 in [0, 1] with fn(dhat2) <= c_o, refined by bisection."""
    xs = np.linspace(0.0, 1.0, grid)
    prev = None
    for x in xs:
        if fn(x) <= c_o:
            if prev is None:
                return 0.0
            lo, hi = prev, x
            while hi - lo > tol:
                mid = 0.5 * (lo + hi)
                if fn(mid) <= c_o:
                    hi = mid
                else:
                    lo = mid
            return hi
        prev = x
    return 1.0


def min_quantization_noise(ctx: BoundContext, c_o: float) -> float:
    if c_o < 0:
        raise ValueError("c_o must be >= 0")
    if c_o == 0:
        return 1.0
    return min_dhat2(lambda x: i_plus(ctx, x), c_o)


def good_code_min_dhat2(delta2: float, delta3: float, c_o: float) -> float:
    """Quantization noise the capacity-achieving (CF) curve needs at link capacity c_o."""
    return min_dhat2(lambda x: good_code_quantization_mi(delta2, delta3, x), c_o)
