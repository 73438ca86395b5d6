"""Rate benchmarks for the erasure relay and the BIAWGN interference channel.

Expectations over Gaussian noise use a composite Gauss-Legendre rule whose
panels shrink with the noise level, expanding the finite input alphabet
exactly.  Rates are in
bits per channel use.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.special import logsumexp

from .bounds import good_code_quantization_mi, min_dhat2
from .erasure import circ
from .relay import RelayParams

QUAD_ORDER = 96
MIN_QUAD_ORDER = 16
CF_SCAN = 4096
LN2 = math.log(2.0)


@dataclass(frozen=True)
class InterferenceParams:
    """Symmetric two-user BIAWGN interference channel with cross gain h."""

    h: float
    sigma: float

    def __post_init__(self):
        if not 0.0 <= self.h < 1.0:
            raise ValueError("cross gain h must lie in [0, 1)")
        if not self.sigma > 0.0:
            raise ValueError("sigma must be positive")

    @property
    def snr(self) -> float:
        return 1.0 / self.sigma ** 2


@dataclass(frozen=True)
class RateReport:
    name: str
    value: float
    inputs: dict
    flags: tuple = field(default=())


Z_MAX = 13.0       # standard-normal mass beyond this is below 1e-38
PANEL_NODES = 16


@lru_cache(maxsize=None)
def _legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    return np.polynomial.legendre.leggauss(n)


def normal_nodes(order: int, feature: float = math.inf) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights approximating E[f(Z)] for Z standard normal.

    Composite Gauss-Legendre on [-Z_MAX, Z_MAX] with ``order // 16`` panels,
    subdivided further so no panel is wider than ``feature``, the distance
    from the real axis to the integrand's nearest complex singularity.
    Gauss-Hermite converges slowly once that distance is small.
    """
    if order < MIN_QUAD_ORDER:
        raise ValueError(f"quadrature order must be >= {MIN_QUAD_ORDER}")
    panels = max(order // PANEL_NODES, 1)
    width = 2 * Z_MAX / panels
    if feature < width:
        panels = int(math.ceil(2 * Z_MAX / feature))
    return _composite(panels)


@lru_cache(maxsize=64)
def _composite(panels: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = _legendre(PANEL_NODES)
    edges = np.linspace(-Z_MAX, Z_MAX, panels + 1)
    half = 0.5 * (edges[1:] - edges[:-1])
    mid = 0.5 * (edges[1:] + edges[:-1])
    z = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    wz = (half[:, None] * w[None, :]).ravel() * np.exp(-0.5 * z * z) / math.sqrt(2 * math.pi)
    return z, wz


def mixture_mi(points, probs, sigma: float, order: int = QUAD_ORDER) -> float:
    """I(X; X + sigma*Z) in bits for X on ``points`` with prior ``probs``.

    I = -sum_k p_k E_Z log2 sum_l p_l exp(-(d_kl^2 + 2 d_kl sigma Z) / (2 sigma^2)),
    d_kl = a_k - a_l, which is H(Y) - H(Y|X) without forming either entropy.
    """
    a = np.asarray(points, dtype=float)
    p = np.asarray(probs, dtype=float)
    keep = p > 0
    a, p = a[keep], p[keep]
    if a.size == 1 or math.isinf(sigma):
        return 0.0
    d = a[:, None] - a[None, :]
    if not np.abs(d).max() > 0:
        return 0.0
    # log-ratio terms have poles pi*sigma/|d| away from the real z axis
    z, w = normal_nodes(order, math.pi * sigma / np.abs(d).max())
    expo = -(d[:, :, None] ** 2 + 2.0 * d[:, :, None] * sigma * z[None, None, :]) / (2.0 * sigma ** 2)
    lse = logsumexp(expo, axis=1, b=p[None, :, None])  # k, node
    return float(-np.dot(p, lse @ w) / LN2)


def biawgn_mi(snr: float, quad_order: int = QUAD_ORDER) -> float:
    """Capacity of the uniform +-1 input AWGN channel with noise variance 1/snr."""
    normal_nodes(quad_order)
    if snr < 0:
        raise ValueError("snr must be >= 0")
    if snr == 0:
        return 0.0
    if math.isinf(snr):
        return 1.0
    return mixture_mi([1.0, -1.0], [0.5, 0.5], 1.0 / math.sqrt(snr), quad_order)


def _check_rate(R: float) -> float:
    if not 0.0 < R < 1.0:
        raise ValueError("rate must lie in (0, 1)")
    return R


def shannon_limit_biawgn(R: float, tol: float = 1e-10) -> float:
    """Smallest snr at which the BIAWGN capacity reaches R."""
    _check_rate(R)
    lo, hi = 0.0, 1.0
    while biawgn_mi(hi) < R:
        hi *= 2.0
    while hi - lo > tol * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        if biawgn_mi(mid) >= R:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def shannon_limit_bec(R: float) -> float:
    return 1.0 - _check_rate(R)


def bitwise_mmse(snr: float, quad_order: int = QUAD_ORDER) -> float:
    """MMSE of a uniform +-1 symbol seen through AWGN at the given snr."""
    if snr < 0:
        raise ValueError("snr must be >= 0")
    if snr == 0:
        return 1.0
    if math.isinf(snr):
        return 0.0
    # tanh(snr + sqrt(snr) z) has poles pi/(2 sqrt(snr)) off the real axis
    z, w = normal_nodes(quad_order, math.pi / (2.0 * math.sqrt(snr)))
    return float(1.0 - np.dot(w, np.tanh(snr + math.sqrt(snr) * z) ** 2))


def mmse_curves(snr_grid, R: float = 0.5) -> dict[str, np.ndarray]:
    """Uncoded and capacity-achieving-code MMSE per symbol over an snr grid."""
    snr = np.asarray(snr_grid, dtype=float)
    star = shannon_limit_biawgn(R)
    uncoded = np.array([bitwise_mmse(s) for s in snr])
    good = np.where(snr < star, uncoded, 0.0)
    return {"snr": snr, "uncoded": uncoded, "good": good, "snr_star": star}


# ---- erasure relay ---------------------------------------------------------

def r_df(p: RelayParams) -> float:
    return min(1.0 - p.delta2, 1.0 - p.delta3 + p.c_o)


def cf_dhat2(p: RelayParams) -> float:
    """Minimal quantization noise meeting the CF rate constraint."""
    return min_dhat2(lambda x: good_code_quantization_mi(p.delta2, p.delta3, x), p.c_o, grid=CF_SCAN)


def r_cf(p: RelayParams) -> float:
    return 1.0 - circ(p.delta2, cf_dhat2(p)) * p.delta3


def r_df_ub(p: RelayParams) -> float:
    return 1.0 - p.delta2


def r_ub_good(p: RelayParams) -> RateReport:
    """Upper bound for capacity-achieving codes; relies on two unproven conjectures."""
    return RateReport("R_UB", r_cf(p), {"params": p}, ("conditional",))


# ---- interference channel --------------------------------------------------

def _joint_mi(p: InterferenceParams, order: int = QUAD_ORDER) -> float:
    pts = [1 + p.h, 1 - p.h, -1 + p.h, -1 - p.h]
    return mixture_mi(pts, [0.25] * 4, p.sigma, order)


def _cross_mi(p: InterferenceParams, order: int = QUAD_ORDER) -> float:
    # I(X2; Y1 | X1): the interferer alone at amplitude h
    return mixture_mi([p.h, -p.h], [0.5, 0.5], p.sigma, order)


def r_mud(p: InterferenceParams) -> float:
    return min(_cross_mi(p), 0.5 * _joint_mi(p))


def r_sud(p: InterferenceParams) -> float:
    """I(X1; Y1) with the interferer treated as noise."""
    return _joint_mi(p) - _cross_mi(p)


def good_code_interference_bound(p: InterferenceParams) -> float:
    return max(r_mud(p), r_sud(p))


# ---- rate-splitting badness check -----------------------------------------

HK_RATE = 0.333
HK_S = 0.101
HK_T = 0.231
HK_PU = 0.055


def hk_mutual_informations(snr: float, p_u: float) -> dict[str, float]:
    """I(U;Y|W), I(W;Y|U), I(U,W;Y) for X = BPSK(U xor W), W uniform."""
    if snr == 0:
        return {"u_given_w": 0.0, "w_given_u": 0.0, "joint": 0.0}
    sigma = 1.0 / math.sqrt(snr)
    c = biawgn_mi(snr)
    # given W the input is +-1 with prior (1 - p_u, p_u)
    u_given_w = mixture_mi([1.0, -1.0], [1.0 - p_u, p_u], sigma)
    return {"u_given_w": u_given_w, "w_given_u": c, "joint": c}


def hk_feasible(snr: float, S: float, T: float, p_u: float) -> bool:
    mi = hk_mutual_informations(snr, p_u)
    return S <= mi["u_given_w"] and T <= mi["w_given_u"] and S + T <= mi["joint"]


def hk_badness_min_snr(S: float = HK_S, T: float = HK_T, p_u: float = HK_PU,
                       snr_max: float = 1e3, tol: float = 1e-10) -> float:
    """Smallest snr at which one user's split rates (S, T) are decodable alone."""
    if S < 0 or T < 0:
        raise ValueError("S and T must be >= 0")
    if not 0.0 < p_u < 1.0:
        raise ValueError("p_u must lie in (0, 1)")
    if S == 0 and T == 0:
        return 0.0
    if not hk_feasible(snr_max, S, T, p_u):
        raise ValueError(f"rates infeasible even at snr={snr_max}")
    lo, hi = 0.0, snr_max
    while hi - lo > tol * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        if hk_feasible(mid, S, T, p_u):
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


# ---- curve exports ----------------------------------------------------------

def erasure_rate_curves(ed, deltas, t: int = 2000) -> list[tuple]:
    """Rows (delta, uncoded, good-code MAP, ensemble BP) over a delta grid.

    The good-code value is ``None`` exactly at delta = 1 - R, where it is
    undefined.
    """
    from .bounds import pmap_good
    from .density_evolution import de_bec
    from .ensemble import design_rate

    R = design_rate(ed)
    rows = []
    for d in deltas:
        d = float(d)
        good = None if d == 1.0 - R else pmap_good(d, R)
        rows.append((d, d, good, de_bec(ed, d, t=t).final_bit_erasure))
    return rows


def quantization_noise_curves(ctx, c_o_grid) -> list[tuple]:
    """Rows (C_o, good-code dhat2, I+ dhat2, naive dhat2) for a bound context."""
    from .bounds import min_quantization_noise, naive_bound

    rows = []
    for c in c_o_grid:
        c = float(c)
        good = min_dhat2(lambda x: good_code_quantization_mi(ctx.delta2, ctx.delta3, x), c)
        rows.append((c, good, min_quantization_noise(ctx, c),
                     min_dhat2(lambda x: naive_bound(ctx, x), c)))
    return rows
