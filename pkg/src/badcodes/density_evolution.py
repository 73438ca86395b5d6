"""Density evolution on the BEC and its two-stream relay extension.

Pair densities are length-4 arrays over (x2, x3) in {0, e}^2, indexed by
``2*x2 + x3`` with bit 1 standing for an erasure.  Erasure multiplication
on a pair of coordinates is then a bitwise AND of indices, erasure
addition a bitwise OR.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .ensemble import EdgeDistribution, design_rate, node_fractions
from .erasure import _check_prob

T_MAX = 2000
TOL = 1e-12

_IDX = np.arange(4)
_AND = (_IDX[:, None] & _IDX[None, :]).ravel()
_OR = (_IDX[:, None] | _IDX[None, :]).ravel()


@dataclass
class DeResult:
    """Trajectory and end point of a density-evolution run.

    For BEC DE ``per_iteration`` holds rightbound edge-erasure
    probabilities x_0 .. x_{T-1}; for sim-DE it holds the rightbound pair
    densities.  ``iterations`` counts leftbound updates actually performed.
    """

    per_iteration: list
    final_bit_erasure: float
    converged: bool
    iterations: int
    final_density: np.ndarray | None = None
    pe_trajectory: list = field(default_factory=list)
    singletons: list = field(default_factory=list)

    def to_csv_rows(self) -> list[tuple[int, float]]:
        out = []
        for i, v in enumerate(self.per_iteration):
            v = np.asarray(v)
            out.append((i, float(v if v.ndim == 0 else v[2] + v[3])))
        return out


def de_bec(ed: EdgeDistribution, delta: float, t: int = T_MAX, tol: float = TOL) -> DeResult:
    """Erasure-probability recursion x_l = delta*lambda(1 - rho(1 - x_{l-1})).

    Runs at most ``t`` leftbound updates and stops earlier once both the
    edge and the bit erasure probability move by less than ``tol``
    (``tol=0`` runs exactly ``t``).
    """
    delta = _check_prob(delta)
    if t < 1:
        raise ValueError("t must be >= 1")
    lt = node_fractions(ed)
    degs = np.array(list(lt))
    wts = np.array(list(lt.values()))

    def final(x):
        q = 1.0 - float(ed.rho_poly(1.0 - x))
        return delta * float(np.sum(wts * q ** degs))

    x = delta
    traj = [x]
    pe_prev = final(x)
    pes = []
    converged = False
    it = 0
    for it in range(1, t + 1):
        pe = final(x)
        pes.append(pe)
        if it == t:
            break
        x_new = delta * float(ed.lam_poly(1.0 - float(ed.rho_poly(1.0 - x))))
        if tol > 0 and abs(x_new - x) < tol and abs(pe - pe_prev) < tol:
            converged = True
            x = x_new
            break
        pe_prev = pe
        x = x_new
        traj.append(x)
    return DeResult(traj, pes[-1], converged or (tol > 0 and it == t and abs(pes[-1] - pe_prev) < tol),
                    it, pe_trajectory=pes)


def de_threshold(ed: EdgeDistribution, target: float = 1e-8, tol: float = 1e-5,
                 t: int = 20000) -> float:
    """Largest delta at which BEC DE drives the bit erasure below ``target``."""

    def good(d):
        return de_bec(ed, d, t=t, tol=1e-15).final_bit_erasure < target

    lo, hi = 0.0, 1.0
    if good(hi):
        return 1.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if good(mid):
            lo = mid
        else:
            hi = mid
    return lo


# ---- pair densities -------------------------------------------------------

def _norm(p: np.ndarray) -> np.ndarray:
    # The pair operators conserve mass exactly; rounding in the total is
    # amplified by the recursion, so the sum is pinned back to 1.
    s = p.sum()
    return p / s if s > 0 else p


def pair_init(d2: float, d3: float) -> np.ndarray:
    d2 = _check_prob(d2, "d2")
    d3 = _check_prob(d3, "d3")
    return np.array([(1 - d2) * (1 - d3), (1 - d2) * d3, d2 * (1 - d3), d2 * d3])


def _combine(table: np.ndarray, a, b) -> np.ndarray:
    out = np.bincount(table, weights=np.outer(a, b).ravel(), minlength=4)
    return _norm(out)


def pair_odot(a, b) -> np.ndarray:
    """Density of the coordinatewise erasure product of independent draws."""
    return _combine(_AND, np.asarray(a, float), np.asarray(b, float))


def pair_oplus(a, b) -> np.ndarray:
    """Density of the coordinatewise erasure sum of independent draws."""
    return _combine(_OR, np.asarray(a, float), np.asarray(b, float))


def pair_gamma(p, dhat2: float) -> np.ndarray:
    """Fold the quantized relay stream into the destination coordinate.

    x2 stays; x3 becomes x3bar * (x2 + xhat2) with xhat2 ~ BEC(dhat2) noise.
    """
    dh = _check_prob(dhat2, "dhat2")
    p = np.asarray(p, float)
    out = np.zeros(4)
    for x2 in (0, 1):
        for x3b in (0, 1):
            w = p[2 * x2 + x3b]
            for xh, pr in ((0, 1 - dh), (1, dh)):
                out[2 * x2 + (x3b & (x2 | xh))] += w * pr
    return _norm(out)


def _powers(op, base: np.ndarray, top: int, unit: np.ndarray) -> list[np.ndarray]:
    out = [unit]
    for _ in range(top):
        out.append(op(out[-1], base))
    return out


_ODOT_UNIT = np.array([0.0, 0.0, 0.0, 1.0])   # (e, e)
_OPLUS_UNIT = np.array([1.0, 0.0, 0.0, 0.0])  # (0, 0)


def sim_de(ed: EdgeDistribution, d2: float, d3: float, dhat2: float,
           t: int = T_MAX, tol: float = TOL, keep_singletons: bool = False,
           extra_degrees=()) -> DeResult:
    """Joint density evolution of the relay and destination decoders.

    Stops after ``t`` leftbound updates or once both P_e and the rightbound
    pair density change by less than ``tol``.  With ``keep_singletons`` the
    per-degree rightbound densities of every iteration are returned, for
    the degrees of ``lam`` and any ``extra_degrees``.
    """
    if t < 1:
        raise ValueError("t must be >= 1")
    p0 = pair_init(d2, d3)
    lam = ed.lam_dict
    rho = ed.rho_dict
    lt = node_fractions(ed)
    degs = sorted(set(lam) | {int(i) for i in extra_degrees}) if keep_singletons else list(lam)
    maxl = max(degs)
    maxr = max(rho)

    pr = pair_gamma(p0, dhat2)
    traj = [pr]
    singles = [[(i, pr) for i in degs]] if keep_singletons else []
    pes = []
    pe_prev = None
    converged = False
    final = None
    it = 0
    for it in range(1, t + 1):
        rpow = _powers(pair_oplus, pr, maxr - 1, _OPLUS_UNIT)
        pl = _norm(sum(f * rpow[j - 1] for j, f in rho.items()))
        lpow = _powers(pair_odot, pl, maxl, _ODOT_UNIT)
        final = pair_gamma(_norm(sum(f * pair_odot(p0, lpow[i]) for i, f in lt.items())), dhat2)
        pe = float(final[1] + final[3])
        pes.append(pe)
        if it == t:
            break
        per_deg = {i: pair_gamma(pair_odot(p0, lpow[i - 1]), dhat2) for i in degs}
        pr_new = _norm(sum(f * per_deg[i] for i, f in lam.items()))
        done = (tol > 0 and pe_prev is not None and abs(pe - pe_prev) < tol
                and np.max(np.abs(pr_new - pr)) < tol)
        pe_prev = pe
        pr = pr_new
        if done:
            converged = True
            break
        traj.append(pr)
        if keep_singletons:
            singles.append(list(per_deg.items()))
    return DeResult(traj, pes[-1], converged, it, final_density=final,
                    pe_trajectory=pes, singletons=singles)


def capacity_gap(ed: EdgeDistribution, threshold: float) -> float:
    return (1.0 - design_rate(ed)) - threshold
