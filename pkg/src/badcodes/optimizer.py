"""Hill-climbing edge-distribution design by repeated linear programs.

Each step runs density evolution on the current (lambda, rho), keeps the
per-degree intermediate densities, and asks for the lambda+ of largest
design rate whose mixture of those densities stays close to the current
trajectory.  rho is never touched, so the design rate is monotone in the
objective sum(lambda+_i / i).  The step is accepted only if full density
evolution confirms the new pair is still admissible.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .bounds import BoundContext, i_plus, min_quantization_noise
from .density_evolution import T_MAX, sim_de
from .ensemble import EdgeDistribution, design_rate
from .interference import LlrGrid, soft_ic_de
from .rates import InterferenceParams
from .relay import RelayParams

FEAS_TOL = 1e-9
ROW_GUARD = 1e-12      # absolute slack so rounding never makes lambda+ = lambda infeasible
MIN_GAIN = 1e-9
RELAY_EPSILON = 2e-5
INTERFERENCE_TARGET = 1e-5
DEFAULT_CANDIDATES = tuple(range(2, 31)) + (50, 100)


# ---------------------------------------------------------------------------
# linear programming


class LpUnbounded(ArithmeticError):
    pass


@dataclass(frozen=True)
class LpProblem:
    """maximize c.x subject to a_ub x <= b_ub, a_eq x = b_eq, 0 <= x <= 1."""

    c: np.ndarray
    a_ub: np.ndarray
    b_ub: np.ndarray
    a_eq: np.ndarray
    b_eq: np.ndarray

    @classmethod
    def build(cls, c, a_ub=None, b_ub=None, a_eq=None, b_eq=None) -> LpProblem:
        c = np.asarray(c, dtype=float).ravel()
        n = c.size

        def rows(a, b):
            if a is None:
                return np.zeros((0, n)), np.zeros(0)
            a = np.atleast_2d(np.asarray(a, dtype=float))
            b = np.asarray(b, dtype=float).ravel()
            if a.shape != (b.size, n):
                raise ValueError("constraint shapes do not match the objective")
            return a, b

        a_ub, b_ub = rows(a_ub, b_ub)
        a_eq, b_eq = rows(a_eq, b_eq)
        for arr in (c, a_ub, b_ub, a_eq, b_eq):
            if not np.all(np.isfinite(arr)):
                raise ValueError("LP entries must be finite")
        return cls(c, a_ub, b_ub, a_eq, b_eq)

    @property
    def n(self) -> int:
        return self.c.size


@dataclass
class LpResult:
    status: str                # "optimal" or "infeasible"
    x: np.ndarray | None
    objective: float | None
    pivots: int

    @property
    def ok(self) -> bool:
        return self.status == "optimal"


def _pivot(T: np.ndarray, r: int, j: int):
    T[r] /= T[r, j]
    col = T[:, j].copy()
    col[r] = 0.0
    T -= np.outer(col, T[r])


def _simplex(T, basis, cost, allowed, tol, budget):
    """Bland's-rule primal simplex on a tableau in canonical form."""
    pivots = 0
    while True:
        reduced = cost - cost[basis] @ T[:, :-1]
        reduced[~allowed] = 0.0
        cand = np.flatnonzero(reduced > tol)
        if cand.size == 0:
            return pivots
        j = int(cand[0])
        col = T[:, j]
        rows = np.flatnonzero(col > tol)
        if rows.size == 0:
            raise LpUnbounded("objective is unbounded")
        ratios = T[rows, -1] / col[rows]
        best = ratios.min()
        ties = rows[ratios <= best + tol * max(1.0, abs(best))]
        r = int(ties[np.argmin(basis[ties])])
        _pivot(T, r, j)
        basis[r] = j
        pivots += 1
        if pivots > budget:
            raise RuntimeError("simplex pivot budget exhausted")


def _scale_rows(a: np.ndarray, b: np.ndarray):
    norm = np.abs(a).max(axis=1) if a.size else np.zeros(0)
    norm = np.where(norm > 0, norm, 1.0)
    return a / norm[:, None], b / norm


def solve_lp(p: LpProblem, tol: float = FEAS_TOL, start=None) -> LpResult:
    """Two-phase dense simplex with Bland's rule; deterministic pivoting.

    With a feasible ``start`` the problem is rewritten around it as
    ``x = start + up - down``, which makes the slack basis feasible and
    skips the phase-one search.  This matters for the optimizer, whose
    rows are often near-equalities that a cold phase one handles badly.
    """
    if start is not None:
        return _solve_from(p, np.asarray(start, dtype=float), tol)
    n = p.n
    a_ub, b_ub = _scale_rows(p.a_ub, p.b_ub)
    a = np.vstack([a_ub, np.eye(n), p.a_eq])
    b = np.r_[b_ub, np.ones(n), p.b_eq]
    return _two_phase(a, b, a_ub.shape[0] + n, p.c, tol)


def _two_phase(a, b, n_ub, c, tol) -> LpResult:
    m, n = a.shape
    sign = np.where(b < 0, -1.0, 1.0)
    needs_art = (sign < 0) | (np.arange(m) >= n_ub)
    n_art = int(needs_art.sum())
    ncols = n + n_ub + n_art
    T = np.zeros((m, ncols + 1))
    T[:, :n] = a * sign[:, None]
    T[np.arange(n_ub), n + np.arange(n_ub)] = sign[:n_ub]
    art_rows = np.flatnonzero(needs_art)
    T[art_rows, n + n_ub + np.arange(n_art)] = 1.0
    T[:, -1] = b * sign
    basis = np.where(needs_art, 0, n + np.arange(m)).astype(np.int64)
    basis[art_rows] = n + n_ub + np.arange(n_art)
    budget = 50 * (m + ncols) + 1000
    allowed = np.ones(ncols, dtype=bool)

    pivots = 0
    if n_art:
        cost = np.zeros(ncols)
        cost[n + n_ub:] = -1.0
        pivots += _simplex(T, basis, cost, allowed, tol, budget)
        art_level = T[basis >= n + n_ub, -1].sum()
        if art_level > tol * max(1.0, np.abs(b).max()):
            return LpResult("infeasible", None, None, pivots)
        # drive zero-level artificials out, dropping rows that are redundant
        keep = np.ones(m, dtype=bool)
        for r in np.flatnonzero(basis >= n + n_ub):
            nz = np.flatnonzero(np.abs(T[r, :n + n_ub]) > tol)
            if nz.size:
                _pivot(T, r, int(nz[0]))
                basis[r] = int(nz[0])
            else:
                keep[r] = False
        T, basis = T[keep], basis[keep]
        allowed[n + n_ub:] = False
        T[:, n + n_ub:-1] = 0.0
    cost = np.zeros(ncols)
    cost[:n] = c
    pivots += _simplex(T, basis, cost, allowed, tol, budget)
    x = np.zeros(ncols)
    x[basis] = T[:, -1]
    return LpResult("optimal", x[:n], float(c @ x[:n]), pivots)


def _solve_from(p: LpProblem, x0: np.ndarray, tol: float) -> LpResult:
    """Vertex-form primal simplex started from a feasible point.

    The basis is the square matrix of tight rows (equalities always
    included).  Duals and edge directions are re-solved from the original
    data at every pivot, so round-off does not accumulate the way it does
    in a tableau, and x itself only ever moves by ratio-tested steps, so
    it stays feasible even when the vertex is badly conditioned.  A
    crossover phase first walks from ``x0`` to a vertex.
    """
    n = p.n
    if x0.shape != (n,) or np.any(x0 < -tol) or np.any(x0 > 1 + tol):
        raise ValueError("start must lie in the unit box")
    a_ub, b_ub = _scale_rows(p.a_ub, p.b_ub)
    A = np.vstack([a_ub, np.eye(n), -np.eye(n)])
    b = np.r_[b_ub, np.ones(n), np.zeros(n)]
    E, e = p.a_eq, p.b_eq
    x = np.clip(x0, 0.0, 1.0)
    if (A @ x - b).max(initial=-np.inf) > tol or (E.size and np.abs(E @ x - e).max() > tol):
        raise ValueError("start is not feasible")
    k = E.shape[0]
    budget = 50 * (A.shape[0] + n) + 1000
    pivots = 0

    def step_to(x, d, tight):
        ad = A @ d
        ok = ad > tol * np.linalg.norm(d)
        ok[tight] = False
        rows = np.flatnonzero(ok)
        if rows.size == 0:
            raise LpUnbounded("objective is unbounded")
        ratios = np.maximum(b[rows] - A[rows] @ x, 0.0) / ad[rows]
        best = ratios.min()
        r = int(rows[np.flatnonzero(ratios <= best + tol)[0]])
        return x + best * d, r

    # crossover: add tight rows until the active matrix is square and full rank
    tight: list[int] = []
    while len(tight) + k < n:
        M = np.vstack([E, A[tight]])
        _, sv, vt = np.linalg.svd(M) if M.size else (None, np.zeros(0), np.eye(n))
        rank = int((sv > 1e-10).sum())
        null = vt[rank:].T
        d = null @ (null.T @ p.c)
        if np.linalg.norm(d) < tol:
            d = null[:, 0]
        x, r = step_to(x, d, tight)
        tight.append(r)

    while True:
        M = np.vstack([E, A[tight]])
        y = np.linalg.solve(M.T, p.c)
        u = y[k:]
        neg = [i for i in np.argsort(tight, kind="stable") if u[i] < -tol]
        if not neg:
            break
        pos = int(neg[0])
        rhs = np.zeros(n)
        rhs[k + pos] = -1.0
        d = np.linalg.solve(M, rhs)
        x, r = step_to(x, d, tight)
        tight[pos] = r
        pivots += 1
        if pivots > budget:
            raise RuntimeError("simplex pivot budget exhausted")
    x = np.clip(x, 0.0, 1.0)
    return LpResult("optimal", x, float(p.c @ x), pivots)


def solve_lp_lazy(p: LpProblem, tol: float = FEAS_TOL, batch: int = 40,
                  seed_rows=None, start=None) -> LpResult:
    """Solve an LP with many inequality rows by constraint generation.

    Starts from ``seed_rows`` (indices into ``a_ub``) and repeatedly adds
    the ``batch`` most violated rows until the solution satisfies them all.
    """
    active = set() if seed_rows is None else {int(i) for i in seed_rows}
    pivots = 0
    a_n, b_n = _scale_rows(p.a_ub, p.b_ub)
    while True:
        idx = np.array(sorted(active), dtype=np.int64)
        sub = LpProblem(p.c, p.a_ub[idx], p.b_ub[idx], p.a_eq, p.b_eq)
        res = solve_lp(sub, tol, start)
        pivots += res.pivots
        if not res.ok:
            return LpResult(res.status, None, None, pivots)
        viol = a_n @ res.x - b_n
        bad = np.flatnonzero(viol > tol)
        bad = bad[~np.isin(bad, idx)]
        if bad.size == 0:
            return LpResult("optimal", res.x, res.objective, pivots)
        worst = bad[np.argsort(-viol[bad], kind="stable")[:batch]]
        active.update(int(i) for i in worst)


# ---------------------------------------------------------------------------
# shared optimizer plumbing


class SeedNotAdmissible(ValueError):
    pass


@dataclass
class StepRecord:
    lam: dict
    design_rate: float
    admissible: bool
    accepted: bool
    figure: float              # epsilon (relay) or primary BER (interference)
    dhat2: float | None = None
    min_slack: float | None = None

    def to_json(self) -> str:
        d = dict(self.__dict__)
        d["lam"] = {str(k): v for k, v in self.lam.items()}
        return json.dumps(d, sort_keys=True)


@dataclass
class OptimizerState:
    current: EdgeDistribution
    dhat2: float | None
    log: list = field(default_factory=list)

    @property
    def accepted_rates(self) -> list[float]:
        return [r.design_rate for r in self.log if r.accepted]

    def records(self) -> list[str]:
        return [r.to_json() for r in self.log]


def _support(seed: EdgeDistribution, candidates) -> list[int]:
    degs = set(seed.lam_dict) | {int(c) for c in candidates}
    if any(d < 2 for d in degs):
        raise ValueError("candidate degrees must be >= 2")
    return sorted(degs)


def _closeness_rows(singles: np.ndarray, traj: np.ndarray, eta: float, scale=None):
    """Rows for |singles . x - traj[l]| <= eta |traj[l-1] - traj[l]|, l >= 1.

    ``singles`` has shape (L, k, d): iteration, coordinate, degree.  With
    ``scale`` (a vector over degrees) both sides are multiplied by
    ``scale . x``, which keeps rows linear when the mixture weights are
    normalized by that quantity.
    """
    cur = traj[1:]
    rhs = eta * np.abs(traj[:-1] - traj[1:]) + ROW_GUARD
    a = singles[1:]
    if scale is None:
        upper = a.reshape(-1, a.shape[-1])
        b_up = (cur + rhs).ravel()
        lower = -upper
        b_lo = (rhs - cur).ravel()
        return np.vstack([upper, lower]), np.r_[b_up, b_lo]
    s = np.asarray(scale, dtype=float)
    up = a - (cur + rhs)[..., None] * s
    lo = (cur - rhs)[..., None] * s - a
    d = a.shape[-1]
    return np.vstack([up.reshape(-1, d), lo.reshape(-1, d)]), np.zeros(2 * up.shape[0] * up.shape[1])


def _lp_step(degs, rows_a, rows_b, x0, extra_a=None, extra_b=None):
    inv = np.array([1.0 / i for i in degs])
    a = rows_a if extra_a is None else np.vstack([rows_a, extra_a])
    b = rows_b if extra_b is None else np.r_[rows_b, extra_b]
    prob = LpProblem.build(inv, a, b, np.ones((1, len(degs))), [1.0])
    seed_rows = [] if extra_a is None else list(range(rows_a.shape[0], a.shape[0]))
    return prob, solve_lp_lazy(prob, seed_rows=seed_rows, start=x0)


def _to_distribution(degs, x, rho) -> EdgeDistribution:
    x = np.where(x < 1e-12, 0.0, x)
    x = x / x.sum()
    return EdgeDistribution({d: float(v) for d, v in zip(degs, x) if v > 0}, rho)


# ---------------------------------------------------------------------------
# relay variant


def relay_admissibility(ed: EdgeDistribution, p: RelayParams, t: int = T_MAX,
                        epsilon: float = RELAY_EPSILON, dhat2: float | None = None):
    """(admissible, dhat2, epsilon) for a relay triplet.

    The quantization noise is the least one the compression bound allows
    at link capacity ``p.c_o`` unless ``dhat2`` pins it.
    """
    if dhat2 is None:
        ctx = BoundContext.from_ensemble(ed, p.delta2, p.delta3)
        dhat2 = min_quantization_noise(ctx, p.c_o)
        if i_plus(ctx, dhat2) > p.c_o + 1e-12:
            return False, dhat2, 1.0
    eps = sim_de(ed, p.delta2, p.delta3, dhat2, t).final_bit_erasure
    return eps <= epsilon, dhat2, eps


def optimize_relay(seed: EdgeDistribution, p: RelayParams, eta: float = 0.1, t: int = T_MAX,
                   max_iters: int = 10, epsilon: float = RELAY_EPSILON,
                   candidates=DEFAULT_CANDIDATES, dhat2: float | None = None) -> OptimizerState:
    """LP hill climbing on lambda for the relay channel.

    Closeness is measured on the rightbound pair densities of sim-DE.
    Passing ``dhat2`` pins the quantization noise instead of re-deriving
    it from the compression bound at every step.
    """
    if eta < 0:
        raise ValueError("eta must be >= 0")
    ok, dh, eps = relay_admissibility(seed, p, t, epsilon, dhat2)
    if not ok:
        raise SeedNotAdmissible(f"seed gives epsilon={eps:.3g} at dhat2={dh:.6g}")
    degs = _support(seed, candidates)
    state = OptimizerState(seed, dh)
    state.log.append(StepRecord(seed.lam_dict, design_rate(seed), True, True, eps, dh))
    for _ in range(max_iters):
        r = sim_de(state.current, p.delta2, p.delta3, state.dhat2, t,
                   keep_singletons=True, extra_degrees=degs)
        traj = np.array(r.per_iteration)
        singles = np.array([[dict(row)[i] for i in degs] for row in r.singletons[:len(traj)]])
        singles = singles.transpose(0, 2, 1)                        # (L, 4, d)
        a, b = _closeness_rows(singles, traj, eta)
        x0 = np.array([state.current.lam_dict.get(i, 0.0) for i in degs])
        _, sol = _lp_step(degs, a, b, x0)
        if not sol.ok:
            break
        if sol.objective <= sum(v / i for i, v in state.current.lam_dict.items()) + MIN_GAIN:
            break
        cand = _to_distribution(degs, sol.x, state.current.rho_dict)
        ok, dh, eps = relay_admissibility(cand, p, t, epsilon, dhat2)
        rate = design_rate(cand)
        slack = float(np.min(b - a @ sol.x))
        better = rate > design_rate(state.current) + MIN_GAIN
        state.log.append(StepRecord(cand.lam_dict, rate, ok, ok and better, eps, dh, slack))
        if not (ok and better):
            break
        state.current, state.dhat2 = cand, dh
    return state


# ---------------------------------------------------------------------------
# interference variant


def interference_admissibility(ed: EdgeDistribution, p: InterferenceParams, t: int,
                               target: float = INTERFERENCE_TARGET, grid: LlrGrid | None = None,
                               freeze: float | None = None):
    r = soft_ic_de(ed, p, t, grid=grid, freeze_interference_below=freeze)
    return r.primary_ber[-1] <= target, r.primary_ber[-1]


def optimize_interference(seed: EdgeDistribution, p: InterferenceParams, eta: float = 0.1,
                          eta_prime: float = 0.02, t: int = 400, max_iters: int = 10,
                          enforce_partial: float | None = None, target: float = INTERFERENCE_TARGET,
                          candidates=DEFAULT_CANDIDATES, grid: LlrGrid | None = None) -> OptimizerState:
    """LP hill climbing on lambda for the symmetric interference channel.

    Four closeness families (rightbound and variable-to-state log-loss
    functionals on both graphs) plus a stability-style cap on lambda_2.
    """
    if eta < 0 or eta_prime < 0:
        raise ValueError("eta and eta_prime must be >= 0")
    ok, ber = interference_admissibility(seed, p, t, target, grid, enforce_partial)
    if not ok:
        raise SeedNotAdmissible(f"seed gives primary BER {ber:.3g}")
    degs = _support(seed, candidates)
    inv = np.array([1.0 / i for i in degs])
    state = OptimizerState(seed, None)
    state.log.append(StepRecord(seed.lam_dict, design_rate(seed), True, True, ber))
    for _ in range(max_iters):
        cur = state.current
        r = soft_ic_de(cur, p, t, grid=grid, keep_functionals=True,
                       freeze_interference_below=enforce_partial, extra_degrees=degs)
        blocks_a, blocks_b = [], []
        for key in (1, 2):
            s = np.array(r.s[key])[:, None]
            s_deg = np.array([[row[i] for i in degs] for row in r.s_deg[key]])[:, None, :]
            a, b = _closeness_rows(s_deg, s, eta)
            blocks_a.append(a)
            blocks_b.append(b)
            st = np.array(r.s_tilde[key])[:, None]
            st_deg = np.array([[row[i] for i in degs] for row in r.s_tilde_deg[key]])[:, None, :]
            a, b = _closeness_rows(st_deg * inv, st, eta, scale=inv)
            blocks_a.append(a)
            blocks_b.append(b)
        rows_a, rows_b = np.vstack(blocks_a), np.concatenate(blocks_b)
        extra_a = extra_b = None
        if 2 in degs and r.bhattacharyya_deg2:
            rho_prime = sum((j - 1) * v for j, v in cur.rho_dict.items())
            cap = (1.0 - eta_prime) / r.bhattacharyya_deg2
            lam2 = cur.lam_dict.get(2, 0.0)
            # never cut off the current point
            cap = max(cap, lam2 * rho_prime)
            extra_a = np.zeros((1, len(degs)))
            extra_a[0, degs.index(2)] = rho_prime
            extra_b = np.array([cap + ROW_GUARD])
        x0 = np.array([cur.lam_dict.get(i, 0.0) for i in degs])
        _, sol = _lp_step(degs, rows_a, rows_b, x0, extra_a, extra_b)
        if not sol.ok:
            break
        if sol.objective <= sum(v / i for i, v in cur.lam_dict.items()) + MIN_GAIN:
            break
        cand = _to_distribution(degs, sol.x, cur.rho_dict)
        ok, ber = interference_admissibility(cand, p, t, target, grid, enforce_partial)
        rate = design_rate(cand)
        slack = float(np.min(rows_b - rows_a @ sol.x))
        better = rate > design_rate(cur) + MIN_GAIN
        state.log.append(StepRecord(cand.lam_dict, rate, ok, ok and better, ber, None, slack))
        if not (ok and better):
            break
        state.current = cand
    return state
