"""LDPC edge distributions, Tanner-graph sampling and stopping sets."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Mapping

import numpy as np

_SUM_TOL = 1e-12


def _freeze(m: Mapping) -> tuple[tuple[int, float], ...]:
    return tuple(sorted((int(k), float(v)) for k, v in m.items() if float(v) != 0.0))


@dataclass(frozen=True)
class EdgeDistribution:
    """Edge-perspective degree profile (lambda, rho).

    ``lam[i]`` is the fraction of edges attached to degree-i variable nodes,
    ``rho[j]`` the same for check nodes.
    """

    lam: tuple[tuple[int, float], ...]
    rho: tuple[tuple[int, float], ...]
    allow_degree_one: bool = field(default=False, compare=False)

    def __init__(self, lam: Mapping, rho: Mapping, allow_degree_one: bool = False):
        object.__setattr__(self, "lam", _freeze(lam))
        object.__setattr__(self, "rho", _freeze(rho))
        object.__setattr__(self, "allow_degree_one", allow_degree_one)
        for name, prof in (("lambda", self.lam), ("rho", self.rho)):
            if not prof:
                raise ValueError(f"{name} is empty")
            if any(d < 1 for d, _ in prof):
                raise ValueError(f"{name} has a degree below 1")
            if any(f < 0 for _, f in prof):
                raise ValueError(f"{name} has a negative fraction")
            total = sum(f for _, f in prof)
            if abs(total - 1.0) > _SUM_TOL:
                raise ValueError(f"{name} sums to {total!r}, not 1")
        if not allow_degree_one and self.lam[0][0] < 2:
            raise ValueError("variable degree 1 needs allow_degree_one=True")

    @classmethod
    def from_rounded(cls, lam: Mapping, rho: Mapping, tol: float = 1e-3) -> "EdgeDistribution":
        """Rescale a profile whose printed fractions were rounded."""
        out = []
        for name, prof in (("lambda", lam), ("rho", rho)):
            s = sum(prof.values())
            if abs(s - 1.0) > tol:
                raise ValueError(f"{name} sums to {s}, too far from 1 to rescale")
            out.append({k: v / s for k, v in prof.items()})
        return cls(*out)

    @classmethod
    def regular(cls, c: int, d: int) -> "EdgeDistribution":
        return cls({c: 1.0}, {d: 1.0})

    @property
    def lam_dict(self) -> dict[int, float]:
        return dict(self.lam)

    @property
    def rho_dict(self) -> dict[int, float]:
        return dict(self.rho)

    def lam_degrees(self) -> np.ndarray:
        return np.array([d for d, _ in self.lam])

    def lam_values(self) -> np.ndarray:
        return np.array([f for _, f in self.lam])

    def rho_degrees(self) -> np.ndarray:
        return np.array([d for d, _ in self.rho])

    def rho_values(self) -> np.ndarray:
        return np.array([f for _, f in self.rho])

    def lam_poly(self, z):
        """lambda(z) = sum_i lam_i z^(i-1)."""
        z = np.asarray(z, dtype=float)
        return sum(f * z ** (d - 1) for d, f in self.lam)

    def rho_poly(self, z):
        z = np.asarray(z, dtype=float)
        return sum(f * z ** (d - 1) for d, f in self.rho)

    @property
    def right_degree(self) -> int:
        if len(self.rho) != 1:
            raise ValueError("profile is not right-regular")
        return self.rho[0][0]

    @property
    def gamma(self) -> float:
        """Average variable-node degree."""
        return sum(i * f for i, f in node_fractions(self).items())

    def to_dict(self) -> dict:
        return {"lambda": dict(self.lam), "rho": dict(self.rho)}

    @classmethod
    def from_dict(cls, data: Mapping) -> "EdgeDistribution":
        return cls({int(k): v for k, v in data["lambda"].items()},
                   {int(k): v for k, v in data["rho"].items()})

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def design_rate(ed: EdgeDistribution) -> float:
    left = sum(f / i for i, f in ed.lam)
    right = sum(f / j for j, f in ed.rho)
    return 1.0 - right / left


def node_fractions(ed: EdgeDistribution) -> dict[int, float]:
    """Node-perspective fractions of the variable side."""
    w = {i: f / i for i, f in ed.lam}
    s = sum(w.values())
    return {i: v / s for i, v in w.items()}


def check_fractions(ed: EdgeDistribution) -> dict[int, float]:
    w = {j: f / j for j, f in ed.rho}
    s = sum(w.values())
    return {j: v / s for j, v in w.items()}


# Reference ensembles of the numerical study.  The interference profile's
# printed fractions are rounded (they sum to 0.99987) and get rescaled.
RELAY_ENSEMBLE = EdgeDistribution(
    {2: 0.2289, 3: 0.04532, 4: 0.2361, 23: 0.233, 24: 0.03178, 100: 0.2249},
    {10: 1.0},
)
RELAY_DHAT2 = 0.212
INTERFERENCE_ENSEMBLE = EdgeDistribution.from_rounded(
    {2: 0.2949, 3: 0.2036, 10: 0.05943, 11: 0.0001219, 55: 0.2399, 56: 0.09542, 57: 0.1065},
    {6: 1.0},
)


def largest_remainder(total: int, fractions: Mapping[int, float]) -> dict[int, int]:
    """Integer counts summing to ``total`` proportional to ``fractions``."""
    keys = sorted(fractions)
    raw = np.array([total * fractions[k] for k in keys])
    base = np.floor(raw).astype(int)
    short = total - int(base.sum())
    # ties go to the smaller degree so the allocation is deterministic
    order = sorted(range(len(keys)), key=lambda i: (-(raw[i] - base[i]), keys[i]))
    for i in order[:short]:
        base[i] += 1
    return dict(zip(keys, base.tolist()))


@dataclass(frozen=True, eq=False)
class TannerGraph:
    """Bipartite graph stored as an edge list sorted by variable node.

    Edge ``k`` joins variable ``edge_var[k]`` to check ``edge_chk[k]``.
    Multi-edges are allowed.
    """

    n: int
    m: int
    edge_var: np.ndarray
    edge_chk: np.ndarray

    def __post_init__(self):
        ev = np.asarray(self.edge_var, dtype=np.int64)
        ec = np.asarray(self.edge_chk, dtype=np.int64)
        if ev.shape != ec.shape:
            raise ValueError("edge arrays differ in length")
        if ev.size and (ev.min() < 0 or ev.max() >= self.n or ec.min() < 0 or ec.max() >= self.m):
            raise ValueError("edge endpoint out of range")
        order = np.lexsort((ec, ev))
        ev, ec = ev[order], ec[order]
        ev.setflags(write=False)
        ec.setflags(write=False)
        object.__setattr__(self, "edge_var", ev)
        object.__setattr__(self, "edge_chk", ec)

    @cached_property
    def layout(self) -> "EdgeLayout":
        return EdgeLayout.build(self)

    @property
    def num_edges(self) -> int:
        return int(self.edge_var.size)

    def var_degrees(self) -> np.ndarray:
        return np.bincount(self.edge_var, minlength=self.n)

    def chk_degrees(self) -> np.ndarray:
        return np.bincount(self.edge_chk, minlength=self.m)

    def check_adjacency(self) -> list[list[int]]:
        adj: list[list[int]] = [[] for _ in range(self.m)]
        for v, c in zip(self.edge_var.tolist(), self.edge_chk.tolist()):
            adj[c].append(v)
        return adj

    def design_rate(self) -> float:
        return 1.0 - self.m / self.n

    def parity_matrix(self) -> np.ndarray:
        """Dense GF(2) parity-check matrix; multi-edges cancel in pairs."""
        h = np.zeros((self.m, self.n), dtype=np.uint8)
        np.add.at(h, (self.edge_chk, self.edge_var), 1)
        return h & 1

    def to_text(self) -> str:
        lines = [f"{self.n} {self.m}"]
        lines += [" ".join(map(str, row)) for row in self.check_adjacency()]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "TannerGraph":
        rows = text.splitlines()
        n, m = map(int, rows[0].split())
        body = rows[1:1 + m]
        body += [""] * (m - len(body))
        ev, ec = [], []
        for c, line in enumerate(body):
            for v in line.split():
                ev.append(int(v))
                ec.append(c)
        return cls(n, m, np.array(ev, dtype=np.int64), np.array(ec, dtype=np.int64))


@dataclass(frozen=True, eq=False)
class EdgeLayout:
    """Segment boundaries for per-node reductions over the edge arrays.

    Edges are already grouped by variable; ``chk_perm`` groups them by
    check.  Only nodes with at least one edge get a segment.
    """

    var_nodes: np.ndarray
    var_starts: np.ndarray
    chk_perm: np.ndarray
    chk_nodes: np.ndarray
    chk_starts: np.ndarray

    @staticmethod
    def build(g: "TannerGraph") -> "EdgeLayout":
        def segments(sorted_nodes):
            if sorted_nodes.size == 0:
                return np.zeros(0, np.int64), np.zeros(0, np.int64)
            starts = np.flatnonzero(np.r_[True, sorted_nodes[1:] != sorted_nodes[:-1]])
            return sorted_nodes[starts], starts

        vn, vs = segments(g.edge_var)
        perm = np.argsort(g.edge_chk, kind="stable")
        cn, cs = segments(g.edge_chk[perm])
        return EdgeLayout(vn, vs, perm, cn, cs)


def sample_graph(ed: EdgeDistribution, n: int, rng: np.random.Generator,
                 reject_multi_edges: bool = False, max_tries: int = 100) -> TannerGraph:
    """Socket-permutation sample of the ensemble at block length n."""
    var_counts = largest_remainder(n, node_fractions(ed))
    for deg, cnt in var_counts.items():
        if cnt == 0:
            raise ValueError(f"n={n} leaves variable degree {deg} with no nodes")
    num_edges = sum(d * c for d, c in var_counts.items())
    # check side: allocate nodes, then fix the socket count to match
    cfr = check_fractions(ed)
    m_est = num_edges / sum(j * f for j, f in cfr.items())
    chk_counts = largest_remainder(max(1, round(m_est)), cfr)
    sockets = sum(j * c for j, c in chk_counts.items())
    if sockets != num_edges:
        chk_degs = _repair_check_degrees(chk_counts, num_edges)
    else:
        chk_degs = np.repeat(list(chk_counts), list(chk_counts.values()))
    if chk_degs.size == 0 or np.any(chk_degs < 1):
        raise ValueError(f"n={n} gives an infeasible check-degree allocation")
    var_degs = np.repeat(list(var_counts), list(var_counts.values()))
    var_sock = np.repeat(np.arange(n), var_degs)
    chk_sock = np.repeat(np.arange(chk_degs.size), chk_degs)
    for _ in range(max_tries):
        perm = rng.permutation(num_edges)
        g = TannerGraph(n, int(chk_degs.size), var_sock, chk_sock[perm])
        if not reject_multi_edges or not _has_multi_edge(g):
            return g
    raise RuntimeError("could not draw a graph without multi-edges")


def _repair_check_degrees(chk_counts: dict[int, int], num_edges: int) -> np.ndarray:
    # Spread the socket surplus or deficit one unit at a time over the
    # highest-degree checks, which distorts the profile least.
    degs = np.repeat(list(chk_counts), list(chk_counts.values())).astype(np.int64)
    diff = num_edges - int(degs.sum())
    order = np.argsort(-degs, kind="stable")
    step = 1 if diff > 0 else -1
    i = 0
    while diff != 0:
        degs[order[i % degs.size]] += step
        diff -= step
        i += 1
    return degs


def _has_multi_edge(g: TannerGraph) -> bool:
    key = g.edge_var * g.m + g.edge_chk
    return np.unique(key).size != key.size


def is_stopping_set(g: TannerGraph, s) -> bool:
    """Every check touching s does so through at least two edges."""
    mask = np.zeros(g.n, dtype=bool)
    idx = np.fromiter(s, dtype=np.int64)
    if idx.size and (idx.min() < 0 or idx.max() >= g.n):
        raise ValueError("variable index out of range")
    mask[idx] = True
    hits = np.bincount(g.edge_chk[mask[g.edge_var]], minlength=g.m)
    return bool(np.all((hits == 0) | (hits >= 2)))


MAX_ENUM_N = 25


def enumerate_stopping_sets(g: TannerGraph, max_size: int) -> dict[int, int]:
    """Exact stopping-set counts by size; exponential in n.

    All 2^n subsets are swept as bitmasks in chunks; a subset fails as soon
    as some check sees exactly one of its edges.
    """
    if g.n > MAX_ENUM_N:
        raise ValueError(f"refusing to enumerate subsets of n={g.n} > {MAX_ENUM_N} nodes")
    max_size = min(max_size, g.n)
    inc = np.zeros((g.m, g.n), dtype=np.int64)
    np.add.at(inc, (g.edge_chk, g.edge_var), 1)
    checks = [(np.nonzero(row)[0], row[np.nonzero(row)[0]]) for row in inc]
    counts = np.zeros(g.n + 1, dtype=np.int64)
    chunk = 1 << min(g.n, 18)
    for start in range(0, 1 << g.n, chunk):
        masks = np.arange(start, start + chunk, dtype=np.int64)
        bits = ((masks[None, :] >> np.arange(g.n)[:, None]) & 1).astype(np.int16)
        ok = np.ones(chunk, dtype=bool)
        for vars_, mult in checks:
            hit = (mult[:, None].astype(np.int16) * bits[vars_]).sum(axis=0)
            ok &= hit != 1
        counts += np.bincount(bits.sum(axis=0)[ok], minlength=g.n + 1)
    return {s: int(counts[s]) for s in range(max_size + 1)}


def log_binomial(n: int, k: int) -> float:
    return math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)
