"""BEC decoders: message-passing BP, peeling, and a GF(2) MAP oracle.

Messages live on edges of a :class:`TannerGraph` (edge order as stored in
the graph) and use the erasure alphabet of :mod:`badcodes.erasure`.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .ensemble import TannerGraph
from .erasure import E, ErasureConflict


@dataclass
class BpTrace:
    """Outcome of :func:`bp_decode`.

    ``rightbound[l]`` holds variable-to-check messages of iteration l
    (0..t-1) and ``leftbound[l-1]`` the check-to-variable messages of
    iteration l (1..t).  Both lists are empty unless a trace was requested.
    Once the messages stop changing the remaining entries share one array.
    """

    decisions: np.ndarray
    iterations: int
    fixed_point_at: int | None
    rightbound: list = field(default_factory=list)
    leftbound: list = field(default_factory=list)


def _ranges(starts: np.ndarray, lengths: np.ndarray) -> np.ndarray:
    """Concatenate the index ranges [starts[k], starts[k] + lengths[k])."""
    total = int(lengths.sum())
    if total == 0:
        return np.zeros(0, dtype=np.int64)
    offs = np.cumsum(lengths) - lengths
    return np.arange(total) - np.repeat(offs, lengths) + np.repeat(starts, lengths)


class FloodingBp:
    """Synchronous BP on one Tanner graph, updated incrementally.

    Messages only ever move from erasure to a bit, so each half-iteration
    touches just the nodes next to edges that changed in the previous one.
    The schedule is plain flooding: leftbound messages of iteration l use
    rightbound messages of iteration l-1, and rightbound messages of
    iteration l use leftbound messages of iteration l.

    ``base`` is the per-edge channel value multiplied into each rightbound
    message; it may gain revealed bits between iterations (:meth:`reveal_base`).
    """

    def __init__(self, g: TannerGraph, base: np.ndarray):
        self.g = g
        self._vdeg = np.bincount(g.edge_var, minlength=g.n)
        self._vstart = np.cumsum(self._vdeg) - self._vdeg
        self._cdeg = np.bincount(g.edge_chk, minlength=g.m)
        self._cstart = np.cumsum(self._cdeg) - self._cdeg
        self._cperm = g.layout.chk_perm
        self.base = np.array(base, dtype=np.uint8)
        self.r = self.base.copy()
        self.l = np.full(g.num_edges, E, dtype=np.uint8)
        known = self.r != E
        self.c_erased = np.bincount(g.edge_chk, weights=~known, minlength=g.m).astype(np.int64)
        self.c_parity = np.bincount(g.edge_chk, weights=self.r == 1, minlength=g.m).astype(np.int64) & 1
        self.v_ones = np.zeros(g.n, dtype=np.int64)
        self.v_zeros = np.zeros(g.n, dtype=np.int64)
        self._r_changed = np.zeros(0, dtype=np.int64)
        self._l_changed = np.zeros(0, dtype=np.int64)
        self._base_changed = np.zeros(0, dtype=np.int64)
        self._first = True

    def _check_edges(self, checks):
        return self._cperm[_ranges(self._cstart[checks], self._cdeg[checks])]

    def _var_edges(self, vars_):
        return _ranges(self._vstart[vars_], self._vdeg[vars_])

    def step_left(self) -> np.ndarray:
        """Update leftbound messages; returns the edges that changed."""
        g = self.g
        if self._first:
            edges = np.arange(g.num_edges)
            self._first = False
        else:
            ch = self._r_changed
            c = g.edge_chk[ch]
            np.subtract.at(self.c_erased, c, 1)
            np.bitwise_xor.at(self.c_parity, c, self.r[ch].astype(np.int64))
            edges = self._check_edges(np.unique(c))
        edges = edges[self.l[edges] == E]
        c = g.edge_chk[edges]
        r = self.r[edges]
        solved = self.c_erased[c] - (r == E) == 0
        edges = edges[solved]
        val = (self.c_parity[c[solved]] ^ (r[solved] & 1)).astype(np.uint8)
        self.l[edges] = val
        v = g.edge_var[edges]
        np.add.at(self.v_ones, v[val == 1], 1)
        np.add.at(self.v_zeros, v[val == 0], 1)
        bad = (self.v_ones[v] > 0) & (self.v_zeros[v] > 0)
        if np.any(bad):
            raise ErasureConflict(f"conflicting bits at variable {int(v[np.argmax(bad)])}")
        self._l_changed = edges
        return edges

    def reveal_base(self, edges: np.ndarray, values: np.ndarray) -> None:
        """Reveal channel bits on still-erased edges before the next rightbound step."""
        edges = np.asarray(edges, dtype=np.int64)
        values = np.asarray(values, dtype=np.uint8)
        keep = (self.base[edges] == E) & (values != E)
        edges, values = edges[keep], values[keep]
        self.base[edges] = values
        self._base_changed = np.union1d(self._base_changed, edges)

    def step_right(self) -> np.ndarray:
        """Update rightbound messages; returns the edges that changed."""
        g = self.g
        vars_ = np.unique(g.edge_var[self._l_changed])
        edges = self._var_edges(vars_)
        if self._base_changed.size:
            edges = np.union1d(edges, self._base_changed)
            self._base_changed = np.zeros(0, dtype=np.int64)
        edges = edges[self.r[edges] == E]
        v = g.edge_var[edges]
        l = self.l[edges]
        ones = self.v_ones[v] - (l == 1)
        zeros = self.v_zeros[v] - (l == 0)
        b = self.base[edges]
        if np.any(((b == 0) & (ones > 0)) | ((b == 1) & (zeros > 0))):
            raise ErasureConflict("leftbound bit disagrees with the channel")
        new = np.where(b != E, b, np.where(ones > 0, 1, np.where(zeros > 0, 0, E))).astype(np.uint8)
        hit = new != E
        edges = edges[hit]
        self.r[edges] = new[hit]
        self._r_changed = edges
        return edges

    def decisions(self, y) -> np.ndarray:
        """Channel value ``y`` times every leftbound message, per variable."""
        y = np.asarray(y, dtype=np.uint8)
        if np.any(((y == 0) & (self.v_ones > 0)) | ((y == 1) & (self.v_zeros > 0))):
            raise ErasureConflict("leftbound bit disagrees with the channel")
        out = np.where(self.v_ones > 0, 1, np.where(self.v_zeros > 0, 0, E))
        return np.where(y != E, y, out).astype(np.uint8)


def bp_decode(g: TannerGraph, y, t: int, trace: bool = False) -> BpTrace:
    y = np.asarray(y, dtype=np.uint8)
    if y.size != g.n:
        raise ValueError(f"word length {y.size} != n={g.n}")
    if t < 1:
        raise ValueError("t must be >= 1")
    bp = FloodingBp(g, y[g.edge_var])
    rs, ls = ([bp.r.copy()], []) if trace else ([], [])
    fixed_at = None
    for it in range(1, t + 1):
        bp.step_left()
        if trace:
            ls.append(bp.l.copy())
        if it == t:
            break
        if bp.step_right().size == 0:
            # nothing moved, so every later iteration repeats this one
            fixed_at = it
            if trace:
                rs += [rs[-1]] * (t - it)
                ls += [ls[-1]] * (t - it)
            break
        if trace:
            rs.append(bp.r.copy())
    return BpTrace(bp.decisions(y), t, fixed_at, rs, ls)


def peeling_decode(g: TannerGraph, y) -> np.ndarray:
    """Resolve checks with a single erased edge until none is left."""
    x = np.array(y, dtype=np.uint8)
    if x.size != g.n:
        raise ValueError(f"word length {x.size} != n={g.n}")
    adj = g.check_adjacency()
    var_checks: list[list[int]] = [[] for _ in range(g.n)]
    for c, vs in enumerate(adj):
        for v in vs:
            var_checks[v].append(c)
    # unresolved edge count and known-bit parity per check
    pending = [0] * g.m
    parity = [0] * g.m
    for c, vs in enumerate(adj):
        for v in vs:
            if x[v] == E:
                pending[c] += 1
            else:
                parity[c] ^= int(x[v])
    queue = deque(c for c in range(g.m) if pending[c] == 1)
    while queue:
        c = queue.popleft()
        if pending[c] != 1:
            continue
        v = next(u for u in adj[c] if x[u] == E)
        bit = parity[c]
        x[v] = bit
        for c2 in var_checks[v]:
            pending[c2] -= 1
            parity[c2] ^= bit
            if pending[c2] == 1:
                queue.append(c2)
    return x


def map_erase_decode(g: TannerGraph, y) -> np.ndarray:
    """Bitwise MAP erasure decoding by elimination over GF(2).

    Peeling runs first (its deductions are implied by the parity checks),
    then the residual system is reduced with lowest-index pivots on packed
    64-bit rows.  A position is revealed iff the solution space fixes it.
    """
    x = peeling_decode(g, y)
    unknown = np.nonzero(x == E)[0]
    h = g.parity_matrix()
    known = x != E
    syndrome = (h[:, known].astype(np.int64) @ x[known].astype(np.int64)) & 1
    if unknown.size == 0:
        if np.any(syndrome):
            raise ValueError("revealed bits violate a parity check")
        return x
    a = h[:, unknown]
    rows = np.any(a, axis=1)
    a, syndrome = a[rows], syndrome[rows]
    # append the syndrome as the last column before packing
    aug = np.concatenate([a, syndrome[:, None].astype(np.uint8)], axis=1)
    packed = np.packbits(aug, axis=1, bitorder="little").view(np.uint8)
    pad = (-packed.shape[1]) % 8
    packed = np.ascontiguousarray(np.pad(packed, ((0, 0), (0, pad)))).view(np.uint64)
    k = unknown.size
    pivot_row_of = np.full(k, -1, dtype=np.int64)
    used = np.zeros(packed.shape[0], dtype=bool)
    for col in range(k):
        w, b = divmod(col, 64)
        colbits = (packed[:, w] >> np.uint64(b)) & np.uint64(1)
        cand = np.nonzero((colbits == 1) & ~used)[0]
        if cand.size == 0:
            continue
        p = cand[0]
        used[p] = True
        pivot_row_of[col] = p
        hit = np.nonzero(colbits == 1)[0]
        hit = hit[hit != p]
        if hit.size:
            packed[hit] ^= packed[p]
    bits = np.unpackbits(packed.view(np.uint8), axis=1, bitorder="little")[:, :k + 1]
    lhs, rhs = bits[:, :k], bits[:, k]
    if np.any(rhs[~lhs.any(axis=1)]):
        raise ValueError("revealed bits violate a parity check")
    for col in np.nonzero(pivot_row_of >= 0)[0]:
        row = pivot_row_of[col]
        if lhs[row].sum() == 1:
            x[unknown[col]] = rhs[row]
    return x
