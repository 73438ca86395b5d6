"""Monte-Carlo relay decoding: soft decode-forward BP and its joint twin.

The all-zero codeword is sent in every trial, so channel outputs coincide
with their noise words.  The relay-to-destination link is modelled as a
virtual BEC(dhat2) applied to the relay's BP estimate.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import bec_bp
from .ensemble import EdgeDistribution, TannerGraph, sample_graph
from .erasure import E, _check_prob, erasure_add, erasure_rate, is_degraded, noise_word, spawn_streams


@dataclass(frozen=True)
class RelayParams:
    delta2: float
    delta3: float
    c_o: float
    dhat2: float

    def __post_init__(self):
        for name in ("delta2", "delta3", "dhat2"):
            _check_prob(getattr(self, name), name)
        if self.c_o < 0:
            raise ValueError("c_o must be >= 0")


@dataclass(frozen=True)
class Noise:
    """Erasure noise words over {0, e} for the three links."""

    e2: np.ndarray
    e3: np.ndarray
    ehat2: np.ndarray


def sample_noise(n: int, p: RelayParams, rng: np.random.Generator) -> Noise:
    return Noise(noise_word(n, p.delta2, rng), noise_word(n, p.delta3, rng),
                 noise_word(n, p.dhat2, rng))


@dataclass
class TrialOutcome:
    relay_output: np.ndarray
    quantized: np.ndarray
    destination_output: np.ndarray
    simbp_output: np.ndarray | None = None

    @property
    def rates(self) -> dict[str, float]:
        out = {"relay": erasure_rate(self.relay_output),
               "quantized": erasure_rate(self.quantized),
               "destination": erasure_rate(self.destination_output)}
        if self.simbp_output is not None:
            out["simbp"] = erasure_rate(self.simbp_output)
        return out


def soft_df_bp_trial(g: TannerGraph, p: RelayParams, t: int,
                     rng: np.random.Generator | None = None, noise: Noise | None = None) -> TrialOutcome:
    if noise is None:
        if rng is None:
            raise ValueError("need a random stream or explicit noise")
        noise = sample_noise(g.n, p, rng)
    y2, y3 = noise.e2, noise.e3
    relay = bec_bp.bp_decode(g, y2, t).decisions
    quantized = erasure_add(relay, noise.ehat2)
    combined = np.where(quantized == E, y3, quantized).astype(np.uint8)
    dest = bec_bp.bp_decode(g, combined, t).decisions
    return TrialOutcome(relay, quantized, dest)


@dataclass
class SimBpTrace:
    decisions: np.ndarray
    relay_rightbound: list
    relay_leftbound: list


def sim_bp(g: TannerGraph, noise: Noise, t: int, trace: bool = False):
    """Joint relay/destination BP; returns destination decisions (and trace).

    The destination's channel value on edge (i, j) at iteration l is the
    relay's rightbound message on that edge passed through the virtual BEC,
    multiplied by the destination's own observation.
    """
    if t < 1:
        raise ValueError("t must be >= 1")
    y2 = np.asarray(noise.e2, np.uint8)
    y3 = np.asarray(noise.e3, np.uint8)
    eh_edge = np.asarray(noise.ehat2, np.uint8)[g.edge_var]
    relay = bec_bp.FloodingBp(g, y2[g.edge_var])

    def forwarded(edges):
        # relay message after the virtual BEC
        return np.where(eh_edge[edges] == E, E, relay.r[edges])

    base = y3[g.edge_var].copy()
    every = np.arange(g.num_edges)
    fwd = forwarded(every)
    base = np.where(fwd != E, fwd, base).astype(np.uint8)
    dest = bec_bp.FloodingBp(g, base)
    rs, ls = ([relay.r.copy()], []) if trace else ([], [])
    for it in range(1, t + 1):
        relay.step_left()
        dest.step_left()
        if trace:
            ls.append(relay.l.copy())
        if it == t:
            break
        moved = relay.step_right()
        dest.reveal_base(moved, forwarded(moved))
        moved_dest = dest.step_right()
        if moved.size == 0 and moved_dest.size == 0:
            if trace:
                rs += [rs[-1]] * (t - it)
                ls += [ls[-1]] * (t - it)
            break
        if trace:
            rs.append(relay.r.copy())
    yhat2 = erasure_add(relay.decisions(y2), noise.ehat2)
    start = np.where(yhat2 == E, y3, yhat2).astype(np.uint8)
    dec = dest.decisions(start)
    return SimBpTrace(dec, rs, ls) if trace else dec


def sim_bp_trial(g: TannerGraph, p: RelayParams, t: int, noise: Noise) -> TrialOutcome:
    out = soft_df_bp_trial(g, p, t, noise=noise)
    out.simbp_output = sim_bp(g, noise, t)
    return out


def binary_entropy(p: float) -> float:
    if p <= 0.0 or p >= 1.0:
        return 0.0
    return -p * math.log2(p) - (1 - p) * math.log2(1 - p)


def achievable_rate_from_epsilon(R: float, epsilon: float) -> float:
    if not 0.0 <= epsilon <= R <= 1.0:
        raise ValueError("need 0 <= epsilon <= R <= 1")
    if epsilon == 0.0:
        return R
    return R * (1.0 - binary_entropy(epsilon / R))


# ---- campaigns ------------------------------------------------------------

def default_threads() -> int:
    try:
        return max(1, int(os.environ.get("BADCODES_THREADS", "1")))
    except ValueError:
        return 1


def _wilson(k: float, n: int, z: float = 1.959963984540054) -> tuple[float, float]:
    if n == 0:
        return (0.0, 1.0)
    ph = k / n
    den = 1 + z * z / n
    mid = (ph + z * z / (2 * n)) / den
    half = z * math.sqrt(ph * (1 - ph) / n + z * z / (4 * n * n)) / den
    return (max(0.0, mid - half), min(1.0, mid + half))


@dataclass
class CampaignResult:
    params: dict
    n: int
    t: int
    trials: int
    seed: int
    per_trial: list = field(default_factory=list)
    mean_rates: dict = field(default_factory=dict)
    var_rates: dict = field(default_factory=dict)
    ci: dict = field(default_factory=dict)
    violations: dict = field(default_factory=dict)

    def report(self) -> dict:
        d = asdict(self)
        d.pop("per_trial")
        return d


def _one_trial(args):
    source, p, t, n, rng, with_map = args
    g = sample_graph(source, n, rng) if isinstance(source, EdgeDistribution) else source
    noise = sample_noise(g.n, p, rng)
    out = sim_bp_trial(g, p, t, noise)
    row = out.rates
    row["violation_simbp"] = int(not is_degraded(out.simbp_output, out.destination_output))
    row["violation_quantized"] = int(not is_degraded(out.quantized, out.relay_output))
    if with_map:
        relay_map = bec_bp.map_erase_decode(g, noise.e2)
        row["violation_map"] = int(not is_degraded(out.relay_output, relay_map))
    return row


def run_campaign(source, p: RelayParams, t: int, trials: int, seed: int, n: int | None = None,
                 threads: int | None = None, check_map: bool = False) -> CampaignResult:
    """Independent matched-noise trials; a fresh graph per trial for an ensemble.

    Trial k always uses substream k of ``seed``, so results do not depend
    on the thread count or completion order.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if isinstance(source, EdgeDistribution):
        if n is None:
            raise ValueError("block length n is required for an ensemble")
    else:
        n = source.n
    streams = spawn_streams(seed, trials)
    jobs = [(source, p, t, n, s, check_map) for s in streams]
    threads = threads or default_threads()
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            rows = list(pool.map(_one_trial, jobs))
    else:
        rows = [_one_trial(j) for j in jobs]
    res = CampaignResult(asdict(p), n, t, trials, seed, rows)
    for key in ("relay", "quantized", "destination", "simbp"):
        vals = np.array([r[key] for r in rows])
        res.mean_rates[key] = float(vals.mean())
        res.var_rates[key] = float(vals.var(ddof=1)) if trials > 1 else 0.0
        res.ci[key] = _wilson(float(vals.sum() * n), trials * n)
    for key in ("violation_simbp", "violation_quantized", "violation_map"):
        if key in rows[0]:
            res.violations[key] = int(sum(r[key] for r in rows))
    return res
