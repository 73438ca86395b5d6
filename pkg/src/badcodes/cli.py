"""Command-line entry point: ``badcodes <command> [flags]``.

Every command prints a short human summary on stdout.  With ``--out`` it
also writes a CSV whose first lines are ``#`` comments carrying the tool
version, the resolved configuration, the seed and a timestamp.  Only the
timestamp line changes between identical runs.

Exit codes: 0 success, 2 invalid input, 1 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import io
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__

EXIT_OK, EXIT_NUMERIC, EXIT_USAGE = 0, 1, 2


class UsageError(ValueError):
    pass


# ---------------------------------------------------------------------------
# argument helpers


def _profile(text: str) -> dict[int, float]:
    """Parse ``"2:0.3,3:0.7"`` or a JSON object into a degree profile."""
    text = text.strip()
    if text.startswith("{"):
        raw = json.loads(text)
        return {int(k): float(v) for k, v in raw.items()}
    out: dict[int, float] = {}
    for part in filter(None, (p.strip() for p in text.split(","))):
        deg, _, frac = part.partition(":")
        if not frac:
            raise argparse.ArgumentTypeError(f"expected degree:fraction, got {part!r}")
        out[int(deg)] = out.get(int(deg), 0.0) + float(frac)
    if not out:
        raise argparse.ArgumentTypeError("empty degree profile")
    return out


def _regular(text: str) -> tuple[int, int]:
    try:
        c, d = (int(v) for v in text.replace(":", ",").split(","))
    except ValueError:
        raise argparse.ArgumentTypeError("--regular expects two integers, e.g. 3,6") from None
    return c, d


def _pairs(items) -> dict[str, float]:
    out = {}
    for item in items or ():
        key, sep, val = item.partition("=")
        if not sep:
            raise UsageError(f"expected key=value, got {item!r}")
        out[key.strip().lower()] = float(val)
    return out


def _floats(text: str) -> list[float]:
    return [float(v) for v in str(text).split(",") if v.strip()]


def _ints(text: str) -> list[int]:
    return [int(v) for v in str(text).split(",") if v.strip()]


def _threads_default() -> int:
    try:
        return max(1, int(os.environ.get("BADCODES_THREADS", "1")))
    except ValueError:
        return 1


def _add_common(sp: argparse.ArgumentParser, seed: bool = False, threads: bool = False):
    sp.add_argument("--config", help="YAML or JSON file whose keys mirror the flag names")
    sp.add_argument("--out", help="write a CSV with a provenance header here")
    if seed:
        sp.add_argument("--seed", type=int, default=0)
    if threads:
        sp.add_argument("--threads", type=int, default=None,
                        help="worker threads (default: $BADCODES_THREADS or 1)")


def _add_ensemble(sp: argparse.ArgumentParser, default: str | None):
    g = sp.add_argument_group("ensemble")
    g.add_argument("--lambda", dest="lam", type=_profile, help='edge profile, "2:0.3,3:0.7" or JSON')
    g.add_argument("--rho", type=_profile, help="check edge profile, same syntax")
    g.add_argument("--regular", type=_regular, help="regular (c,d) ensemble, e.g. 3,6")
    g.add_argument("--ensemble", choices=("relay", "interference"), default=default,
                   help="built-in profile used when no explicit one is given")


def _ensemble(args):
    from .ensemble import INTERFERENCE_ENSEMBLE, RELAY_ENSEMBLE, EdgeDistribution

    if args.regular is not None:
        if args.lam is not None or args.rho is not None:
            raise UsageError("--regular cannot be combined with --lambda/--rho")
        return EdgeDistribution.regular(*args.regular)
    if args.lam is not None or args.rho is not None:
        if args.lam is None or args.rho is None:
            raise UsageError("--lambda and --rho must be given together")
        return EdgeDistribution.from_rounded(args.lam, args.rho, tol=1e-6)
    if args.ensemble == "relay":
        return RELAY_ENSEMBLE
    if args.ensemble == "interference":
        return INTERFERENCE_ENSEMBLE
    raise UsageError("no ensemble given: use --regular, --lambda/--rho or --ensemble")


def _relay_params(args):
    from .relay import RelayParams

    return RelayParams(args.d2, args.d3, args.co, args.dhat2)


def _ic_params(args):
    from .rates import InterferenceParams

    return InterferenceParams(args.h, args.sigma)


def _grid(args):
    from .interference import LlrGrid

    return LlrGrid(args.half_bins, args.l_max)


# ---------------------------------------------------------------------------
# output


class Output:
    """Collects the summary and the CSV table of one command."""

    def __init__(self):
        self.lines: list[str] = []
        self.columns: list[str] = []
        self.rows: list[tuple] = []

    def say(self, key: str, value):
        self.lines.append(f"{key}: {_fmt(value)}")

    def table(self, columns, rows):
        self.columns = list(columns)
        self.rows = [tuple(r) for r in rows]


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, dict):
        return json.dumps(v, sort_keys=True)
    return str(v)


def _resolved(args) -> dict:
    skip = {"config", "out", "handler", "command"}
    out = {}
    for k, v in sorted(vars(args).items()):
        if k in skip:
            continue
        if isinstance(v, tuple):
            v = list(v)
        if isinstance(v, dict):
            v = {str(a): b for a, b in v.items()}
        out[k] = v
    return out


def write_csv(path: str, command: str, args, out: Output):
    buf = io.StringIO()
    buf.write(f"# badcodes {__version__}\n")
    buf.write(f"# command: {command}\n")
    buf.write(f"# config: {json.dumps(_resolved(args), sort_keys=True)}\n")
    buf.write(f"# seed: {_fmt(getattr(args, 'seed', None))}\n")
    stamp = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
    buf.write(f"# timestamp: {stamp}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(out.columns)
    for r in out.rows:
        w.writerow([_fmt(v) for v in r])
    Path(path).write_text(buf.getvalue(), encoding="utf-8")


# ---------------------------------------------------------------------------
# commands


def cmd_de_bec(args, out: Output):
    from .density_evolution import de_bec, de_threshold

    ed = _ensemble(args)
    r = de_bec(ed, args.delta, t=args.t)
    out.say("bit_erasure", r.final_bit_erasure)
    out.say("iterations", r.iterations)
    out.say("converged", r.converged)
    if args.threshold:
        out.say("bp_threshold", de_threshold(ed))
    out.table(("iteration", "edge_erasure"), r.to_csv_rows())


def cmd_sim_de(args, out: Output):
    from .density_evolution import sim_de

    r = sim_de(_ensemble(args), args.d2, args.d3, args.dhat2, t=args.t)
    out.say("p_e_final", r.final_bit_erasure)
    out.say("iterations", r.iterations)
    out.say("converged", r.converged)
    rows = [(i, *map(float, d), pe) for i, (d, pe) in enumerate(zip(r.per_iteration, r.pe_trajectory))]
    out.table(("iteration", "p00", "p0e", "pe0", "pee", "p_e"), rows)


def _context(args):
    from .bounds import BoundContext

    return BoundContext.from_ensemble(_ensemble(args), args.d2, args.d3)


def cmd_bounds(args, out: Output):
    from .bounds import i_plus

    ctx = _context(args)
    out.say("delta2_bp", ctx.delta2_bp)
    out.say("i_plus_at_0", i_plus(ctx, 0.0))
    pts = np.linspace(0.0, 1.0, args.points)
    from .bounds import i_plus_curve

    out.table(("dhat2", "i_plus", "i1_plus", "i2_plus", "naive"), i_plus_curve(ctx, pts))


def cmd_min_dhat2(args, out: Output):
    from .rates import quantization_noise_curves

    ctx = _context(args)
    rows = quantization_noise_curves(ctx, _floats(args.co))
    for c, good, ip, naive in rows:
        out.say(f"co={c!r}", {"good": good, "i_plus": ip, "naive": naive})
    out.table(("c_o", "good_code", "i_plus", "naive"), rows)


def cmd_rates(args, out: Output):
    from . import rates
    from .rates import InterferenceParams
    from .relay import RelayParams

    rows = []
    if args.relay:
        kv = _pairs(args.relay)
        unknown = set(kv) - {"d2", "d3", "co", "dhat2"}
        if unknown or not {"d2", "d3", "co"} <= set(kv):
            raise UsageError("--relay takes d2=, d3=, co= and optionally dhat2=")
        p = RelayParams(kv["d2"], kv["d3"], kv["co"], kv.get("dhat2", 0.0))
        ub = rates.r_ub_good(p)
        rows += [("R_DF", rates.r_df(p)), ("R_CF", rates.r_cf(p)), ("R_DF_UB", rates.r_df_ub(p)),
                 ("R_UB_good", ub.value), ("CF_dhat2", rates.cf_dhat2(p))]
    if args.interference:
        kv = _pairs(args.interference)
        if set(kv) != {"h", "sigma"}:
            raise UsageError("--interference takes h= and sigma=")
        p = InterferenceParams(kv["h"], kv["sigma"])
        rows += [("R_MUD", rates.r_mud(p)), ("R_SUD", rates.r_sud(p)),
                 ("good_code_bound", rates.good_code_interference_bound(p))]
    if not rows:
        raise UsageError("give --relay and/or --interference")
    for k, v in rows:
        out.say(k, v)
    out.table(("quantity", "value"), rows)


def cmd_mmse_curves(args, out: Output):
    from .rates import mmse_curves

    snr = np.linspace(args.snr_min, args.snr_max, args.points)
    c = mmse_curves(snr, args.rate)
    out.say("snr_star", c["snr_star"])
    out.table(("snr", "uncoded", "good"), zip(c["snr"], c["uncoded"], c["good"]))


def cmd_soft_ic_de(args, out: Output):
    from .interference import bitwise_interference_ber, soft_ic_de

    p = _ic_params(args)
    r = soft_ic_de(_ensemble(args), p, t=args.t, grid=_grid(args), tol=args.tol,
                   freeze_interference_below=args.enforce_partial)
    out.say("primary_ber", r.primary_ber[-1])
    out.say("interference_ber", r.interference_ber[-1])
    out.say("iterations", r.iterations)
    out.say("converged", r.converged)
    out.say("bitwise_interference_ber", bitwise_interference_ber(p))
    out.table(("iteration", "primary_ber", "interference_ber"), r.to_csv_rows())


def cmd_simulate_relay(args, out: Output):
    from .relay import run_campaign

    res = run_campaign(_ensemble(args), _relay_params(args), args.t, args.trials, args.seed,
                       n=args.n, threads=args.threads, check_map=args.check_map)
    for k, v in res.mean_rates.items():
        out.say(f"mean_{k}", v)
    for k, v in res.violations.items():
        out.say(k, v)
    keys = ("relay", "quantized", "destination", "simbp")
    vkeys = sorted(res.violations)
    rows = [(i, *(row[k] for k in keys), *(row[k] for k in vkeys)) for i, row in enumerate(res.per_trial)]
    out.table(("trial", *keys, *vkeys), rows)


def cmd_simulate_ic(args, out: Output):
    from .interference import run_ic_trials

    c = run_ic_trials(_ensemble(args), _ic_params(args), args.n, args.t, args.trials,
                      seed=args.seed, threads=args.threads)
    out.say("primary_ber", c.primary_ber[-1])
    out.say("interference_ber", c.interference_ber[-1])
    rows = [(i + 1, a, b, s, u) for i, (a, b, s, u) in
            enumerate(zip(c.primary_ber, c.primary_se, c.interference_ber, c.interference_se))]
    out.table(("iteration", "primary_ber", "primary_se", "interference_ber", "interference_se"), rows)


def _log_table(state, out: Output):
    for k, rec in enumerate(state.log):
        out.lines.append(rec.to_json())
    out.say("final_design_rate", state.accepted_rates[-1])
    rows = [(k, r.design_rate, r.admissible, r.accepted, r.figure, r.dhat2, r.min_slack,
             json.dumps({str(a): b for a, b in r.lam.items()}, sort_keys=True))
            for k, r in enumerate(state.log)]
    out.table(("step", "design_rate", "admissible", "accepted", "figure", "dhat2",
               "min_slack", "lambda"), rows)


def cmd_optimize_relay(args, out: Output):
    from .optimizer import optimize_relay
    from .relay import RelayParams

    p = RelayParams(args.d2, args.d3, args.co, 0.0 if args.dhat2 is None else args.dhat2)
    st = optimize_relay(_ensemble(args), p, eta=args.eta, t=args.t, max_iters=args.max_iters,
                        epsilon=args.epsilon, candidates=_ints(args.candidates), dhat2=args.dhat2)
    _log_table(st, out)


def cmd_optimize_ic(args, out: Output):
    from .optimizer import optimize_interference

    st = optimize_interference(_ensemble(args), _ic_params(args), eta=args.eta,
                               eta_prime=args.eta_prime, t=args.t, max_iters=args.max_iters,
                               enforce_partial=args.enforce_partial, target=args.target,
                               candidates=_ints(args.candidates), grid=_grid(args))
    _log_table(st, out)


def cmd_hk_check(args, out: Output):
    from .rates import hk_badness_min_snr, shannon_limit_biawgn

    snr = hk_badness_min_snr(args.S, args.T, args.pu)
    rows = [("hk_min_snr", snr), ("shannon_limit_snr", shannon_limit_biawgn(args.rate))]
    for k, v in rows:
        out.say(k, v)
    out.table(("quantity", "value"), rows)


def cmd_stopping_oracle(args, out: Output):
    from .bec_bp import peeling_decode
    from .bounds import BoundContext, f_alpha
    from .ensemble import enumerate_stopping_sets, is_stopping_set, sample_graph
    from .erasure import E, noise_word, spawn_streams

    ed = _ensemble(args)
    ctx = BoundContext(0.0, 0.0, 0.0, ed)
    n = args.n
    totals = np.zeros(n + 1)
    failures = 0
    for rng in spawn_streams(args.seed, args.graphs):
        g = sample_graph(ed, n, rng)
        residual = np.flatnonzero(peeling_decode(g, noise_word(n, args.delta, rng)) == E)
        failures += not is_stopping_set(g, residual)
        counts = enumerate_stopping_sets(g, n)
        totals += np.array([counts[s] for s in range(n + 1)])
    mean = totals / args.graphs
    out.say("residual_not_stopping", failures)
    rows = []
    for s in range(1, n):
        alpha = s / n
        rate = math.log2(mean[s]) / n if mean[s] > 0 else -math.inf
        rows.append((s, alpha, mean[s], rate, f_alpha(ctx, alpha)))
    out.table(("size", "alpha", "mean_count", "log2_rate", "f_alpha"), rows)


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="badcodes", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"badcodes {__version__}")
    sub = ap.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def cmd(name, fn, help, columns, seed=False, threads=False, ensemble=None):
        sp = sub.add_parser(name, help=help, description=f"{help}\n\nCSV columns: {columns}",
                            formatter_class=argparse.RawDescriptionHelpFormatter)
        _add_common(sp, seed, threads)
        if ensemble is not False:
            _add_ensemble(sp, ensemble)
        sp.set_defaults(handler=fn)
        return sp

    sp = cmd("de-bec", cmd_de_bec, "BEC density evolution", "iteration, edge_erasure")
    sp.add_argument("--delta", type=float, required=True)
    sp.add_argument("--t", type=int, default=2000)
    sp.add_argument("--threshold", action="store_true", help="also report the BP threshold")

    sp = cmd("sim-de", cmd_sim_de, "joint relay/destination density evolution",
             "iteration, p00, p0e, pe0, pee, p_e", ensemble="relay")
    _relay_links(sp)
    sp.add_argument("--dhat2", type=float, required=True)
    sp.add_argument("--t", type=int, default=2000)

    sp = cmd("bounds", cmd_bounds, "I+ and naive quantization bounds over dhat2",
             "dhat2, i_plus, i1_plus, i2_plus, naive", ensemble="relay")
    _relay_links(sp)
    sp.add_argument("--points", type=int, default=101)

    sp = cmd("min-dhat2", cmd_min_dhat2, "least quantization noise per link capacity",
             "c_o, good_code, i_plus, naive", ensemble="relay")
    _relay_links(sp)
    sp.add_argument("--co", default="0.9", help="comma-separated link capacities")

    sp = cmd("rates", cmd_rates, "benchmark rates", "quantity, value", ensemble=False)
    sp.add_argument("--relay", nargs="+", metavar="KEY=VALUE", help="d2= d3= co= [dhat2=]")
    sp.add_argument("--interference", nargs="+", metavar="KEY=VALUE", help="h= sigma=")

    sp = cmd("mmse-curves", cmd_mmse_curves, "uncoded and good-code MMSE over snr",
             "snr, uncoded, good", ensemble=False)
    sp.add_argument("--snr-min", type=float, default=0.0)
    sp.add_argument("--snr-max", type=float, default=3.0)
    sp.add_argument("--points", type=int, default=301)
    sp.add_argument("--rate", type=float, default=0.5)

    sp = cmd("soft-ic-de", cmd_soft_ic_de, "soft interference-cancellation density evolution",
             "iteration, primary_ber, interference_ber", ensemble="interference")
    _ic_flags(sp)
    sp.add_argument("--t", type=int, default=1000)
    sp.add_argument("--tol", type=float, default=1e-8, help="stop once both BERs move less than this")
    sp.add_argument("--enforce-partial", type=float, default=None,
                    help="freeze the interference decoder below this log-loss")

    sp = cmd("simulate-relay", cmd_simulate_relay, "Monte-Carlo relay campaign",
             "trial, relay, quantized, destination, simbp, violation counters",
             seed=True, threads=True, ensemble="relay")
    _relay_links(sp)
    sp.add_argument("--co", type=float, default=0.9)
    sp.add_argument("--dhat2", type=float, required=True)
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--t", type=int, default=200)
    sp.add_argument("--trials", type=int, default=10)
    sp.add_argument("--check-map", action="store_true")

    sp = cmd("simulate-ic", cmd_simulate_ic, "Monte-Carlo soft interference cancellation",
             "iteration, primary_ber, primary_se, interference_ber, interference_se",
             seed=True, threads=True, ensemble="interference")
    _ic_flags(sp, grid=False)
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--t", type=int, default=50)
    sp.add_argument("--trials", type=int, default=10)

    sp = cmd("optimize-relay", cmd_optimize_relay, "LP hill climbing for the relay channel",
             "step, design_rate, admissible, accepted, figure, dhat2, min_slack, lambda",
             ensemble="relay")
    _relay_links(sp)
    sp.add_argument("--co", type=float, default=0.9)
    sp.add_argument("--dhat2", type=float, default=None,
                    help="pin the quantization noise instead of deriving it from the bound")
    sp.add_argument("--epsilon", type=float, default=2e-5)
    _opt_flags(sp, t=2000)

    sp = cmd("optimize-ic", cmd_optimize_ic, "LP hill climbing for the interference channel",
             "step, design_rate, admissible, accepted, figure, dhat2, min_slack, lambda",
             ensemble="interference")
    _ic_flags(sp)
    sp.add_argument("--eta-prime", type=float, default=0.02)
    sp.add_argument("--enforce-partial", type=float, default=None,
                    help="log-loss threshold that freezes the interference decoder")
    sp.add_argument("--target", type=float, default=1e-5)
    _opt_flags(sp, t=400)

    sp = cmd("hk-check", cmd_hk_check, "Han-Kobayashi badness check", "quantity, value", ensemble=False)
    sp.add_argument("--S", type=float, default=0.101)
    sp.add_argument("--T", type=float, default=0.231)
    sp.add_argument("--pu", type=float, default=0.055)
    sp.add_argument("--rate", type=float, default=0.333)

    sp = cmd("stopping-oracle", cmd_stopping_oracle,
             "peeling residuals and ensemble-average stopping-set counts",
             "size, alpha, mean_count, log2_rate, f_alpha", seed=True)
    sp.add_argument("--n", type=int, default=20)
    sp.add_argument("--graphs", type=int, default=200)
    sp.add_argument("--delta", type=float, default=0.5)
    return ap


def _relay_links(sp):
    sp.add_argument("--d2", type=float, default=0.5)
    sp.add_argument("--d3", type=float, default=0.82)


def _ic_flags(sp, grid: bool = True):
    sp.add_argument("--h", type=float, default=0.839)
    sp.add_argument("--sigma", type=float, default=1.075)
    if grid:
        sp.add_argument("--half-bins", type=int, default=2048)
        sp.add_argument("--l-max", type=float, default=30.0)


def _opt_flags(sp, t: int):
    from .optimizer import DEFAULT_CANDIDATES

    sp.add_argument("--eta", type=float, default=0.1)
    sp.add_argument("--t", type=int, default=t)
    sp.add_argument("--max-iters", type=int, default=10)
    sp.add_argument("--candidates", default=",".join(map(str, DEFAULT_CANDIDATES)))


def _load_config(path: str) -> dict:
    import yaml

    try:
        data = yaml.safe_load(Path(path).read_text(encoding="utf-8"))
    except (OSError, yaml.YAMLError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise UsageError("config must be a mapping of flag names to values")
    return data


def _prescan(argv: list[str]) -> tuple[str | None, str | None]:
    """Find the subcommand and the --config path without full parsing."""
    command = next((a for a in argv if not a.startswith("-")), None)
    config = None
    for i, a in enumerate(argv):
        if a == "--config" and i + 1 < len(argv):
            config = argv[i + 1]
        elif a.startswith("--config="):
            config = a.split("=", 1)[1]
    return command, config


def _apply_config(ap: argparse.ArgumentParser, argv: list[str]) -> argparse.Namespace:
    command, path = _prescan(argv)
    choices = ap._subparsers._group_actions[0].choices
    if path is None or command not in choices:
        return ap.parse_args(argv)
    sp = choices[command]
    by_dest = {a.dest: a for a in sp._actions}
    by_flag = {s.lstrip("-"): a for a in sp._actions for s in a.option_strings}
    defaults = {}
    for key, val in _load_config(path).items():
        act = by_flag.get(str(key)) or by_dest.get(str(key).replace("-", "_"))
        if act is None or act.dest in ("config", "help"):
            raise UsageError(f"unknown config key {key!r} for {command}")
        if isinstance(val, list) and act.nargs not in ("+", "*"):
            val = ",".join(map(str, val))
        if isinstance(val, dict) and act.type is _profile:
            val = json.dumps(val)
        if isinstance(val, str) and act.type is not None:
            val = act.type(val)
        elif isinstance(val, list) and act.type is not None:
            val = [act.type(str(v)) for v in val]
        defaults[act.dest] = val
    # file entries become defaults, so explicit flags still win
    sp.set_defaults(**defaults)
    for act in sp._actions:
        if act.dest in defaults:
            act.required = False
    return ap.parse_args(argv)


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    ap = build_parser()
    try:
        args = _apply_config(ap, argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    except (UsageError, argparse.ArgumentTypeError, ValueError) as exc:
        print(f"badcodes: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if getattr(args, "threads", None) is None and "threads" in vars(args):
        args.threads = _threads_default()
    out = Output()
    try:
        args.handler(args, out)
    except (ArithmeticError, RuntimeError) as exc:
        print(f"badcodes: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"badcodes: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    print("\n".join(out.lines))
    if args.out:
        write_csv(args.out, args.command, args, out)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
