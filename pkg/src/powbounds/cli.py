"""Command-line front end.

Subcommands: bound, latency, sweep, simulate, protocol-table.  Emits CSV or
JSON records; never renders plots.  Exit codes: 0 success, 2 infeasible
parameters, 3 schema/parse error, 4 self-test failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import re
import sys

import numpy as np

from . import bounds
from .bounds import ProtocolParams, RaceSpec
from .errors import InfeasibleParametersError, SchemaError
from .protocols import (
    TABLE2_EXPECTED,
    DelayModel,
    ProtocolSpec,
    build_comparison_table,
    default_config_path,
    fault_tolerance,
    load_config,
    throughput,
)
from . import simulator

_RATE_UNITS = {"hour": 3600.0, "hr": 3600.0, "h": 3600.0, "min": 60.0, "m": 60.0, "sec": 1.0, "s": 1.0}


def parse_rate(text: str) -> float:
    """Rate string like '6/hour', '0.1/min', '2/sec' -> blocks per second."""
    text = text.strip()
    if "/" in text:
        num, unit = text.split("/", 1)
        unit = unit.strip().lower()
        if unit not in _RATE_UNITS:
            raise SchemaError(f"unknown rate unit {unit!r} in {text!r}")
        try:
            return float(num) / _RATE_UNITS[unit]
        except ValueError as e:
            raise SchemaError(f"bad rate {text!r}") from e
    try:
        return float(text)
    except ValueError as e:
        raise SchemaError(f"bad rate {text!r}") from e


def parse_time(text: str) -> float:
    """Duration string like '4h', '10h40m', '90s', '30m', or plain seconds."""
    text = text.strip().lower()
    try:
        return float(text)
    except ValueError:
        pass
    m = re.fullmatch(r"(?:(\d+(?:\.\d+)?)h)?(?:(\d+(?:\.\d+)?)m)?(?:(\d+(?:\.\d+)?)s)?", text)
    if not m or not any(m.groups()):
        raise SchemaError(f"bad duration {text!r}")
    h, mi, s = (float(g) if g else 0.0 for g in m.groups())
    return 3600.0 * h + 60.0 * mi + s


def _params_from(args) -> ProtocolParams:
    total = parse_rate(args.total_rate)
    if not 0 < args.alpha_frac <= 1:
        raise SchemaError(f"--alpha-frac must be in (0,1], got {args.alpha_frac}")
    return ProtocolParams.from_adversary_share(total, 1.0 - args.alpha_frac, args.delta)


def _emit(obj, args):
    """Write a record (dict) or table (list of dicts) as JSON or CSV."""
    if args.format == "json":
        text = json.dumps(obj, indent=2, default=float) + "\n"
    else:
        rows = obj if isinstance(obj, list) else [obj]
        buf = io.StringIO()
        if rows:
            writer = csv.DictWriter(buf, fieldnames=list(rows[0].keys()), lineterminator="\n")
            writer.writeheader()
            writer.writerows(rows)
        text = buf.getvalue()
    if args.out:
        with open(args.out, "w") as f:
            f.write(text)
    else:
        sys.stdout.write(text)


def _bound_record(kind: str, res) -> dict:
    return {
        "bound_kind": kind,
        "probability": res.probability,
        "raw_value": res.raw_value,
        "optimizer_v": res.optimizer_v,
        "theta": res.theta,
        "truncation_tail": res.truncation_tail,
    }


def cmd_bound(args) -> int:
    params = _params_from(args)
    t = parse_time(args.t)
    if args.kind == "upper":
        res = bounds.zero_delay_upper(params, t) if params.delta == 0 else bounds.delay_upper(params, t)
    elif args.kind == "lower":
        res = bounds.zero_delay_lower(params, t) if params.delta == 0 else bounds.delay_lower(params, t)
    else:  # upper-universal
        res = (
            bounds.zero_delay_upper(params, t)
            if params.delta == 0
            else bounds.delay_upper_universal(params, t)
        )
    _emit(_bound_record(args.kind, res), args)
    return 0


def cmd_latency(args) -> int:
    params = _params_from(args)
    if not 0 < args.level < 1:
        raise SchemaError(f"--level must be in (0,1), got {args.level}")
    if not 0 < args.split < 1:
        raise SchemaError(f"--split must be in (0,1), got {args.split}")
    upper = bounds.zero_delay_upper if params.delta == 0 else bounds.delay_upper
    eps_time = args.split * args.level
    eps_depth = (1.0 - args.split) * args.level
    t = bounds.invert_latency(upper, params, eps_time)
    depth = bounds.depth_from_time(params, t, eps_depth)
    _emit(
        {
            "level": args.level,
            "split": args.split,
            "t_seconds": t,
            "depth_blocks": depth,
        },
        args,
    )
    return 0


def _parse_grid(text: str):
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise SchemaError(f"grid range must be start:stop:count, got {text!r}")
        start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
        grid = list(np.linspace(start, stop, count))
    else:
        grid = [float(x) for x in text.split(",")]
    if not grid or any(b <= a for a, b in zip(grid, grid[1:])):
        raise SchemaError("grid must be nonempty and strictly increasing")
    return grid


def _try_latency(params, level):
    try:
        return bounds.invert_latency(bounds.delay_upper, params, level)
    except (InfeasibleParametersError, bounds.BracketError):
        return None


def cmd_sweep(args) -> int:
    grid = _parse_grid(args.grid)
    rows = []
    if args.var == "latency":
        params = _params_from(args)
        kinds = args.bounds.split(",")
        fn = {
            "upper": bounds.zero_delay_upper if params.delta == 0 else bounds.delay_upper,
            "lower": bounds.zero_delay_lower if params.delta == 0 else bounds.delay_lower,
            "upper-universal": (
                bounds.zero_delay_upper if params.delta == 0 else bounds.delay_upper_universal
            ),
        }
        for t in grid:
            row = {"x": t}
            for kind in kinds:
                if kind not in fn:
                    raise SchemaError(f"unknown bound kind {kind!r}")
                try:
                    row[kind] = fn[kind](params, t).probability
                except (InfeasibleParametersError, ValueError):
                    row[kind] = ""
            rows.append(row)
    elif args.var == "rate":
        share = 1.0 - args.alpha_frac
        for rate_per_hour in grid:
            params = ProtocolParams.from_adversary_share(rate_per_hour / 3600.0, share, args.delta)
            t = _try_latency(params, args.level)
            rows.append({"x": rate_per_hour, "latency_s": t if t is not None else ""})
    else:  # throughput
        share = 1.0 - args.alpha_frac
        model = DelayModel(a=args.delay_a, b=args.delay_b)
        rate_grid = np.geomspace(6.0, 600.0, 80)
        for tp in grid:
            best = None
            for rate_per_hour in rate_grid:
                size_kb = tp * 3600.0 / rate_per_hour
                delta = model.a * size_kb + model.b
                params = ProtocolParams.from_adversary_share(rate_per_hour / 3600.0, share, delta)
                t = _try_latency(params, args.level)
                if t is not None and (best is None or t < best):
                    best = t
            rows.append({"x": tp, "latency_s": best if best is not None else ""})
    _emit(rows, args)
    return 0


def cmd_simulate(args) -> int:
    ok = True
    if args.mode == "attack":
        params = _params_from(args)
        t = parse_time(args.t)
        warmup = 50.0 / (params.alpha - params.beta)
        post = 20.0 / (params.alpha - params.beta)
        cfg = simulator.SimConfig(
            params=params,
            horizon=warmup + t + post,
            warmup_s=warmup,
            trials=int(float(args.trials)),
            master_seed=args.seed,
        )
        est = simulator.estimate_attack_success(cfg, t, post)
        if params.delta == 0:
            lower = bounds.zero_delay_lower(params, t).probability
            upper = bounds.zero_delay_upper(params, t).probability
        else:
            lower = bounds.delay_lower(params, t).probability
            upper = bounds.delay_upper(params, t).probability
        ok = est.value <= upper + 3.0 * est.stderr and est.value >= lower - 3.0 * est.stderr
        report = {
            "mode": "attack",
            "trials": est.trials,
            "frequency": est.value,
            "stderr": est.stderr,
            "analytic_lower": lower,
            "analytic_upper": upper,
            "self_test_ok": ok,
        }
    elif args.mode == "species":
        a = args.alpha_delta
        params = ProtocolParams(alpha=a, beta=0.0, delta=1.0)
        cfg = simulator.SimConfig(
            params=params, horizon=float(args.horizon), master_seed=args.seed
        )
        trace = simulator.generate_trace(cfg, 0)
        span = (0.0, cfg.horizon - 1.0)
        counts = simulator.classify_species(trace, 1.0, span)
        rate = counts.Y / (span[1] - span[0])
        expect = a * math.exp(-2.0 * a)
        se = math.sqrt(max(counts.Y, 1)) / (span[1] - span[0])
        ok = abs(rate - expect) <= 3.0 * se
        report = {
            "mode": "species",
            "honest": counts.H,
            "jumpers": counts.J,
            "laggers": counts.X,
            "double_laggers": counts.V,
            "loners": counts.Y,
            "loner_rate": rate,
            "loner_rate_expected": expect,
            "self_test_ok": ok,
        }
    else:  # race
        params = _params_from(args)
        t = parse_time(args.t)
        warmup = 50.0 / (params.alpha - params.beta)
        post = 20.0 / (params.alpha - params.beta)
        cfg = simulator.SimConfig(
            params=params,
            horizon=warmup + t + post,
            warmup_s=warmup,
            trials=int(float(args.trials)),
            master_seed=args.seed,
        )
        spec = RaceSpec(mu=params.delta, nu=params.delta, n=1, t=t)
        est = simulator.estimate_race_loss(cfg, spec, args.stream)
        upper = bounds.delay_upper(params, t).probability if args.stream == "double-lagger" else None
        ok = upper is None or est.value <= upper + 3.0 * est.stderr
        report = {
            "mode": "race",
            "stream": args.stream,
            "trials": est.trials,
            "frequency": est.value,
            "stderr": est.stderr,
            "analytic_upper": upper,
            "self_test_ok": ok,
        }
    _emit(report, args)
    return 0 if ok else 4


def cmd_protocol_table(args) -> int:
    path = args.config or default_config_path()
    specs, model = load_config(path)
    levels = [float(x) for x in args.levels.split(",")]
    rows = build_comparison_table(specs, model, args.adversary, levels)
    flat = []
    failures = []
    for row in rows:
        rec = {"name": row["name"], "delay_s": row["delay_s"]}
        for level in levels:
            rec[f"latency_s_{level:g}"] = (
                row["latencies_s"][level] if row["latencies_s"][level] is not None else ""
            )
        rec["throughput_kb_s"] = row["throughput_kb_s"]
        rec["fault_tolerance_loner_rate"] = row["fault_tolerance_loner_rate"]
        rec["fault_tolerance_ultimate"] = row["fault_tolerance_ultimate"]
        if row["note"]:
            rec["note"] = row["note"]
        flat.append(rec)
        if args.check:
            exp = TABLE2_EXPECTED.get(row["name"])
            if exp is None:
                continue
            for level, want in exp["latencies_s"].items():
                got = row["latencies_s"].get(level)
                if got is None or abs(got - want) > 0.05 * want:
                    failures.append(f"{row['name']} latency@{level:g}: {got} vs {want}")
            if abs(row["throughput_kb_s"] - exp["throughput_kb_s"]) > 0.02 * exp["throughput_kb_s"]:
                failures.append(f"{row['name']} throughput")
            dev = min(
                abs(row["fault_tolerance_loner_rate"] - exp["fault_tolerance"]),
                abs(row["fault_tolerance_ultimate"] - exp["fault_tolerance"]),
            )
            if dev > 0.005:
                failures.append(f"{row['name']} fault tolerance")
    _emit(flat, args)
    if failures:
        print("check failures: " + "; ".join(failures), file=sys.stderr)
        return 4
    return 0


def _add_param_flags(p):
    p.add_argument("--alpha-frac", type=float, default=0.9, help="honest share of the mining rate")
    p.add_argument("--total-rate", default="6/hour", help="combined mining rate, e.g. 6/hour")
    p.add_argument("--delta", type=float, default=10.0, help="propagation delay bound in seconds")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="powbounds")
    parser.add_argument("--format", choices=["csv", "json"], default="json")
    parser.add_argument("--out", default=None, help="write output to this file instead of stdout")
    parser.add_argument("--seed", type=int, default=0, help="master seed for simulations")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bound", help="evaluate one bound at one time")
    p.add_argument("kind", choices=["upper", "lower", "upper-universal"])
    _add_param_flags(p)
    p.add_argument("--t", required=True, help="confirmation latency, e.g. 4h or 10h40m")
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("latency", help="invert a security level to latency and depth")
    _add_param_flags(p)
    p.add_argument("--level", type=float, required=True)
    p.add_argument("--split", type=float, default=0.5, help="share of the level spent on the time bound")
    p.set_defaults(func=cmd_latency)

    p = sub.add_parser("sweep", help="tabulate bounds over a grid")
    _add_param_flags(p)
    p.add_argument("--var", choices=["latency", "rate", "throughput"], required=True)
    p.add_argument("--grid", required=True, help="comma list or start:stop:count")
    p.add_argument("--bounds", default="upper,lower", help="columns for latency sweeps")
    p.add_argument("--level", type=float, default=1e-9)
    p.add_argument("--delay-a", type=float, default=0.0098, help="delay model seconds per KB")
    p.add_argument("--delay-b", type=float, default=0.208, help="delay model intercept seconds")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("simulate", help="Monte Carlo campaigns with analytic cross-checks")
    p.add_argument("mode", choices=["attack", "species", "race"])
    _add_param_flags(p)
    p.add_argument("--t", default="2h")
    p.add_argument("--trials", default="10000")
    p.add_argument("--alpha-delta", type=float, default=0.025, help="normalized rate for species mode")
    p.add_argument("--horizon", type=float, default=1e6, help="trace length for species mode")
    p.add_argument("--stream", default="double-lagger", help="renewal stream for race mode")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("protocol-table", help="cross-protocol comparison table")
    p.add_argument("--config", default=None, help="JSON protocol config (default: bundled)")
    p.add_argument("--adversary", type=float, default=0.25)
    p.add_argument("--levels", default="1e-3,1e-6,1e-9")
    p.add_argument("--check", action="store_true", help="compare against the published table")
    p.set_defaults(func=cmd_protocol_table)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # argparse exits 2 on usage errors; report those as parse errors
        return 0 if e.code == 0 else 3
    try:
        return args.func(args)
    except InfeasibleParametersError as e:
        print(f"infeasible parameters: {e}", file=sys.stderr)
        return 2
    except SchemaError as e:
        print(f"error: {e}", file=sys.stderr)
        return 3
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
