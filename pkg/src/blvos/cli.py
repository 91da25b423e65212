"""Command-line frontend: every subcommand prints one JSON report and can write CSV projections."""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path

from . import __version__
from .circuit import BlockTag, DEFAULT_TRUNCATION, MultiplierSpec, SpecError, Structure, build_multiplier, dump_netlist
from .explore import DEFAULT_K_SETS, DEFAULT_STRUCTURES, Constraint, Objective, enumerate_space, sweep
from .metrics import DEFAULT_SEED, SamplePlan, default_count, report_from_samples, run_plan
from .models import load_models
from .timesim import Config, Mode, set_threads

SCHEMA = "blvos-report/1"


def _vdd(text: str):
    if text.lower() == "nominal":
        return None
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"--vdd expects 'nominal' or a voltage, got {text!r}") from None


def _structure(text: str) -> Structure:
    try:
        return Structure.parse(text)
    except (ValueError, KeyError):
        raise argparse.ArgumentTypeError(f"unknown structure {text!r}") from None


def _csv_list(cast):
    def parse(text: str):
        try:
            return [cast(x) for x in text.split(",") if x.strip()]
        except (ValueError, argparse.ArgumentTypeError):
            raise argparse.ArgumentTypeError(f"cannot parse list {text!r}") from None
    return parse


def _common(p: argparse.ArgumentParser, samples: bool = True) -> None:
    p.add_argument("--seed", type=int, default=DEFAULT_SEED, help="master RNG seed")
    p.add_argument("--config", type=Path, help="JSON file overriding model tables")
    p.add_argument("--threads", type=int, default=0, help="worker cap (0 = all cores)")
    p.add_argument("--out", type=Path, help="output prefix for .json/.csv files")
    if samples:
        p.add_argument("--samples", type=int, help="operand pairs (default 10,000 for n<=8, else 1,000,000)")
        p.add_argument("--mode", type=str.upper, choices=[m.value for m in Mode], default=Mode.PAIRED.value)


def _spec_flags(p: argparse.ArgumentParser, vdd: bool = True) -> None:
    p.add_argument("--n", type=int, default=8)
    p.add_argument("--k", type=int, default=4)
    p.add_argument("--structure", type=_structure, default=Structure.BLVOS0)
    if vdd:
        p.add_argument("--vdd", type=_vdd, default=None, help="'nominal' or an approximate level")
    p.add_argument("--truncation", type=int, nargs="?", const=DEFAULT_TRUNCATION, default=0,
                   help=f"drop LSB product columns (bare flag = {DEFAULT_TRUNCATION})")
    p.add_argument("--gate", action="append", default=[], type=str.upper,
                   choices=[b.value for b in (BlockTag.LL, BlockTag.HL, BlockTag.LH)], help="power-gate a block")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="blvos", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("characterize", help="error metrics of one configuration")
    _spec_flags(p)
    _common(p)
    p.add_argument("--log", type=Path, help="write the raw (a, b, exact, approx) sample log as CSV")

    p = sub.add_parser("explore", help="sweep the design space and select a configuration")
    p.add_argument("--n", type=int, default=8)
    p.add_argument("--k-set", type=_csv_list(int))
    p.add_argument("--structures", type=_csv_list(_structure), default=list(DEFAULT_STRUCTURES))
    p.add_argument("--voltages", type=_csv_list(float))
    p.add_argument("--max-mred", type=float)
    p.add_argument("--max-nmed", type=float)
    p.add_argument("--max-med", type=float)
    p.add_argument("--energy-budget", type=float, help="upper bound on energy relative to the exact multiplier")
    p.add_argument("--objective", type=str.upper, choices=[o.value for o in Objective], default="MIN_ENERGY")
    _common(p)

    p = sub.add_parser("age", help="BTI aging: delay increment and error drift")
    _spec_flags(p)
    p.add_argument("--years", type=float, default=10.0)
    _common(p)

    p = sub.add_parser("pv", help="process-variation Monte Carlo over gate delays")
    _spec_flags(p)
    p.add_argument("--sigma", type=float, default=0.0333, help="relative gate-delay std deviation")
    p.add_argument("--trials", type=int, default=5000)
    _common(p)

    p = sub.add_parser("image", help="sharpen or smooth a PGM through the multiplier")
    _spec_flags(p)
    p.add_argument("--app", type=str.upper, choices=["SHARPEN", "SMOOTH"], required=True)
    p.add_argument("--input", type=Path, required=True)
    p.add_argument("--output", type=Path, help="write the approximate result image (PGM)")
    p.add_argument("--mode", type=str.upper, choices=[m.value for m in Mode], default=Mode.RESET.value)
    _common(p, samples=False)

    p = sub.add_parser("dump-netlist", help="print the gate-level netlist")
    _spec_flags(p)
    _common(p, samples=False)
    return parser


def _config(args, parser, models) -> Config:
    try:
        spec = MultiplierSpec(args.n, args.k, args.structure, args.truncation, frozenset(args.gate))
    except SpecError as exc:
        parser.error(str(exc))
    vdd = getattr(args, "vdd", None)
    if vdd is not None and vdd != models.voltage.v_nominal:
        if not any(abs(vdd - lv) < 1e-9 for lv in models.voltage.approx_levels):
            parser.error(f"--vdd {vdd} is not one of {list(models.voltage.approx_levels)} or 'nominal'")
        if spec.structure is Structure.BLVOS0:
            vdd = None
    else:
        vdd = None
    return Config(spec, vdd, vdd is None, models)


def _plan(args, n: int) -> SamplePlan:
    count = args.samples if args.samples is not None else default_count(n)
    return SamplePlan(n, count, args.seed, Mode(args.mode))


def _envelope(command: str, args, config: dict, config_hash: str, models, result: dict) -> dict:
    return {
        "schema": SCHEMA,
        "tool": "blvos",
        "version": __version__,
        "command": command,
        "seed": args.seed,
        "config": config,
        "config_hash": config_hash,
        "models": {"source": models.source, "key": models.key},
        "result": result,
    }


def _write(args, report: dict, csv_text: str | None = None) -> None:
    text = json.dumps(report, indent=2, sort_keys=True) + "\n"
    sys.stdout.write(text)
    if args.out is not None:
        args.out.parent.mkdir(parents=True, exist_ok=True)
        Path(f"{args.out}.json").write_text(text)
        if csv_text is not None:
            Path(f"{args.out}.csv").write_text(csv_text)


def _resolved(config: Config, **more) -> dict:
    return {**config.describe(), "supply": config.supply, **more}


def _flat(config: Config) -> dict:
    d = config.describe()
    d["gated_blocks"] = "+".join(d["gated_blocks"])
    return d


def cmd_characterize(args, parser, models) -> None:
    config = _config(args, parser, models)
    plan = _plan(args, config.spec.n)
    trace = run_plan(config, plan)
    report = report_from_samples(trace.exact, trace.approx, config.spec.n, plan.seed)
    if args.log is not None:
        args.log.write_text(trace.log_csv())
    env = _envelope("characterize", args, _resolved(config, plan=plan.describe()), config.hash, models,
                    report.as_dict())
    _write(args, env, report.csv_row({"config_hash": config.hash, **_flat(config)}))


def cmd_explore(args, parser, models) -> None:
    n = args.n
    k_set = args.k_set or list(DEFAULT_K_SETS.get(n, (n // 2,)))
    voltages = args.voltages or list(models.voltage.approx_levels)
    try:
        cands = enumerate_space(n, k_set, args.structures, voltages)
    except ValueError as exc:
        parser.error(str(exc))
    for v in voltages:
        if not any(abs(v - lv) < 1e-9 for lv in models.voltage.approx_levels):
            parser.error(f"voltage {v} is not one of {list(models.voltage.approx_levels)}")
    constraint = Constraint(args.max_mred, args.max_nmed, args.max_med, args.energy_budget, args.objective)
    plan = _plan(args, n)
    result = sweep(cands, plan, constraint, models)
    resolved = {"n": n, "k_set": k_set, "structures": [s.name for s in args.structures],
                "voltages": voltages, "plan": plan.describe()}
    sweep_hash = hashlib.sha256(json.dumps({"sweep": resolved, "models": models.key},
                                           sort_keys=True).encode()).hexdigest()[:16]
    env = _envelope("explore", args, resolved, sweep_hash, models, result.as_dict())
    _write(args, env, result.to_csv())


def cmd_age(args, parser, models) -> None:
    from .reliability import aged_characterize

    if args.years < 0:
        parser.error("--years must be non-negative")
    config = _config(args, parser, models)
    plan = _plan(args, config.spec.n)
    res = aged_characterize(config, args.years, plan)
    env = _envelope("age", args, _resolved(config, years=args.years, plan=plan.describe()), config.hash, models,
                    res.as_dict())
    _write(args, env)


def cmd_pv(args, parser, models) -> None:
    from .reliability import PVPlan, pv_trials

    if args.sigma < 0 or args.trials <= 0:
        parser.error("--sigma must be >= 0 and --trials > 0")
    config = _config(args, parser, models)
    plan = _plan(args, config.spec.n)
    pv = PVPlan(args.sigma, args.trials, args.seed)
    rep = pv_trials(config, pv, plan)
    env = _envelope("pv", args, _resolved(config, plan=plan.describe(), sigma=args.sigma, trials=args.trials),
                    config.hash, models, rep.as_dict())
    _write(args, env, rep.trial_csv())


def cmd_image(args, parser, models) -> None:
    from .imgbench import load_pgm, run_app, save_pgm

    config = _config(args, parser, models)
    image = load_pgm(args.input)
    report = run_app(args.app, image, config, Mode(args.mode))
    if args.output is not None:
        save_pgm(report.output, args.output)
    result = report.as_dict()
    result.pop("config")
    env = _envelope("image", args, _resolved(config, app=args.app, mode=args.mode,
                                             image={"width": image.width, "height": image.height}),
                    config.hash, models, result)
    _write(args, env)


def cmd_dump(args, parser, models) -> None:
    config = _config(args, parser, models)
    text = dump_netlist(build_multiplier(config.spec, models.gate_delays))
    sys.stdout.write(text)
    if args.out is not None:
        Path(f"{args.out}.net").write_text(text)


COMMANDS = {"characterize": cmd_characterize, "explore": cmd_explore, "age": cmd_age, "pv": cmd_pv,
            "image": cmd_image, "dump-netlist": cmd_dump}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "samples", None) is not None and args.samples <= 0:
        parser.error("--samples must be positive")
    try:
        models = load_models(args.config)
    except (OSError, ValueError, TypeError) as exc:
        parser.error(f"--config: {exc}")
    set_threads(args.threads)
    try:
        COMMANDS[args.command](args, parser, models)
    except (OSError, ValueError, RuntimeError) as exc:
        print(f"blvos {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
