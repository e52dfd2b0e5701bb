"""Command line entry point: ``sim run|preset|validate``."""

from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path

from .harness.config import ConfigInvalid, ScenarioConfig, load_scenario, validate
from .harness.engine import run_to_dir
from .harness.metrics import write_manifest
from .harness.presets import (
    preset_auction_snipe_experiment, preset_commission_drift_experiment,
    preset_min_stake_experiment, write_preset_csv, write_snipe_csv,
)

PRESETS = ("min-stake", "commission-drift", "auction-snipe")


def _overrides(args) -> dict:
    out = {}
    if args.eras is not None:
        out["eras"] = args.eras
    if args.seats is not None:
        out["seats"] = args.seats
    if args.nominators is not None:
        out["n_nominators"] = args.nominators
    return out


def _with_overrides(config: ScenarioConfig, args) -> ScenarioConfig:
    changes = _overrides(args)
    if "seats" in changes and changes["seats"] > config.n_candidates:
        changes["n_candidates"] = changes["seats"]
    return validate(dataclasses.replace(config, **changes))


def _report(exc: ConfigInvalid) -> int:
    for field, message in exc.errors:
        print(f"invalid {field}: {message}", file=sys.stderr)
    return 2


def cmd_run(args) -> int:
    try:
        config = load_scenario(args.scenario) if args.scenario else ScenarioConfig()
        if args.seed is not None:
            config = dataclasses.replace(config, seed=args.seed)
        config = _with_overrides(config, args)
    except ConfigInvalid as exc:
        return _report(exc)
    frames = run_to_dir(config, args.out)
    last = frames[-1]
    print(f"{len(frames)} eras -> {args.out}: min_active_stake={last.min_active_stake} "
          f"fraction_full_commission={last.fraction_full_commission:.3f}")
    return 0


def cmd_preset(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    overrides = _overrides(args)
    if args.name == "auction-snipe":
        result = preset_auction_snipe_experiment(args.trials, seed=args.seed or 0)
        write_snipe_csv(result, out / "auction_snipe.csv")
        print(f"sniper won {result.sniper_wins}/{result.trials} "
              f"(rate {result.win_rate:.5f}, 1/k = {1 / result.ending_period_blocks:.5f})")
        return 0
    if args.seed is not None:
        overrides["seed"] = args.seed
    try:
        if args.name == "min-stake":
            frames = preset_min_stake_experiment(overrides, workers=args.workers)
        else:
            frames = preset_commission_drift_experiment(overrides)
    except ConfigInvalid as exc:
        return _report(exc)
    path = write_preset_csv(frames, out / f"{args.name.replace('-', '_')}.csv")
    write_manifest(out, "", overrides.get("seed", 0), preset=args.name)
    print(f"{len(frames)} frames -> {path}")
    return 0


def cmd_validate(args) -> int:
    try:
        config = load_scenario(args.scenario)
    except ConfigInvalid as exc:
        return _report(exc)
    print(f"ok: {args.scenario} (config hash {config.config_hash()[:16]})")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sim", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    def overrides(sp):
        sp.add_argument("--eras", type=int)
        sp.add_argument("--seats", type=int)
        sp.add_argument("--nominators", type=int)

    r = sub.add_parser("run", help="run a scenario and write CSV metrics")
    r.add_argument("--scenario", help="JSON scenario file (defaults when omitted)")
    r.add_argument("--seed", type=int)
    r.add_argument("--out", required=True)
    overrides(r)
    r.set_defaults(func=cmd_run)

    pr = sub.add_parser("preset", help="run an experiment preset")
    pr.add_argument("name", choices=PRESETS)
    pr.add_argument("--out", required=True)
    pr.add_argument("--seed", type=int)
    pr.add_argument("--trials", type=int, default=10_000, help="auction-snipe only")
    pr.add_argument("--workers", type=int, default=1, help="min-stake sweep processes")
    overrides(pr)
    pr.set_defaults(func=cmd_preset)

    v = sub.add_parser("validate", help="check a scenario file without running it")
    v.add_argument("--scenario", required=True)
    v.set_defaults(func=cmd_validate)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
