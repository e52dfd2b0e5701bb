"""Minimum active stake under growing stake supply and growing seat count."""

import argparse
from pathlib import Path

from relaysim.economics import PLANCK_PER_DOT
from relaysim.harness.presets import preset_min_stake_experiment, write_preset_csv


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--out", default="out/min_stake")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    args = p.parse_args()

    frames = preset_min_stake_experiment({"seed": args.seed}, workers=args.workers)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_preset_csv(frames, out / "min_stake.csv")
    for f in frames:
        if f.era == 0:
            print(f"{f.tags['sweep']:>5}  seats={f.tags['seats']:>3}  x{f.tags['stake_scale']}  "
                  f"min_active_stake={f.min_active_stake // PLANCK_PER_DOT:,} DOT")


if __name__ == "__main__":
    main()
