"""Share of active validators at 100% commission, era by era."""

import argparse
from pathlib import Path

from relaysim.harness.presets import preset_commission_drift_experiment, write_preset_csv


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--out", default="out/commission_drift")
    p.add_argument("--eras", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args()

    frames = preset_commission_drift_experiment({"eras": args.eras, "seed": args.seed})
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_preset_csv(frames, out / "commission_drift.csv")
    crossed = next((f.era for f in frames if f.fraction_full_commission > 0.6), None)
    for f in frames[::10]:
        print(f"era {f.era:>4}  {f.fraction_full_commission:.2f}")
    print(f"first era above 0.6: {crossed}")


if __name__ == "__main__":
    main()
