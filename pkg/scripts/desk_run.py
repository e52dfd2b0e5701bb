"""A year of eras at desk scale, timed, with every metric family written out."""

import argparse
import time

from relaysim.harness.config import ScenarioConfig, load_scenario
from relaysim.harness.engine import run_to_dir


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--scenario")
    p.add_argument("--eras", type=int, default=365)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="out/desk")
    args = p.parse_args()

    base = load_scenario(args.scenario) if args.scenario else ScenarioConfig()
    cfg = base.replace(eras=args.eras, seed=args.seed)
    start = time.perf_counter()
    frames = run_to_dir(cfg, args.out)
    took = time.perf_counter() - start
    last = frames[-1]
    print(f"{len(frames)} eras in {took:.1f} s -> {args.out}")
    print(f"finalized {sum(f.finalized_blocks for f in frames)} blocks, "
          f"conflicts {sum(f.conflicting_finalizations for f in frames)}, "
          f"issuance {last.total_issuance}, treasury {last.treasury}")


if __name__ == "__main__":
    main()
