"""Exhaustive check of the election against the brute-force oracle over every
small snapshot (<= 5 candidates, <= 4 nominators, <= 3 seats, bonds 1..3)."""

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "tests"))

from exhaustive_election import sweep  # noqa: E402


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--workers", type=int, default=None, help="defaults to the CPU count")
    args = p.parse_args()
    report = sweep(args.workers)
    print(f"{report.checked} snapshots, {len(report.mismatches)} mismatches, "
          f"{report.seconds:.1f} s on {report.workers} worker(s)")
    for m in report.mismatches[:10]:
        print("  mismatch:", m)
    raise SystemExit(1 if report.mismatches else 0)


if __name__ == "__main__":
    main()
