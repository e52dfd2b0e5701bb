"""Win rate of a sniper who bids only in the last ending-period block."""

import argparse
import math

from relaysim.harness.presets import preset_auction_snipe_experiment


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--trials", type=int, default=10_000)
    p.add_argument("--blocks", type=int, default=72, help="ending-period length k")
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args()

    r = preset_auction_snipe_experiment(args.trials, args.blocks, args.seed)
    p_win = 1 / args.blocks
    sd = math.sqrt(p_win * (1 - p_win) / args.trials)
    print(f"sniper won {r.sniper_wins}/{r.trials} = {r.win_rate:.5f}  "
          f"(1/k = {p_win:.5f}, 3 sd = {3 * sd:.5f}); late winners: {r.late_bid_wins}")


if __name__ == "__main__":
    main()
