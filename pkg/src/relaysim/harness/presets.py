"""Experiment presets: minimum active stake, commission drift and candle
auction sniping."""

from __future__ import annotations

import dataclasses
import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from ..auctions import (
    AuctionState, Bid, LeaseRange, advance_block, close_candle, first_batch_fixture, place_bid,
)
from .config import ScenarioConfig, StakeConfig, StrategyConfig, validate
from .engine import run
from .metrics import MetricsFrame, write_frames_csv


def _apply(config: ScenarioConfig, overrides: dict) -> ScenarioConfig:
    nested = {k: v for k, v in overrides.items() if isinstance(v, dict)}
    flat = {k: v for k, v in overrides.items() if not isinstance(v, dict)}
    config = dataclasses.replace(config, **flat)
    for key, changes in nested.items():
        config = dataclasses.replace(config, **{key: dataclasses.replace(getattr(config, key), **changes)})
    return validate(config)


def _tagged(config: ScenarioConfig, **tags) -> list[MetricsFrame]:
    frames = run(config)
    for f in frames:
        f.tags.update(tags)
    return frames


def _run_all(jobs: list[tuple[ScenarioConfig, dict]], workers: int) -> list[MetricsFrame]:
    """Runs share nothing, so they may go to separate processes; output keeps
    the job order either way."""
    if workers <= 1:
        results = [_tagged(c, **t) for c, t in jobs]
    else:
        with ProcessPoolExecutor(workers) as pool:
            results = list(pool.map(_tagged_job, jobs))
    return [f for frames in results for f in frames]


def _tagged_job(job: tuple[ScenarioConfig, dict]) -> list[MetricsFrame]:
    config, tags = job
    return _tagged(config, **tags)


# -- minimum active stake ------------------------------------------------------

MIN_STAKE_BASE = ScenarioConfig(
    n_candidates=80, seats=50, n_nominators=500, n_parachains=0, n_parathreads=0, eras=2,
    epoch_length=5, epochs_per_era=1, users=1,
)
STAKE_SCALES = (1, 2, 3, 4)
SEAT_COUNTS = (20, 30, 40, 50, 60, 70)


def preset_min_stake_experiment(overrides: dict | None = None, scales=STAKE_SCALES,
                                seat_counts=SEAT_COUNTS, workers: int = 1) -> list[MetricsFrame]:
    """Two sweeps over one population: total stake multiplied by each of
    ``scales`` at the base seat count, then each seat count at scale 1.
    Frames carry ``sweep``, ``seats`` and ``stake_scale`` tags."""
    base = _apply(MIN_STAKE_BASE, overrides or {})
    jobs = []
    for c in scales:
        cfg = dataclasses.replace(base, stake=dataclasses.replace(base.stake, scale=c))
        jobs.append((cfg, {"sweep": "stake", "seats": base.seats, "stake_scale": c}))
    for seats in seat_counts:
        if seats > base.n_candidates:
            continue
        cfg = dataclasses.replace(base, seats=seats)
        jobs.append((cfg, {"sweep": "seats", "seats": seats, "stake_scale": 1}))
    return _run_all(jobs, workers)


# -- commission drift ----------------------------------------------------------

COMMISSION_DRIFT_BASE = ScenarioConfig(
    n_candidates=56, seats=50, n_nominators=500, n_parachains=1, n_parathreads=0, eras=200,
    strategy=StrategyConfig(rational_fraction=0.9, rational_nominator_fraction=0.5,
                            adoption_inertia=0.95, adoption_margin=1.5, sybils_per_validator=2),
    stake=StakeConfig(validator_self_stake=(5_000, 50_000), validator_wealth=(0, 1_500_000),
                      nominator_bond=(120, 20_000)),
)


def preset_commission_drift_experiment(overrides: dict | None = None) -> list[MetricsFrame]:
    """Rational operators move to 100% commission once they can hold a seat on
    their own stake; the series to watch is fraction_full_commission."""
    config = _apply(COMMISSION_DRIFT_BASE, overrides or {})
    return _tagged(config, preset="commission-drift")


# -- candle auction sniping ----------------------------------------------------

@dataclass
class SnipeResult:
    trials: int
    ending_period_blocks: int
    sniper_wins: int
    late_bid_wins: int

    @property
    def win_rate(self) -> float:
        return self.sniper_wins / self.trials


def snipe_trial(seed: int, ending_period_blocks: int = 72, opening_blocks: int = 0,
                honest: list[Bid] | None = None) -> tuple[bool, bool]:
    """One auction: the fixture bidders place their bids at random blocks,
    a sniper outbids all of them in the final ending-period block.

    Returns (sniper won, some bid placed after the drawn ending block won).
    """
    honest = first_batch_fixture() if honest is None else honest
    rng = random.Random(seed)
    state = AuctionState(opening_blocks, ending_period_blocks)
    last = state.end - 1
    schedule = sorted((rng.randrange(last), i) for i in range(len(honest)))
    top = max(b.amount for b in honest)
    sniper = Bid("sniper", top + 1, LeaseRange(0, 7))
    cursor = 0
    while state.is_open():
        while cursor < len(schedule) and schedule[cursor][0] == state.block:
            place_bid(state, honest[schedule[cursor][1]])
            cursor += 1
        if state.block == last:
            place_bid(state, sniper)
        advance_block(state)
    randomness = rng.randbytes(32)
    ending, winners = close_candle(state, randomness)
    cutoff = opening_blocks + ending
    won = "sniper" in winners.bidders()
    late = any(b.placed_at_block > cutoff for b in winners.bids)
    return won, late


def preset_auction_snipe_experiment(trials: int = 10_000, ending_period_blocks: int = 72,
                                    seed: int = 0) -> SnipeResult:
    honest = first_batch_fixture()
    wins = late = 0
    for t in range(trials):
        w, l = snipe_trial(seed * 1_000_003 + t, ending_period_blocks, honest=honest)
        wins += w
        late += l
    return SnipeResult(trials, ending_period_blocks, wins, late)


def write_snipe_csv(result: SnipeResult, path: str | Path) -> Path:
    path = Path(path)
    path.write_text("trials,ending_period_blocks,sniper_wins,win_rate,expected_rate,late_bid_wins\n"
                    f"{result.trials},{result.ending_period_blocks},{result.sniper_wins},"
                    f"{result.win_rate!r},{1 / result.ending_period_blocks!r},{result.late_bid_wins}\n")
    return path


def write_preset_csv(frames: list[MetricsFrame], path: str | Path) -> Path:
    return write_frames_csv(frames, path)
