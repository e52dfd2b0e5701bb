"""Candle auctions for parachain slot leases, with crowdloans.

During the ending period a winner table is snapshotted every block. At
close, one of those blocks is drawn uniformly at random and its snapshot is
final, so a bid placed late only counts if the draw lands after it.
"""

from __future__ import annotations

import csv
import random
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

from .economics import EraLedger, InsufficientFunds

N_PERIODS = 8
MAX_LEASE_PERIODS = 8  # 3-month periods, two years


class AuctionError(Exception):
    pass


class AuctionClosed(AuctionError):
    pass


class InvalidRange(AuctionError):
    pass


class EndingPeriodIncomplete(AuctionError):
    pass


class CapExceeded(AuctionError):
    pass


@dataclass(frozen=True)
class LeaseRange:
    first_period: int
    last_period: int

    def __post_init__(self):
        if not 0 <= self.first_period <= self.last_period:
            raise InvalidRange(f"bad range [{self.first_period}, {self.last_period}]")
        if self.length > MAX_LEASE_PERIODS:
            raise InvalidRange(f"{self.length} periods exceeds the {MAX_LEASE_PERIODS}-period maximum")

    @property
    def length(self) -> int:
        return self.last_period - self.first_period + 1

    def overlaps(self, other: "LeaseRange") -> bool:
        return self.first_period <= other.last_period and other.first_period <= self.last_period


@dataclass(frozen=True)
class Bid:
    bidder: str
    amount: int
    range: LeaseRange
    placed_at_block: int = 0
    # position in the auction's bid list, set by place_bid
    seq: int = 0
    crowdloan: bool = False

    def __post_init__(self):
        if self.amount <= 0:
            raise ValueError("bid amount must be positive")

    @property
    def score(self) -> int:
        return self.amount * self.range.length


@dataclass(frozen=True)
class WinnerTable:
    bids: tuple[Bid, ...] = ()

    @property
    def score(self) -> int:
        return sum(b.score for b in self.bids)

    def by_period(self) -> dict[int, Bid]:
        return {p: b for b in self.bids
                for p in range(b.range.first_period, b.range.last_period + 1)}

    def bidders(self) -> set[str]:
        return {b.bidder for b in self.bids}


def _rank(bid: Bid) -> tuple:
    # higher amount first; equal amounts go to the earliest placed
    return (-bid.amount, bid.placed_at_block, bid.seq, bid.bidder)


def snapshot_winners(bids: list[Bid], n_periods: int = N_PERIODS) -> WinnerTable:
    """Conflict-free bid set maximising the sum of amount x periods.

    Only the best bid per exact range can matter, so the search is a dynamic
    programme over period prefixes with at most n(n+1)/2 ranges.
    """
    best_per_range: dict[tuple[int, int], Bid] = {}
    for bid in bids:
        if bid.range.last_period >= n_periods:
            continue
        key = (bid.range.first_period, bid.range.last_period)
        if key not in best_per_range or _rank(bid) < _rank(best_per_range[key]):
            best_per_range[key] = bid
    ending_at: dict[int, list[Bid]] = {}
    for (first, last), bid in sorted(best_per_range.items()):
        ending_at.setdefault(last, []).append(bid)

    # table[p] = best (score, bids) covering periods [0, p)
    table: list[tuple[int, tuple[Bid, ...]]] = [(0, ())]
    for p in range(1, n_periods + 1):
        best = table[p - 1]
        for bid in ending_at.get(p - 1, []):
            prev_score, prev_bids = table[bid.range.first_period]
            cand = prev_score + bid.score
            if cand > best[0]:
                best = (cand, prev_bids + (bid,))
        table.append(best)
    return WinnerTable(table[n_periods][1])


@dataclass
class AuctionState:
    opening_blocks: int
    ending_period_blocks: int
    n_periods: int = N_PERIODS
    bids: list[Bid] = field(default_factory=list)
    snapshots: list[WinnerTable] = field(default_factory=list)
    block: int = 0
    ending_block: int | None = None
    winners: WinnerTable | None = None

    @property
    def end(self) -> int:
        return self.opening_blocks + self.ending_period_blocks

    @property
    def closed(self) -> bool:
        return self.winners is not None

    def is_open(self) -> bool:
        return not self.closed and self.block < self.end


def place_bid(state: AuctionState, bid: Bid, ledger: EraLedger | None = None,
              crowdloan: "Crowdloan | None" = None) -> AuctionState:
    """Record a bid placed in the current block and reserve its funds.

    A crowdloan-backed bid draws on contributions that are already reserved,
    so it only checks the pool total.
    """
    if not state.is_open():
        raise AuctionClosed(f"auction ended at block {state.end}")
    if bid.range.last_period >= state.n_periods:
        raise InvalidRange(f"period {bid.range.last_period} outside the {state.n_periods}-period window")
    bid = replace(bid, placed_at_block=state.block, seq=len(state.bids),
                  crowdloan=crowdloan is not None)
    if crowdloan is not None:
        if bid.amount > crowdloan.total:
            raise InsufficientFunds(f"crowdloan for {crowdloan.parachain} holds {crowdloan.total}")
    elif ledger is not None:
        ledger.reserve(bid.bidder, bid.amount)
    state.bids.append(bid)
    return state


def advance_block(state: AuctionState) -> AuctionState:
    """Close the current block: snapshot it if it lies in the ending period."""
    if not state.is_open():
        raise AuctionClosed("auction is over")
    if state.block >= state.opening_blocks:
        state.snapshots.append(snapshot_winners(state.bids, state.n_periods))
    state.block += 1
    return state


def draw_ending_block(randomness: bytes, ending_period_blocks: int) -> int:
    return random.Random(int.from_bytes(randomness, "big")).randrange(ending_period_blocks)


def close_candle(state: AuctionState, randomness: bytes,
                 ledger: EraLedger | None = None) -> tuple[int, WinnerTable]:
    """Pick the retroactive ending block and settle reserves.

    Losing self-funded bids are unreserved; winning ones stay reserved for the
    lease. Crowdloan bids are settled through their crowdloan.
    """
    if state.closed:
        raise AuctionClosed("auction already settled")
    if len(state.snapshots) < state.ending_period_blocks:
        raise EndingPeriodIncomplete(
            f"{len(state.snapshots)} of {state.ending_period_blocks} ending blocks snapshotted")
    state.ending_block = draw_ending_block(randomness, state.ending_period_blocks)
    state.winners = state.snapshots[state.ending_block]
    if ledger is not None:
        won = {b.seq for b in state.winners.bids}
        for bid in state.bids:
            if bid.seq not in won and not bid.crowdloan:
                ledger.unreserve(bid.bidder, bid.amount)
    return state.ending_block, state.winners


@dataclass
class Crowdloan:
    parachain: str
    cap: int
    contributions: dict[str, int] = field(default_factory=dict)

    @property
    def total(self) -> int:
        return sum(self.contributions.values())


def contribute(loan: Crowdloan, account: str, amount: int, ledger: EraLedger) -> Crowdloan:
    if amount <= 0:
        raise ValueError("contribution must be positive")
    if loan.total + amount > loan.cap:
        raise CapExceeded(f"{loan.parachain}: {loan.total} + {amount} > cap {loan.cap}")
    ledger.reserve(account, amount)
    loan.contributions[account] = loan.contributions.get(account, 0) + amount
    return loan


def release_crowdloan(loan: Crowdloan, ledger: EraLedger) -> Crowdloan:
    """Return every contribution (auction lost or lease expired)."""
    for account, amount in sorted(loan.contributions.items()):
        ledger.unreserve(account, amount)
    loan.contributions.clear()
    return loan


# -- fixtures ----------------------------------------------------------------

FIXTURE_HEADER = ["bidder", "amount", "first_period", "last_period"]


def read_bids_csv(path: str | Path) -> list[Bid]:
    with Path(path).open(newline="") as fh:
        return [Bid(row["bidder"], int(row["amount"]),
                    LeaseRange(int(row["first_period"]), int(row["last_period"])), seq=i)
                for i, row in enumerate(csv.DictReader(fh))]


def write_bids_csv(bids: list[Bid], path: str | Path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(FIXTURE_HEADER)
        for b in bids:
            w.writerow([b.bidder, b.amount, b.range.first_period, b.range.last_period])
    return path


def first_batch_fixture() -> list[Bid]:
    """Locked stakes of the first Polkadot auction batch winners, in Planck."""
    ref = resources.files("relaysim") / "data" / "first_auction_batch.csv"
    with resources.as_file(ref) as path:
        return read_bids_csv(path)
