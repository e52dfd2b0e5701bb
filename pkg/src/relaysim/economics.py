"""Integer token accounting: fees, era points, reward payout, inflation,
super-linear slashing and bonding.

Every amount is an integer number of Planck. Rounding dust always goes to
the treasury, so total issuance equals the sum of all balances plus the
treasury at every step.
"""

from __future__ import annotations

import csv
from collections.abc import Collection, Iterable, Mapping
from dataclasses import dataclass, field
from decimal import ROUND_FLOOR, Decimal, localcontext
from enum import Enum
from fractions import Fraction
from pathlib import Path

from .election import ElectionResult

PLANCK_PER_DOT = 10**10
UNBONDING_ERAS = 28
SLASH_REVERT_WINDOW = 28
MAX_REWARDED_NOMINATORS = 256
AUTHOR_FEE_SHARE = Fraction(20, 100)


def dot(amount: int | float | str) -> int:
    """DOT to Planck."""
    return int(Decimal(str(amount)) * PLANCK_PER_DOT)


class EconomicsError(Exception):
    pass


class InsufficientBalance(EconomicsError):
    pass


class InsufficientFunds(InsufficientBalance):
    pass


class InactiveValidator(EconomicsError):
    pass


class BelowMinimumBond(EconomicsError):
    pass


class StillLocked(EconomicsError):
    pass


class InsufficientBonded(EconomicsError):
    pass


class WindowExpired(EconomicsError):
    pass


class InsufficientTreasury(EconomicsError):
    """Cannot happen while conservation holds; treat as a fatal invariant breach."""


class ConservationError(EconomicsError):
    pass


class Role(str, Enum):
    VALIDATOR = "validator"
    NOMINATOR = "nominator"
    PARA = "para"
    USER = "user"


MIN_BOND = {Role.NOMINATOR: 120 * PLANCK_PER_DOT}


@dataclass
class Account:
    id: str
    role: Role = Role.USER
    free: int = 0
    reserved: int = 0
    bonded: int = 0
    # (amount, unlock_era)
    unbonding: list[tuple[int, int]] = field(default_factory=list)

    @property
    def total(self) -> int:
        return self.free + self.reserved + self.bonded + sum(a for a, _ in self.unbonding)


def bond(account: Account, amount: int, minimum: int | None = None) -> Account:
    if amount <= 0 or account.free < amount:
        raise InsufficientBalance(f"{account.id}: cannot bond {amount} from free {account.free}")
    floor = MIN_BOND.get(account.role, 0) if minimum is None else minimum
    if account.bonded + amount < floor:
        raise BelowMinimumBond(f"{account.id}: bonded {account.bonded + amount} < {floor}")
    account.free -= amount
    account.bonded += amount
    return account


def unbond(account: Account, amount: int, current_era: int) -> Account:
    if amount <= 0 or account.bonded < amount:
        raise InsufficientBonded(f"{account.id}: cannot unbond {amount} of {account.bonded}")
    account.bonded -= amount
    account.unbonding.append((amount, current_era + UNBONDING_ERAS))
    return account


def withdraw(account: Account, current_era: int) -> Account:
    matured = [(a, e) for a, e in account.unbonding if e <= current_era]
    if not matured:
        if account.unbonding:
            first = min(e for _, e in account.unbonding)
            raise StillLocked(f"{account.id}: nothing unlocks before era {first}")
        return account
    account.unbonding = [(a, e) for a, e in account.unbonding if e > current_era]
    account.free += sum(a for a, _ in matured)
    return account


# -- parameters ----------------------------------------------------------------

@dataclass
class FeeParams:
    per_byte_fee: int = 10**6
    base_weight_fee: int = 10**7
    weight_multiplier: Fraction = Fraction(1)
    target_fullness: Fraction = Fraction(1, 4)
    adjustment: Fraction = Fraction(1, 100)
    min_multiplier: Fraction = Fraction(1, 10)
    max_multiplier: Fraction = Fraction(10)

    def fee(self, length: int, weight: int) -> int:
        weight_fee = (self.base_weight_fee + weight) * self.weight_multiplier
        return length * self.per_byte_fee + weight_fee.numerator // weight_fee.denominator

    def update_multiplier(self, fullness: Fraction) -> Fraction:
        """One bounded multiplicative step toward the target block fullness."""
        if fullness > self.target_fullness:
            m = self.weight_multiplier * (1 + self.adjustment)
        elif fullness < self.target_fullness:
            m = self.weight_multiplier * (1 - self.adjustment)
        else:
            m = self.weight_multiplier
        self.weight_multiplier = min(self.max_multiplier, max(self.min_multiplier, m))
        return self.weight_multiplier


@dataclass(frozen=True)
class Transaction:
    length: int
    weight: int
    tip: int = 0


class Offense(str, Enum):
    UNRESPONSIVE = "unresponsive"
    EQUIVOCATION = "equivocation"
    FINALITY_REVERSION = "finality_reversion"
    INVALID_CANDIDATE = "invalid_candidate"


@dataclass(frozen=True)
class SlashParams:
    offense: Offense
    base: int  # per-mill
    exponent: int = 2
    scale: int = 3

    def fraction(self, offenders: int, n_active: int) -> Fraction:
        """min(1, base * (scale * k / n) ** exponent); finality reversion is always 1."""
        if self.offense is Offense.FINALITY_REVERSION:
            return Fraction(1)
        if offenders <= 0 or n_active <= 0:
            return Fraction(0)
        f = Fraction(self.base, 1000) * Fraction(self.scale * offenders, n_active) ** self.exponent
        return min(Fraction(1), f)


DEFAULT_SLASHES = {
    Offense.UNRESPONSIVE: SlashParams(Offense.UNRESPONSIVE, base=70, exponent=2),
    Offense.EQUIVOCATION: SlashParams(Offense.EQUIVOCATION, base=1000, exponent=2),
    Offense.FINALITY_REVERSION: SlashParams(Offense.FINALITY_REVERSION, base=1000, exponent=1),
    Offense.INVALID_CANDIDATE: SlashParams(Offense.INVALID_CANDIDATE, base=1000, exponent=1),
}


@dataclass(frozen=True)
class InflationParams:
    ideal_staking_rate: Fraction = Fraction(1, 2)
    # annual staker payout at zero stake and at the ideal rate, as issuance fractions
    min_inflation: Fraction = Fraction(25, 1000)
    max_inflation: Fraction = Fraction(1, 10)
    falloff: Fraction = Fraction(5, 100)
    eras_per_year: int = 365


@dataclass(frozen=True)
class PointValues:
    authored_block: int = 20
    validity_statement: int = 20


class PointEvent(str, Enum):
    AUTHORED_BLOCK = "authored_block"
    VALIDITY_STATEMENT = "validity_statement"


# -- ledger --------------------------------------------------------------------

@dataclass
class SlashEvent:
    era: int
    offense: Offense
    validator: str
    fraction: Fraction
    # (account, bucket, amount); bucket is "bonded" or ("unbonding", unlock_era)
    deductions: list[tuple[str, object, int]] = field(default_factory=list)
    reverted: bool = False

    @property
    def total(self) -> int:
        return sum(a for _, _, a in self.deductions)


@dataclass
class ValidatorFlow:
    points: int = 0
    reward: int = 0
    commission_taken: int = 0
    slash: int = 0
    treasury_delta: int = 0


@dataclass
class EraRecord:
    era: int
    total_issuance: int
    treasury: int
    minted: int
    burned: int
    flows: dict[str, ValidatorFlow]


ERA_CSV_HEADER = ["era", "validator", "points", "reward", "commission_taken", "slash",
                  "treasury_delta"]
ERA_SUMMARY_ROW = "_era"


@dataclass
class EraLedger:
    era: int = 0
    accounts: dict[str, Account] = field(default_factory=dict)
    treasury: int = 0
    total_issuance: int = 0
    era_points: dict[str, int] = field(default_factory=dict)
    slash_events: list[SlashEvent] = field(default_factory=list)
    active_set: set[str] = field(default_factory=set)
    points: PointValues = field(default_factory=PointValues)
    records: list[EraRecord] = field(default_factory=list)
    flows: dict[str, ValidatorFlow] = field(default_factory=dict)
    minted_this_era: int = 0
    burned_this_era: int = 0
    treasury_at_era_start: int = 0

    def create_account(self, account_id: str, role: Role = Role.USER, endowment: int = 0) -> Account:
        if account_id in self.accounts:
            raise EconomicsError(f"account {account_id} exists")
        acct = Account(account_id, role)
        self.accounts[account_id] = acct
        if endowment:
            self.mint_to(acct, endowment)
        return acct

    def account(self, account_id: str) -> Account:
        return self.accounts[account_id]

    def mint_to(self, account: Account, amount: int) -> None:
        account.free += amount
        self.total_issuance += amount
        self.minted_this_era += amount

    def mint_to_treasury(self, amount: int) -> None:
        self.treasury += amount
        self.total_issuance += amount
        self.minted_this_era += amount

    def flow(self, validator: str) -> ValidatorFlow:
        return self.flows.setdefault(validator, ValidatorFlow())

    def reserve(self, account_id: str, amount: int) -> None:
        acct = self.accounts[account_id]
        if amount < 0 or acct.free < amount:
            raise InsufficientFunds(f"{account_id}: free {acct.free} < {amount}")
        acct.free -= amount
        acct.reserved += amount

    def unreserve(self, account_id: str, amount: int) -> None:
        acct = self.accounts[account_id]
        if amount < 0 or acct.reserved < amount:
            raise EconomicsError(f"{account_id}: reserved {acct.reserved} < {amount}")
        acct.reserved -= amount
        acct.free += amount

    def total_bonded(self) -> int:
        return sum(a.bonded for a in self.accounts.values())

    @property
    def staking_rate(self) -> Fraction:
        if self.total_issuance == 0:
            return Fraction(0)
        return Fraction(self.total_bonded(), self.total_issuance)

    def balances_total(self) -> int:
        return sum(a.total for a in self.accounts.values())

    def check_conservation(self) -> None:
        held = self.balances_total() + self.treasury
        if held != self.total_issuance:
            raise ConservationError(
                f"era {self.era}: balances+treasury {held} != issuance {self.total_issuance}")
        if self.records:
            prev = self.records[-1].total_issuance
            if self.total_issuance != prev + self.minted_this_era - self.burned_this_era:
                raise ConservationError(f"era {self.era}: issuance history broken")

    def close_era(self) -> EraRecord:
        """Archive this era's flows, then open the next era."""
        self.check_conservation()
        for v, pts in self.era_points.items():
            self.flow(v).points = pts
        record = EraRecord(self.era, self.total_issuance, self.treasury, self.minted_this_era,
                           self.burned_this_era, self.flows)
        self.records.append(record)
        self.era += 1
        self.flows = {}
        self.era_points = {}
        self.minted_this_era = 0
        self.burned_this_era = 0
        self.treasury_at_era_start = self.treasury
        return record


def write_era_csv(records: Iterable[EraRecord], path: str | Path) -> Path:
    path = Path(path)
    prev_treasury = 0
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(ERA_CSV_HEADER)
        for rec in records:
            for v in sorted(rec.flows):
                f = rec.flows[v]
                w.writerow([rec.era, v, f.points, f.reward, f.commission_taken, f.slash,
                            f.treasury_delta])
            w.writerow([rec.era, ERA_SUMMARY_ROW, sum(f.points for f in rec.flows.values()),
                        sum(f.reward for f in rec.flows.values()),
                        sum(f.commission_taken for f in rec.flows.values()),
                        sum(f.slash for f in rec.flows.values()), rec.treasury - prev_treasury])
            prev_treasury = rec.treasury
    return path


# -- operations ----------------------------------------------------------------

def route_fee(ledger: EraLedger, sender: Account, author: str, fee: int, tip: int = 0) -> int:
    """Move ``fee`` + ``tip`` out of ``sender``: 20% of the fee (floored) and
    the whole tip to the author, the rest of the fee to the treasury."""
    if fee < 0 or tip < 0 or sender.free < fee + tip:
        raise InsufficientBalance(f"{sender.id}: free {sender.free} < {fee + tip}")
    to_author = fee * AUTHOR_FEE_SHARE.numerator // AUTHOR_FEE_SHARE.denominator
    to_treasury = fee - to_author
    sender.free -= fee + tip
    ledger.accounts[author].free += to_author + tip
    ledger.treasury += to_treasury
    ledger.flow(author).treasury_delta += to_treasury
    return fee


def charge_fee(tx: Transaction, sender: Account, author: str, params: FeeParams,
               ledger: EraLedger) -> int:
    """Withdraw fee + tip from ``sender``. Returns the fee (tip excluded)."""
    return route_fee(ledger, sender, author, params.fee(tx.length, tx.weight), tx.tip)


def award_era_points(ledger: EraLedger, validator: str, event: PointEvent | str,
                     count: int = 1) -> EraLedger:
    if validator not in ledger.active_set:
        raise InactiveValidator(validator)
    event = PointEvent(event)
    per = (ledger.points.authored_block if event is PointEvent.AUTHORED_BLOCK
           else ledger.points.validity_statement)
    ledger.era_points[validator] = ledger.era_points.get(validator, 0) + per * count
    return ledger


def _staker_rate(x: Fraction, p: InflationParams) -> Decimal:
    """Annual staker payout as a fraction of issuance: linear up to the ideal
    staking rate, exponential decay after it."""
    peak = p.max_inflation
    if x <= p.ideal_staking_rate:
        rate = p.min_inflation + (peak - p.min_inflation) * x / p.ideal_staking_rate
        return Decimal(rate.numerator) / Decimal(rate.denominator)
    exponent = (p.ideal_staking_rate - x) / p.falloff
    e = Decimal(exponent.numerator) / Decimal(exponent.denominator)
    decay = (e * Decimal(2).ln()).exp()
    lo = Decimal(p.min_inflation.numerator) / Decimal(p.min_inflation.denominator)
    span = peak - p.min_inflation
    return lo + Decimal(span.numerator) / Decimal(span.denominator) * decay


def inflation_reward(staking_rate: Fraction, total_issuance: int,
                     params: InflationParams = InflationParams()) -> tuple[int, int]:
    """Per-era (stakers_reward, treasury_remainder).

    The era mints ``max_inflation / eras_per_year`` of issuance; stakers get
    the curve's share of it and the rest goes to the treasury.
    """
    x = Fraction(staking_rate)
    if not 0 <= x <= 1:
        raise ValueError("staking rate must lie in [0, 1]")
    year = params.eras_per_year
    minted = total_issuance * params.max_inflation.numerator // (params.max_inflation.denominator * year)
    with localcontext() as ctx:
        ctx.prec = 60
        stakers = (Decimal(total_issuance) * _staker_rate(x, params) / year).to_integral_value(ROUND_FLOOR)
    stakers = min(int(stakers), minted)
    return stakers, minted - stakers


@dataclass
class Payout:
    credited: dict[str, int] = field(default_factory=dict)
    validator_reward: dict[str, int] = field(default_factory=dict)
    commission_taken: dict[str, int] = field(default_factory=dict)
    to_treasury: int = 0


def rewarded_nominators(exposure: Mapping[str, int],
                        limit: int = MAX_REWARDED_NOMINATORS) -> list[tuple[str, int]]:
    """The top ``limit`` nominators by stake (ties to the lower id)."""
    return sorted(exposure.items(), key=lambda kv: (-kv[1], kv[0]))[:limit]


def split_validator_reward(reward: int, commission: int, own: int,
                           exposure: Mapping[str, int]) -> tuple[int, dict[str, int], int]:
    """Split one validator's era reward.

    Commission (per-mill) comes off the top; the rest is shared pro-rata over
    the self stake and the top 256 nominators. Returns (validator amount,
    nominator shares, rounding dust).
    """
    taken = reward * commission // 1000
    rest = reward - taken
    eligible = rewarded_nominators(exposure)
    base = own + sum(a for _, a in eligible)
    if base == 0:
        return reward, {}, 0
    own_share = rest * own // base
    shares = {}
    for nom, amount in eligible:
        share = rest * amount // base
        if share:
            shares[nom] = share
    return taken + own_share, shares, rest - own_share - sum(shares.values())


def pay_era_rewards(ledger: EraLedger, total_reward: int, stakes: ElectionResult,
                    commissions: Mapping[str, int], restake: Collection[str] = ()) -> Payout:
    """Mint ``total_reward`` and distribute it by era points.

    Each validator's share goes through split_validator_reward. Accounts in
    ``restake`` receive their reward as bonded stake instead of free balance.
    """
    payout = Payout()
    active = sorted(stakes.active_set)
    total_points = sum(ledger.era_points.get(v, 0) for v in active)
    if total_points == 0:
        ledger.mint_to_treasury(total_reward)
        payout.to_treasury = total_reward
        return payout

    def credit(account_id: str, amount: int) -> None:
        if amount:
            payout.credited[account_id] = payout.credited.get(account_id, 0) + amount

    distributed = 0
    for v in active:
        reward = total_reward * ledger.era_points.get(v, 0) // total_points
        distributed += reward
        commission = commissions.get(v, 0)
        exposure = stakes.exposure(v)
        own = stakes.backing[v] - sum(exposure.values())
        mine, shares, dust = split_validator_reward(reward, commission, own, exposure)
        credit(v, mine)
        for nom, share in shares.items():
            credit(nom, share)
        taken = reward * commission // 1000
        payout.to_treasury += dust
        payout.validator_reward[v] = reward
        payout.commission_taken[v] = taken
        flow = ledger.flow(v)
        flow.reward += reward
        flow.commission_taken += taken
        flow.treasury_delta += dust
    payout.to_treasury += total_reward - distributed

    restake = set(restake)
    for account_id, amount in payout.credited.items():
        acct = ledger.accounts[account_id]
        ledger.mint_to(acct, amount)
        if account_id in restake:
            acct.free -= amount
            acct.bonded += amount
    ledger.mint_to_treasury(payout.to_treasury)
    return payout


def _take(account: Account, amount: int) -> list[tuple[object, int]]:
    """Remove up to ``amount`` from bonded, then from unbonding chunks
    (latest unlock first). Returns where it came from."""
    taken = []
    part = min(account.bonded, amount)
    if part:
        account.bonded -= part
        taken.append(("bonded", part))
        amount -= part
    for i in range(len(account.unbonding) - 1, -1, -1):
        if amount == 0:
            break
        chunk, unlock = account.unbonding[i]
        part = min(chunk, amount)
        if part:
            account.unbonding[i] = (chunk - part, unlock)
            taken.append((("unbonding", unlock), part))
            amount -= part
    return taken


def apply_slash(ledger: EraLedger, offenders: Iterable[str], offense: SlashParams,
                n_active: int, stakes: ElectionResult) -> list[SlashEvent]:
    """Slash every offender's whole exposure, rewarded nominators or not.

    The fraction grows super-linearly with the number of simultaneous
    offenders; slashed funds move to the treasury.
    """
    offenders = sorted(set(offenders))
    fraction = offense.fraction(len(offenders), n_active)
    events = []
    for v in offenders:
        exposure = stakes.exposure(v)
        own = stakes.backing.get(v, 0) - sum(exposure.values())
        event = SlashEvent(ledger.era, offense.offense, v, fraction)
        for account_id, stake in [(v, own)] + sorted(exposure.items()):
            due = stake * fraction.numerator // fraction.denominator
            if not due or account_id not in ledger.accounts:
                continue
            for bucket, amount in _take(ledger.accounts[account_id], due):
                event.deductions.append((account_id, bucket, amount))
        ledger.treasury += event.total
        flow = ledger.flow(v)
        flow.slash += event.total
        flow.treasury_delta += event.total
        ledger.slash_events.append(event)
        events.append(event)
    return events


def revert_slash(ledger: EraLedger, event: SlashEvent, current_era: int) -> EraLedger:
    if current_era - event.era > SLASH_REVERT_WINDOW:
        raise WindowExpired(f"slash from era {event.era} cannot be reverted in era {current_era}")
    if event.reverted:
        raise EconomicsError("slash already reverted")
    if ledger.treasury < event.total:
        raise InsufficientTreasury(f"treasury {ledger.treasury} < {event.total}")
    for account_id, bucket, amount in event.deductions:
        acct = ledger.accounts[account_id]
        if bucket == "bonded":
            acct.bonded += amount
            continue
        _, unlock = bucket
        for i, (chunk, era) in enumerate(acct.unbonding):
            if era == unlock:
                acct.unbonding[i] = (chunk + amount, era)
                break
        else:
            acct.free += amount  # chunk already withdrawn
    ledger.treasury -= event.total
    flow = ledger.flow(event.validator)
    flow.slash -= event.total
    flow.treasury_delta -= event.total
    event.reverted = True
    return ledger
