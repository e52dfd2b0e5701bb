"""Validator and nominator behaviour.

Every decision reads only simulation state that is public at era close plus
the agent's own seeded rng, so runs stay deterministic.
"""

from __future__ import annotations

import hashlib
import random
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from enum import Enum

from ..economics import Account, EraLedger, split_validator_reward

FULL_COMMISSION = 1000


class Kind(str, Enum):
    HONEST = "honest"
    OFFLINE = "offline"
    EQUIVOCATOR = "equivocator"
    REVERTER = "reverter"
    COLLUDER = "colluder"
    SELF_NOMINATOR = "self_nominator"
    RATIONAL = "rational"

    @property
    def byzantine_voter(self) -> bool:
        return self in (Kind.EQUIVOCATOR, Kind.REVERTER)


def agent_rng(seed: int, agent_id: str) -> random.Random:
    digest = hashlib.sha256(f"agent|{seed}|{agent_id}".encode()).digest()
    return random.Random(int.from_bytes(digest, "big"))


@dataclass
class ValidatorAgent:
    id: str
    kind: Kind
    commission: int
    rng: random.Random
    # nominator accounts the operator also controls
    sybils: list[str] = field(default_factory=list)
    chilled_until: int = -1
    switched_at: int | None = None

    @property
    def full_commission(self) -> bool:
        return self.commission == FULL_COMMISSION

    def eligible(self, era: int) -> bool:
        return era >= self.chilled_until


@dataclass
class NominatorAgent:
    id: str
    targets: list[str]
    rational: bool = False
    # sybil of this validator: only ever nominates it
    owner: str | None = None


def owned_stake(ledger: EraLedger, agent: ValidatorAgent) -> int:
    ids = [agent.id] + agent.sybils
    return sum(ledger.accounts[i].bonded for i in ids)


def owned_free(ledger: EraLedger, agent: ValidatorAgent) -> int:
    return sum(ledger.accounts[i].free for i in [agent.id] + agent.sybils)


def _move_free_to_bond(ledger: EraLedger, agent: ValidatorAgent, amount: int) -> int:
    """Bond up to ``amount`` of the operator's free balance, spread over its
    sybil accounts (or its own account if it has none). Returns the amount bonded."""
    holders = agent.sybils or [agent.id]
    main: Account = ledger.accounts[agent.id]
    # pool the operator's free funds on its own account first
    for s in agent.sybils:
        acct = ledger.accounts[s]
        main.free += acct.free
        acct.free = 0
    amount = min(amount, main.free)
    if amount <= 0:
        return 0
    per, extra = divmod(amount, len(holders))
    for i, h in enumerate(holders):
        part = per + (1 if i < extra else 0)
        main.free -= part
        ledger.accounts[h].bonded += part
    return amount


def required_backing(backings: Mapping[str, int], agents: Mapping[str, ValidatorAgent],
                     margin: float) -> int:
    """Self-backed stake an operator aims for so it stays elected: a margin
    over the best-backed shared-reward validator, falling back to the
    best-backed validator overall."""
    shared = [b for v, b in backings.items() if not agents[v].full_commission]
    reference = max(shared) if shared else max(backings.values(), default=0)
    return int(reference * margin)


def top_up(ledger: EraLedger, agent: ValidatorAgent) -> int:
    """A self-backed operator has no use for idle funds: bond all of them."""
    return _move_free_to_bond(ledger, agent, owned_free(ledger, agent))


def payoff_shared(credited: Mapping[str, int], agent: ValidatorAgent) -> int:
    """What the operator actually received this era across its accounts."""
    return sum(credited.get(i, 0) for i in [agent.id] + agent.sybils)


def payoff_full(validator_reward: int) -> int:
    """What it would receive self-backed at 100% commission, by the same
    split the economy applies."""
    mine, shares, dust = split_validator_reward(validator_reward, FULL_COMMISSION, 0, {})
    return mine + sum(shares.values()) + dust


def consider_switch(ledger: EraLedger, agent: ValidatorAgent, era: int,
                    credited: Mapping[str, int], validator_reward: int, typical_reward: int,
                    target_backing: int, inertia: float) -> bool:
    """Adoption rule for a rational operator still on shared rewards.

    Switch when the full-commission payoff beats what it got and its own
    funds can hold a seat, unless inertia holds it back this era.
    """
    if agent.kind is not Kind.RATIONAL or agent.full_commission:
        return False
    expected = payoff_full(validator_reward or typical_reward)
    if expected <= payoff_shared(credited, agent):
        return False
    if owned_stake(ledger, agent) + owned_free(ledger, agent) < target_backing:
        return False
    if agent.rng.random() < inertia:
        return False
    agent.commission = FULL_COMMISSION
    agent.switched_at = era
    top_up(ledger, agent)
    return True


def retarget(nominator: NominatorAgent, eligible: Sequence[str],
             agents: Mapping[str, ValidatorAgent], rng: random.Random, max_targets: int) -> None:
    """Drop targets that are gone (and, for rational nominators, those that
    keep every reward), then refill from eligible candidates."""
    if nominator.owner is not None:
        return
    ok = set(eligible)

    def acceptable(v: str) -> bool:
        return v in ok and not (nominator.rational and agents[v].full_commission)

    before = len(nominator.targets)
    kept = [t for t in nominator.targets if acceptable(t)]
    if len(kept) == before and kept:
        return
    pool = sorted(v for v in ok if acceptable(v) and v not in kept)
    want = max(1, min(before, max_targets)) - len(kept)
    if want > 0 and pool:
        kept += rng.sample(pool, min(want, len(pool)))
    nominator.targets = kept
