"""Slot-based block production: epoch clock, primary leader lottery,
round-robin secondaries and the most-primaries fork choice.

The VRF is replaced by a keyed SHA-256 pseudo-random function. Every agent
lives in one trusted process, so only unpredictability matters, and that is
kept by not revealing assignments to adversary agents ahead of time.
"""

from __future__ import annotations

import hashlib
from collections.abc import Collection, Sequence
from dataclasses import dataclass
from fractions import Fraction

from .chain import GENESIS_ID, Authorship, BlockId, BlockTree, RelayHeader

_TWO64 = 1 << 64


class BabeError(Exception):
    pass


class NoValidators(BabeError):
    pass


class NotSlotLeader(BabeError):
    pass


@dataclass(frozen=True)
class EpochConfig:
    epoch_length: int = 2400
    slot_duration: int = 6
    c_threshold: Fraction | float = Fraction(1, 4)
    epoch_randomness: bytes = bytes(32)
    epoch_index: int = 0

    def __post_init__(self):
        if self.epoch_length < 1:
            raise ValueError("epoch_length must be >= 1")
        if not 0 <= self.c_threshold <= 1:
            raise ValueError("c_threshold must lie in [0, 1]")

    @property
    def first_slot(self) -> int:
        # slot 0 belongs to genesis
        return self.epoch_index * self.epoch_length + 1

    def slots(self) -> range:
        return range(self.first_slot, self.first_slot + self.epoch_length)


@dataclass(frozen=True)
class SlotAssignment:
    slot: int
    primaries: frozenset[str]
    secondary: str

    def is_leader(self, validator: str) -> bool:
        return validator in self.primaries or validator == self.secondary


def genesis_randomness(seed: int) -> bytes:
    return hashlib.sha256(b"babe-genesis" + seed.to_bytes(8, "big", signed=False)).digest()


def next_epoch_randomness(randomness: bytes, epoch_index: int) -> bytes:
    return hashlib.sha256(randomness + epoch_index.to_bytes(8, "big")).digest()


def _threshold(c: Fraction | float) -> int:
    # integer cut-off so that c = 1 admits every draw and c = 0 none
    return int(Fraction(c) * _TWO64)


def lottery_draw(randomness: bytes, slot: int, validator: str) -> int:
    """64-bit pseudo-random value keyed by (epoch randomness, slot, validator)."""
    digest = hashlib.sha256(b"babe-vrf" + randomness + slot.to_bytes(8, "big")
                            + validator.encode()).digest()
    return int.from_bytes(digest[:8], "big")


def secondary_offset(randomness: bytes, n: int) -> int:
    return int.from_bytes(hashlib.sha256(b"babe-secondary" + randomness).digest(), "big") % n


def assign_slots(config: EpochConfig, validators: Sequence[str]) -> list[SlotAssignment]:
    if not validators:
        raise NoValidators("cannot assign slots without validators")
    n = len(validators)
    cut = _threshold(config.c_threshold)
    offset = secondary_offset(config.epoch_randomness, n)
    base = hashlib.sha256(b"babe-vrf" + config.epoch_randomness)
    keys = [v.encode() for v in validators]
    out = []
    for slot in config.slots():
        prefix = base.copy()
        prefix.update(slot.to_bytes(8, "big"))
        primaries = []
        for v, key in zip(validators, keys):
            h = prefix.copy()
            h.update(key)
            if int.from_bytes(h.digest()[:8], "big") < cut:
                primaries.append(v)
        out.append(SlotAssignment(slot, frozenset(primaries), validators[(slot + offset) % n]))
    return out


def best_chain(tree: BlockTree, view: Collection[BlockId] | None = None,
               before_slot: int | None = None) -> BlockId:
    """Tip with the most primary blocks above the finalized head; ties go to
    the lower block id. ``view`` restricts to the blocks one validator has
    seen, ``before_slot`` to blocks authored strictly earlier."""
    root = tree.finalized
    candidates = [root]
    for b in tree.unfinalized():
        if view is not None and b not in view:
            continue
        if before_slot is not None and tree.nodes[b].slot >= before_slot:
            continue
        candidates.append(b)
    members = set(candidates)
    best, best_key = root, None
    for b in candidates:
        if any(c in members for c in tree.child_ids(b)):
            continue
        key = (-tree.primary_count(b), b)
        if best_key is None or key < best_key:
            best, best_key = b, key
    return best


def author_block(assignment: SlotAssignment, tree: BlockTree, author: str,
                 included_candidates: Sequence = (), view: Collection[BlockId] | None = None,
                 nonce: int = 0) -> RelayHeader:
    if author in assignment.primaries:
        authorship = Authorship.PRIMARY
    elif author == assignment.secondary:
        authorship = Authorship.SECONDARY
    else:
        raise NotSlotLeader(f"{author} holds no claim on slot {assignment.slot}")
    parent = best_chain(tree, view, before_slot=assignment.slot)
    return RelayHeader(parent=parent, slot=assignment.slot, author=author,
                       authorship=authorship, included_candidates=tuple(included_candidates),
                       nonce=nonce)


__all__ = [
    "GENESIS_ID", "BabeError", "NoValidators", "NotSlotLeader", "EpochConfig",
    "SlotAssignment", "assign_slots", "author_block", "best_chain", "genesis_randomness",
    "next_epoch_randomness", "lottery_draw",
]
