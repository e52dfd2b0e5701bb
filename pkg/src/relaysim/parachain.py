"""Parachain consensus: collation, backing by para-validator groups,
erasure-coded availability, approval checking, plus group formation and
parathread slot bidding."""

from __future__ import annotations

import hashlib
import random
import struct
from collections.abc import Callable, Collection, Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from enum import Enum

from . import erasure

MAX_BLOB_BYTES = 1 << 20

# vote of a dishonest para-validator or checker on a given blob
DishonestPolicy = Callable[["ParachainBlob"], bool]


def always_attest(blob: "ParachainBlob") -> bool:
    return True


class BlobTooLarge(Exception):
    pass


@dataclass(frozen=True)
class ParachainBlob:
    parachain: str
    pov: bytes
    outgoing_messages: int = 0
    # ground truth set by the scenario: would the PoV pass the registered STF
    valid_under_stf: bool = True

    def __post_init__(self):
        if len(self.pov) < 1:
            raise ValueError("PoV payload must be at least one byte")

    def to_bytes(self) -> bytes:
        para = self.parachain.encode()
        return (struct.pack(">H", len(para)) + para
                + struct.pack(">IB", self.outgoing_messages, int(self.valid_under_stf)) + self.pov)

    @classmethod
    def from_bytes(cls, raw: bytes) -> "ParachainBlob":
        (plen,) = struct.unpack(">H", raw[:2])
        para = raw[2: 2 + plen].decode()
        messages, valid = struct.unpack(">IB", raw[2 + plen: 7 + plen])
        return cls(para, raw[7 + plen:], messages, bool(valid))

    @property
    def digest(self) -> bytes:
        return hashlib.sha256(self.to_bytes()).digest()


@dataclass(frozen=True)
class CandidateReceipt:
    parachain: str
    blob_hash: bytes
    backers: frozenset[str]
    group: int

    @property
    def digest(self) -> bytes:
        h = hashlib.sha256(self.parachain.encode() + self.blob_hash)
        for b in sorted(self.backers):
            h.update(b.encode())
        h.update(self.group.to_bytes(4, "big"))
        return h.digest()


@dataclass
class ValidatorGroups:
    era: int
    pool: list[str]
    groups: list[list[str]]

    def assignment(self, para_ids: Sequence[str], epoch: int) -> dict[str, int]:
        """Round-robin rotation of groups over parachains, fixed within an epoch."""
        n = len(self.groups)
        return {para: (i + epoch) % n for i, para in enumerate(sorted(para_ids))}

    def group_of(self, validator: str) -> int | None:
        for gid, members in enumerate(self.groups):
            if validator in members:
                return gid
        return None


def _seeded_rng(seed: bytes, label: bytes) -> random.Random:
    return random.Random(int.from_bytes(hashlib.sha256(label + seed).digest(), "big"))


def form_groups(validators: Sequence[str], era_seed: bytes, pool_size: int = 200,
                group_size: int = 5, era: int = 0, predictable: bool = False) -> ValidatorGroups:
    """Sample the para-validator pool and cut it into groups.

    ``predictable`` skips the randomness: the pool is the first ``pool_size``
    validators in id order, grouped consecutively. It models an adversary who
    knows the grouping in advance.
    """
    if not validators:
        raise ValueError("need at least one validator")
    ordered = sorted(validators)
    size = min(pool_size, len(ordered))
    if predictable:
        pool = ordered[:size]
    else:
        rng = _seeded_rng(era_seed, b"para-pool")
        pool = rng.sample(ordered, size)
        rng.shuffle(pool)
    groups = [pool[i: i + group_size] for i in range(0, len(pool), group_size)]
    return ValidatorGroups(era=era, pool=pool, groups=groups)


def collate(parachain: str, honest: bool, payload_size: int, slot: int = 0, seed: int = 0,
            outgoing_messages: int = 0) -> ParachainBlob:
    if payload_size < 1:
        raise ValueError("payload_size must be >= 1")
    key = hashlib.sha256(f"{parachain}|{slot}|{seed}".encode()).digest()
    pov = random.Random(int.from_bytes(key, "big")).randbytes(payload_size)
    return ParachainBlob(parachain, pov, outgoing_messages, valid_under_stf=honest)


def _attests(member: str, blob: ParachainBlob, honesty: Mapping[str, bool],
             dishonest: DishonestPolicy) -> bool:
    if honesty.get(member, True):
        return blob.valid_under_stf
    return dishonest(blob)


def back_candidate(blob: ParachainBlob, group: Sequence[str], honesty: Mapping[str, bool],
                   group_id: int = 0, dishonest: DishonestPolicy = always_attest,
                   absent: Collection[str] = ()) -> CandidateReceipt | None:
    """Receipt iff a strict majority of the whole group attests; ``absent``
    members never attest but still count toward the group size."""
    if not group:
        raise ValueError("backing group is empty")
    backers = frozenset(m for m in group
                        if m not in absent and _attests(m, blob, honesty, dishonest))
    if 2 * len(backers) <= len(group):
        return None
    return CandidateReceipt(blob.parachain, blob.digest, backers, group_id)


@dataclass
class ErasureCoding:
    n_chunks: int
    threshold: int
    chunks: list[erasure.Chunk]


def erasure_encode(blob: ParachainBlob, n_validators: int,
                   max_bytes: int = MAX_BLOB_BYTES) -> ErasureCoding:
    if n_validators < 4:
        raise ValueError("erasure coding needs at least 4 validators")
    if len(blob.pov) > max_bytes:
        raise BlobTooLarge(f"{len(blob.pov)} bytes exceeds {max_bytes}")
    threshold = erasure.reconstruction_threshold(n_validators)
    chunks = erasure.encode(blob.to_bytes(), n_validators, threshold)
    return ErasureCoding(n_validators, threshold, chunks)


def reconstruct_blob(chunks: Iterable[erasure.Chunk], threshold: int) -> ParachainBlob:
    return ParachainBlob.from_bytes(erasure.decode(chunks, threshold))


def availability_vote(coding: ErasureCoding, holders: Collection[str], n_validators: int) -> bool:
    return 3 * len(set(holders)) > 2 * n_validators


class Verdict(str, Enum):
    APPROVED = "approved"
    DISPUTED = "disputed"


@dataclass
class ApprovalOutcome:
    verdict: Verdict
    attesting: frozenset[str]
    # validators to slash once the dispute is settled
    offenders: frozenset[str] = frozenset()


def sample_checkers(validators: Sequence[str], exclude: Collection[str], k: int,
                    seed: bytes) -> list[str]:
    eligible = sorted(v for v in validators if v not in exclude)
    rng = _seeded_rng(seed, b"approval-checkers")
    return rng.sample(eligible, min(k, len(eligible)))


def approval_check(receipt: CandidateReceipt, blob: ParachainBlob, checkers: Sequence[str],
                   honesty: Mapping[str, bool], dishonest: DishonestPolicy = always_attest
                   ) -> ApprovalOutcome:
    """Approve on a strict 2/3 supermajority of checker attestations.

    A dispute escalates to the whole validator set, whose honest supermajority
    re-executes the PoV; the losing side is slashed. For an invalid blob that
    is every backer, for a valid one the checkers who voted against it.
    """
    attesting = frozenset(c for c in checkers if _attests(c, blob, honesty, dishonest))
    if checkers and 3 * len(attesting) > 2 * len(checkers):
        return ApprovalOutcome(Verdict.APPROVED, attesting)
    if blob.valid_under_stf:
        offenders = frozenset(c for c in checkers if c not in attesting)
    else:
        offenders = frozenset(receipt.backers)
    return ApprovalOutcome(Verdict.DISPUTED, attesting, offenders)


def schedule_parathreads(bids: Iterable[tuple[str, int]], slots_per_block: int) -> list[str]:
    bids = list(bids)
    if any(amount < 0 for _, amount in bids):
        raise ValueError("bid amounts must be non-negative")
    ranked = sorted(bids, key=lambda b: (-b[1], b[0]))
    return [para for para, _ in ranked[:slots_per_block]]


@dataclass
class PipelineOutcome:
    blob: ParachainBlob
    receipt: CandidateReceipt | None = None
    available: bool = False
    approval: ApprovalOutcome | None = None
    reconstructed_ok: bool = False
    offenders: frozenset[str] = field(default_factory=frozenset)

    @property
    def included(self) -> bool:
        return (self.receipt is not None and self.available and self.approval is not None
                and self.approval.verdict is Verdict.APPROVED)


def run_pipeline(blob: ParachainBlob, group: Sequence[str], group_id: int,
                 validators: Sequence[str], holders: Collection[str],
                 honesty: Mapping[str, bool], checker_seed: bytes, n_checkers: int = 5,
                 dishonest_backing: DishonestPolicy = always_attest,
                 dishonest_approval: DishonestPolicy = always_attest,
                 absent: Collection[str] = (),
                 approval_honesty: Mapping[str, bool] | None = None) -> PipelineOutcome:
    """Backing, then availability, then approvals; stops at the first failed gate.

    ``approval_honesty`` overrides ``honesty`` for the checkers, e.g. to model
    colluders that back but check honestly.
    """
    out = PipelineOutcome(blob)
    out.receipt = back_candidate(blob, group, honesty, group_id, dishonest_backing, absent)
    if out.receipt is None:
        return out
    coding = erasure_encode(blob, len(validators))
    out.available = availability_vote(coding, holders, len(validators))
    if not out.available:
        return out
    index = {v: i for i, v in enumerate(validators)}
    held = [coding.chunks[index[h]] for h in sorted(holders, key=index.__getitem__)]
    out.reconstructed_ok = reconstruct_blob(held, coding.threshold) == blob
    checkers = sample_checkers(validators, group, n_checkers, checker_seed)
    out.approval = approval_check(out.receipt, blob, checkers,
                                  honesty if approval_honesty is None else approval_honesty,
                                  dishonest_approval)
    out.offenders = out.approval.offenders
    return out
