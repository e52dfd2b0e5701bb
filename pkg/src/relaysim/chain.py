"""Relay block headers and the block tree shared by block production, finality
and the parachain pipeline."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Iterator, Sequence

BlockId = bytes

GENESIS_ID: BlockId = bytes(32)


class ChainError(Exception):
    pass


class UnknownParent(ChainError):
    pass


class UnknownBlock(ChainError):
    pass


class DuplicateBlock(ChainError):
    pass


class SlotOrderViolation(ChainError):
    pass


class PreFinalityFork(ChainError):
    pass


class NotDescendant(ChainError):
    """Raised when finality would move to a block conflicting with the
    current finalized head. Reaching this is a safety violation."""


class Authorship(str, Enum):
    PRIMARY = "primary"
    SECONDARY = "secondary"


def _header_digest(parent: BlockId, slot: int, author: str, authorship: Authorship,
                   candidates: Sequence, nonce: int) -> BlockId:
    h = hashlib.sha256()
    h.update(parent)
    h.update(slot.to_bytes(8, "big"))
    h.update(author.encode())
    h.update(b"\x01" if authorship is Authorship.PRIMARY else b"\x02")
    h.update(len(candidates).to_bytes(4, "big"))
    for receipt in candidates:
        h.update(receipt.digest)
    h.update(nonce.to_bytes(8, "big"))
    return h.digest()


@dataclass(frozen=True)
class RelayHeader:
    parent: BlockId
    slot: int
    author: str
    authorship: Authorship = Authorship.PRIMARY
    included_candidates: tuple = ()
    # distinguishes otherwise identical headers (equivocating authors)
    nonce: int = 0
    id: BlockId = field(init=False, compare=False)

    def __post_init__(self):
        if self.slot < 0:
            raise ValueError("slot must be non-negative")
        object.__setattr__(self, "included_candidates", tuple(self.included_candidates))
        object.__setattr__(
            self, "id",
            _header_digest(self.parent, self.slot, self.author, self.authorship,
                           self.included_candidates, self.nonce),
        )

    @property
    def is_primary(self) -> bool:
        return self.authorship is Authorship.PRIMARY


def genesis_header() -> RelayHeader:
    header = RelayHeader(parent=GENESIS_ID, slot=0, author="genesis")
    object.__setattr__(header, "id", GENESIS_ID)
    return header


class BlockTree:
    """All relay blocks known to one simulation run.

    Blocks that conflict with finality are moved to an archive when pruned so
    that ancestry questions about them (reversion attempts) stay answerable.
    """

    def __init__(self):
        genesis = genesis_header()
        self.nodes: dict[BlockId, RelayHeader] = {GENESIS_ID: genesis}
        self._children: dict[BlockId, list[BlockId]] = {GENESIS_ID: []}
        # cumulative count of primary blocks from genesis, used by fork choice
        self._primaries: dict[BlockId, int] = {GENESIS_ID: 0}
        self._unfinalized: set[BlockId] = set()
        self._archive: dict[BlockId, RelayHeader] = {}
        self.finalized: BlockId = GENESIS_ID

    def __len__(self) -> int:
        return len(self.nodes)

    def __contains__(self, block_id: BlockId) -> bool:
        return block_id in self.nodes

    def __iter__(self) -> Iterator[BlockId]:
        return iter(self.nodes)

    @property
    def genesis(self) -> RelayHeader:
        return self.nodes[GENESIS_ID]

    def header(self, block_id: BlockId, include_pruned: bool = False) -> RelayHeader:
        try:
            return self.nodes[block_id]
        except KeyError:
            if include_pruned and block_id in self._archive:
                return self._archive[block_id]
            raise UnknownBlock(block_id.hex()) from None

    def knows(self, block_id: BlockId) -> bool:
        """True for live blocks and for blocks removed by pruning."""
        return block_id in self.nodes or block_id in self._archive

    def children(self, block_id: BlockId) -> list[BlockId]:
        if block_id not in self.nodes:
            raise UnknownBlock(block_id.hex())
        return list(self._children[block_id])

    def child_ids(self, block_id: BlockId) -> list[BlockId]:
        """Live children without copying; callers must not mutate."""
        return self._children[block_id]

    def primary_count(self, block_id: BlockId) -> int:
        return self._primaries[block_id]

    def is_live(self, block_id: BlockId) -> bool:
        """Known, not yet final, and not pruned."""
        return block_id in self._unfinalized

    def unfinalized(self) -> set[BlockId]:
        return set(self._unfinalized)

    def insert(self, header: RelayHeader) -> None:
        if header.id in self.nodes or header.id in self._archive:
            raise DuplicateBlock(header.id.hex())
        parent = self.nodes.get(header.parent)
        if parent is None:
            if header.parent in self._archive:
                raise PreFinalityFork(f"parent {header.parent.hex()[:12]} was pruned by finality")
            raise UnknownParent(header.parent.hex())
        if header.slot <= parent.slot:
            raise SlotOrderViolation(f"slot {header.slot} <= parent slot {parent.slot}")
        if header.parent != self.finalized and header.parent not in self._unfinalized:
            raise PreFinalityFork(
                f"parent {header.parent.hex()[:12]} is a strict ancestor of the finalized block")
        self.nodes[header.id] = header
        self._children[header.id] = []
        self._children[header.parent].append(header.id)
        self._primaries[header.id] = self._primaries[header.parent] + int(header.is_primary)
        self._unfinalized.add(header.id)

    def chain_to(self, block_id: BlockId) -> list[BlockId]:
        if block_id not in self.nodes:
            raise UnknownBlock(block_id.hex())
        path = [block_id]
        while path[-1] != GENESIS_ID:
            path.append(self.nodes[path[-1]].parent)
        path.reverse()
        return path

    def is_ancestor(self, ancestor: BlockId, block_id: BlockId,
                    include_pruned: bool = False) -> bool:
        """Ancestor-or-self test. Walks parent links; slots bound the walk."""
        target = self.header(ancestor, include_pruned)
        current = self.header(block_id, include_pruned)
        while current.slot > target.slot:
            current = self.header(current.parent, include_pruned)
        return current.id == ancestor

    def conflicts(self, a: BlockId, b: BlockId, include_pruned: bool = False) -> bool:
        return not (self.is_ancestor(a, b, include_pruned) or self.is_ancestor(b, a, include_pruned))

    def descendants(self, block_id: BlockId) -> set[BlockId]:
        out: set[BlockId] = set()
        stack = list(self._children[block_id])
        while stack:
            node = stack.pop()
            out.add(node)
            stack.extend(self._children[node])
        return out

    def leaves(self, under: BlockId | None = None) -> list[BlockId]:
        root = self.finalized if under is None else under
        candidates = self.descendants(root) | {root}
        return [b for b in candidates if not self._children[b]]

    def prune_on_finalize(self, block_id: BlockId) -> None:
        if block_id not in self.nodes:
            raise UnknownBlock(block_id.hex())
        if block_id == self.finalized:
            return
        if block_id not in self._unfinalized:
            raise NotDescendant(
                f"{block_id.hex()[:12]} does not descend from finalized {self.finalized.hex()[:12]}")
        keep = self.descendants(block_id)
        path = set()
        node = block_id
        while node != self.finalized:
            path.add(node)
            node = self.nodes[node].parent
        for dead in self._unfinalized - keep - path:
            header = self.nodes.pop(dead)
            self._archive[dead] = header
            del self._children[dead]
            del self._primaries[dead]
        for node in path:
            parent = self.nodes[node].parent
            self._children[parent] = [c for c in self._children[parent] if c in self.nodes]
        self._unfinalized = keep
        self.finalized = block_id

    def extend(self, headers: Iterable[RelayHeader]) -> None:
        for header in headers:
            self.insert(header)
