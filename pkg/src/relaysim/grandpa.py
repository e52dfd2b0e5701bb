"""Finality gadget collapsed to one vote phase per round.

A block is final once strictly more than 2n/3 counted voters vote for it or
for one of its descendants. A voter that backs two conflicting blocks in
the same round becomes an equivocator and none of its votes are counted.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .chain import BlockId, BlockTree, UnknownBlock


class GrandpaError(Exception):
    pass


class WrongRound(GrandpaError):
    pass


@dataclass(frozen=True)
class FinalityVote:
    round: int
    voter: str
    target: BlockId


@dataclass
class RoundState:
    round: int
    votes: dict[str, BlockId] = field(default_factory=dict)
    equivocators: set[str] = field(default_factory=set)
    # voter -> the two conflicting targets, kept as slashing evidence
    evidence: dict[str, tuple[BlockId, BlockId]] = field(default_factory=dict)
    finalized_in_round: BlockId | None = None

    def counted(self) -> dict[str, BlockId]:
        return {v: t for v, t in self.votes.items() if v not in self.equivocators}


def supermajority(count: int, n_validators: int) -> bool:
    return 3 * count > 2 * n_validators


def cast_vote(state: RoundState, vote: FinalityVote, tree: BlockTree) -> RoundState:
    if vote.round != state.round:
        raise WrongRound(f"vote for round {vote.round} in round {state.round}")
    if vote.target not in tree:
        raise UnknownBlock(vote.target.hex())
    if vote.voter in state.equivocators:
        return state
    previous = state.votes.get(vote.voter)
    if previous is None:
        state.votes[vote.voter] = vote.target
    elif previous != vote.target and tree.conflicts(previous, vote.target, include_pruned=True):
        state.equivocators.add(vote.voter)
        state.evidence[vote.voter] = (previous, vote.target)
    return state


def tally(state: RoundState, tree: BlockTree) -> dict[BlockId, int]:
    """Votes on each live non-final block, counting a vote for every ancestor
    of its target down to the finalized head."""
    counts: dict[BlockId, int] = {}
    root = tree.finalized
    live = tree.unfinalized()
    for target in state.counted().values():
        if target != root and target not in live:
            # final ancestor or pruned branch: cannot move finality
            continue
        node = target
        while node != root:
            counts[node] = counts.get(node, 0) + 1
            node = tree.nodes[node].parent
        counts[root] = counts.get(root, 0) + 1
    return counts


def try_finalize(state: RoundState, tree: BlockTree, n_validators: int) -> BlockId | None:
    """Finalize the highest block carrying a supermajority and prune the tree.

    Returns None when finality does not advance. Two conflicting blocks can
    never both carry more than 2n/3 distinct voters, so the qualifying blocks
    form a chain and the highest one is unique.
    """
    counts = tally(state, tree)
    best = None
    for block, count in counts.items():
        if supermajority(count, n_validators):
            if best is None or tree.nodes[block].slot > tree.nodes[best].slot:
                best = block
    if best is None or best == tree.finalized:
        return None
    tree.prune_on_finalize(best)
    state.finalized_in_round = best
    return best


def detect_reversion_attack(history: list[BlockId], candidate: BlockId, tree: BlockTree) -> bool:
    """True iff ``candidate`` conflicts with a previously finalized block.

    ``history`` is ancestor-ordered, so conflicting with any entry is the same
    as conflicting with the last one: anything comparable with the last entry
    is comparable with all of its ancestors.
    """
    if not history:
        return False
    if not tree.knows(candidate):
        raise UnknownBlock(candidate.hex())
    return tree.conflicts(history[-1], candidate, include_pruned=True)
