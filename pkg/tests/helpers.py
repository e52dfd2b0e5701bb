"""Tree builders for chain, fork-choice and finality tests, and snapshot
builders for election tests."""

from __future__ import annotations

import random

from relaysim.chain import GENESIS_ID, Authorship, BlockTree, RelayHeader
from relaysim.election import Candidate, ElectionResult, ElectionSnapshot, Nomination


def block(parent, slot, author="v0", primary=True, nonce=0) -> RelayHeader:
    kind = Authorship.PRIMARY if primary else Authorship.SECONDARY
    return RelayHeader(parent=parent, slot=slot, author=author, authorship=kind, nonce=nonce)


def linear(tree: BlockTree, length: int, start=GENESIS_ID, first_slot=1, **kw) -> list:
    ids, parent = [], start
    for i in range(length):
        h = block(parent, first_slot + i, **kw)
        tree.insert(h)
        ids.append(h.id)
        parent = h.id
    return ids


def random_tree(rng: random.Random, size: int, primary_prob: float = 0.5) -> BlockTree:
    """Random tree grown by attaching each new block under a uniform existing one."""
    tree = BlockTree()
    nodes = [GENESIS_ID]
    for i in range(size):
        parent = rng.choice(nodes)
        slot = tree.header(parent).slot + 1 + rng.randrange(3)
        h = block(parent, slot, author=f"v{i}", primary=rng.random() < primary_prob, nonce=i)
        tree.insert(h)
        nodes.append(h.id)
    return tree


def random_snapshot(rng: random.Random, m=12, k=40, seats=6) -> ElectionSnapshot:
    ids = [f"v{i:02d}" for i in range(m)]
    cands = [Candidate(c, rng.randrange(0, 10_000)) for c in ids]
    noms = [Nomination(f"n{j:03d}", rng.randrange(1, 10_000), tuple(rng.sample(ids, rng.randint(1, 5))))
            for j in range(k)]
    return ElectionSnapshot(cands, noms, seats)


def check_conservation(snapshot: ElectionSnapshot, result: ElectionResult) -> None:
    active = set(result.active_set)
    for n in snapshot.nominations:
        mine = {t: a for (nom, t), a in result.assignments.items() if nom == n.nominator}
        assert set(mine) <= set(n.targets) & active
        if set(n.targets) & active:
            assert sum(mine.values()) == n.bond
        else:
            assert sum(mine.values()) == 0
    own = {c.id: c.self_stake for c in snapshot.candidates}
    for v in result.active_set:
        assert result.backing[v] == own[v] + sum(a for (_, t), a in result.assignments.items() if t == v)
