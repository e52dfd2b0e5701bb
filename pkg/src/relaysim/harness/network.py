"""Slot-granular message delivery with seeded delays and drops."""

from __future__ import annotations

import random
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from typing import Any


@dataclass
class DelayModel:
    """Delay of a message in whole slots; 0 means it lands within the slot
    it was sent in. ``matrix`` pins (sender, recipient) pairs and wins over
    the random draw, which makes constructed partitions easy to express."""
    late_prob: float = 0.0
    max_delay: int = 2
    drop_prob: float = 0.0
    drop_by_sender: Mapping[str, float] = field(default_factory=dict)
    matrix: Mapping[tuple[str, str], int] = field(default_factory=dict)

    def delay(self, rng: random.Random, sender: str, recipient: str) -> int | None:
        """None when the message is lost."""
        drop = self.drop_by_sender.get(sender, self.drop_prob)
        if drop and rng.random() < drop:
            return None
        pinned = self.matrix.get((sender, recipient))
        if pinned is not None:
            return pinned
        if self.late_prob and rng.random() < self.late_prob:
            return rng.randint(1, self.max_delay)
        return 0


@dataclass(frozen=True, order=True)
class Delivery:
    time: int
    sender: str
    recipient: str
    payload: Any = field(compare=False)


@dataclass(frozen=True)
class Message:
    sent_at: int
    sender: str
    payload: Any


def network_deliver(events: Iterable[Message], recipients: Sequence[str], model: DelayModel,
                    rng: random.Random) -> list[Delivery]:
    """Fan every message out to all other recipients.

    Draws happen in event order then recipient order, so the result depends
    only on the inputs and the rng state. Output is sorted by
    (time, sender, recipient); a sender always has its own message at once.
    """
    out = []
    for msg in events:
        for r in recipients:
            if r == msg.sender:
                out.append(Delivery(msg.sent_at, msg.sender, r, msg.payload))
                continue
            d = model.delay(rng, msg.sender, r)
            if d is not None:
                out.append(Delivery(msg.sent_at + d, msg.sender, r, msg.payload))
    out.sort()
    return out


def delivered_to_anyone(deliveries: Iterable[Delivery]) -> bool:
    return any(d.recipient != d.sender for d in deliveries)
