"""NPoS validator election: sequential Phragmen with stake balancing.

Loads are exact rationals. All of them share the denominator
``D_r = a_1 * ... * a_r`` (product of the winners' approval stakes), so the
core keeps integer numerators over that running product instead of
``Fraction`` objects; assignments are converted to integer Planck with
largest-remainder rounding, which keeps every nominator's total exact.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

MAX_TARGETS = 16
MAX_COMMISSION = 1000  # per-mill


class ElectionError(Exception):
    pass


class EmptyCandidateSet(ElectionError):
    pass


class EmptyActiveSet(ElectionError):
    pass


class InvalidSnapshot(ElectionError):
    pass


@dataclass(frozen=True)
class Candidate:
    id: str
    self_stake: int
    commission: int = 0


@dataclass(frozen=True)
class Nomination:
    nominator: str
    bond: int
    targets: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "targets", tuple(self.targets))


@dataclass
class ElectionSnapshot:
    candidates: list[Candidate]
    nominations: list[Nomination]
    seats: int
    min_nominator_bond: int = 0

    def validate(self) -> None:
        ids = [c.id for c in self.candidates]
        if len(set(ids)) != len(ids):
            raise InvalidSnapshot("duplicate candidate id")
        if self.seats < 1:
            raise InvalidSnapshot("seats must be >= 1")
        if self.candidates and self.seats > len(self.candidates):
            raise InvalidSnapshot(f"seats {self.seats} exceed {len(self.candidates)} candidates")
        for c in self.candidates:
            if c.self_stake < 0:
                raise InvalidSnapshot(f"{c.id}: negative self stake")
            if not 0 <= c.commission <= MAX_COMMISSION:
                raise InvalidSnapshot(f"{c.id}: commission {c.commission} outside [0, 1000]")
        known = set(ids)
        seen = set()
        for n in self.nominations:
            if n.nominator in seen:
                raise InvalidSnapshot(f"duplicate nominator {n.nominator}")
            seen.add(n.nominator)
            if not 1 <= len(n.targets) <= MAX_TARGETS:
                raise InvalidSnapshot(f"{n.nominator}: {len(n.targets)} targets")
            if len(set(n.targets)) != len(n.targets):
                raise InvalidSnapshot(f"{n.nominator}: repeated target")
            if n.bond < self.min_nominator_bond:
                raise InvalidSnapshot(f"{n.nominator}: bond below minimum")
            missing = set(n.targets) - known
            if missing:
                raise InvalidSnapshot(f"{n.nominator}: unknown targets {sorted(missing)}")

    def scaled(self, factor: int) -> "ElectionSnapshot":
        return ElectionSnapshot(
            candidates=[Candidate(c.id, c.self_stake * factor, c.commission) for c in self.candidates],
            nominations=[Nomination(n.nominator, n.bond * factor, n.targets) for n in self.nominations],
            seats=self.seats,
            min_nominator_bond=self.min_nominator_bond * factor,
        )


@dataclass
class ElectionResult:
    # in election order
    active_set: list[str]
    assignments: dict[tuple[str, str], int] = field(default_factory=dict)
    backing: dict[str, int] = field(default_factory=dict)

    def exposure(self, validator: str) -> dict[str, int]:
        """Nominator stake behind ``validator``."""
        return dict(self.exposures().get(validator, {}))

    def exposures(self) -> dict[str, dict[str, int]]:
        # results are not mutated after construction, so this is computed once
        cached = self.__dict__.get("_exposures")
        if cached is None:
            cached = {v: {} for v in self.active_set}
            for (nom, v), amt in self.assignments.items():
                if amt > 0:
                    cached.setdefault(v, {})[nom] = amt
            self.__dict__["_exposures"] = cached
        return cached

    def gap(self) -> int:
        values = [self.backing[v] for v in self.active_set]
        return max(values) - min(values) if values else 0


def sequential_phragmen(snapshot: ElectionSnapshot) -> ElectionResult:
    if not snapshot.candidates:
        raise EmptyCandidateSet("no candidates")
    cand_ids = sorted(c.id for c in snapshot.candidates)
    index = {cid: i for i, cid in enumerate(cand_ids)}
    self_stake = {c.id: c.self_stake for c in snapshot.candidates}
    m = len(cand_ids)
    seats = min(snapshot.seats, m)

    # self stake only ever votes for its own candidate, so it contributes to
    # approval stake but never to another candidate's load sum
    approval = [self_stake[cid] for cid in cand_ids]
    voters = [(n.nominator, n.bond, [index[t] for t in n.targets])
              for n in snapshot.nominations if n.bond > 0]
    supporters: list[list[int]] = [[] for _ in range(m)]
    for vi, (_, bond, targets) in enumerate(voters):
        for t in targets:
            approval[t] += bond
            supporters[t].append(vi)

    denom = 1                 # D_r
    prefix = [1]              # D_0 .. D_r
    load = [0] * len(voters)  # numerators over D_r
    load_sum = [0] * m        # sum of bond * load over supporters, numerators over D_r
    edges: list[list[tuple[int, int, int]]] = [[] for _ in voters]  # (target, num, round)
    elected: list[int] = []
    is_elected = [False] * m

    for _ in range(seats):
        best = -1
        best_num = best_app = 0
        for c in range(m):
            if is_elected[c]:
                continue
            a_c = approval[c]
            if best < 0:
                best, best_num, best_app = c, denom + load_sum[c], a_c
            elif a_c and (not best_app or (denom + load_sum[c]) * best_app < best_num * a_c):
                best, best_num, best_app = c, denom + load_sum[c], a_c
        elected.append(best)
        is_elected[best] = True
        if not best_app:
            continue
        score = best_num  # over D_{r+1} = D_r * a_w
        load = [x * best_app for x in load]
        load_sum = [x * best_app for x in load_sum]
        denom *= best_app
        prefix.append(denom)
        rnd = len(prefix) - 1
        for vi in supporters[best]:
            delta = score - load[vi]
            load[vi] = score
            edges[vi].append((best, delta, rnd))
            bump = voters[vi][1] * delta
            for t in voters[vi][2]:
                if not is_elected[t]:
                    load_sum[t] += bump

    active = [cand_ids[c] for c in elected]
    assignments: dict[tuple[str, str], int] = {}
    backing = {cid: self_stake[cid] for cid in active}
    for vi, (nominator, bond, _) in enumerate(voters):
        voter_edges = edges[vi]
        if not voter_edges:
            continue
        if len(voter_edges) == 1:
            target = cand_ids[voter_edges[0][0]]
            assignments[(nominator, target)] = bond
            backing[target] += bond
            continue
        # bring this voter's edge weights to the denominator of its last edge
        last = prefix[voter_edges[-1][2]]
        scaled = [(cand_ids[t], num * (last // prefix[r])) for t, num, r in voter_edges]
        total = sum(num for _, num in scaled)
        for target, amount in _largest_remainder(bond, scaled, total):
            assignments[(nominator, target)] = amount
            backing[target] += amount
    return ElectionResult(active, assignments, backing)


def _largest_remainder(budget: int, weights: list[tuple[str, int]], total: int) -> list[tuple[str, int]]:
    """Split ``budget`` over ``weights`` (numerators summing to ``total``)."""
    floors = [[target, *divmod(budget * w, total)] for target, w in weights]
    leftover = budget - sum(f[1] for f in floors)
    if leftover:
        for entry in sorted(floors, key=lambda f: (-f[2], f[0]))[:leftover]:
            entry[1] += 1
    return [(target, q) for target, q, _ in floors]


def balance_assignments(result: ElectionResult, snapshot: ElectionSnapshot,
                        max_iterations: int = 10) -> ElectionResult:
    """Pairwise equalisation: each nominator moves stake from its most-backed
    elected target to its least-backed one. Every move shifts at most half
    the gap between the two, so the active-set max never rises and the min
    never falls."""
    active = set(result.active_set)
    backing = dict(result.backing)
    assignments = dict(result.assignments)
    movable = []
    for n in sorted(snapshot.nominations, key=lambda n: n.nominator):
        elected = sorted(t for t in n.targets if t in active)
        if len(elected) >= 2:
            for t in elected:
                assignments.setdefault((n.nominator, t), 0)
            movable.append((n.nominator, elected))

    for _ in range(max_iterations):
        moved = False
        for nominator, targets in movable:
            funded = [t for t in targets if assignments[(nominator, t)] > 0]
            if not funded:
                continue
            hi = max(funded, key=lambda t: (backing[t], t))
            lo = min(targets, key=lambda t: (backing[t], t))
            amount = min(assignments[(nominator, hi)], (backing[hi] - backing[lo]) // 2)
            if amount <= 0:
                continue
            assignments[(nominator, hi)] -= amount
            assignments[(nominator, lo)] += amount
            backing[hi] -= amount
            backing[lo] += amount
            moved = True
        if not moved:
            break

    assignments = {k: v for k, v in assignments.items() if v > 0}
    return ElectionResult(list(result.active_set), assignments, backing)


def min_active_stake(result: ElectionResult) -> int:
    if not result.active_set:
        raise EmptyActiveSet("active set is empty")
    return min(result.backing[v] for v in result.active_set)


def elect(snapshot: ElectionSnapshot, balance_iterations: int = 10) -> ElectionResult:
    """Runs on stakes divided by their common divisor and scales back, so
    multiplying every stake by c multiplies every output by c exactly
    (integer rounding would otherwise drift by a few Planck)."""
    snapshot.validate()
    unit = math.gcd(*(c.self_stake for c in snapshot.candidates),
                    *(n.bond for n in snapshot.nominations))
    if unit > 1:
        snapshot = ElectionSnapshot(
            [Candidate(c.id, c.self_stake // unit, c.commission) for c in snapshot.candidates],
            [Nomination(n.nominator, n.bond // unit, n.targets) for n in snapshot.nominations],
            snapshot.seats)
    result = sequential_phragmen(snapshot)
    if balance_iterations > 0:
        result = balance_assignments(result, snapshot, balance_iterations)
    if unit > 1:
        result = ElectionResult(list(result.active_set),
                                {k: v * unit for k, v in result.assignments.items()},
                                {k: v * unit for k, v in result.backing.items()})
    return result


# -- CSV snapshot exchange ---------------------------------------------------

CANDIDATE_HEADER = ["id", "self_stake", "commission"]
NOMINATION_HEADER = ["nominator", "bond"] + [f"target{i}" for i in range(1, MAX_TARGETS + 1)]


def write_snapshot_csv(snapshot: ElectionSnapshot, directory: str | Path) -> tuple[Path, Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    cand_path = directory / "candidates.csv"
    nom_path = directory / "nominations.csv"
    with cand_path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CANDIDATE_HEADER)
        for c in snapshot.candidates:
            w.writerow([c.id, c.self_stake, c.commission])
    with nom_path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(NOMINATION_HEADER)
        for n in snapshot.nominations:
            targets = list(n.targets) + [""] * (MAX_TARGETS - len(n.targets))
            w.writerow([n.nominator, n.bond] + targets)
    return cand_path, nom_path


def read_snapshot_csv(directory: str | Path, seats: int) -> ElectionSnapshot:
    directory = Path(directory)
    with (directory / "candidates.csv").open(newline="") as fh:
        candidates = [Candidate(row["id"], int(row["self_stake"]), int(row["commission"]))
                      for row in csv.DictReader(fh)]
    nominations = []
    with (directory / "nominations.csv").open(newline="") as fh:
        for row in csv.DictReader(fh):
            targets = tuple(row[f"target{i}"] for i in range(1, MAX_TARGETS + 1)
                            if row.get(f"target{i}"))
            nominations.append(Nomination(row["nominator"], int(row["bond"]), targets))
    snapshot = ElectionSnapshot(candidates, nominations, seats)
    snapshot.validate()
    return snapshot
