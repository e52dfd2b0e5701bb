"""Exhaustive comparison of sequential_phragmen against the vectorised oracle
over every snapshot with at most 5 candidates, 4 nominators, 3 seats and bonds
in {1, 2, 3}. Work units are independent, so they can go to a process pool."""

from __future__ import annotations

import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from oracles import (
    MAX_SEATS, block_combos, candidate_ids, combos_to_arrays, phragmen_batch, voter_types,
    work_units,
)
from relaysim.election import Candidate, ElectionSnapshot, Nomination, sequential_phragmen


@dataclass
class SweepReport:
    checked: int = 0
    mismatches: list[tuple] = field(default_factory=list)
    seconds: float = 0.0
    workers: int = 1


def check_unit(unit: tuple[int, int, int | None]) -> tuple[int, list[tuple]]:
    m, k, first = unit
    combos = block_combos(m, k, first)
    rounds = min(MAX_SEATS, m)
    bonds, targets = combos_to_arrays(m, combos, k)
    elected, assignment = phragmen_batch(bonds, targets, rounds)

    ids = candidate_ids(m)
    index = {c: i for i, c in enumerate(ids)}
    candidates = [Candidate(c, 0) for c in ids]
    names = [f"n{j}" for j in range(k)]
    slot = {n: j for j, n in enumerate(names)}
    # one Nomination object per (position, voter type), shared across snapshots
    noms = [[Nomination(names[j], bond, tuple(ids[c] for c in range(m) if mask >> c & 1))
             for bond, mask in voter_types(m)] for j in range(k)]

    n = len(combos)
    bad: list[tuple] = []
    for seats in range(1, rounds + 1):
        expected = assignment(seats)
        got_elected = np.empty((n, seats), dtype=np.int64)
        got = np.zeros((n, k, m), dtype=np.int64)
        for i, combo in enumerate(combos):
            snap = ElectionSnapshot(candidates, [noms[j][t] for j, t in enumerate(combo)], seats)
            result = sequential_phragmen(snap)
            got_elected[i] = [index[v] for v in result.active_set]
            for (nom, v), amount in result.assignments.items():
                got[i, slot[nom], index[v]] = amount
        wrong = (got_elected != elected[:, :seats]).any(axis=1) | (got != expected).any(axis=(1, 2))
        for i in np.flatnonzero(wrong)[:5]:
            bad.append((m, combos[i], seats))
    checked = n * rounds
    return checked, bad


def sweep(workers: int | None = None) -> SweepReport:
    workers = workers or os.cpu_count() or 1
    units = work_units()
    # big units first so the pool stays busy to the end
    units.sort(key=lambda u: (-u[1], u[2] if u[2] is not None else 0))
    report = SweepReport(workers=workers)
    start = time.perf_counter()
    if workers == 1:
        results = map(check_unit, units)
        for checked, bad in results:
            report.checked += checked
            report.mismatches.extend(bad)
    else:
        with ProcessPoolExecutor(workers) as pool:
            for checked, bad in pool.map(check_unit, units, chunksize=1):
                report.checked += checked
                report.mismatches.extend(bad)
    report.seconds = time.perf_counter() - start
    return report
