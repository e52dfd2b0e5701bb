import random

import pytest
from hypothesis import given, strategies as st

from helpers import check_conservation, random_snapshot
from oracles import phragmen_fractions
from relaysim.election import (
    Candidate, ElectionResult, ElectionSnapshot, EmptyActiveSet, EmptyCandidateSet,
    InvalidSnapshot, Nomination, balance_assignments, elect, min_active_stake,
    read_snapshot_csv, sequential_phragmen, write_snapshot_csv,
)


@st.composite
def snapshots(draw, max_candidates=8, max_nominators=10, max_bond=1000):
    m = draw(st.integers(1, max_candidates))
    ids = [f"v{i:02d}" for i in range(m)]
    cands = [Candidate(c, draw(st.integers(0, max_bond)), draw(st.integers(0, 1000))) for c in ids]
    noms = []
    for j in range(draw(st.integers(0, max_nominators))):
        targets = draw(st.lists(st.sampled_from(ids), min_size=1, max_size=min(m, 16), unique=True))
        noms.append(Nomination(f"n{j:02d}", draw(st.integers(1, max_bond)), tuple(targets)))
    return ElectionSnapshot(cands, noms, draw(st.integers(1, m)))


# -- sequential_phragmen ----------------------------------------------------------

def test_all_candidates_elected_when_seats_match():
    snap = ElectionSnapshot([Candidate("A", 0), Candidate("B", 0)],
                            [Nomination("x", 5, ("A",))], seats=2)
    assert sorted(sequential_phragmen(snap).active_set) == ["A", "B"]


def test_single_backed_candidate():
    snap = ElectionSnapshot([Candidate("A", 0), Candidate("B", 0)],
                            [Nomination("x", 100, ("A",))], seats=1)
    result = sequential_phragmen(snap)
    assert result.active_set == ["A"]
    assert result.backing["A"] == 100


def test_four_candidates_three_nominators_two_seats():
    snap = ElectionSnapshot(
        [Candidate(c, 0) for c in "ABCD"],
        [Nomination("x", 30, ("A", "B")), Nomination("y", 20, ("B", "C")),
         Nomination("z", 25, ("C", "D", "A"))],
        seats=2,
    )
    expected_set, expected_assign = phragmen_fractions(snap)
    result = sequential_phragmen(snap)
    assert result.active_set == expected_set
    assert {k: v for k, v in result.assignments.items() if v} == \
        {k: v for k, v in expected_assign.items() if v}


@given(snapshots())
def test_matches_fraction_oracle(snap):
    expected_set, expected_assign = phragmen_fractions(snap)
    result = sequential_phragmen(snap)
    assert result.active_set == expected_set
    assert {k: v for k, v in result.assignments.items() if v} == \
        {k: v for k, v in expected_assign.items() if v}


def test_zero_backing_candidates_fill_seats_in_id_order():
    snap = ElectionSnapshot([Candidate(c, 0) for c in "DCBA"], [Nomination("x", 1, ("C",))], seats=3)
    assert sequential_phragmen(snap).active_set == ["C", "A", "B"]


def test_empty_candidate_set():
    with pytest.raises(EmptyCandidateSet):
        sequential_phragmen(ElectionSnapshot([], [], 1))


@given(snapshots())
def test_conservation_and_active_set_size(snap):
    result = sequential_phragmen(snap)
    assert len(result.active_set) == snap.seats
    assert len(set(result.active_set)) == snap.seats
    check_conservation(snap, result)


@given(snapshots(max_bond=50), st.integers(2, 1000))
def test_scale_invariance_of_selection(snap, factor):
    assert sequential_phragmen(snap.scaled(factor)).active_set == sequential_phragmen(snap).active_set


@given(snapshots(max_bond=50), st.integers(2, 1000))
def test_elect_output_scales_exactly(snap, factor):
    base, scaled = elect(snap), elect(snap.scaled(factor))
    assert scaled.active_set == base.active_set
    assert scaled.backing == {v: b * factor for v, b in base.backing.items()}
    assert scaled.assignments == {k: a * factor for k, a in base.assignments.items()}


@given(snapshots())
def test_deterministic(snap):
    a, b = sequential_phragmen(snap), sequential_phragmen(snap)
    assert a == b


# -- balancing ---------------------------------------------------------------------

def test_balance_single_target_unchanged():
    snap = ElectionSnapshot([Candidate("A", 0), Candidate("B", 0)],
                            [Nomination("x", 100, ("A",))], seats=2)
    result = sequential_phragmen(snap)
    balanced = balance_assignments(result, snap)
    assert balanced.backing == result.backing
    assert {k: v for k, v in balanced.assignments.items() if v} == \
        {k: v for k, v in result.assignments.items() if v}


def test_balance_two_validators_equalise():
    # sequential pass gives A 60, B 40 + 50; the 15 moved equalises at 75
    snap = ElectionSnapshot([Candidate("A", 0), Candidate("B", 50)],
                            [Nomination("x", 100, ("A", "B"))], seats=2)
    result = sequential_phragmen(snap)
    assert result.backing == {"A": 60, "B": 90}
    balanced = balance_assignments(result, snap)
    assert balanced.backing == {"A": 75, "B": 75}


@given(snapshots(), st.integers(0, 20))
def test_balance_gap_monotone_and_totals_kept(snap, iterations):
    result = sequential_phragmen(snap)
    balanced = balance_assignments(result, snap, iterations)
    assert balanced.active_set == result.active_set
    assert balanced.gap() <= result.gap()
    check_conservation(snap, balanced)


# -- min_active_stake --------------------------------------------------------------

def test_min_active_stake_examples():
    r = ElectionResult(["a", "b", "c"], {}, {"a": 100, "b": 200, "c": 300})
    assert min_active_stake(r) == 100
    assert min_active_stake(ElectionResult(["a", "b"], {}, {"a": 7, "b": 7})) == 7
    with pytest.raises(EmptyActiveSet):
        min_active_stake(ElectionResult([], {}, {}))


@given(st.integers(0, 2**32))
def test_min_active_stake_random(seed):
    snap = random_snapshot(random.Random(seed))
    result = elect(snap)
    assert min_active_stake(result) == min(result.backing[v] for v in result.active_set)


# -- snapshot validation and CSV exchange -------------------------------------------

@pytest.mark.parametrize("snap", [
    ElectionSnapshot([Candidate("A", 0)], [Nomination("x", 1, ("B",))], 1),
    ElectionSnapshot([Candidate("A", 0)], [Nomination("x", 1, ("A", "A"))], 1),
    ElectionSnapshot([Candidate("A", 0)], [Nomination("x", 1, ())], 1),
    ElectionSnapshot([Candidate("A", 0)], [], 2),
    ElectionSnapshot([Candidate("A", -1)], [], 1),
    ElectionSnapshot([Candidate("A", 0, 1001)], [], 1),
    ElectionSnapshot([Candidate("A", 0)], [Nomination("x", 5, ("A",))], 1, min_nominator_bond=10),
    ElectionSnapshot([Candidate(f"v{i}", 0) for i in range(17)],
                     [Nomination("x", 1, tuple(f"v{i}" for i in range(17)))], 1),
])
def test_invalid_snapshots(snap):
    with pytest.raises(InvalidSnapshot):
        snap.validate()


def test_csv_round_trip(tmp_path):
    snap = random_snapshot(random.Random(3), m=6, k=10, seats=3)
    write_snapshot_csv(snap, tmp_path)
    back = read_snapshot_csv(tmp_path, seats=3)
    assert back.candidates == snap.candidates
    assert back.nominations == snap.nominations
    assert sequential_phragmen(back) == sequential_phragmen(snap)
