import json
import random

import pytest
from hypothesis import given, strategies as st

from relaysim.harness.config import (
    AuctionConfig, ConfigInvalid, NetworkConfig, ScenarioConfig, StrategyConfig, config_from_dict,
    load_scenario,
)
from relaysim.harness.engine import Simulation, run, run_to_dir
from relaysim.harness.metrics import FAMILIES, MetricsFrame, write_frames_csv
from relaysim.harness.network import DelayModel, Message, delivered_to_anyone, network_deliver
from relaysim.harness.presets import (
    preset_auction_snipe_experiment, preset_commission_drift_experiment,
    preset_min_stake_experiment,
)

SCENARIOS = "scenarios"


def tiny(n=4, **changes):
    """A toy network without nominators, parachains or auctions."""
    base = dict(n_candidates=n, seats=n, n_nominators=0, n_parachains=0, n_parathreads=0,
                eras=2, users=1, auctions=AuctionConfig(enabled=False))
    base.update(changes)
    return ScenarioConfig(**base)


# -- configuration -------------------------------------------------------------------

def test_defaults_are_desk_scale():
    cfg = ScenarioConfig()
    assert (cfg.seats, cfg.n_nominators, cfg.n_parachains) == (50, 500, 4)
    big = ScenarioConfig.mainnet()
    assert (big.seats, big.n_nominators, big.n_parachains) == (297, 22500, 14)
    assert big.slots_per_era == 2400 * 6


def test_participant_limits_rejected():
    for changes, field in ((dict(n_parachains=101), "n_parachains"),
                           (dict(seats=1001, n_candidates=1001), "seats"),
                           (dict(n_nominators=22501), "n_nominators")):
        with pytest.raises(ConfigInvalid) as exc:
            Simulation(ScenarioConfig(**changes))
        assert field in [f for f, _ in exc.value.errors]


def test_unknown_and_mistyped_keys_reported_per_field():
    with pytest.raises(ConfigInvalid) as exc:
        config_from_dict({"seats": "ten", "colour": 1, "network": {"late_prob": "x"}})
    fields = {f for f, _ in exc.value.errors}
    assert fields == {"seats", "colour", "network.late_prob"}


def test_schema_version_checked():
    with pytest.raises(ConfigInvalid):
        config_from_dict({"schema_version": 2})


def test_json_round_trip_and_hash():
    cfg = ScenarioConfig(seed=11, strategy=StrategyConfig(equivocators=2))
    back = config_from_dict(json.loads(cfg.to_json()))
    assert back == cfg and back.config_hash() == cfg.config_hash()
    assert cfg.replace(seed=12).config_hash() != cfg.config_hash()


def test_shipped_scenarios_load():
    desk = load_scenario(f"{SCENARIOS}/desk.json")
    assert desk == ScenarioConfig(eras=20)
    adversarial = load_scenario(f"{SCENARIOS}/adversarial.json")
    assert adversarial.strategy.equivocators == 3


def test_bad_json_file(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{not json")
    with pytest.raises(ConfigInvalid):
        load_scenario(path)


# -- network -------------------------------------------------------------------------

def test_zero_delay_delivers_in_the_same_slot():
    msgs = [Message(3, "a", "blk")]
    out = network_deliver(msgs, ["a", "b", "c"], DelayModel(), random.Random(0))
    assert [(d.time, d.recipient) for d in out] == [(3, "a"), (3, "b"), (3, "c")]


def test_sender_with_full_drop_reaches_nobody_but_itself():
    model = DelayModel(drop_by_sender={"a": 1.0})
    out = network_deliver([Message(0, "a", 1), Message(0, "b", 2)], ["a", "b", "c"], model,
                          random.Random(0))
    from_a = [d for d in out if d.sender == "a"]
    assert [d.recipient for d in from_a] == ["a"] and not delivered_to_anyone(from_a)
    assert len([d for d in out if d.sender == "b"]) == 3


def test_pinned_matrix_beats_random_draw():
    model = DelayModel(late_prob=1.0, max_delay=5, matrix={("a", "b"): 0})
    out = network_deliver([Message(0, "a", None)], ["a", "b", "c"], model, random.Random(4))
    times = {d.recipient: d.time for d in out}
    assert times["b"] == 0 and 1 <= times["c"] <= 5


@given(st.integers(0, 2**32), st.floats(0, 1), st.floats(0, 1), st.integers(1, 4))
def test_delivery_is_seeded_and_ordered(seed, late, drop, max_delay):
    model = DelayModel(late_prob=late, max_delay=max_delay, drop_prob=drop)
    msgs = [Message(t, s, (t, s)) for t in range(3) for s in "abcd"]
    first = network_deliver(msgs, list("abcd"), model, random.Random(seed))
    assert first == network_deliver(msgs, list("abcd"), model, random.Random(seed))
    keys = [(d.time, d.sender, d.recipient) for d in first]
    assert keys == sorted(keys)
    assert all(0 <= d.time - d.payload[0] <= max_delay for d in first)


# -- engine --------------------------------------------------------------------------

def test_single_honest_validator():
    sim = Simulation(tiny(1, eras=1))
    (frame,) = sim.run()
    slots = sim.cfg.slots_per_era
    assert frame.authored_blocks == frame.finalized_blocks == slots
    assert frame.rewards_paid > 0 and frame.fork_rate == 0


def test_equivocator_slashed_in_its_era_without_conflict():
    sim = Simulation(tiny(4, eras=3, strategy=StrategyConfig(equivocators=1)))
    frames = sim.run()
    assert frames[0].equivocations == 1 and frames[0].slashed > 0
    assert all(f.conflicting_finalizations == 0 for f in frames)
    for x, y in zip(sim.finalized_history, sim.finalized_history[1:]):
        assert sim.tree.is_ancestor(x, y)


def test_silent_validator_declared_unresponsive():
    frames = run(tiny(4, network=NetworkConfig(drop_by_validator={"v002": 1.0})))
    assert all(f.unresponsive == 1 and f.slashed > 0 for f in frames)


def test_zero_delay_has_no_forks_and_cadence_lag():
    frames = run(tiny(4, c_threshold=0.9))
    assert all(f.fork_rate == 0 and f.finality_lag == 1 for f in frames)


def test_partitioned_delays_fork_and_still_finalize():
    sim = Simulation(tiny(4, c_threshold=0.9))
    left, right = ["v000", "v001"], ["v002", "v003"]
    sim.net.matrix = {(a, b): 1 for a in left for b in right} | {(b, a): 1 for a in left for b in right}
    frames = sim.run()
    assert all(f.fork_rate > 0 for f in frames)
    assert all(f.conflicting_finalizations == 0 for f in frames)
    assert len(sim.finalized_history) > 2 * sim.cfg.epochs_per_era


def test_adversarial_scenario_is_safe_and_conserving():
    cfg = load_scenario(f"{SCENARIOS}/adversarial.json").replace(eras=4)
    sim = Simulation(cfg)
    for _ in range(cfg.eras):
        frame = sim.run_era()
        sim.ledger.check_conservation()
        assert frame.conflicting_finalizations == 0 and frame.invalid_finalized == 0


def test_same_seed_same_frames():
    cfg = ScenarioConfig(eras=2, seed=5, strategy=StrategyConfig(equivocators=1))
    assert run(cfg) == run(cfg)
    assert run(cfg) != run(cfg.replace(seed=6))


def test_output_files(tmp_path):
    run_to_dir(tiny(4), tmp_path)
    for family, columns in FAMILIES.items():
        header = (tmp_path / f"{family}.csv").read_text().splitlines()[0]
        assert header.split(",") == columns
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["config_hash"] == tiny(4).config_hash()
    assert {"seed", "code_version"} <= set(manifest)
    assert (tmp_path / "era_ledger.csv").exists()


def test_tags_come_first_in_frame_csv(tmp_path):
    frames = [MetricsFrame(era=0, tags={"seats": 3, "sweep": "s"})]
    header = write_frames_csv(frames, tmp_path / "f.csv").read_text().splitlines()[0]
    assert header.startswith("seats,sweep,era,")


# -- presets ------------------------------------------------------------------------

def test_min_stake_preset_small():
    frames = preset_min_stake_experiment({"n_nominators": 60, "n_candidates": 30, "seats": 20},
                                         scales=(1, 3), seat_counts=(10, 20))
    stake = {f.tags["stake_scale"]: f.min_active_stake for f in frames
             if f.tags["sweep"] == "stake" and f.era == 0}
    assert stake[3] == 3 * stake[1]
    seats = {f.tags["seats"]: f.min_active_stake for f in frames
             if f.tags["sweep"] == "seats" and f.era == 0}
    assert seats[10] >= seats[20]


def test_commission_drift_constant_without_adopters():
    frames = preset_commission_drift_experiment({"eras": 6, "strategy": {"rational_fraction": 0.0},
                                                 "n_nominators": 100})
    assert len({f.fraction_full_commission for f in frames}) == 1


def test_snipe_preset_small():
    result = preset_auction_snipe_experiment(trials=200, ending_period_blocks=4, seed=1)
    assert result.late_bid_wins == 0
    assert 0 < result.sniper_wins < 200
