"""Scenario configuration: dataclasses, JSON round-trip and validation."""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any

SCHEMA_VERSION = 1

MAX_PARACHAINS = 100
MAX_SEATS = 1000
MAX_NOMINATORS = 22500


class ConfigInvalid(ValueError):
    def __init__(self, errors: list[tuple[str, str]]):
        self.errors = errors
        super().__init__("; ".join(f"{f}: {m}" for f, m in errors))


@dataclass
class NetworkConfig:
    # probability a message misses the slot it was sent in
    late_prob: float = 0.0
    max_delay: int = 2
    drop_prob: float = 0.0
    # validator index -> drop probability for everything it sends
    drop_by_validator: dict[str, float] = field(default_factory=dict)


@dataclass
class StrategyConfig:
    """How the agent population behaves. Counts are validator candidates,
    fractions apply to the honest remainder."""
    equivocators: int = 0
    reverters: int = 0
    colluders: int = 0
    colluders_in_approvals: bool = True
    self_nominators: int = 0
    offline_fraction: float = 0.0
    offline_prob: float = 0.0
    rational_fraction: float = 0.0
    rational_nominator_fraction: float = 0.0
    malicious_collator_rate: float = 0.0
    sybils_per_validator: int = 2
    # adoption rule for rational validators
    adoption_inertia: float = 0.8
    adoption_margin: float = 1.5
    chill_eras: int = 2


@dataclass
class StakeConfig:
    # DOT ranges, drawn uniformly
    validator_self_stake: tuple[int, int] = (5_000, 50_000)
    validator_wealth: tuple[int, int] = (0, 100_000)
    nominator_bond: tuple[int, int] = (120, 20_000)
    max_targets: int = 16
    user_endowment: int = 1_000_000
    para_endowment: int = 2_000_000
    restake_validators: bool = True
    restake_nominators: bool = False
    # multiplies every stake and endowment; used by sweeps
    scale: int = 1


@dataclass
class EconomicsConfig:
    authored_block_points: int = 20
    validity_statement_points: int = 20
    per_byte_fee: int = 10**6
    base_weight_fee: int = 10**7
    tx_per_block: int = 2
    unresponsive_base: int = 70
    equivocation_base: int = 1000
    dispute_base: int = 1000
    slash_exponent: int = 2


@dataclass
class AuctionConfig:
    enabled: bool = True
    common_good: int = 1
    period_eras: int = 5
    lease_periods: int = 2
    opening_blocks: int = 20
    ending_period_blocks: int = 72
    sniper: bool = False
    parathread_slots: int = 1


@dataclass
class ScenarioConfig:
    schema_version: int = SCHEMA_VERSION
    seed: int = 0
    n_candidates: int = 56
    seats: int = 50
    n_nominators: int = 500
    n_parachains: int = 4
    n_parathreads: int = 2
    epoch_length: int = 10
    epochs_per_era: int = 2
    eras: int = 10
    slot_duration: int = 6
    c_threshold: float = 0.02
    finality_lag: int = 1
    balance_iterations: int = 10
    pool_size: int = 200
    group_size: int = 5
    approval_checkers: int = 5
    predictable_groups: bool = False
    pov_bytes: int = 64
    users: int = 20
    network: NetworkConfig = field(default_factory=NetworkConfig)
    strategy: StrategyConfig = field(default_factory=StrategyConfig)
    stake: StakeConfig = field(default_factory=StakeConfig)
    economics: EconomicsConfig = field(default_factory=EconomicsConfig)
    auctions: AuctionConfig = field(default_factory=AuctionConfig)

    @classmethod
    def mainnet(cls, **overrides) -> "ScenarioConfig":
        """Participant counts at the limits the network ran with."""
        base = dict(n_candidates=400, seats=297, n_nominators=22500, n_parachains=14,
                    epoch_length=2400, epochs_per_era=6)
        base.update(overrides)
        return cls(**base)

    @property
    def slots_per_era(self) -> int:
        return self.epoch_length * self.epochs_per_era

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    def config_hash(self) -> str:
        return hashlib.sha256(json.dumps(self.to_dict(), sort_keys=True).encode()).hexdigest()

    def replace(self, **changes) -> "ScenarioConfig":
        return dataclasses.replace(self, **changes)


_NESTED = {"network": NetworkConfig, "strategy": StrategyConfig, "stake": StakeConfig,
           "economics": EconomicsConfig, "auctions": AuctionConfig}


def _build(cls, data: Any, prefix: str, errors: list[tuple[str, str]]):
    if not isinstance(data, dict):
        errors.append((prefix or "<root>", "expected an object"))
        return cls()
    known = {f.name: f for f in fields(cls)}
    kwargs = {}
    for key, value in data.items():
        path = f"{prefix}.{key}" if prefix else key
        if key not in known:
            errors.append((path, "unknown key"))
            continue
        if cls is ScenarioConfig and key in _NESTED:
            kwargs[key] = _build(_NESTED[key], value, path, errors)
            continue
        default = getattr(cls(), key)
        if isinstance(default, tuple):
            if not (isinstance(value, list) and len(value) == len(default)):
                errors.append((path, f"expected a list of {len(default)} numbers"))
                continue
            value = tuple(value)
        elif isinstance(default, bool):
            if not isinstance(value, bool):
                errors.append((path, "expected a boolean"))
                continue
        elif isinstance(default, int):
            if isinstance(value, bool) or not isinstance(value, int):
                errors.append((path, "expected an integer"))
                continue
        elif isinstance(default, float):
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                errors.append((path, "expected a number"))
                continue
            value = float(value)
        elif isinstance(default, dict) and not isinstance(value, dict):
            errors.append((path, "expected an object"))
            continue
        kwargs[key] = value
    return cls(**kwargs)


def config_from_dict(data: dict) -> ScenarioConfig:
    errors: list[tuple[str, str]] = []
    if isinstance(data, dict) and data.get("schema_version", SCHEMA_VERSION) != SCHEMA_VERSION:
        errors.append(("schema_version", f"unsupported, expected {SCHEMA_VERSION}"))
    config = _build(ScenarioConfig, data, "", errors)
    if errors:
        raise ConfigInvalid(errors)
    validate(config)
    return config


def load_scenario(path: str | Path) -> ScenarioConfig:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigInvalid([("<file>", f"invalid JSON: {exc}")]) from exc
    return config_from_dict(data)


def check(config: ScenarioConfig) -> list[tuple[str, str]]:
    """Field-level problems, empty when the config is usable."""
    errs = []

    def need(cond: bool, name: str, msg: str) -> None:
        if not cond:
            errs.append((name, msg))

    need(config.schema_version == SCHEMA_VERSION, "schema_version", f"must be {SCHEMA_VERSION}")
    need(0 <= config.seed < 2**64, "seed", "must fit in 64 bits")
    need(1 <= config.seats <= MAX_SEATS, "seats", f"must lie in [1, {MAX_SEATS}]")
    need(config.n_candidates >= config.seats, "n_candidates", "must be >= seats")
    need(0 <= config.n_nominators <= MAX_NOMINATORS, "n_nominators",
         f"must lie in [0, {MAX_NOMINATORS}]")
    need(0 <= config.n_parachains <= MAX_PARACHAINS, "n_parachains",
         f"must lie in [0, {MAX_PARACHAINS}]")
    need(config.n_parathreads >= 0, "n_parathreads", "must be >= 0")
    need(config.epoch_length >= 1, "epoch_length", "must be >= 1")
    need(config.epochs_per_era >= 1, "epochs_per_era", "must be >= 1")
    need(config.eras >= 1, "eras", "must be >= 1")
    need(0 <= config.c_threshold <= 1, "c_threshold", "must lie in [0, 1]")
    need(config.finality_lag >= 1, "finality_lag", "must be >= 1")
    need(config.group_size >= 1, "group_size", "must be >= 1")
    need(config.pool_size >= 1, "pool_size", "must be >= 1")
    need(config.approval_checkers >= 1, "approval_checkers", "must be >= 1")
    need(1 <= config.pov_bytes <= 1 << 20, "pov_bytes", "must lie in [1, 1 MiB]")
    need(config.users >= 1, "users", "must be >= 1")
    net = config.network
    need(0 <= net.late_prob <= 1, "network.late_prob", "must lie in [0, 1]")
    need(0 <= net.drop_prob <= 1, "network.drop_prob", "must lie in [0, 1]")
    need(net.max_delay >= 1, "network.max_delay", "must be >= 1")
    for key, p in net.drop_by_validator.items():
        need(isinstance(p, (int, float)) and 0 <= p <= 1, f"network.drop_by_validator.{key}",
             "must lie in [0, 1]")
    s = config.strategy
    special = s.equivocators + s.reverters + s.colluders + s.self_nominators
    need(min(s.equivocators, s.reverters, s.colluders, s.self_nominators) >= 0, "strategy",
         "counts must be >= 0")
    need(special <= config.n_candidates, "strategy", "more special agents than candidates")
    for name in ("offline_fraction", "offline_prob", "rational_fraction",
                 "rational_nominator_fraction", "malicious_collator_rate", "adoption_inertia"):
        need(0 <= getattr(s, name) <= 1, f"strategy.{name}", "must lie in [0, 1]")
    need(s.adoption_margin >= 1, "strategy.adoption_margin", "must be >= 1")
    need(s.sybils_per_validator >= 0, "strategy.sybils_per_validator", "must be >= 0")
    st = config.stake
    for name in ("validator_self_stake", "validator_wealth", "nominator_bond"):
        lo, hi = getattr(st, name)
        need(0 <= lo <= hi, f"stake.{name}", "must be an increasing non-negative pair")
    need(st.nominator_bond[0] >= 120, "stake.nominator_bond", "nominators must bond >= 120 DOT")
    need(1 <= st.max_targets <= 16, "stake.max_targets", "must lie in [1, 16]")
    need(st.scale >= 1, "stake.scale", "must be >= 1")
    a = config.auctions
    need(a.common_good >= 0, "auctions.common_good", "must be >= 0")
    need(1 <= a.lease_periods <= 8, "auctions.lease_periods", "must lie in [1, 8]")
    need(a.period_eras >= 1, "auctions.period_eras", "must be >= 1")
    need(a.ending_period_blocks >= 1, "auctions.ending_period_blocks", "must be >= 1")
    need(a.opening_blocks >= 0, "auctions.opening_blocks", "must be >= 0")
    need(a.parathread_slots >= 0, "auctions.parathread_slots", "must be >= 0")
    e = config.economics
    need(e.slash_exponent >= 1, "economics.slash_exponent", "must be >= 1")
    need(e.tx_per_block >= 0, "economics.tx_per_block", "must be >= 0")
    return errs


def validate(config: ScenarioConfig) -> ScenarioConfig:
    errors = check(config)
    if errors:
        raise ConfigInvalid(errors)
    return config
