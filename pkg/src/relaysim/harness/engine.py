"""Deterministic slot-stepped simulation of the whole relay chain.

Clock: slot -> epoch -> era. Per era the validator set is elected and the
para-validator groups drawn; per slot, para candidates go through backing,
availability and approvals, slot leaders author blocks that spread through
the network model, and a finality round runs on its cadence. Era close
settles slashes, inflation and payouts, then lets agents react.
"""

from __future__ import annotations

import hashlib
import heapq
import random
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from .. import babe, grandpa
from ..auctions import AuctionState, Bid, LeaseRange, advance_block, close_candle, place_bid
from ..chain import GENESIS_ID, BlockId, BlockTree
from ..economics import (
    DEFAULT_SLASHES, EraLedger, FeeParams, InsufficientBalance, Offense, PointEvent,
    PointValues, Role, SlashParams, Transaction, apply_slash, award_era_points, bond, charge_fee,
    dot, inflation_reward, pay_era_rewards, route_fee, write_era_csv,
)
from ..election import Candidate, ElectionResult, ElectionSnapshot, Nomination, elect, min_active_stake
from ..parachain import (
    CandidateReceipt, collate, form_groups, run_pipeline, schedule_parathreads,
)
from .agents import (
    FULL_COMMISSION, Kind, NominatorAgent, ValidatorAgent, agent_rng, consider_switch,
    required_backing, retarget, top_up,
)
from .config import ScenarioConfig, validate
from .metrics import MetricsFrame, write_families, write_frames_csv, write_manifest
from .network import DelayModel, Message, network_deliver

HONEST_COMMISSIONS = (0, 10, 20, 30, 50, 100)  # per-mill


def _digest(*parts) -> bytes:
    return hashlib.sha256("|".join(str(p) for p in parts).encode()).digest()


@dataclass
class BlockBody:
    txs: list[tuple[str, Transaction]] = field(default_factory=list)
    para_payments: list[tuple[str, int]] = field(default_factory=list)


@dataclass
class Lease:
    para: str
    start_era: int
    end_era: int
    amount: int


class Simulation:
    def __init__(self, config: ScenarioConfig):
        self.cfg = validate(config)
        self.ledger = EraLedger(points=PointValues(config.economics.authored_block_points,
                                                   config.economics.validity_statement_points))
        self.fees = FeeParams(per_byte_fee=config.economics.per_byte_fee,
                              base_weight_fee=config.economics.base_weight_fee)
        self.tree = BlockTree()
        self.finalized_history: list[BlockId] = [GENESIS_ID]
        self.bodies: dict[BlockId, BlockBody] = {}
        self.blob_valid: dict[bytes, bool] = {}
        self.frames: list[MetricsFrame] = []
        self.randomness = babe.genesis_randomness(config.seed)
        self.round = 0
        self.views: dict[str, set[BlockId]] = defaultdict(set)
        self.buffered: dict[str, dict[BlockId, list[BlockId]]] = defaultdict(dict)
        self.pending: list[tuple] = []
        self.recent_pruned: list[BlockId] = []
        self.leases: list[list[Lease]] = []
        self.net = DelayModel(late_prob=config.network.late_prob,
                              max_delay=config.network.max_delay,
                              drop_prob=config.network.drop_prob,
                              drop_by_sender=dict(config.network.drop_by_validator))
        self._rngs: dict[str, random.Random] = {}
        self._setup()

    # -- randomness -----------------------------------------------------------

    def rng(self, stream: str) -> random.Random:
        if stream not in self._rngs:
            seed = int.from_bytes(_digest("stream", self.cfg.seed, stream), "big")
            self._rngs[stream] = random.Random(seed)
        return self._rngs[stream]

    # -- genesis --------------------------------------------------------------

    def _dot(self, amount: int) -> int:
        return dot(amount) * self.cfg.stake.scale

    def _setup(self) -> None:
        cfg, st, s = self.cfg, self.cfg.stake, self.cfg.strategy
        rng = self.rng("setup")
        ids = [f"v{i:03d}" for i in range(cfg.n_candidates)]
        order = ids[:]
        rng.shuffle(order)
        kinds: dict[str, Kind] = {}
        cursor = 0
        for kind, count in ((Kind.EQUIVOCATOR, s.equivocators), (Kind.REVERTER, s.reverters),
                            (Kind.COLLUDER, s.colluders), (Kind.SELF_NOMINATOR, s.self_nominators)):
            for v in order[cursor: cursor + count]:
                kinds[v] = kind
            cursor += count
        for v in order[cursor:]:
            r = rng.random()
            if r < s.offline_fraction:
                kinds[v] = Kind.OFFLINE
            elif r < s.offline_fraction + s.rational_fraction:
                kinds[v] = Kind.RATIONAL
            else:
                kinds[v] = Kind.HONEST

        self.agents: dict[str, ValidatorAgent] = {}
        for v in ids:
            kind = kinds[v]
            commission = (FULL_COMMISSION if kind is Kind.SELF_NOMINATOR
                          else rng.choice(HONEST_COMMISSIONS))
            agent = ValidatorAgent(v, kind, commission, agent_rng(cfg.seed, v))
            self_stake = self._dot(rng.randint(*st.validator_self_stake))
            wealth = self._dot(rng.randint(*st.validator_wealth))
            self.ledger.create_account(v, Role.VALIDATOR, self_stake + wealth)
            if self_stake:
                bond(self.ledger.accounts[v], self_stake, minimum=0)
            if kind in (Kind.SELF_NOMINATOR, Kind.RATIONAL):
                for j in range(s.sybils_per_validator):
                    sid = f"{v}.s{j}"
                    self.ledger.create_account(sid, Role.NOMINATOR)
                    agent.sybils.append(sid)
            self.agents[v] = agent

        self.nominators: dict[str, NominatorAgent] = {}
        plain = [v for v in ids if kinds[v] is not Kind.SELF_NOMINATOR]
        for i in range(cfg.n_nominators):
            nid = f"n{i:05d}"
            amount = self._dot(rng.randint(*st.nominator_bond))
            self.ledger.create_account(nid, Role.NOMINATOR, amount)
            bond(self.ledger.accounts[nid], amount)
            rational = rng.random() < s.rational_nominator_fraction
            pool = plain if (rational and plain) else ids
            k = rng.randint(1, min(st.max_targets, len(pool)))
            self.nominators[nid] = NominatorAgent(nid, sorted(rng.sample(pool, k)), rational)
        for agent in self.agents.values():
            for sid in agent.sybils:
                self.nominators[sid] = NominatorAgent(sid, [agent.id], owner=agent.id)

        self.users = [f"u{i:03d}" for i in range(cfg.users)]
        for u in self.users:
            self.ledger.create_account(u, Role.USER, self._dot(st.user_endowment))

        a = cfg.auctions
        self.paras = [f"para{i:02d}" for i in range(cfg.n_parachains + cfg.n_parathreads)]
        common = min(a.common_good, cfg.n_parachains)
        self.common_good = self.paras[:common]
        for p in self.paras:
            self.ledger.create_account(p, Role.PARA, self._dot(st.para_endowment))
        n_lease_slots = cfg.n_parachains - common
        self.leases = [[] for _ in range(n_lease_slots)]
        if not a.enabled:
            # no auctions: the leased slots are simply occupied for the whole run
            for i in range(n_lease_slots):
                para = self.paras[common + i]
                self.leases[i].append(Lease(para, 0, cfg.eras, 0))
        self.ledger.check_conservation()

    # -- election -------------------------------------------------------------

    def _eligible(self, era: int) -> list[str]:
        return sorted(v for v, a in self.agents.items() if a.eligible(era))

    def snapshot(self, era: int) -> ElectionSnapshot:
        eligible = self._eligible(era)
        ok = set(eligible)
        candidates = [Candidate(v, self.ledger.accounts[v].bonded, self.agents[v].commission)
                      for v in eligible]
        nominations = []
        for nid in sorted(self.nominators):
            nom = self.nominators[nid]
            bonded = self.ledger.accounts[nid].bonded
            targets = tuple(t for t in nom.targets if t in ok)
            if bonded > 0 and targets:
                nominations.append(Nomination(nid, bonded, targets))
        seats = min(self.cfg.seats, len(candidates))
        return ElectionSnapshot(candidates, nominations, seats)

    # -- run ------------------------------------------------------------------

    def run(self) -> list[MetricsFrame]:
        for _ in range(self.cfg.eras):
            self.run_era()
        return self.frames

    def run_era(self) -> MetricsFrame:
        cfg = self.cfg
        era = self.ledger.era
        self._lease_boundary(era)
        result = elect(self.snapshot(era), cfg.balance_iterations)
        self.stakes: ElectionResult = result
        self.active = sorted(result.active_set)
        self.ledger.active_set = set(self.active)
        self.groups = form_groups(self.active, _digest("era", cfg.seed, era), cfg.pool_size,
                                  cfg.group_size, era, cfg.predictable_groups)
        self.frame = MetricsFrame(era=era, active_validators=len(self.active),
                                  min_active_stake=min_active_stake(result),
                                  total_active_stake=sum(result.backing.values()))
        full = sum(1 for v in self.active if self.agents[v].full_commission)
        self.frame.fraction_full_commission = full / len(self.active)
        self.offenders: dict[Offense, set[str]] = defaultdict(set)
        self.fork_slots = 0
        self.slots_run = 0
        for e in range(cfg.epochs_per_era):
            self._run_epoch(era * cfg.epochs_per_era + e)
        self._finality_round(self.last_slot + 1)
        self._close_era(result)
        return self.frame

    # -- epochs and slots -----------------------------------------------------

    def _run_epoch(self, epoch: int) -> None:
        cfg = self.cfg
        if epoch > 0:
            self.randomness = babe.next_epoch_randomness(self.randomness, epoch)
        ec = babe.EpochConfig(cfg.epoch_length, cfg.slot_duration, Fraction(str(cfg.c_threshold)),
                              self.randomness, epoch)
        assignments = babe.assign_slots(ec, self.active)
        rng = self.rng("offline")
        self.offline = {v for v in self.active
                        if self.agents[v].kind is Kind.OFFLINE and rng.random() < cfg.strategy.offline_prob}
        self.heard: set[str] = set()
        self.para_assignment = self.groups.assignment(self.paras, epoch)
        for assignment in assignments:
            self._run_slot(assignment)
        # heartbeats from everyone still online
        beats = [Message(self.last_slot, v, None) for v in self.active if v not in self.offline]
        self._note_heard(network_deliver(beats, self.active, self.net, self.rng("network")))
        if len(self.active) == 1:
            self.heard |= set(self.active) - self.offline
        for v in self.active:
            if v not in self.heard:
                self.offenders[Offense.UNRESPONSIVE].add(v)

    def _note_heard(self, deliveries) -> None:
        for d in deliveries:
            if d.recipient != d.sender:
                self.heard.add(d.sender)

    def _online(self) -> list[str]:
        return [v for v in self.active if v not in self.offline]

    def _run_slot(self, assignment: babe.SlotAssignment) -> None:
        t = assignment.slot
        self.last_slot = t
        self.slots_run += 1
        self._deliver_pending(t)
        if t % self.cfg.finality_lag == 0:
            self._finality_round(t)
        receipts, payments = self._parachain_step(t)

        authors = sorted((assignment.primaries | {assignment.secondary}) - self.offline)
        messages = []
        for author in authors:
            copies = 2 if self.agents[author].kind is Kind.EQUIVOCATOR else 1
            for nonce in range(copies):
                header = babe.author_block(assignment, self.tree, author, receipts,
                                           view=self.views[author], nonce=nonce)
                self.tree.insert(header)
                self.bodies[header.id] = self._block_body(payments)
                self.views[author].add(header.id)
                messages.append(Message(t, author, header.id))
                self.frame.authored_blocks += 1
            if copies > 1:
                self.offenders[Offense.EQUIVOCATION].add(author)
        deliveries = network_deliver(messages, self.active, self.net, self.rng("network"))
        self._note_heard(deliveries)
        for d in deliveries:
            if d.recipient == d.sender:
                continue
            if d.time <= t:
                self._receive(d.recipient, d.payload)
            else:
                heapq.heappush(self.pending, (d.time, d.sender, d.recipient, d.payload))
        self._measure_forks()

    def _block_body(self, payments: list[tuple[str, int]]) -> BlockBody:
        rng = self.rng("txs")
        txs = []
        for _ in range(self.cfg.economics.tx_per_block):
            user = self.users[rng.randrange(len(self.users))]
            txs.append((user, Transaction(rng.randint(100, 1000), rng.randint(0, 10**7),
                                          rng.choice((0, 0, 0, 10**8)))))
        return BlockBody(txs, list(payments))

    def _deliver_pending(self, t: int) -> None:
        while self.pending and self.pending[0][0] <= t:
            _, _, recipient, block = heapq.heappop(self.pending)
            self._receive(recipient, block)

    def _parent_known(self, v: str, parent: BlockId) -> bool:
        return (parent in self.views[v] or parent == self.tree.finalized
                or (parent in self.tree and not self.tree.is_live(parent)))

    def _receive(self, v: str, block: BlockId) -> None:
        if not self.tree.is_live(block):
            return  # already final for everyone, or pruned
        parent = self.tree.nodes[block].parent
        if not self._parent_known(v, parent):
            self.buffered[v].setdefault(parent, []).append(block)
            return
        stack = [block]
        while stack:
            b = stack.pop()
            self.views[v].add(b)
            stack.extend(self.buffered[v].pop(b, []))

    def _measure_forks(self) -> None:
        honest = [v for v in self._online() if not self.agents[v].kind.byzantine_voter]
        tips = set()
        cache: dict[frozenset, BlockId] = {}
        for v in honest:
            key = frozenset(self.views[v])
            if key not in cache:
                cache[key] = babe.best_chain(self.tree, self.views[v])
            tips.add(cache[key])
        if len(tips) > 1:
            self.fork_slots += 1

    # -- parachains -----------------------------------------------------------

    def _scheduled_paras(self, era: int) -> tuple[list[str], list[str]]:
        leased = [l.para for slot in self.leases for l in slot if l.start_era <= era < l.end_era]
        chains = sorted(set(self.common_good) | set(leased))
        threads = [p for p in self.paras if p not in chains]
        return chains, threads

    def _parachain_step(self, t: int) -> tuple[list[CandidateReceipt], list[tuple[str, int]]]:
        cfg = self.cfg
        online = self._online()
        if len(self.active) < 4 or not self.paras:
            return [], []
        chains, threads = self._scheduled_paras(self.ledger.era)
        rng = self.rng("parathreads")
        payments = []
        if threads and cfg.auctions.parathread_slots:
            bids = [(p, self._dot(rng.randint(1, 10))) for p in threads]
            chosen = schedule_parathreads(bids, cfg.auctions.parathread_slots)
            price = dict(bids)
            payments = [(p, price[p]) for p in chosen]
            chains = sorted(chains + chosen)
        collators = self.rng("collators")
        net = self.rng("network")
        colluders = {v for v in self.active if self.agents[v].kind is Kind.COLLUDER}
        honesty = {v: v not in colluders for v in self.active}
        approval_honesty = None if cfg.strategy.colluders_in_approvals else {}
        # an offline validator neither backs, stores chunks nor checks
        holders = [v for v in online if self.net.delay(net, v, "availability") is not None]
        receipts = []
        for para in chains:
            honest = collators.random() >= cfg.strategy.malicious_collator_rate
            blob = collate(para, honest, cfg.pov_bytes, t, cfg.seed)
            gid = self.para_assignment[para]
            out = run_pipeline(blob, self.groups.groups[gid], gid, online, holders, honesty,
                               _digest("checkers", cfg.seed, t, para), cfg.approval_checkers,
                               absent=self.offline, approval_honesty=approval_honesty)
            if out.receipt is not None:
                self.blob_valid[out.receipt.digest] = blob.valid_under_stf
            if out.included:
                receipts.append(out.receipt)
            elif out.receipt is not None and not out.available:
                self.frame.para_unavailable += 1
            if out.approval is not None and out.approval.offenders:
                self.frame.para_disputed += 1
                self.offenders[Offense.INVALID_CANDIDATE] |= out.approval.offenders
        paid = [(p, amt) for p, amt in payments
                if any(r.parachain == p for r in receipts)]
        return receipts, paid

    # -- finality -------------------------------------------------------------

    def _vote_targets(self, v: str, rng: random.Random) -> list[BlockId]:
        kind = self.agents[v].kind
        honest_target = babe.best_chain(self.tree, self.views[v])
        if kind is Kind.EQUIVOCATOR:
            leaves = sorted(self.tree.leaves())
            if len(leaves) >= 2:
                return rng.sample(leaves, 2)
            return [honest_target]
        if kind is Kind.REVERTER:
            live = sorted(self.tree.unfinalized() | {self.tree.finalized})
            return [rng.choice(live)]
        return [honest_target]

    def _finality_round(self, t: int) -> None:
        if not self.active:
            return
        self.round += 1
        state = grandpa.RoundState(self.round)
        rng = self.rng("byzantine")
        net = self.rng("network")
        for v in self._online():
            if self.agents[v].kind is Kind.REVERTER and self.recent_pruned:
                candidate = rng.choice(self.recent_pruned)
                if grandpa.detect_reversion_attack(self.finalized_history, candidate, self.tree):
                    self.frame.reversion_attempts += 1
                    self.offenders[Offense.FINALITY_REVERSION].add(v)
                    continue
            for target in self._vote_targets(v, rng):
                if self.net.delay(net, v, "finality") is None:
                    continue
                grandpa.cast_vote(state, grandpa.FinalityVote(self.round, v, target), self.tree)
        if state.equivocators:
            self.offenders[Offense.EQUIVOCATION] |= state.equivocators
        previous = self.tree.finalized
        before = self.tree.unfinalized()
        final = grandpa.try_finalize(state, self.tree, len(self.active))
        if final is None:
            return
        if not self.tree.is_ancestor(previous, final):
            self.frame.conflicting_finalizations += 1
        self.finalized_history.append(final)
        newly = []
        node = final
        while node != previous:
            newly.append(node)
            node = self.tree.nodes[node].parent
        newly.reverse()
        pruned = before - self.tree.unfinalized() - set(newly)
        self.recent_pruned = (self.recent_pruned + sorted(pruned))[-32:]
        for b in newly:
            self._settle_block(b, t)
        live = self.tree.is_live
        for v in self.views:
            self.views[v] = {b for b in self.views[v] if live(b)}
            self.buffered[v] = {p: cs for p, cs in self.buffered[v].items() if live(p)}

    def _settle_block(self, block: BlockId, t: int) -> None:
        header = self.tree.nodes[block]
        body = self.bodies.pop(block, BlockBody())
        author = header.author
        self.frame.finalized_blocks += 1
        self.frame.finality_lag = max(self.frame.finality_lag, t - header.slot)
        active = author in self.ledger.active_set
        if active:
            award_era_points(self.ledger, author, PointEvent.AUTHORED_BLOCK)
        for user, tx in body.txs:
            try:
                self.frame.fees += charge_fee(tx, self.ledger.accounts[user], author,
                                              self.fees, self.ledger)
            except InsufficientBalance:
                continue
        for para, amount in body.para_payments:
            try:
                self.frame.fees += route_fee(self.ledger, self.ledger.accounts[para], author, amount)
            except InsufficientBalance:
                continue
        max_tx = max(1, self.cfg.economics.tx_per_block)
        self.fees.update_multiplier(Fraction(len(body.txs), max_tx * 4))
        for receipt in header.included_candidates:
            self.frame.para_included += 1
            if not self.blob_valid.get(receipt.digest, True):
                self.frame.invalid_finalized += 1
            for backer in sorted(receipt.backers):
                if backer in self.ledger.active_set:
                    award_era_points(self.ledger, backer, PointEvent.VALIDITY_STATEMENT)

    # -- auctions -------------------------------------------------------------

    def _lease_boundary(self, era: int) -> None:
        a = self.cfg.auctions
        if not a.enabled or era % a.period_eras:
            return
        for slot in self.leases:
            for lease in [l for l in slot if l.end_era <= era]:
                if lease.amount:
                    self.ledger.unreserve(lease.para, lease.amount)
                slot.remove(lease)
        for index, slot in enumerate(self.leases):
            if any(l.start_era <= era < l.end_era for l in slot):
                continue
            self._auction(era, index)

    def _auction(self, era: int, index: int) -> None:
        a = self.cfg.auctions
        rng = self.rng("auction")
        holding = {l.para for slot in self.leases for l in slot}
        bidders = [p for p in self.paras if p not in self.common_good and p not in holding]
        if not bidders:
            return
        state = AuctionState(a.opening_blocks, a.ending_period_blocks, n_periods=a.lease_periods)
        plan = []
        for p in bidders:
            free = self.ledger.accounts[p].free
            if free <= 1:
                continue
            amount = max(1, int(free * rng.uniform(0.05, 0.5)))
            last = rng.randrange(a.lease_periods)
            plan.append((rng.randrange(state.end), p, amount, last))
        if a.sniper and plan:
            top = max(amount for _, _, amount, _ in plan)
            sniper = bidders[-1]
            plan = [x for x in plan if x[1] != sniper]
            if self.ledger.accounts[sniper].free > top:
                plan.append((state.end - 1, sniper, top + 1, a.lease_periods - 1))
        plan.sort()
        cursor = 0
        while state.is_open():
            while cursor < len(plan) and plan[cursor][0] == state.block:
                _, p, amount, last = plan[cursor]
                place_bid(state, Bid(p, amount, LeaseRange(0, last)), self.ledger)
                cursor += 1
            advance_block(state)
        _, winners = close_candle(state, _digest("candle", self.cfg.seed, era, index), self.ledger)
        for bid in winners.bids:
            start = era + bid.range.first_period * a.period_eras
            end = era + (bid.range.last_period + 1) * a.period_eras
            self.leases[index].append(Lease(bid.bidder, start, end, bid.amount))

    # -- era close ------------------------------------------------------------

    def _slash_params(self, offense: Offense) -> SlashParams:
        e = self.cfg.economics
        base = {Offense.UNRESPONSIVE: e.unresponsive_base, Offense.EQUIVOCATION: e.equivocation_base,
                Offense.INVALID_CANDIDATE: e.dispute_base}.get(offense)
        default = DEFAULT_SLASHES[offense]
        if base is None:
            return default
        exponent = e.slash_exponent if offense is not Offense.INVALID_CANDIDATE else default.exponent
        return SlashParams(offense, base, exponent)

    def _close_era(self, result: ElectionResult) -> None:
        cfg, ledger, frame = self.cfg, self.ledger, self.frame
        era = ledger.era
        n = len(self.active)
        # the heaviest offense wins when one validator commits several
        seen: set[str] = set()
        for offense in (Offense.FINALITY_REVERSION, Offense.EQUIVOCATION,
                        Offense.INVALID_CANDIDATE, Offense.UNRESPONSIVE):
            offenders = sorted((self.offenders.get(offense, set()) & set(self.active)) - seen)
            if not offenders:
                continue
            seen |= set(offenders)
            events = apply_slash(ledger, offenders, self._slash_params(offense), n, result)
            frame.slashed += sum(ev.total for ev in events)
            if offense is not Offense.UNRESPONSIVE:
                for v in offenders:
                    self.agents[v].chilled_until = era + 1 + cfg.strategy.chill_eras
        frame.equivocations = len(self.offenders.get(Offense.EQUIVOCATION, ()))
        frame.unresponsive = len(self.offenders.get(Offense.UNRESPONSIVE, ()))
        frame.dispute_offenders = len(self.offenders.get(Offense.INVALID_CANDIDATE, ()))

        stakers, remainder = inflation_reward(ledger.staking_rate, ledger.total_issuance)
        restake = set()
        if cfg.stake.restake_validators:
            restake |= set(self.agents)
            restake |= {s for a in self.agents.values() for s in a.sybils}
        if cfg.stake.restake_nominators:
            restake |= {n for n, a in self.nominators.items() if a.owner is None}
        commissions = {v: a.commission for v, a in self.agents.items()}
        payout = pay_era_rewards(ledger, stakers, result, commissions, restake)
        ledger.mint_to_treasury(remainder)
        frame.rewards_paid = sum(payout.credited.values())

        self._update_agents(era, result, payout)
        frame.minted = ledger.minted_this_era
        ledger.close_era()
        frame.treasury = ledger.treasury
        frame.total_issuance = ledger.total_issuance
        frame.fork_rate = self.fork_slots / self.slots_run if self.slots_run else 0.0
        self.frames.append(frame)

    def _update_agents(self, era: int, result: ElectionResult, payout) -> None:
        s = self.cfg.strategy
        target = required_backing(result.backing, self.agents, s.adoption_margin)
        rewards = [r for r in payout.validator_reward.values() if r]
        typical = sorted(rewards)[len(rewards) // 2] if rewards else 0
        for v in sorted(self.agents):
            agent = self.agents[v]
            if agent.full_commission and agent.kind in (Kind.SELF_NOMINATOR, Kind.RATIONAL):
                top_up(self.ledger, agent)
            else:
                consider_switch(self.ledger, agent, era, payout.credited,
                                payout.validator_reward.get(v, 0), typical, target, s.adoption_inertia)
        eligible = self._eligible(era + 1)
        rng = self.rng("nominators")
        for nid in sorted(self.nominators):
            retarget(self.nominators[nid], eligible, self.agents, rng, self.cfg.stake.max_targets)


def run(config: ScenarioConfig) -> list[MetricsFrame]:
    return Simulation(config).run()


def run_to_dir(config: ScenarioConfig, out_dir: str | Path) -> list[MetricsFrame]:
    """Run and write every metric family, the per-validator era ledger and a manifest."""
    sim = Simulation(config)
    frames = sim.run()
    out = Path(out_dir)
    write_families(frames, out)
    write_frames_csv(frames, out / "frames.csv")
    write_era_csv(sim.ledger.records, out / "era_ledger.csv")
    write_manifest(out, config.config_hash(), config.seed, eras=config.eras)
    return frames
