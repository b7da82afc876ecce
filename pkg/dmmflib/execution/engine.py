# coding=utf-8
#
# Copyright 2024 The DMMF Engine Developers
#
# Licensed under the Apache License, Version 2.0 (the "License"): you may
# not use this file except in compliance with the License. You may obtain
# a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS, WITHOUT
# WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied. See the
# License for the specific language governing permissions and limitations
# under the License.

"""The block loop.

A :class:`World` holds every component of a simulated fund. :func:`run_block`
advances it by one block through a fixed pipeline:

1. advance the clock and apply staged governance changes,
2. refresh oracle prices and mark every vault,
3. apply scripted external events, then retry queued redemptions,
4. accrue management fees and venue yields,
5. execute latency-queued intents, then run due strategy tasks in task order,
6. settle signal fees, rebalance allocations and harvest fees,
7. close the block of every vault.

Every step reports what it did as a scenario event through the world's sink.
A rejected intent or a failed scripted event is logged and never aborts a block.

"""

from __future__ import absolute_import, division, print_function, unicode_literals

from collections import OrderedDict
from logging import getLogger

from ..ledger import Dec18, ProtocolError, ZERO, dec_div, dec_mul
from ..marketplace import CsoState, Marketplace, parse_payload
from ..strategies import MarketState, strategy_step
from ..validation import AllocationError, Decision, StakeBallot, StakeVoteMechanism
from ..vault import Function, InsufficientLiquidity, IntentRejected, Status
from .automation import Scheduler, Target
from .venues import SpotVenue, VenueError, execute_intent, select_route


class ScriptedEvent(object):
    """ An external input applied at a block: a deposit, a publication, a ballot, ...

    :param payload: Typed payload the engine acts on.
    :param document: JSON form of the payload, as logged.
    """
    def __init__(self, block, action, actor, payload, document=None):
        self.block = block
        self.action = action
        self.actor = actor
        self.payload = payload
        self.document = payload if document is None else document

    def __repr__(self):
        return 'ScriptedEvent({}, {!r}, {!r})'.format(self.block, self.action, self.actor)


def _text(value):
    if isinstance(value, Dec18):
        return str(value)
    if isinstance(value, dict):
        return OrderedDict((k, _text(value[k])) for k in sorted(value))
    if isinstance(value, (list, tuple)):
        return [_text(item) for item in value]
    return value


class World(object):
    """ The complete state of a simulated fund and its environment.

    :param vaults: ``{vault_id: Vault}``
    :param strategies: ``{strategy_id: (Strategy, vault_id)}``
    :param oracle: :class:`~dmmflib.execution.oracle.OracleFeed`
    :param venues: ``{venue_id: Venue}``
    :param allocators: ``{vault_id: Allocator}``
    :param events: Scripted events in block order.
    :param sink: Called as ``sink(block, seq, actor, action, payload)`` for every event.
    """
    def __init__(self, clock, vaults, oracle, venues, marketplace=None, strategies=None, scheduler=None,
                 validation=None, allocators=None, events=(), sink=None):
        self.clock = clock
        self.vaults = OrderedDict(sorted(vaults.items()))
        self.oracle = oracle
        self.venues = OrderedDict(sorted(venues.items()))
        self.marketplace = Marketplace() if marketplace is None else marketplace
        self.strategies = OrderedDict(sorted((strategies or {}).items()))
        self.scheduler = Scheduler() if scheduler is None else scheduler
        self.validation = StakeVoteMechanism() if validation is None else validation
        self.allocators = OrderedDict(sorted((allocators or {}).items()))
        self.sink = sink
        self.prices = None
        self.started = False
        self.counters = OrderedDict([('fills', 0), ('rejections', 0), ('events', 0)])
        self._events = {}
        for event in events:
            self._events.setdefault(event.block, []).append(event)
        self._queue = []
        self._seq = 0
        self._block = None
        self._marks = {}
        self._candidates = {}
        self._logger = getLogger(self.__class__.__name__)

    @property
    def height(self):
        return self.clock.height

    def vault_of(self, strategy_id):
        return self.vaults[self.strategies[strategy_id][1]]

    # region Events

    def emit(self, actor, action, payload):
        """ Appends a scenario event at the current height and returns its ``(block, seq)``.

        """
        block = self.clock.height
        if block != self._block:
            self._block, self._seq = block, 0
        seq = self._seq
        self._seq += 1
        self.counters['events'] += 1
        if self.sink is not None:
            self.sink(block, seq, actor, action, _text(payload))
        return block, seq

    def _reject(self, actor, action, error, **extra):
        payload = OrderedDict([('action', action), ('error', error.__class__.__name__), ('message', str(error))])
        payload.update(extra)
        self._logger.warning('block %d: %s by %s rejected: %s', self.height, action, actor, error)
        self.emit(actor, 'rejected', payload)

    # endregion

    # region Pipeline steps

    def _refresh_prices(self):
        previous = self.prices
        self.prices = self.oracle.prices(self.height)
        for vault in self.vaults.values():
            vault.mark(self.prices)
        if previous is not None:
            self.marketplace.track(previous, self.prices)
        self.emit('oracle', 'prices', self.prices)

    def _apply_scripted(self):
        for event in self._events.pop(self.height, []):
            self.emit(event.actor, 'input', OrderedDict([('action', event.action), ('payload', event.document)]))
            handler = getattr(self, '_on_' + event.action, None)
            try:
                if handler is None:
                    raise ProtocolError('Unknown scripted action: {}'.format(event.action))
                handler(event.actor, event.payload)
            except (ProtocolError, ValueError) as error:
                self._reject(event.actor, event.action, error)
        for vault_id, vault in self.vaults.items():
            for request, payout, error in vault.process_redemptions(self.prices):
                if error is not None:
                    self._reject(request.account, 'redeem', error, vault=vault_id)
                else:
                    self.emit(request.account, 'redeemed', OrderedDict([
                        ('vault', vault_id), ('shares', request.shares), ('payout', payout),
                        ('requested_at', request.requested_at)]))

    def _accrue(self, tasks):
        for task in tasks:
            if task.target == Target.fee_accrual:
                for vault_id in self._task_vaults(task):
                    fee = self.vaults[vault_id].accrue_management_fee(self.prices, self.clock)
                    if fee:
                        self.emit(vault_id, 'fee_accrued', OrderedDict([('fee', fee)]))
        for venue in self.venues.values():
            venue.accrue(self.clock.blocks_per_year)
        for venue_id, venue in self.venues.items():
            if isinstance(venue, SpotVenue):
                continue
            for vault_id, vault in self.vaults.items():
                deltas = vault.sync_positions(venue_id, venue.positions_for(vault_id))
                if deltas:
                    self.emit(venue_id, 'yield', OrderedDict([('vault', vault_id), ('deltas', deltas)]))
        self.marketplace.update_subscribed_capital(self._capital(), self.height)

    def _capital(self):
        capital = {}
        for strategy_id, (_, vault_id) in self.strategies.items():
            vault = self.vaults[vault_id]
            slot = vault.strategies[strategy_id]
            nav = vault.nav(self.prices)
            capital[strategy_id] = dec_mul(slot.alpha, nav) if nav > ZERO else ZERO
        return capital

    def _market(self):
        liquidity = OrderedDict(
            (venue_id, venue.liquidity()) for venue_id, venue in self.venues.items() if isinstance(venue, SpotVenue))
        return MarketState(self.prices, liquidity, self.height)

    def _run_strategies(self, tasks):
        due, queued = [], []
        for item in self._queue:
            (due if item[0] <= self.height else queued).append(item)
        self._queue = queued
        for _, vault_id, intent in due:
            self._execute(vault_id, intent, recheck=True)

        market = self._market()
        batches = []
        for task in tasks:
            strategy_id = task.strategy
            if strategy_id is None or strategy_id not in self.strategies:
                continue
            strategy, vault_id = self.strategies[strategy_id]
            vault = self.vaults[vault_id]
            if vault.strategies[strategy_id].status != Status.active or not strategy.is_due(self.height):
                continue
            snapshot = vault.snapshot(strategy_id, self.prices, self.height)
            signals = self.marketplace.signal_space(strategy_id, self.height)
            batches.append((strategy_id, vault_id, strategy_step(strategy, market, signals, snapshot)))
        # Steps run in task order; their intents apply in strategy id order.
        batches.sort(key=lambda batch: batch[0])
        for _, vault_id, intents in batches:
            for intent in intents:
                self._execute(vault_id, intent)

    def _execute(self, vault_id, intent, recheck=False):
        """Routes, checks and executes one intent; returns the fill or `None`."""
        vault = self.vaults[vault_id]
        try:
            if intent.venue is None:
                if intent.function != Function.trade:
                    raise VenueError('Only trades are routed; {} needs a venue'.format(intent.function))
                intent = intent.with_venue(select_route(intent, self.venues, vault.config.venue_registry, self.prices))
            vault.check_intent(intent, self.prices)
            venue = self.venues.get(intent.venue)
            if venue is None:
                raise VenueError('Unknown venue: {}'.format(intent.venue))
            if venue.latency and not recheck:
                execute_at = self.height + venue.latency
                self._queue.append((execute_at, vault_id, intent))
                self.emit(intent.strategy, 'intent_queued', OrderedDict([
                    ('vault', vault_id), ('intent', intent.to_json()), ('execute_at', execute_at)]))
                return None
            fill = execute_intent(self.venues, intent, self.prices, vault_id, self.height)
            delta = vault.apply_fill(intent, fill, self.prices)
        except (IntentRejected, VenueError) as error:
            self.counters['rejections'] += 1
            self._logger.warning('block %d: intent of %s rejected: %s', self.height, intent.strategy, error)
            self.emit(intent.strategy, 'intent_rejected', OrderedDict([
                ('vault', vault_id), ('intent', intent.to_json()), ('error', error.__class__.__name__),
                ('bound', getattr(error, 'bound', None)), ('message', str(error))]))
            return None
        self.counters['fills'] += 1
        self.emit(intent.strategy, 'fill', OrderedDict([
            ('vault', vault_id), ('intent', intent.to_json()), ('fill', fill.to_json()), ('attribution', delta)]))
        return fill

    def _settle(self, tasks):
        for task in tasks:
            if task.target == Target.fee_epoch:
                pnl = OrderedDict()
                for strategy_id in self.strategies:
                    pnl[strategy_id] = self.vault_of(strategy_id).attribution.get(strategy_id, ZERO)
                transfers, suspended = self.marketplace.accrue_signal_fees(pnl, self._capital(), self.clock)
                for transfer in transfers:
                    self.emit(transfer.payer, 'signal_fee', transfer.to_json())
                for strategy_id, provider in suspended:
                    self.emit(strategy_id, 'subscription_suspended', OrderedDict([('provider', provider)]))
            elif task.target == Target.allocator:
                for vault_id in self._task_vaults(task):
                    if vault_id in self.allocators:
                        self._rebalance(vault_id)
            elif task.target == Target.fee_harvest:
                for vault_id in self._task_vaults(task):
                    try:
                        fees = self.vaults[vault_id].harvest_fees()
                    except ProtocolError as error:
                        self._reject(vault_id, 'harvest', error)
                        continue
                    if fees:
                        self.emit(vault_id, 'fees_harvested', OrderedDict([
                            ('recipient', self.vaults[vault_id].config.fee_recipient), ('amount', fees)]))

    def _rebalance(self, vault_id):
        vault = self.vaults[vault_id]
        allocator = self.allocators[vault_id]
        try:
            alphas, intents = allocator.rebalance(vault, self.prices, self.height)
        except (AllocationError, ProtocolError) as error:
            self._logger.debug('block %d: no rebalance of %s: %s', self.height, vault_id, error)
            self.emit(vault_id, 'allocation_skipped', OrderedDict([
                ('error', error.__class__.__name__), ('message', str(error))]))
            return
        self.emit(vault_id, 'allocation', OrderedDict([
            ('alpha', alphas), ('sharpe', OrderedDict((s, allocator.sharpe(s)) for s in alphas))]))
        for intent in intents:
            self._execute(vault_id, intent)

    def _close(self):
        for vault_id, vault in self.vaults.items():
            record = vault.close_block(self.height)
            self.emit(vault_id, 'nav', record.to_json())
            allocator = self.allocators.get(vault_id)
            for strategy_id, slot in vault.strategies.items():
                cumulative = vault.attribution.get(strategy_id, ZERO)
                previous, capital = self._marks.get(strategy_id, (ZERO, ZERO))
                if allocator is not None and slot.status == Status.active and self.started:
                    allocator.record(strategy_id, dec_div(cumulative - previous, capital) if capital > ZERO else ZERO)
                self._marks[strategy_id] = (
                    cumulative, dec_mul(slot.alpha, record.nav) if record.nav > ZERO else ZERO)

    def _task_vaults(self, task):
        return list(self.vaults) if task.vault is None else [task.vault] if task.vault in self.vaults else []

    # endregion

    # region Scripted actions

    def _vault(self, payload):
        try:
            return self.vaults[payload['vault']]
        except KeyError:
            raise ProtocolError('Unknown vault: {}'.format(payload.get('vault')))

    def _on_deposit(self, actor, payload):
        vault = self._vault(payload)
        shares = vault.deposit(actor, payload['basket'], self.prices)
        self.emit(actor, 'deposited', OrderedDict([
            ('vault', vault.vault_id), ('basket', payload['basket']), ('shares', shares)]))

    def _on_withdraw(self, actor, payload):
        vault = self._vault(payload)
        try:
            payout = vault.withdraw(actor, payload['shares'], self.prices)
        except InsufficientLiquidity:
            if not payload.get('queue'):
                raise
            request = vault.request_withdrawal(actor, payload['shares'], self.height)
            self.emit(actor, 'withdrawal_queued', OrderedDict([('vault', vault.vault_id), ('shares', request.shares)]))
            return
        self.emit(actor, 'withdrawn', OrderedDict([
            ('vault', vault.vault_id), ('shares', payload['shares']), ('payout', payout)]))

    def _on_register_cso(self, actor, payload):
        provider = self.marketplace.register_cso(actor, payload['kinds'], payload.get('status', Status.proposed))
        self.emit(actor, 'cso_registered', OrderedDict([('kinds', sorted(provider.kinds)), ('status', provider.status)]))

    def _on_publish(self, actor, payload):
        data = parse_payload(payload['kind'], payload['data'])
        state = self.marketplace.publish_state(actor, CsoState(actor, payload['kind'], payload['nonce'], data), self.clock)
        self.emit(actor, 'published', OrderedDict([('kind', state.kind), ('nonce', state.nonce)]))

    def _pnl_mark(self, strategy_id):
        return self.vault_of(strategy_id).attribution.get(strategy_id, ZERO) if strategy_id in self.strategies else ZERO

    def _on_subscribe(self, actor, payload):
        model = payload['model']
        subscription = self.marketplace.subscribe(
            actor, payload['provider'], model, payload['epoch_length'], self.height, self._pnl_mark(actor))
        self.emit(actor, 'subscribed', subscription.to_json())

    def _on_auction(self, actor, payload):
        bids = [(strategy, payload['bids'][strategy]) for strategy in sorted(payload['bids'])]
        marks = {strategy: self._pnl_mark(strategy) for strategy, _ in bids}
        winners, price, _ = self.marketplace.settle_auction(
            actor, bids, payload['capacity'], payload['epoch_length'], self.height, marks)
        self.emit(actor, 'auction_settled', OrderedDict([('winners', winners), ('price', price)]))

    def _on_fund_budget(self, actor, payload):
        budget = self.marketplace.fund_fee_budget(actor, payload['amount'])
        self.emit(actor, 'budget_funded', OrderedDict([('amount', payload['amount']), ('budget', budget)]))

    def _on_signal_multiplier(self, actor, payload):
        self.marketplace.set_multiplier(payload['provider'], payload['multiplier'])
        self.emit(actor, 'multiplier_set', OrderedDict([
            ('provider', payload['provider']), ('multiplier', payload['multiplier'])]))

    def _on_bond(self, actor, payload):
        total = self.validation.bond(actor, payload['amount'])
        self.emit(actor, 'bonded', OrderedDict([('amount', payload['amount']), ('bond', total)]))

    def _subject_status(self, subject, kind):
        if kind == 'cso':
            provider = self.marketplace.providers.get(subject)
            if provider is None:
                raise ProtocolError('Unknown CSO: {}'.format(subject))
            return provider.status
        if subject not in self.strategies:
            raise ProtocolError('Unknown strategy: {}'.format(subject))
        return self.vault_of(subject).strategies[subject].status

    def _on_candidate(self, actor, payload):
        kind = payload.get('kind', 'strategy')
        status = self._subject_status(actor, kind)
        if kind == 'strategy':
            intent_spec = self.vault_of(actor).config.intent_spec
        elif payload.get('vault') in self.vaults:
            intent_spec = self.vaults[payload['vault']].config.intent_spec
        else:
            intent_spec = ()
        candidate = self.validation.submit_candidate(
            actor, kind, status, self.height, payload.get('metrics'), intent_spec)
        self._candidates[actor] = kind
        self.emit(actor, 'candidate_submitted', OrderedDict([
            ('kind', kind), ('closes_at', candidate.closes_at), ('score', candidate.score)]))

    def _on_ballot(self, actor, payload):
        accept, reject = self.validation.cast_ballot(
            payload['subject'], StakeBallot(actor, payload['stake'], payload['direction']), self.height)
        self.emit(actor, 'ballot_cast', OrderedDict([
            ('subject', payload['subject']), ('direction', payload['direction']), ('stake', payload['stake']),
            ('accept_stake', accept), ('reject_stake', reject)]))

    def _on_finalize(self, actor, payload):
        candidate = self.validation.finalize(actor, self.height)
        kind = self._candidates.pop(actor, candidate.kind)
        if kind == 'cso':
            if candidate.decision == Decision.accepted:
                self.marketplace.validate_provider(actor)
        elif candidate.decision == Decision.accepted:
            self.vault_of(actor).set_strategy_status(actor, Status.validated)
        else:
            self.vault_of(actor).set_strategy_status(actor, Status.retired)
        self.emit(actor, 'candidate_finalized', candidate.to_json())

    def _on_governance(self, actor, payload):
        vault = self._vault(payload)
        outcome = vault.governance_vote(payload['proposal'], payload['votes'], self.height)
        self.emit(actor, 'governance_tallied', OrderedDict([
            ('vault', vault.vault_id), ('proposal', payload['proposal'].to_json()), ('outcome', outcome),
            ('effective_at', self.height + 1)]))

    def _on_harvest(self, actor, payload):
        vault = self._vault(payload)
        fees = vault.harvest_fees()
        self.emit(actor, 'fees_harvested', OrderedDict([('recipient', vault.config.fee_recipient), ('amount', fees)]))

    # endregion

    # region Lifecycle

    def start(self):
        """ Runs the genesis block: prices, scripted events at height zero and the first NAV records.

        """
        if self.started:
            raise ProtocolError('World already started')
        for vault_id, vault in self.vaults.items():
            self.emit(vault_id, 'whitelist', OrderedDict([
                ('venues', [entry.to_json() for entry in vault.config.venue_registry.values()]),
                ('strategies', OrderedDict((k, s.to_json()) for k, s in vault.strategies.items()))]))
        self._refresh_prices()
        self._apply_scripted()
        self._close()
        self.started = True
        return self

    def step(self):
        """Advances the world by one block; see :func:`run_block`."""
        if not self.started:
            self.start()
        self.clock = self.clock.step()
        height = self.height
        self._logger.debug('block %d', height)
        for vault_id, vault in self.vaults.items():
            for proposal, error in vault.apply_staged(height):
                if error is None:
                    self.emit(vault_id, 'governance_applied', proposal.to_json())
                else:
                    self._reject(vault_id, 'governance', error, proposal=proposal.to_json())
        self._refresh_prices()
        self._apply_scripted()
        tasks = self.scheduler.due(height)
        self._accrue(tasks)
        self._run_strategies(tasks)
        self._settle(tasks)
        self._close()
        return self

    def run(self, horizon):
        """Runs genesis if needed, then every block up to and including `horizon`."""
        if not self.started:
            self.start()
        while self.height < horizon:
            self.step()
        return self

    def state(self):
        """JSON-ready state of the whole world; the replay digest hashes it."""
        return OrderedDict([
            ('block', self.height),
            ('vaults', OrderedDict((k, v.state()) for k, v in self.vaults.items())),
            ('marketplace', self.marketplace.state()),
            ('venues', OrderedDict((k, v.state()) for k, v in self.venues.items())),
            ('validation', self.validation.state()),
            ('allocators', OrderedDict((k, a.state()) for k, a in self.allocators.items())),
            ('queue', [[at, vault_id, intent.to_json()] for at, vault_id, intent in self._queue])])

    # endregion


def run_block(world):
    """ Advances `world` to the next block and returns it.

    """
    return world.step()


def default_tasks(scheduler, strategies, vaults, allocators, harvest_cadence=None):
    """ Registers the automation tasks a world needs but the scenario did not declare.

    Strategy tasks follow each strategy's ``execution_frequency`` and ``offset``;
    vault tasks accrue fees every block; the allocator and the fee harvest run
    at the allocator cadence. Generated ids follow the declared ones.
    """
    declared = scheduler.targets()

    def missing(target, vault):
        return (target, vault) not in declared and (target, None) not in declared

    for strategy_id in sorted(strategies):
        strategy, _ = strategies[strategy_id]
        if not any(target == Target.strategy(strategy_id) for target, _ in declared):
            scheduler.add(Target.strategy(strategy_id), strategy.execution_frequency, strategy.offset)
    if missing(Target.fee_epoch, None):
        scheduler.add(Target.fee_epoch)
    for vault_id in sorted(vaults):
        if missing(Target.fee_accrual, vault_id):
            scheduler.add(Target.fee_accrual, 1, 0, vault_id)
        allocator = allocators.get(vault_id)
        cadence = allocator.cadence if allocator is not None else harvest_cadence
        if allocator is not None and missing(Target.allocator, vault_id):
            scheduler.add(Target.allocator, allocator.cadence, 0, vault_id)
        if cadence and missing(Target.fee_harvest, vault_id):
            scheduler.add(Target.fee_harvest, cadence, 0, vault_id)
    return scheduler


__all__ = ['ScriptedEvent', 'World', 'default_tasks', 'run_block']
