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

"""Canonical Signal Oracle marketplace.

Providers register the kinds of state they publish, publish nonce-versioned
states, and sell read access to strategies under a subscription or a
participation fee model. Access may also be auctioned.

"""

from __future__ import absolute_import, division, print_function, unicode_literals

from collections import deque, OrderedDict
from logging import getLogger
import re

from .ledger import (
    AssetId, CsoId, Dec18, ONE, ProtocolError, StrategyId, VenueId, ZERO, dec_div, dec_mul, exp_fixed, mul_div,
    sharpe_ratio)
from .merkle import leaf_hash, verify_merkle_proof
from .vault import MissingPrice

DEFAULT_SIGNAL_WINDOW = 50
DEFAULT_EPSILON = Dec18(10 ** 12)


class MarketplaceError(ProtocolError):
    pass


class DuplicateId(MarketplaceError):
    pass


class UnknownParty(MarketplaceError):
    pass


class KindNotDeclared(MarketplaceError):
    pass


class StaleNonce(MarketplaceError):
    pass


class InvalidPayload(MarketplaceError, ValueError):
    """Raised when a CSO payload violates an invariant; `invariant` names it."""
    def __init__(self, invariant, message):
        MarketplaceError.__init__(self, '{}: {}'.format(invariant, message))
        self.invariant = invariant


class AlreadySubscribed(MarketplaceError):
    pass


class InsufficientFeeBudget(MarketplaceError):
    pass


class NoBids(MarketplaceError):
    pass


class InvalidBid(MarketplaceError, ValueError):
    pass


class Kind(object):
    portfolio_allocation = 'PortfolioAllocation'
    categorical = 'Categorical'
    market_making = 'MarketMaking'
    arbitrage = 'Arbitrage'
    liquidity_provision = 'LiquidityProvision'
    yield_ = 'Yield'
    reward_allocation = 'RewardAllocation'

    all = (portfolio_allocation, categorical, market_making, arbitrage, liquidity_provision, yield_,
           reward_allocation)


# region Payloads

def _decimal(value, invariant):
    if isinstance(value, Dec18):
        return value
    try:
        return Dec18.of(value)
    except ProtocolError as error:
        raise InvalidPayload(invariant, str(error))


def _identifier(validator, value, invariant):
    try:
        return validator(value)
    except ProtocolError as error:
        raise InvalidPayload(invariant, str(error))


def _integer(value, invariant):
    if isinstance(value, bool) or not isinstance(value, int):
        raise InvalidPayload(invariant, 'expected an integer, not {!r}'.format(value))
    return value


def _records(data, key, invariant):
    records = data.get(key)
    if not isinstance(records, list) or len(records) == 0:
        raise InvalidPayload(invariant, 'expected a non-empty list of {}'.format(key))
    for record in records:
        if not isinstance(record, dict):
            raise InvalidPayload(invariant, 'expected objects in {}'.format(key))
    return records


class Payload(object):
    """ Base class of the kind-specific data ``D`` of a CSO state.

    Subclasses parse with :meth:`from_json`, check their invariants with
    :meth:`validate` and render with :meth:`to_json`.

    """
    kind = None

    @classmethod
    def from_json(cls, data):
        raise NotImplementedError()

    def validate(self):
        return self

    def to_json(self):
        raise NotImplementedError()


class PortfolioAllocation(Payload):
    kind = Kind.portfolio_allocation

    def __init__(self, weights):
        self.weights = OrderedDict((asset, weights[asset]) for asset in sorted(weights))

    @classmethod
    def from_json(cls, data):
        weights = data.get('weights')
        if not isinstance(weights, dict):
            raise InvalidPayload('weights', 'expected an object of asset weights')
        return cls(OrderedDict(
            (_identifier(AssetId, asset, 'weights'), _decimal(weights[asset], 'weights')) for asset in weights))

    def validate(self):
        total = ZERO
        for asset, weight in self.weights.items():
            if abs(weight) > ONE:
                raise InvalidPayload('|w_i| <= 1', 'weight of {} is {}'.format(asset, weight))
            total += abs(weight)
        if total > ONE:
            raise InvalidPayload('sum |w_i| <= 1', 'sum of absolute weights is {}'.format(total))
        return self

    def to_json(self):
        return OrderedDict([('weights', OrderedDict((k, str(v)) for k, v in self.weights.items()))])


class Categorical(Payload):
    kind = Kind.categorical

    def __init__(self, decisions):
        self.decisions = OrderedDict((asset, decisions[asset]) for asset in sorted(decisions))

    @classmethod
    def from_json(cls, data):
        decisions = data.get('decisions')
        if not isinstance(decisions, dict):
            raise InvalidPayload('decisions', 'expected an object of asset decisions')
        return cls(OrderedDict(
            (_identifier(AssetId, asset, 'decisions'), decisions[asset]) for asset in decisions))

    def validate(self):
        for asset, value in self.decisions.items():
            if isinstance(value, bool) or value not in (-1, 0, 1):
                raise InvalidPayload('c_i in {-1, 0, +1}', 'decision for {} is {!r}'.format(asset, value))
        return self

    def to_json(self):
        return OrderedDict([('decisions', OrderedDict(self.decisions))])


class Quote(object):
    def __init__(self, asset, bid, bid_volume, ask, ask_volume):
        self.asset = asset
        self.bid = bid
        self.bid_volume = bid_volume
        self.ask = ask
        self.ask_volume = ask_volume


class MarketMaking(Payload):
    kind = Kind.market_making

    def __init__(self, quotes):
        self.quotes = list(quotes)

    @classmethod
    def from_json(cls, data):
        return cls([Quote(
            _identifier(AssetId, record.get('asset'), 'quotes'),
            _decimal(record.get('bid'), 'quotes'),
            _decimal(record.get('bid_volume'), 'quotes'),
            _decimal(record.get('ask'), 'quotes'),
            _decimal(record.get('ask_volume'), 'quotes')) for record in _records(data, 'quotes', 'quotes')])

    def validate(self):
        for quote in self.quotes:
            if not ZERO < quote.bid <= quote.ask:
                raise InvalidPayload('0 < bid <= ask', 'quote for {} has bid {} and ask {}'.format(
                    quote.asset, quote.bid, quote.ask))
            if quote.bid_volume < ZERO or quote.ask_volume < ZERO:
                raise InvalidPayload('volumes >= 0', 'quote for {} has a negative volume'.format(quote.asset))
        return self

    def to_json(self):
        return OrderedDict([('quotes', [OrderedDict([
            ('asset', q.asset), ('bid', str(q.bid)), ('bid_volume', str(q.bid_volume)), ('ask', str(q.ask)),
            ('ask_volume', str(q.ask_volume))]) for q in self.quotes])])


class Leg(object):
    def __init__(self, venue, pair, side, qty):
        self.venue = venue
        self.pair = pair
        self.side = side
        self.qty = qty


class Arbitrage(Payload):
    kind = Kind.arbitrage

    def __init__(self, legs, spread):
        self.legs = list(legs)
        self.spread = spread

    @classmethod
    def from_json(cls, data):
        legs = []
        for record in _records(data, 'legs', 'legs'):
            pair = record.get('pair')
            if not isinstance(pair, list) or len(pair) != 2:
                raise InvalidPayload('legs', 'pair must be two asset ids')
            legs.append(Leg(
                _identifier(VenueId, record.get('venue'), 'legs'),
                tuple(_identifier(AssetId, asset, 'legs') for asset in pair),
                record.get('side'),
                _decimal(record.get('qty'), 'legs')))
        return cls(legs, _decimal(data.get('spread'), 'spread'))

    def validate(self):
        for leg in self.legs:
            if leg.side not in ('buy', 'sell'):
                raise InvalidPayload('side in {buy, sell}', 'leg side {!r}'.format(leg.side))
            if not leg.qty > ZERO:
                raise InvalidPayload('qty > 0', 'leg at {} has quantity {}'.format(leg.venue, leg.qty))
        return self

    def to_json(self):
        return OrderedDict([
            ('legs', [OrderedDict([('venue', l.venue), ('pair', list(l.pair)), ('side', l.side), ('qty', str(l.qty))])
                      for l in self.legs]),
            ('spread', str(self.spread))])


class LiquidityProvision(Payload):
    kind = Kind.liquidity_provision

    def __init__(self, positions):
        self.positions = list(positions)

    @classmethod
    def from_json(cls, data):
        return cls([(
            _identifier(VenueId, record.get('pool'), 'positions'),
            _decimal(record.get('notional'), 'positions'),
            _integer(record.get('duration'), 'positions')) for record in _records(data, 'positions', 'positions')])

    def validate(self):
        for pool, notional, duration in self.positions:
            if not notional > ZERO or duration <= 0:
                raise InvalidPayload('notional, duration > 0', 'position in {} is ({}, {})'.format(
                    pool, notional, duration))
        return self

    def to_json(self):
        return OrderedDict([('positions', [OrderedDict([('pool', p), ('notional', str(n)), ('duration', d)])
                                           for p, n, d in self.positions])])


class Yield(Payload):
    kind = Kind.yield_

    def __init__(self, instruments):
        self.instruments = list(instruments)

    @classmethod
    def from_json(cls, data):
        return cls([(
            _identifier(AssetId, record.get('instrument'), 'instruments'),
            _decimal(record.get('yield'), 'instruments'),
            _integer(record.get('maturity'), 'instruments'))
            for record in _records(data, 'instruments', 'instruments')])

    def validate(self):
        for instrument, _, maturity in self.instruments:
            if maturity <= 0:
                raise InvalidPayload('maturity > 0', 'instrument {} matures in {}'.format(instrument, maturity))
        return self

    def to_json(self):
        return OrderedDict([('instruments', [OrderedDict([('instrument', i), ('yield', str(y)), ('maturity', m)])
                                             for i, y, m in self.instruments])])


class RewardAllocation(Payload):
    """ Merkle root of a reward tree plus its emission schedule.

    """
    kind = Kind.reward_allocation
    pattern = re.compile(r'^[0-9a-f]{64}$')

    def __init__(self, merkle_root, total, start_block, end_block):
        self.merkle_root = merkle_root
        self.total = total
        self.start_block = start_block
        self.end_block = end_block

    @classmethod
    def from_json(cls, data):
        return cls(
            data.get('merkle_root'),
            _decimal(data.get('total'), 'total'),
            _integer(data.get('start_block'), 'start_block'),
            _integer(data.get('end_block'), 'end_block'))

    def validate(self):
        if not isinstance(self.merkle_root, str) or self.pattern.match(self.merkle_root) is None:
            raise InvalidPayload('merkle_root', 'expected 64 lower-case hex digits')
        if self.total < ZERO:
            raise InvalidPayload('total >= 0', 'emission total is {}'.format(self.total))
        if not 0 <= self.start_block <= self.end_block:
            raise InvalidPayload('start_block <= end_block', 'emission window [{}, {}]'.format(
                self.start_block, self.end_block))
        return self

    def to_json(self):
        return OrderedDict([
            ('merkle_root', self.merkle_root), ('total', str(self.total)), ('start_block', self.start_block),
            ('end_block', self.end_block)])


payload_types = {cls.kind: cls for cls in (
    PortfolioAllocation, Categorical, MarketMaking, Arbitrage, LiquidityProvision, Yield, RewardAllocation)}


def parse_payload(kind, data):
    """ Parses and validates the payload of a CSO state of `kind`.

    :raises InvalidPayload: `kind` is unknown or the data violates an invariant.
    """
    try:
        cls = payload_types[kind]
    except KeyError:
        raise InvalidPayload('kind', 'unknown CSO kind {!r}'.format(kind))
    if not isinstance(data, dict):
        raise InvalidPayload('data', 'expected an object')
    return cls.from_json(data).validate()


def verify_reward_claim(state, account, amount, path):
    """True iff ``(account, amount)`` is a leaf of the reward tree a RewardAllocation state commits to."""
    return verify_merkle_proof(bytes.fromhex(state.data.merkle_root), leaf_hash(account, amount), path)

# endregion


class CsoState(object):
    """ A published state tuple ``(kind, data)`` with its provider, nonce and publication block.

    """
    def __init__(self, provider, kind, nonce, data, published_at=None):
        self.provider = provider
        self.kind = kind
        self.nonce = nonce
        self.data = data
        self.published_at = published_at

    def to_json(self):
        return OrderedDict([
            ('provider', self.provider), ('kind', self.kind), ('nonce', self.nonce),
            ('published_at', self.published_at), ('data', self.data.to_json())])


class Provider(object):
    def __init__(self, cso_id, kinds, status='Proposed'):
        self.cso_id = cso_id
        self.kinds = frozenset(kinds)
        self.status = status
        self.latest = {}
        self.last_nonce = None
        self.earnings = ZERO

    def to_json(self):
        return OrderedDict([
            ('kinds', sorted(self.kinds)), ('status', self.status),
            ('last_nonce', self.last_nonce), ('earnings', str(self.earnings)),
            ('latest', OrderedDict((kind, self.latest[kind].to_json()) for kind in sorted(self.latest)))])


class SubscriptionModel(object):
    """Flat fee per epoch."""
    name = 'subscription'

    def __init__(self, flat_fee):
        if flat_fee < ZERO:
            raise InvalidPayload('flat_fee >= 0', 'flat fee is {}'.format(flat_fee))
        self.flat_fee = flat_fee

    def to_json(self):
        return OrderedDict([('type', self.name), ('flat_fee', str(self.flat_fee))])


class ParticipationModel(object):
    """Carry on attributable PnL plus the return on capital the provider commits alongside its signal."""
    name = 'participation'

    def __init__(self, co_capital, carry_rate):
        if co_capital < ZERO:
            raise InvalidPayload('co_capital >= 0', 'co-capital is {}'.format(co_capital))
        if not ZERO <= carry_rate <= ONE:
            raise InvalidPayload('carry_rate in [0, 1]', 'carry rate is {}'.format(carry_rate))
        self.co_capital = co_capital
        self.carry_rate = carry_rate

    def to_json(self):
        return OrderedDict([
            ('type', self.name), ('co_capital', str(self.co_capital)), ('carry_rate', str(self.carry_rate))])


class Subscription(object):
    active = 'active'
    suspended = 'suspended'

    def __init__(self, strategy, provider, model, epoch_length, active_from, pnl_mark=ZERO):
        if isinstance(epoch_length, bool) or not isinstance(epoch_length, int) or epoch_length < 1:
            raise InvalidPayload('epoch_length >= 1', 'epoch length is {!r}'.format(epoch_length))
        self.strategy = strategy
        self.provider = provider
        self.model = model
        self.epoch_length = epoch_length
        self.active_from = active_from
        self.status = Subscription.active
        self.pnl_mark = pnl_mark

    def readable_at(self, height):
        return self.status == Subscription.active and height >= self.active_from

    def to_json(self):
        return OrderedDict([
            ('strategy', self.strategy), ('provider', self.provider), ('model', self.model.to_json()),
            ('epoch_length', self.epoch_length), ('active_from', self.active_from), ('status', self.status),
            ('pnl_mark', str(self.pnl_mark))])


class Transfer(object):
    subscription_fee = 'subscription_fee'
    carry = 'carry'
    co_capital_return = 'co_capital_return'

    def __init__(self, payer, payee, amount, kind):
        self.payer = payer
        self.payee = payee
        self.amount = amount
        self.kind = kind

    def __eq__(self, other):
        return isinstance(other, Transfer) and self.to_json() == other.to_json()

    def __repr__(self):
        return 'Transfer({!r}, {!r}, {}, {!r})'.format(self.payer, self.payee, self.amount, self.kind)

    def to_json(self):
        return OrderedDict([
            ('payer', self.payer), ('payee', self.payee), ('amount', str(self.amount)), ('kind', self.kind)])


class SignalTrackRecord(object):
    """ Rolling hypothetical returns of a provider's allocation signal and the performance weight derived from them.

    """
    def __init__(self, provider, window=DEFAULT_SIGNAL_WINDOW):
        self.provider = provider
        self.window = window
        self.returns = deque(maxlen=window)
        self.sharpe = ZERO
        self.performance = ONE
        self.subscribed_capital = ZERO
        self.multiplier = ONE

    def to_json(self):
        return OrderedDict([
            ('returns', [str(r) for r in self.returns]), ('sharpe', str(self.sharpe)),
            ('performance', str(self.performance)), ('subscribed_capital', str(self.subscribed_capital)),
            ('multiplier', str(self.multiplier))])


def track_signal_performance(record, weights, prices_t, prices_next, lambda_sig=ONE, epsilon=DEFAULT_EPSILON):
    """ Appends the hypothetical return ``sum(w_i * (P[t+1] / P[t] - 1))`` and refreshes the performance weight.

    The performance weight is ``exp(lambda_sig * sharpe)`` over the rolling window.

    :param weights: ``{asset: Dec18}`` of a PortfolioAllocation state.
    :raises MissingPrice: An asset with non-zero weight has no price.
    """
    r = ZERO
    for asset in sorted(weights):
        weight = weights[asset]
        if weight == ZERO:
            continue
        if asset not in prices_t:
            raise MissingPrice(asset)
        if asset not in prices_next:
            raise MissingPrice(asset)
        r += dec_mul(weight, dec_div(prices_next[asset], prices_t[asset]) - ONE)
    record.returns.append(r)
    record.sharpe = sharpe_ratio(list(record.returns), epsilon)
    record.performance = exp_fixed(dec_mul(lambda_sig, record.sharpe))
    return record


def run_access_auction(bids, capacity):
    """ Uniform-price auction for access to a provider.

    The top `capacity` bids win, ties going to the lexicographically lower
    strategy id; every winner pays the lowest winning bid. Nothing is paid
    when the auction clears: the clearing price becomes each winner's flat
    subscription fee, drawn from its fee budget at every epoch boundary by
    :meth:`Marketplace.accrue_signal_fees`.

    :param bids: ``[(strategy, bid), ...]``
    :returns: ``(winners, clearing_price)``
    :raises NoBids: `bids` is empty.
    """
    if isinstance(capacity, bool) or not isinstance(capacity, int) or capacity < 1:
        raise InvalidBid('Capacity must be a positive integer, not {!r}'.format(capacity))
    if len(bids) == 0:
        raise NoBids('No bids')
    seen = set()
    for strategy, bid in bids:
        if bid < ZERO:
            raise InvalidBid('Bid of {} is negative'.format(strategy))
        if strategy in seen:
            raise InvalidBid('Duplicate bid from {}'.format(strategy))
        seen.add(strategy)
    ranked = sorted(bids, key=lambda item: (-item[1].raw, item[0]))
    winners = ranked[:capacity]
    return [strategy for strategy, _ in winners], winners[-1][1]


class SignalSpace(object):
    """ The CSO states a strategy may read at a block, with each provider's aggregation inputs.

    `weights` maps a provider to ``(s, P, g, sharpe)``: subscribed capital,
    performance weight, governance multiplier and rolling Sharpe ratio.

    """
    def __init__(self, states=None, weights=None):
        self.states = states or {}
        self.weights = weights or {}

    def providers(self):
        return sorted(self.states)

    def latest(self, provider, kind):
        return self.states.get(provider, {}).get(kind)

    def weight(self, provider):
        return self.weights.get(provider, (ZERO, ONE, ONE, ZERO))


class Marketplace(object):
    """ Registry of signal providers, their states, subscriptions, fee budgets and track records.

    :param signal_window: Rolling window of hypothetical returns per provider.
    :param lambda_sig: Temperature of the performance weight.
    :param epsilon: Floor of the standard deviation in Sharpe ratios.
    """
    def __init__(self, signal_window=DEFAULT_SIGNAL_WINDOW, lambda_sig=ONE, epsilon=DEFAULT_EPSILON):
        self.signal_window = signal_window
        self.lambda_sig = lambda_sig
        self.epsilon = epsilon
        self.providers = OrderedDict()
        self.strategies = set()
        self.subscriptions = OrderedDict()
        self.fee_budgets = {}
        self.records = {}
        self.transfers = []
        self._logger = getLogger(self.__class__.__name__)

    # region Registration

    def register_cso(self, cso_id, kinds, status='Proposed'):
        """ Registers a provider for the declared kinds.

        :raises DuplicateId: `cso_id` is taken.
        """
        CsoId(cso_id)
        if cso_id in self.providers:
            raise DuplicateId('CSO {} is already registered'.format(cso_id))
        kinds = frozenset(kinds)
        unknown = sorted(kinds - frozenset(Kind.all))
        if unknown or not kinds:
            raise InvalidPayload('kinds', 'unknown or empty kinds: {}'.format(', '.join(unknown)))
        provider = Provider(cso_id, kinds, status)
        self.providers[cso_id] = provider
        self.records[cso_id] = SignalTrackRecord(cso_id, self.signal_window)
        return provider

    def validate_provider(self, cso_id):
        self._provider(cso_id).status = 'Validated'

    def register_strategy(self, strategy_id):
        StrategyId(strategy_id)
        self.strategies.add(strategy_id)
        self.fee_budgets.setdefault(strategy_id, ZERO)

    def _provider(self, cso_id):
        try:
            return self.providers[cso_id]
        except KeyError:
            raise UnknownParty('Unknown CSO: {}'.format(cso_id))

    # endregion

    # region Publication

    def publish_state(self, provider_id, state, clock):
        """ Stores `state` as the provider's latest state of its kind.

        :raises KindNotDeclared: The provider did not register `state.kind`.
        :raises InvalidPayload: The payload violates an invariant of its kind.
        :raises StaleNonce: `state.nonce` does not exceed the provider's last accepted nonce.
        """
        provider = self._provider(provider_id)
        if state.kind not in provider.kinds:
            raise KindNotDeclared('CSO {} did not declare kind {}'.format(provider_id, state.kind))
        if not isinstance(state.data, payload_types[state.kind]):
            raise InvalidPayload('kind', 'payload does not match kind {}'.format(state.kind))
        state.data.validate()
        if isinstance(state.nonce, bool) or not isinstance(state.nonce, int) or state.nonce < 0:
            raise StaleNonce('Nonce must be a non-negative integer, not {!r}'.format(state.nonce))
        if provider.last_nonce is not None and state.nonce <= provider.last_nonce:
            raise StaleNonce('Nonce {} of CSO {} does not exceed {}'.format(
                state.nonce, provider_id, provider.last_nonce))
        state.provider = provider_id
        state.published_at = clock.height
        provider.latest[state.kind] = state
        provider.last_nonce = state.nonce
        return state

    # endregion

    # region Subscriptions

    def fund_fee_budget(self, strategy, amount):
        """Credits a strategy's fee budget and resumes its suspended subscriptions."""
        if strategy not in self.strategies:
            raise UnknownParty('Unknown strategy: {}'.format(strategy))
        if not amount > ZERO:
            raise InsufficientFeeBudget('Funding must be positive, not {}'.format(amount))
        self.fee_budgets[strategy] = self.fee_budgets.get(strategy, ZERO) + amount
        for subscription in self.subscriptions.values():
            if subscription.strategy == strategy and subscription.status == Subscription.suspended:
                subscription.status = Subscription.active
        return self.fee_budgets[strategy]

    def subscribe(self, strategy, provider, model, epoch_length, height, pnl_mark=ZERO):
        """ Subscribes `strategy` to `provider`; reads are possible from the next block.

        :raises UnknownParty: Either party is unknown.
        :raises AlreadySubscribed: The pair already has a subscription.
        """
        if strategy not in self.strategies:
            raise UnknownParty('Unknown strategy: {}'.format(strategy))
        self._provider(provider)
        if (strategy, provider) in self.subscriptions:
            raise AlreadySubscribed('{} is already subscribed to {}'.format(strategy, provider))
        subscription = Subscription(strategy, provider, model, epoch_length, height + 1, pnl_mark)
        self.subscriptions[(strategy, provider)] = subscription
        return subscription

    def settle_auction(self, provider, bids, capacity, epoch_length, height, pnl_marks=None):
        """ Runs an access auction and subscribes each winner at the clearing price per epoch.

        No fee budget is charged here; the first payment falls due at the first
        epoch boundary from the block the subscription becomes readable.

        :returns: ``(winners, clearing_price, subscriptions)``
        """
        self._provider(provider)
        for strategy, _ in bids:
            if strategy not in self.strategies:
                raise UnknownParty('Unknown strategy: {}'.format(strategy))
            if (strategy, provider) in self.subscriptions:
                raise AlreadySubscribed('{} is already subscribed to {}'.format(strategy, provider))
        winners, price = run_access_auction(bids, capacity)
        marks = pnl_marks or {}
        subscriptions = [
            self.subscribe(strategy, provider, SubscriptionModel(price), epoch_length, height,
                           marks.get(strategy, ZERO)) for strategy in winners]
        return winners, price, subscriptions

    def signal_space(self, strategy, height):
        """The states of providers `strategy` can read at `height`."""
        states, weights = {}, {}
        for (subscriber, provider_id), subscription in self.subscriptions.items():
            if subscriber != strategy or not subscription.readable_at(height):
                continue
            provider = self.providers[provider_id]
            states[provider_id] = dict(provider.latest)
            record = self.records[provider_id]
            weights[provider_id] = (record.subscribed_capital, record.performance, record.multiplier, record.sharpe)
        return SignalSpace(states, weights)

    def update_subscribed_capital(self, capital, height):
        """ Sets each provider's ``s`` to the total capital of strategies reading it.

        :param capital: ``{strategy: capital}``
        """
        totals = {provider_id: ZERO for provider_id in self.providers}
        for (strategy, provider_id), subscription in self.subscriptions.items():
            if subscription.readable_at(height):
                totals[provider_id] += capital.get(strategy, ZERO)
        for provider_id, total in totals.items():
            self.records[provider_id].subscribed_capital = total

    def set_multiplier(self, provider, multiplier):
        if multiplier < ZERO:
            raise InvalidPayload('g >= 0', 'multiplier is {}'.format(multiplier))
        self._provider(provider)
        self.records[provider].multiplier = multiplier

    def provider_share(self, strategy, provider, height):
        """ The provider's share of the strategy's aggregation weight ``s * P * g / Z``.

        """
        total, own = ZERO, ZERO
        for (subscriber, provider_id), subscription in sorted(self.subscriptions.items()):
            if subscriber != strategy or not subscription.readable_at(height):
                continue
            record = self.records[provider_id]
            coefficient = dec_mul(dec_mul(record.subscribed_capital, record.performance), record.multiplier)
            total += coefficient
            if provider_id == provider:
                own = coefficient
        return dec_div(own, total) if total > ZERO else ZERO

    # endregion

    # region Fees and track records

    def track(self, prices_t, prices_next):
        """Updates the track record of every provider with a PortfolioAllocation state."""
        for provider_id, provider in self.providers.items():
            state = provider.latest.get(Kind.portfolio_allocation)
            if state is None:
                continue
            track_signal_performance(
                self.records[provider_id], state.data.weights, prices_t, prices_next, self.lambda_sig, self.epsilon)

    def accrue_signal_fees(self, strategy_pnl, strategy_capital, clock):
        """ Settles the subscriptions whose epoch ends at `clock.height`.

        Subscription models pay their flat fee; participation models pay
        ``carry_rate * max(0, share * epoch_pnl)`` plus the signed return on the
        provider's co-capital. A strategy whose fee budget cannot pay has the
        subscription suspended instead.

        :param strategy_pnl: ``{strategy: cumulative attribution}``
        :param strategy_capital: ``{strategy: capital}``
        :returns: ``(transfers, suspended)``; `suspended` lists ``(strategy, provider)`` pairs.
        """
        height = clock.height
        transfers, suspended = [], []
        for key in sorted(self.subscriptions):
            subscription = self.subscriptions[key]
            if height < subscription.active_from or height % subscription.epoch_length != 0:
                continue
            strategy, provider_id = key
            pnl = strategy_pnl.get(strategy, ZERO)
            epoch_pnl = pnl - subscription.pnl_mark
            subscription.pnl_mark = pnl
            if subscription.status != Subscription.active:
                continue
            model = subscription.model
            if isinstance(model, SubscriptionModel):
                due = [Transfer(strategy, provider_id, model.flat_fee, Transfer.subscription_fee)]
            else:
                share = self.provider_share(strategy, provider_id, height)
                attributable = dec_mul(share, epoch_pnl)
                carry = dec_mul(model.carry_rate, max(ZERO, attributable))
                capital = strategy_capital.get(strategy, ZERO)
                co_return = mul_div(model.co_capital, epoch_pnl, capital) if capital > ZERO else ZERO
                due = [Transfer(strategy, provider_id, carry, Transfer.carry)]
                if co_return < ZERO:
                    due.append(Transfer(provider_id, strategy, -co_return, Transfer.co_capital_return))
                else:
                    due.append(Transfer(strategy, provider_id, co_return, Transfer.co_capital_return))
            owed = sum((t.amount for t in due if t.payer == strategy), ZERO)
            if owed > self.fee_budgets.get(strategy, ZERO):
                subscription.status = Subscription.suspended
                suspended.append(key)
                self._logger.warning('subscription %s -> %s suspended: fee budget %s cannot pay %s',
                                     strategy, provider_id, self.fee_budgets.get(strategy, ZERO), owed)
                continue
            for transfer in due:
                if transfer.amount == ZERO:
                    continue
                if transfer.payer == strategy:
                    self.fee_budgets[strategy] -= transfer.amount
                    self.providers[provider_id].earnings += transfer.amount
                else:
                    self.fee_budgets[strategy] += transfer.amount
                    self.providers[provider_id].earnings -= transfer.amount
                transfers.append(transfer)
        self.transfers.extend(transfers)
        return transfers, suspended

    # endregion

    def state(self):
        return OrderedDict([
            ('providers', OrderedDict((k, p.to_json()) for k, p in sorted(self.providers.items()))),
            ('subscriptions', [s.to_json() for _, s in sorted(self.subscriptions.items())]),
            ('fee_budgets', OrderedDict((k, str(self.fee_budgets[k])) for k in sorted(self.fee_budgets))),
            ('records', OrderedDict((k, r.to_json()) for k, r in sorted(self.records.items())))])


__all__ = [
    'AlreadySubscribed', 'Arbitrage', 'Categorical', 'CsoState', 'DuplicateId', 'InsufficientFeeBudget',
    'InvalidBid', 'InvalidPayload', 'Kind', 'KindNotDeclared', 'LiquidityProvision', 'MarketMaking', 'Marketplace',
    'MarketplaceError', 'NoBids', 'ParticipationModel', 'Payload', 'PortfolioAllocation', 'Provider',
    'RewardAllocation', 'SignalSpace', 'SignalTrackRecord', 'StaleNonce', 'Subscription', 'SubscriptionModel',
    'Transfer', 'UnknownParty', 'Yield', 'parse_payload', 'run_access_auction', 'track_signal_performance',
    'verify_reward_claim']
