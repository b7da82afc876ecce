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

from __future__ import absolute_import, division, print_function, unicode_literals

from collections import OrderedDict
from logging import getLogger

from ..decorators import Option
from ..ledger import AssetId, ProtocolError, StrategyId, ZERO
from ..marketplace import SignalSpace
from ..validators import Fraction, Identifier, Integer
from ..vault import VaultSnapshot


class InvalidParameters(ProtocolError, ValueError):
    pass


class MarketState(object):
    """ The market data a strategy observes at a block: oracle prices and venue depth.

    :param prices: ``{asset: Dec18}``, all strictly positive.
    :param venue_liquidity: ``{venue: Dec18}``
    """
    def __init__(self, prices, venue_liquidity=None, block=None):
        for asset in sorted(prices):
            if not prices[asset] > ZERO:
                raise InvalidParameters('Price of {} must be positive, not {}'.format(asset, prices[asset]))
        self.prices = dict(prices)
        self.venue_liquidity = dict(venue_liquidity or {})
        self.block = block


class Strategy(object):
    """ Base class of strategies: deterministic maps from market state, signal
    space and vault snapshot to execution intents.

    Subclasses declare their parameters with :class:`~dmmflib.decorators.Option`
    and are decorated with :class:`~dmmflib.decorators.Configuration`. They
    must override :meth:`step` and keep no state between steps.

    :param strategy_id: Strategy id.
    :param universe: Assets the strategy may hold.
    :param params: ``{name: value}`` as read from a scenario file.
    :raises InvalidParameters: A parameter is unknown, missing or invalid.

    """
    def __init__(self, strategy_id, universe, params=None):
        StrategyId(strategy_id)
        self.strategy_id = strategy_id
        self.universe = tuple(sorted(AssetId(asset) for asset in universe))
        self.options = Option.View(self)
        self._logger = getLogger(self.__class__.__name__)
        self.configure(params or {})

    def __repr__(self):
        return '{}({!r}, {})'.format(self.__class__.__name__, self.strategy_id, self.options)

    # region Options

    execution_frequency = Option(
        doc='''
        **Syntax:** **execution_frequency=***<blocks>*
        **Description:** Number of blocks between executions. **Default:** 1''',
        default=1, validate=Integer(1))

    offset = Option(
        doc='''
        **Syntax:** **offset=***<blocks>*
        **Description:** Execution phase within `execution_frequency`. **Default:** 0''',
        default=0, validate=Integer(0))

    max_position = Option(
        doc='''
        **Syntax:** **max_position=***<fraction>*
        **Description:** Largest weight of any one asset in the strategy's capital. **Default:** 1''',
        default='1', validate=Fraction(positive=True))

    max_turnover = Option(
        doc='''
        **Syntax:** **max_turnover=***<fraction>*
        **Description:** Largest traded notional per rebalance as a fraction of capital. **Default:** 1''',
        default='1', validate=Fraction(positive=True))

    min_trade = Option(
        doc='''
        **Syntax:** **min_trade=***<fraction>*
        **Description:** Trades smaller than this fraction of capital are skipped. **Default:** 0.001''',
        default='0.001', validate=Fraction())

    max_slippage = Option(
        doc='''
        **Syntax:** **max_slippage=***<fraction>*
        **Description:** Worst accepted execution shortfall; sets `min_out` on trades. **Default:** 0.01''',
        default='0.01', validate=Fraction())

    venue = Option(
        doc='''
        **Syntax:** **venue=***<venue-id>*
        **Description:** Spot venue for trades. When omitted trades are routed to the best whitelisted venue.''',
        validate=Identifier('venue'))

    # endregion

    # region Methods

    def configure(self, params):
        """ Resets every option and assigns `params`.

        :raises InvalidParameters: A parameter is unknown, missing or fails validation.
        """
        self.options.reset()
        for name in sorted(params):
            if name not in self.options:
                raise InvalidParameters('Unrecognized {} parameter: {}'.format(self.name, name))
            try:
                self.options[name].value = params[name]
            except (ValueError, ProtocolError) as error:
                raise InvalidParameters('Invalid {} parameter {}: {}'.format(self.name, name, error))
        missing = self.options.get_missing()
        if missing is not None:
            raise InvalidParameters('Values for these {} parameters are required: {}'.format(
                self.name, ', '.join(missing)))
        self.prepare()

    def prepare(self):
        """ Checks parameter combinations once all options are set.

        """
        pass

    def is_due(self, height):
        return height % self.execution_frequency == self.offset % self.execution_frequency

    def step(self, market, signals, snapshot):
        """ Returns the execution intents for this block.

        :type market: :class:`MarketState`
        :type signals: :class:`~dmmflib.marketplace.SignalSpace`
        :type snapshot: :class:`~dmmflib.vault.VaultSnapshot`
        :rtype: ``list`` of :class:`~dmmflib.vault.ExecutionIntent`
        """
        raise NotImplementedError('Strategy.step(self, market, signals, snapshot)')

    # endregion


def strategy_step(strategy, market, signals, snapshot):
    """ Runs one step of `strategy`, dropping intents outside its universe or whitelist.

    A strategy that cannot act returns an empty list; so does a strategy that raises
    a :class:`~dmmflib.ledger.ProtocolError`.
    """
    try:
        intents = strategy.step(market, signals, snapshot)
    except ProtocolError as error:
        strategy._logger.warning('strategy %s produced no intents: %s', strategy.strategy_id, error)
        return []
    allowed = frozenset(strategy.universe) | frozenset([snapshot.numeraire])
    result = []
    for intent in intents:
        if intent.strategy != strategy.strategy_id or not frozenset(intent.assets()) <= allowed:
            strategy._logger.warning('dropped intent outside the universe of %s: %r', strategy.strategy_id, intent)
            continue
        if intent.venue is not None and intent.venue not in snapshot.venues:
            strategy._logger.warning('dropped intent for unlisted venue %s: %r', intent.venue, intent)
            continue
        result.append(intent)
    return result


def option_values(strategy):
    """JSON-ready ``{name: value}`` of a strategy's parameters."""
    return OrderedDict((name, value) for name, value in strategy.options.to_json().items() if value is not None)


__all__ = ['InvalidParameters', 'MarketState', 'SignalSpace', 'Strategy', 'VaultSnapshot', 'option_values',
           'strategy_step']
