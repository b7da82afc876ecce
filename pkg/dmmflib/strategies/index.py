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

from ..decorators import Configuration, Option
from ..ledger import ONE, ZERO, dec_mul, exp_fixed
from ..marketplace import Kind
from ..validators import Decimal, Fraction, Identifier, List, WeightMap
from .base import InvalidParameters
from .portfolio import DegenerateWeights, aggregate_signals, categorical_to_weights, current_weights, enforce_caps
from .spot import TargetWeightStrategy


@Configuration()
class IndexTracker(TargetWeightStrategy):
    """ Rebalances to fixed target weights at every execution.

    """
    targets = Option(
        doc='''
        **Syntax:** **targets=***{asset: weight, ...}*
        **Description:** Index weights on the strategy's capital.''',
        require=True, validate=WeightMap(Fraction(), l1_limit=ONE))

    def prepare(self):
        unknown = sorted(set(self.targets) - set(self.universe))
        if unknown:
            raise InvalidParameters('{} targets assets outside its universe: {}'.format(
                self.strategy_id, ', '.join(unknown)))

    def step(self, market, signals, snapshot):
        return self.rebalance(market, snapshot, self.targets)


@Configuration()
class SignalAggregator(TargetWeightStrategy):
    """ Trades toward the capital- and performance-weighted combination of its providers' signals.

    PortfolioAllocation states are read as weight vectors over the strategy's
    universe; Categorical states are mapped to weights first. Negative
    combined weights are not held. When no provider carries weight the
    strategy holds the numeraire.

    """
    providers = Option(
        doc='''
        **Syntax:** **providers=***<cso-id>[,<cso-id>]...*
        **Description:** Signal providers to combine, in order.''',
        require=True, validate=List(Identifier('CSO'), minimum_length=1, unique=True))

    lambda_sig = Option(
        doc='''
        **Syntax:** **lambda_sig=***<decimal>*
        **Description:** Temperature of the performance weight ``exp(lambda_sig * sharpe)``. **Default:** 1''',
        default='1', validate=Decimal(minimum=0))

    cap = Option(
        doc='''
        **Syntax:** **cap=***<fraction>*
        **Description:** Per-asset cap; the vault's cap applies when it is tighter.''',
        validate=Fraction(positive=True))

    def position_cap(self, snapshot):
        cap = TargetWeightStrategy.position_cap(self, snapshot)
        return cap if self.cap is None else min(cap, self.cap)

    def signal_vectors(self, market, signals, snapshot):
        exposure = {asset: snapshot.exposure(asset) for asset in self.universe}
        current = current_weights(exposure, market.prices, snapshot.capital)
        vectors = []
        for provider in self.providers:
            state = signals.latest(provider, Kind.portfolio_allocation)
            if state is not None:
                weights = state.data.weights
            else:
                state = signals.latest(provider, Kind.categorical)
                if state is None:
                    continue
                weights = categorical_to_weights(state.data.decisions, current, self.universe)
            s, _, g, sharpe = signals.weight(provider)
            performance = exp_fixed(dec_mul(self.lambda_sig, sharpe))
            vectors.append(([weights.get(asset, ZERO) for asset in self.universe], s, performance, g))
        return vectors

    def target(self, market, signals, snapshot):
        try:
            combined = aggregate_signals(self.signal_vectors(market, signals, snapshot))
        except DegenerateWeights:
            self._logger.debug('%s holds the numeraire: no weighted signal', self.strategy_id)
            return OrderedDict((asset, ZERO) for asset in self.universe)
        weights = OrderedDict((asset, max(ZERO, w)) for asset, w in zip(self.universe, combined))
        return enforce_caps(weights, self.position_cap(snapshot))

    def step(self, market, signals, snapshot):
        if not snapshot.capital > ZERO:
            return []
        return self.rebalance(market, snapshot, self.target(market, signals, snapshot))


__all__ = ['IndexTracker', 'SignalAggregator']
