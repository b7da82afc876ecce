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

from ..decorators import Configuration, Option
from ..ledger import ONE, ZERO, dec_div, dec_mul
from ..validators import Decimal, Fraction, Identifier, WeightMap
from ..vault import ExecutionIntent, Function
from .base import InvalidParameters, Strategy
from .portfolio import current_weights, enforce_caps, weights_to_intents


class TargetWeightStrategy(Strategy):
    """ Shared machinery of strategies that trade toward target weights on their capital.

    """
    def position_cap(self, snapshot):
        return min(self.max_position, snapshot.per_asset_cap)

    def rebalance(self, market, snapshot, target):
        capital = snapshot.capital
        if not capital > ZERO:
            return []
        exposure = {asset: snapshot.exposure(asset) for asset in self.universe}
        return weights_to_intents(
            self.strategy_id, exposure, enforce_caps(target, self.position_cap(snapshot)), capital, market.prices,
            snapshot.numeraire, min_trade=dec_mul(self.min_trade, capital),
            max_turnover=dec_mul(self.max_turnover, capital), max_slippage=self.max_slippage, venue=self.venue,
            idle=snapshot.holdings, cash=snapshot.cash)

    def drift(self, market, snapshot, target):
        """Largest absolute difference between current and target weights."""
        exposure = {asset: snapshot.exposure(asset) for asset in self.universe}
        weights = current_weights(exposure, market.prices, snapshot.capital)
        return max((abs(weights.get(asset, ZERO) - target.get(asset, ZERO)) for asset in self.universe), default=ZERO)


@Configuration()
class PureSpot(TargetWeightStrategy):
    """ Buy and hold: trades to its target weights only when a weight drifts outside the band.

    """
    targets = Option(
        doc='''
        **Syntax:** **targets=***{asset: weight, ...}*
        **Description:** Target weights on the strategy's capital; the rest is held in the numeraire.''',
        require=True, validate=WeightMap(Fraction(), l1_limit=ONE))

    drift_band = Option(
        doc='''
        **Syntax:** **drift_band=***<fraction>*
        **Description:** Weight drift that triggers a rebalance. **Default:** 0.05''',
        default='0.05', validate=Fraction())

    def prepare(self):
        unknown = sorted(set(self.targets) - set(self.universe))
        if unknown:
            raise InvalidParameters('{} targets assets outside its universe: {}'.format(
                self.strategy_id, ', '.join(unknown)))

    def step(self, market, signals, snapshot):
        if not snapshot.capital > ZERO:
            return []
        target = enforce_caps(self.targets, self.position_cap(snapshot))
        if self.drift(market, snapshot, target) <= self.drift_band:
            return []
        return self.rebalance(market, snapshot, target)


@Configuration()
class StakedSpot(PureSpot):
    """ Spot exposure whose idle balance above a buffer is staked for yield.

    While the vault has pending redemptions the strategy raises its share
    (alpha times the pending value): idle balance is sold first and only the
    remainder is unstaked. It does not buy meanwhile.

    """
    targets = Option(
        doc='''
        **Syntax:** **targets=***{asset: weight, ...}*
        **Description:** Target weights. **Default:** all capital in `stake_asset`.''',
        validate=WeightMap(Fraction(), l1_limit=ONE))

    staking_venue = Option(
        doc='''
        **Syntax:** **staking_venue=***<venue-id>*
        **Description:** Whitelisted venue offering `stake` and `unstake`.''',
        require=True, validate=Identifier('venue'))

    stake_asset = Option(
        doc='''
        **Syntax:** **stake_asset=***<asset-id>*
        **Description:** Asset to stake.''',
        require=True, validate=Identifier('asset'))

    buffer = Option(
        doc='''
        **Syntax:** **buffer=***<quantity>*
        **Description:** Idle quantity of `stake_asset` kept unstaked. **Default:** 0''',
        default='0', validate=Decimal(minimum=0))

    def prepare(self):
        if self.stake_asset not in self.universe:
            raise InvalidParameters('{} stakes {} outside its universe'.format(self.strategy_id, self.stake_asset))
        if self.targets is None:
            self.targets = {self.stake_asset: '1'}
        PureSpot.prepare(self)

    def step(self, market, signals, snapshot):
        asset, venue = self.stake_asset, self.staking_venue
        idle = snapshot.holdings.get(asset, ZERO)
        staked = snapshot.staked(venue, asset)

        if snapshot.pending_redemptions > ZERO:
            price = market.prices[asset]
            share = dec_mul(snapshot.alpha, snapshot.pending_redemptions)
            sold = min(idle, dec_div(share, price))
            release = min(staked, dec_div(max(ZERO, share - dec_mul(idle, price)), price))
            intents = []
            if release > ZERO:
                intents.append(ExecutionIntent(self.strategy_id, venue, Function.unstake, asset=asset, qty=release))
            if sold > ZERO:
                intents.append(ExecutionIntent(
                    self.strategy_id, self.venue, Function.trade, asset_in=asset, asset_out=snapshot.numeraire,
                    qty_in=sold, min_out=dec_mul(dec_mul(sold, price), ONE - self.max_slippage)))
            return intents

        intents = PureSpot.step(self, market, signals, snapshot)
        if any(intent.asset_in == asset for intent in intents):
            return intents
        if idle > self.buffer:
            intents.append(ExecutionIntent(self.strategy_id, venue, Function.stake, asset=asset, qty=idle - self.buffer))
        return intents


__all__ = ['PureSpot', 'StakedSpot', 'TargetWeightStrategy']
