#!/usr/bin/env python
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
import random

from dmmflib.ledger import Dec18, ONE, ZERO
from dmmflib.strategies import (
    DegenerateWeights, aggregate_signals, categorical_to_weights, current_weights, enforce_caps, weights_to_intents)
from dmmflib.vault import Function
from tests import testlib
from tests.testlib import d

import pytest


@pytest.mark.smoke
class TestAggregation(testlib.DMMFTestCase):

    def test_equal_providers(self):
        weights = aggregate_signals([([ONE, ZERO], ONE, ONE, ONE), ([ZERO, ONE], ONE, ONE, ONE)])
        self.assertEqual(weights, [d('0.5'), d('0.5')])

    def test_weighted_providers(self):
        weights = aggregate_signals([([ONE, ZERO], d(3), ONE, ONE), ([ZERO, ONE], ONE, ONE, ONE)])
        self.assertEqual(weights, [d('0.75'), d('0.25')])

        # a zero multiplier silences a provider
        weights = aggregate_signals([([ONE, ZERO], d(3), ONE, ZERO), ([ZERO, ONE], ONE, d(2), ONE)])
        self.assertEqual(weights, [ZERO, ONE])

    def test_degenerate(self):
        self.assertRaises(DegenerateWeights, aggregate_signals, [])
        self.assertRaises(DegenerateWeights, aggregate_signals, [([ONE], ZERO, ONE, ONE), ([ONE], ONE, ONE, ZERO)])
        self.assertRaises(ValueError, aggregate_signals, [([ONE], ONE, ONE, ONE), ([ONE, ZERO], ONE, ONE, ONE)])

    def test_convex_combination(self):
        rng = random.Random(11)
        for _ in range(200):
            size = rng.randint(1, 5)
            providers = []
            for _ in range(rng.randint(1, 4)):
                weights = [Dec18(rng.randint(0, 10 ** 18)) for _ in range(size)]
                providers.append((weights, d(rng.randint(1, 10 ** 6)), Dec18(rng.randint(10 ** 17, 3 * 10 ** 18)),
                                  Dec18(rng.randint(10 ** 17, 2 * 10 ** 18))))
            combined = aggregate_signals(providers)
            self.assertEqual(len(combined), size)
            for i, value in enumerate(combined):
                column = [provider[0][i] for provider in providers]
                self.assertGreaterEqual(value.raw, min(column).raw - 1)
                self.assertLessEqual(value, max(column))


@pytest.mark.smoke
class TestCaps(testlib.DMMFTestCase):

    def test_clip_and_scale(self):
        weights = enforce_caps([d('0.6'), d('-0.6'), d('0.2')], d('0.5'))
        self.assertEqual(weights, [
            Dec18.parse('0.416666666666666666'), Dec18.parse('-0.416666666666666666'),
            Dec18.parse('0.166666666666666666')])

    def test_within_bounds(self):
        weights = OrderedDict([('ETH', d('0.3')), ('BTC', d('0.2'))])
        capped = enforce_caps(weights, ONE)
        self.assertIsInstance(capped, OrderedDict)
        self.assertEqual(list(capped.items()), list(weights.items()))
        self.assertEqual(enforce_caps({'ETH': d('0.9')}, d('0.4')), {'ETH': d('0.4')})

    def test_invalid_cap(self):
        self.assertRaises(ValueError, enforce_caps, [ONE], ZERO)
        self.assertRaises(ValueError, enforce_caps, [ONE], d('1.5'))

    def test_idempotent(self):
        rng = random.Random(5)
        for _ in range(300):
            cap = Dec18(rng.randint(1, 10 ** 18))
            weights = [Dec18(rng.randint(-2 * 10 ** 18, 2 * 10 ** 18)) for _ in range(rng.randint(1, 6))]
            once = enforce_caps(weights, cap)
            self.assertTrue(all(abs(w) <= cap for w in once))
            self.assertLessEqual(sum((abs(w) for w in once), ZERO), ONE)
            self.assertEqual(enforce_caps(once, cap), once)


@pytest.mark.smoke
class TestWeights(testlib.DMMFTestCase):

    def test_categorical(self):
        weights = categorical_to_weights(
            {'A': 1, 'B': 0, 'C': -1, 'D': 1}, {'A': d('0.1'), 'B': d('0.2'), 'C': d('0.3')}, ['A', 'B', 'C', 'D'])
        self.assertEqual(list(weights.items()), [('A', d('0.4')), ('B', d('0.2')), ('C', ZERO), ('D', d('0.4'))])

        # assets without a decision are held
        weights = categorical_to_weights({}, {'A': d('0.7')}, ['A', 'B'])
        self.assertEqual(dict(weights), {'A': d('0.7'), 'B': ZERO})

        # buys share nothing when holds take all the mass
        weights = categorical_to_weights({'A': 0, 'B': 1}, {'A': ONE}, ['A', 'B'])
        self.assertEqual(dict(weights), {'A': ONE, 'B': ZERO})

    def test_current_weights(self):
        self.assertEqual(current_weights({'ETH': d(2)}, testlib.PRICES, d(10)), {'ETH': d('0.4')})
        self.assertEqual(current_weights({'ETH': d(2)}, testlib.PRICES, ZERO), {'ETH': ZERO})


@pytest.mark.smoke
class TestIntents(testlib.DMMFTestCase):

    prices = {'USD': ONE, 'ETH': d(2), 'BTC': d(4)}

    def intents(self, holdings, target, **kwargs):
        return weights_to_intents('s1', holdings, target, d(1000), self.prices, 'USD', **kwargs)

    def test_buy(self):
        intents = self.intents({}, {'ETH': d('0.5')}, max_slippage=d('0.01'), venue='dex')
        self.assertEqual(len(intents), 1)
        intent = intents[0]
        self.assertEqual((intent.strategy, intent.venue, intent.function), ('s1', 'dex', Function.trade))
        self.assertEqual((intent.asset_in, intent.asset_out), ('USD', 'ETH'))
        self.assertEqual(intent.qty_in, d(500))
        self.assertEqual(intent.min_out, d('247.5'))

    def test_sell(self):
        intents = self.intents({'ETH': d(400)}, {'ETH': d('0.5')})
        self.assertEqual(len(intents), 1)
        self.assertEqual((intents[0].asset_in, intents[0].asset_out), ('ETH', 'USD'))
        self.assertEqual(intents[0].qty_in, d(150))
        self.assertEqual(intents[0].min_out, d(300))

    def test_exit(self):
        intents = self.intents({'ETH': d(400)}, {})
        self.assertEqual(len(intents), 1)
        self.assertEqual(intents[0].qty_in, d(400))

    def test_sells_before_buys(self):
        intents = self.intents({'BTC': d(250)}, {'ETH': ONE})
        self.assertEqual([(i.asset_in, i.asset_out) for i in intents], [('BTC', 'USD'), ('USD', 'ETH')])
        self.assertEqual(intents[0].qty_in, d(250))
        self.assertEqual(intents[1].qty_in, d(1000))

    def test_min_trade(self):
        self.assertEqual(self.intents({'ETH': d('249.9')}, {'ETH': d('0.5')}, min_trade=ONE), [])
        self.assertEqual(len(self.intents({'ETH': d('249.9')}, {'ETH': d('0.5')})), 1)

    def test_turnover(self):
        intents = self.intents({}, {'ETH': d('0.5'), 'BTC': d('0.5')}, max_turnover=d(100))
        self.assertEqual([(i.asset_out, i.qty_in) for i in intents], [('BTC', d(50)), ('ETH', d(50))])

    def test_cash_limit(self):
        intents = self.intents({}, {'ETH': d('0.5')}, cash=d(100))
        self.assertEqual(intents[0].qty_in, d(100))
        self.assertEqual(self.intents({}, {'ETH': d('0.5')}, cash=ZERO), [])

    def test_buys_stay_within_capital(self):
        rng = random.Random(3)
        for _ in range(200):
            slippage = Dec18(rng.randint(0, 5 * 10 ** 16))
            holdings = {'ETH': d(rng.randint(0, 300)), 'BTC': d(rng.randint(0, 150))}
            target = {'ETH': Dec18(rng.randint(0, 6 * 10 ** 17)), 'BTC': Dec18(rng.randint(0, 4 * 10 ** 17))}
            intents = self.intents(holdings, target, max_slippage=slippage)
            deployed = sum((holdings[a] * self.prices[a] for a in holdings), ZERO)
            bought = sum((i.qty_in for i in intents if i.asset_in == 'USD'), ZERO)
            sold = sum((i.qty_in * self.prices[i.asset_in] for i in intents if i.asset_out == 'USD'), ZERO)
            self.assertLessEqual(deployed - sold + bought, d(1000) + max(ZERO, deployed - d(1000)))
