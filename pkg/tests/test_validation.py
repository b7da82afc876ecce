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

import random

import pytest

from dmmflib.ledger import Dec18, ONE, ZERO
from dmmflib.validation import (
    Allocator, AlreadyPending, Decision, Direction, DuplicateBallot, InfeasibleBounds, InsufficientStake,
    NoActiveStrategies, NotProposed, PerfWindow, StakeBallot, StakeVoteMechanism, UnknownCandidate, WindowClosed,
    WindowStillOpen, finalize_validation, intent_score, rebalance_allocations)
from dmmflib.vault import ExecutionIntent, Fill, Function, Status
from tests import testlib
from tests.testlib import PRICES, d


def buy(strategy, qty):
    return ExecutionIntent(strategy, 'dex', Function.trade, asset_in='USD', asset_out='ETH', qty_in=d(qty),
                           min_out=ZERO)


def stake(strategy, qty):
    return ExecutionIntent(strategy, 'stake', Function.stake, asset='ETH', qty=d(qty))


@pytest.mark.smoke
class TestFinalizeValidation(testlib.DMMFTestCase):

    def test_decisions(self):
        theta, minimum = d('0.5'), d(50)
        self.assertEqual(finalize_validation(d(60), d(40), theta, minimum), Decision.accepted)
        self.assertEqual(finalize_validation(d(40), d(60), theta, minimum), Decision.rejected)
        self.assertEqual(finalize_validation(d(20), d(10), theta, minimum), Decision.rejected)
        self.assertEqual(finalize_validation(ZERO, ZERO, theta, ZERO), Decision.rejected)

    def test_comparisons_are_inclusive(self):
        self.assertEqual(finalize_validation(d(25), d(25), d('0.5'), d(50)), Decision.accepted)
        self.assertEqual(finalize_validation(d(1), d(2), ONE / 3, ZERO), Decision.accepted)
        self.assertEqual(finalize_validation(d(1), d(2), ONE / 3 + Dec18(1), ZERO), Decision.rejected)

    def test_intent_score(self):
        spec = [('sharpe', d('0.5')), ('drawdown', d(-1)), ('turnover', ONE)]
        self.assertEqual(intent_score({'sharpe': d(2), 'drawdown': d('0.1')}, spec), d('0.9'))
        self.assertEqual(intent_score({}, spec), ZERO)


class TestStakeVoteMechanism(testlib.DMMFTestCase):

    def setUp(self):
        self.mechanism = StakeVoteMechanism(voting_window=10, theta=d('0.5'), min_stake=d(50))
        self.mechanism.bond('val-a', d(100))
        self.mechanism.bond('val-b', d(100))

    def ballot(self, validator, stake, direction=Direction.accept):
        return StakeBallot(validator, d(stake), direction)

    def test_window(self):
        candidate = self.mechanism.submit_candidate('s9', 'strategy', Status.proposed, 10)
        self.assertEqual(candidate.closes_at, 20)
        self.assertEqual(self.mechanism.cast_ballot('s9', self.ballot('val-a', 60), 19), (d(60), ZERO))
        self.assertRaises(WindowClosed, self.mechanism.cast_ballot, 's9', self.ballot('val-b', 40), 20)
        self.assertRaises(WindowStillOpen, self.mechanism.finalize, 's9', 19)
        self.assertEqual(self.mechanism.finalize('s9', 20).decision, Decision.accepted)
        self.assertRaises(UnknownCandidate, self.mechanism.finalize, 's9', 21)

    def test_stake_is_locked_until_finalized(self):
        self.mechanism.submit_candidate('s9', 'strategy', Status.proposed, 0)
        self.mechanism.submit_candidate('cso-1', 'cso', Status.proposed, 0)
        self.mechanism.cast_ballot('s9', self.ballot('val-a', 70), 1)
        self.assertEqual(self.mechanism.free_stake('val-a'), d(30))
        self.assertRaises(InsufficientStake, self.mechanism.cast_ballot, 'cso-1', self.ballot('val-a', 31), 1)
        self.assertRaises(InsufficientStake, self.mechanism.cast_ballot, 'cso-1', self.ballot('val-a', 0), 1)
        self.assertRaises(DuplicateBallot, self.mechanism.cast_ballot, 's9', self.ballot('val-a', 1), 2)
        self.mechanism.cast_ballot('s9', self.ballot('val-b', 40, Direction.reject), 2)
        candidate = self.mechanism.finalize('s9', 10)
        self.assertEqual((candidate.accept_stake, candidate.reject_stake), (d(70), d(40)))
        self.assertEqual(self.mechanism.free_stake('val-a'), d(100))
        self.assertEqual(self.mechanism.state()['locked'], {})

    def test_rejections(self):
        self.mechanism.submit_candidate('s9', 'strategy', Status.proposed, 0)
        self.mechanism.cast_ballot('s9', self.ballot('val-a', 20), 0)
        self.mechanism.cast_ballot('s9', self.ballot('val-b', 10), 0)
        # Below the minimum total stake.
        self.assertEqual(self.mechanism.finalize('s9', 10).decision, Decision.rejected)
        self.assertRaises(UnknownCandidate, self.mechanism.cast_ballot, 'nobody', self.ballot('val-a', 1), 0)

    def test_submission_rules(self):
        self.mechanism.submit_candidate('s9', 'strategy', Status.proposed, 0)
        self.assertRaises(AlreadyPending, self.mechanism.submit_candidate, 's9', 'strategy', Status.proposed, 1)
        self.assertRaises(NotProposed, self.mechanism.submit_candidate, 's8', 'strategy', Status.active, 1)
        self.assertRaises(InsufficientStake, self.mechanism.bond, 'val-c', ZERO)
        self.assertRaises(ValueError, StakeVoteMechanism, 0)
        self.assertRaises(ValueError, StakeVoteMechanism, 10, d(2))


@pytest.mark.smoke
class TestRebalanceAllocations(testlib.DMMFTestCase):

    def test_softmax(self):
        alphas = rebalance_allocations({'a': ONE, 'b': ZERO})
        self.assertEqual(list(alphas), ['a', 'b'])
        self.assertDecEqual(alphas['a'], '0.731058578630004879', tolerance=10 ** 6)
        self.assertDecEqual(alphas['a'] + alphas['b'], ONE, tolerance=2)

    def test_bounds(self):
        alphas = rebalance_allocations({'a': ONE, 'b': ZERO}, ONE, (d('0.4'), ONE))
        self.assertDecEqual(alphas['a'], '0.6', tolerance=2)
        self.assertDecEqual(alphas['b'], '0.4', tolerance=2)
        alphas = rebalance_allocations({'a': d(9), 'b': ZERO, 'c': ZERO}, ONE, (ZERO, d('0.5')))
        self.assertDecEqual(alphas['a'], '0.5', tolerance=3)
        self.assertDecEqual(alphas['b'], '0.25', tolerance=3)

    def test_infeasible(self):
        self.assertRaises(NoActiveStrategies, rebalance_allocations, {})
        self.assertRaises(InfeasibleBounds, rebalance_allocations, {'a': ONE, 'b': ONE, 'c': ONE}, ONE,
                          (d('0.4'), ONE))
        self.assertRaises(InfeasibleBounds, rebalance_allocations, {'a': ONE, 'b': ONE, 'c': ONE}, ONE,
                          (ZERO, d('0.3')))

    def test_properties(self):
        rng = random.Random(5)
        for _ in range(50):
            n = rng.randint(1, 6)
            perf = {'s{}'.format(i): Dec18(rng.randint(-3 * 10 ** 18, 3 * 10 ** 18)) for i in range(n)}
            lower = Dec18(rng.randint(0, 10 ** 18 // n))
            alphas = rebalance_allocations(perf, d('1.5'), (lower, ONE))
            self.assertLessEqual(sum(alphas.values(), ZERO), ONE)
            self.assertDecEqual(sum(alphas.values(), ZERO), ONE, tolerance=n)
            for s in perf:
                self.assertGreaterEqual(alphas[s], lower)
                for t in perf:
                    if perf[s] > perf[t]:
                        self.assertGreaterEqual(alphas[s], alphas[t])
            shifted = rebalance_allocations({s: v + d(7) for s, v in perf.items()}, d('1.5'), (lower, ONE))
            self.assertEqual(shifted, alphas)


class TestAllocator(testlib.DMMFTestCase):

    def test_rolling_sharpe(self):
        allocator = Allocator(window=3)
        for value in '0.5', '0.01', '0.02', '0.03':
            allocator.record('s1', d(value))
        self.assertEqual(list(allocator.windows['s1'].returns), [d('0.01'), d('0.02'), d('0.03')])
        self.assertDecEqual(allocator.sharpe('s1'), '2.449489742783178098', tolerance=10 ** 9)
        self.assertEqual(allocator.sharpe('s2'), ZERO)
        self.assertEqual(PerfWindow('s3').sharpe, ZERO)

    def test_rebalance_sets_allocations(self):
        vault = testlib.active_vault({'s1': d('0.5'), 's2': d('0.5')})
        allocator = Allocator()
        for value in '0.01', '0.02', '0.03':
            allocator.record('s1', d(value))
            allocator.record('s2', ZERO)
        alphas, intents = allocator.rebalance(vault, PRICES, 5)
        self.assertGreater(alphas['s1'], alphas['s2'])
        self.assertEqual(vault.strategies['s1'].alpha, alphas['s1'])
        self.assertEqual(vault.allocation_history[-1]['block'], 5)
        self.assertEqual(intents, [])

    def test_rebalance_without_active_strategies(self):
        vault = testlib.active_vault({})
        self.assertRaises(NoActiveStrategies, Allocator().rebalance, vault, PRICES, 5)

    def test_unwind_intents(self):
        vault = testlib.active_vault({'s1': d('0.5'), 's2': d('0.5')})
        vault.apply_fill(buy('s1', 300), Fill(None, 'dex', debit=('USD', d(300)), credit=('ETH', d(150))), PRICES)
        vault.apply_fill(stake('s1', 50), Fill(None, 'stake', debit=('ETH', d(50)), position=('ETH', d(50))), PRICES)
        self.assertEqual(vault.strategies['s1'].deployed_notional, d(300))

        sell, release = Allocator().unwind_intents(vault, PRICES, {'s1': d('0.1'), 's2': d('0.9')})
        self.assertEqual((sell.function, sell.venue, sell.asset_in, sell.asset_out),
                         (Function.trade, None, 'ETH', 'USD'))
        self.assertEqual(str(sell.qty_in), '66.666666666666666666')
        self.assertEqual((release.function, release.venue, release.asset), (Function.unstake, 'stake', 'ETH'))
        self.assertEqual(str(release.qty), '33.333333333333333333')

        alphas = {'s1': d('0.1'), 's2': d('0.9')}
        sell, release = Allocator(max_turnover=d('0.1')).unwind_intents(vault, PRICES, alphas)
        self.assertEqual(str(sell.qty_in), '33.333333333333333333')
        self.assertEqual(str(release.qty), '16.666666666666666666')
        self.assertEqual(Allocator().unwind_intents(vault, PRICES, {'s1': d('0.5'), 's2': d('0.5')}), [])
