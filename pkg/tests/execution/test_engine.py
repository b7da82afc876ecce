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

import pytest

from dmmflib.execution import Target, run_block
from dmmflib.ledger import ProtocolError, ZERO
from dmmflib.scenario import Scenario, build_world
from tests import testlib
from tests.testlib import d


class Recorder(list):
    """An event sink keeping ``(block, seq, actor, action, payload)`` tuples."""

    def __call__(self, block, seq, actor, action, payload):
        self.append((block, seq, actor, action, payload))

    def actions(self, block=None):
        return [event[3] for event in self if block is None or event[0] == block]

    def of(self, action):
        return [event for event in self if event[3] == action]


def world_of(document):
    sink = Recorder()
    return build_world(Scenario.from_json(document), sink), sink


@pytest.mark.smoke
class TestEmptyWorld(testlib.DMMFTestCase):

    def test_run_closes_every_block(self):
        world, sink = world_of(testlib.MINIMAL_SCENARIO)
        world.run(10)
        self.assertEqual(world.height, 10)
        self.assertEqual([record.block for record in world.vaults['v1'].history], list(range(11)))
        self.assertEqual(len(sink.of('nav')), 11)
        self.assertEqual(sink.actions(0)[:3], ['whitelist', 'prices', 'nav'])
        self.assertEqual(world.counters['fills'], 0)
        self.assertEqual(world.counters['events'], len(sink))

    def test_sequence_numbers_restart_every_block(self):
        world, sink = world_of(testlib.MINIMAL_SCENARIO)
        world.run(3)
        for block in range(4):
            seqs = [event[1] for event in sink if event[0] == block]
            self.assertEqual(seqs, list(range(len(seqs))))

    def test_start_once(self):
        world, _ = world_of(testlib.MINIMAL_SCENARIO)
        world.start()
        self.assertRaises(ProtocolError, world.start)
        self.assertEqual(run_block(world).height, 1)

    def test_default_tasks(self):
        world, _ = world_of(testlib.TRADING_SCENARIO)
        targets = world.scheduler.targets()
        self.assertIn((Target.strategy('hold'), None), targets)
        self.assertIn((Target.fee_accrual, 'v1'), targets)
        self.assertIn((Target.fee_epoch, None), targets)
        self.assertNotIn((Target.allocator, 'v1'), targets)
        hold = [task for task in world.scheduler if task.target == Target.strategy('hold')][0]
        self.assertEqual((hold.cadence, hold.offset), (5, 0))


class TestScriptedEvents(testlib.DMMFTestCase):

    def test_deposit_and_withdraw(self):
        world, sink = world_of(testlib.TRADING_SCENARIO)
        world.run(12)
        self.assertEqual(sink.actions(1)[:3], ['prices', 'input', 'deposited'])
        self.assertIn('fee_accrued', sink.actions(1))
        deposited = sink.of('deposited')[0]
        self.assertEqual((deposited[0], deposited[2]), (1, 'lp'))
        self.assertEqual(deposited[4]['shares'], '100000')
        self.assertEqual(world.vaults['v1'].share_balances['lp'], d(99000))
        withdrawn = sink.of('withdrawn')[0]
        self.assertEqual((withdrawn[0], withdrawn[4]['shares']), (12, '1000'))
        self.assertGreater(d(withdrawn[4]['payout']), ZERO)

    def test_failures_are_logged_and_do_not_abort(self):
        document = testlib.scenario_document(events=[
            {'block': 2, 'action': 'withdraw', 'actor': 'lp', 'payload': {'vault': 'v1', 'shares': '5'}},
            {'block': 3, 'action': 'deposit', 'actor': 'lp', 'payload': {'vault': 'v1', 'basket': {'USD': '10'}}}])
        world, sink = world_of(document)
        world.run(10)
        rejected = sink.of('rejected')
        self.assertEqual(len(rejected), 1)
        self.assertEqual(rejected[0][0], 2)
        self.assertEqual(rejected[0][4]['error'], 'InsufficientShares')
        self.assertEqual(world.vaults['v1'].share_supply, d(10))
        self.assertEqual(world.height, 10)

    def test_events_are_ordered_by_block(self):
        document = testlib.scenario_document(events=[
            {'block': 3, 'action': 'deposit', 'actor': 'a', 'payload': {'vault': 'v1', 'basket': {'USD': '1'}}},
            {'block': 1, 'action': 'deposit', 'actor': 'b', 'payload': {'vault': 'v1', 'basket': {'USD': '1'}}}])
        events = Scenario.from_json(document).events()
        self.assertEqual([(event.block, event.actor) for event in events], [(1, 'b'), (3, 'a')])
        self.assertEqual(repr(events[0]), "ScriptedEvent(1, 'deposit', 'b')")
        self.assertEqual(events[0].payload['basket'], {'USD': d(1)})


@pytest.mark.slow
class TestTradingWorld(testlib.DMMFTestCase):

    def test_strategy_trades_on_its_cadence(self):
        world, sink = world_of(testlib.TRADING_SCENARIO)
        world.run(20)
        fills = sink.of('fill')
        self.assertTrue(fills)
        self.assertTrue(all(event[0] % 5 == 0 and event[2] == 'hold' for event in fills))
        self.assertEqual(world.counters['fills'], len(fills))
        vault = world.vaults['v1']
        self.assertGreater(vault.snapshot('hold', world.prices, world.height).exposure('ETH'), ZERO)

    def test_runs_are_deterministic(self):
        first, first_sink = world_of(testlib.TRADING_SCENARIO)
        second, second_sink = world_of(testlib.TRADING_SCENARIO)
        first.run(20)
        second.run(20)
        self.assertEqual(list(first_sink), list(second_sink))
        self.assertEqual(first.state(), second.state())

    def test_management_fee_accrues(self):
        world, _ = world_of(testlib.TRADING_SCENARIO)
        world.run(20)
        vault = world.vaults['v1']
        self.assertGreater(vault.accrued_fees, ZERO)

    def test_intents_apply_in_strategy_order(self):
        document = testlib.scenario_document(testlib.TRADING_SCENARIO)
        template = document['strategies'][0]
        document['strategies'] = [
            dict(template, id=strategy_id, alpha='0.2') for strategy_id in ('b', 'a')]
        document['automation'] = [
            {'task_id': 0, 'target': 'strategy:b', 'cadence': 5},
            {'task_id': 1, 'target': 'strategy:a', 'cadence': 5}]
        world, sink = world_of(document)
        self.assertEqual([task.target for task in world.scheduler][:2], ['strategy:b', 'strategy:a'])
        world.run(5)
        actors = [event[2] for event in sink.of('fill') if event[0] == 5]
        self.assertEqual(set(actors), {'a', 'b'})
        self.assertEqual(actors, sorted(actors))
