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

import copy
import json

from dmmflib.ledger import Dec18, ONE, ZERO
from dmmflib.scenario import ParseError, Scenario, ScenarioInvalid, validate_scenario
from tests import testlib

import pytest


def paths(document):
    return [path for path, _ in validate_scenario(document)]


def trading(**sections):
    return testlib.scenario_document(testlib.TRADING_SCENARIO, **sections)


def strategy(**kwargs):
    spec = copy.deepcopy(testlib.TRADING_SCENARIO['strategies'][0])
    spec.update(kwargs)
    return spec


@pytest.mark.smoke
class TestSchema(testlib.DMMFTestCase):

    def test_minimal(self):
        self.assertEqual(validate_scenario(testlib.MINIMAL_SCENARIO), [])
        scenario = Scenario.from_json(testlib.MINIMAL_SCENARIO)
        self.assertEqual((scenario.name, scenario.seed, scenario.horizon), ('empty', 1, 10))
        self.assertEqual(scenario.blocks_per_year, 365)
        self.assertEqual(scenario['vaults'][0]['per_asset_cap'], ONE)
        self.assertEqual(scenario['vaults'][0]['fee_recipient'], 'treasury')
        self.assertEqual(scenario['venues'], [])
        self.assertEqual(scenario.events(), [])

    def test_trading(self):
        scenario = Scenario.from_json(testlib.TRADING_SCENARIO)
        spec = scenario['strategies'][0]
        self.assertEqual(spec['alpha'], Dec18.parse('0.5'))
        self.assertEqual(spec['status'], 'Active')
        self.assertEqual(scenario['assets']['feeds'][0]['sigma'], Dec18.parse('0.6'))
        self.assertEqual([event.block for event in scenario.events()], [1, 12])

    def test_collects_every_error(self):
        document = testlib.scenario_document(meta={'seed': 1, 'horizon': 1.5}, extra=True)
        document['vaults'][0]['mgmt_fee_rate'] = 0.02
        found = paths(document)
        for path in '$.extra', '$.meta.name', '$.meta.horizon', '$.vaults[0].mgmt_fee_rate':
            self.assertIn(path, found)

        self.assertIn('$.schema_version', paths(testlib.scenario_document(schema_version=2)))
        self.assertIn('$.vaults', paths(testlib.scenario_document(vaults=[])))
        self.assertIn('$.meta.name', paths(testlib.scenario_document(meta={'name': 'a b', 'seed': 1, 'horizon': 1})))
        self.assertIn('$.meta.seed', paths(testlib.scenario_document(meta={'name': 'a', 'seed': -1, 'horizon': 1})))

    def test_tagged_variants(self):
        found = paths(testlib.scenario_document(assets={'quote': 'USD', 'feeds': [{'asset': 'ETH', 'mode': 'walk'}]}))
        self.assertEqual(found, ['$.assets.feeds[0].mode'])

        feed = {'asset': 'ETH', 'mode': 'gbm', 'p0': '0'}
        document = testlib.scenario_document(assets={'quote': 'USD', 'feeds': [feed]})
        self.assertIn('$.assets.feeds[0].p0', paths(document))

    def test_scenario_invalid(self):
        try:
            Scenario.from_json(testlib.scenario_document(extra=1))
        except ScenarioInvalid as error:
            self.assertEqual(error.errors, [('$.extra', 'Unknown field')])
            self.assertIn('$.extra', str(error))
        else:
            self.fail('Expected ScenarioInvalid')


@pytest.mark.smoke
class TestReferences(testlib.DMMFTestCase):

    def test_valid(self):
        self.assertEqual(validate_scenario(testlib.TRADING_SCENARIO), [])

    def test_prices(self):
        vaults = [{'id': 'v1', 'admissible_assets': ['USD', 'ETH'], 'numeraire': 'ETH'}]
        self.assertIn('$.vaults[0].numeraire', paths(testlib.scenario_document(vaults=vaults)))

        vaults = [{'id': 'v1', 'admissible_assets': ['USD', 'ETH', 'BTC'], 'numeraire': 'USD'}]
        self.assertEqual(paths(testlib.scenario_document(vaults=vaults)), ['$.vaults[0].admissible_assets'])

        assets = {'quote': 'USD', 'feeds': [{'asset': 'ETH', 'mode': 'scripted', 'path': ['2'] * 10}]}
        self.assertEqual(paths(testlib.scenario_document(assets=assets)), ['$.assets.feeds[0].path'])

        assets = {'quote': 'USD', 'feeds': [{'asset': 'USD', 'mode': 'scripted', 'path': ['1'] * 11},
                                            {'asset': 'ETH', 'mode': 'scripted', 'path': ['2'] * 11}]}
        self.assertEqual(paths(testlib.scenario_document(assets=assets)), ['$.assets.feeds[0].asset'])

    def test_alphas(self):
        document = trading(strategies=[strategy(alpha='0.6'), strategy(id='hold2', alpha='0.6')])
        self.assertEqual(paths(document), ['$.strategies[1].alpha'])

        document = trading(strategies=[strategy(status='Validated', alpha='0.1')])
        self.assertEqual(paths(document), ['$.strategies[0].alpha'])

        self.assertIn('$.strategies[1].id', paths(trading(strategies=[strategy(alpha='0.1'), strategy(alpha='0.1')])))

    def test_venues(self):
        document = trading(strategies=[strategy(params={'targets': {'ETH': '1'}, 'venue': 'cex'})])
        self.assertEqual(paths(document), ['$.strategies[0].params.venue'])

        document = trading()
        document['vaults'][0]['venues'][1]['functions'] = ['trade']
        self.assertEqual(paths(document), ['$.vaults[0].venues[1].functions'])

        document = trading()
        document['vaults'][0]['venues'].append({'venue': 'amm', 'functions': ['trade']})
        self.assertEqual(paths(document), ['$.vaults[0].venues[2].venue'])

    def test_strategies(self):
        self.assertEqual(paths(trading(strategies=[strategy(params={})])), ['$.strategies[0].params'])
        self.assertEqual(paths(trading(strategies=[strategy(universe=['BTC'])])), [
            '$.strategies[0].universe', '$.strategies[0].params'])
        self.assertEqual(paths(trading(strategies=[strategy(vault='v2')])), ['$.strategies[0].vault'])

        aggregator = {'id': 'agg', 'vault': 'v1', 'class': 'SignalAggregator', 'universe': ['ETH'],
                      'params': {'providers': ['ghost']}}
        self.assertEqual(paths(trading(strategies=[aggregator])), ['$.strategies[0].params.providers'])
        self.assertEqual(paths(trading(strategies=[aggregator], csos=[{'id': 'ghost', 'kinds': ['Categorical']}])), [])

        subscription = {'strategy': 'agg', 'provider': 'ghost', 'epoch_length': 10,
                        'model': {'type': 'subscription', 'flat_fee': '1'}}
        found = paths(trading(strategies=[aggregator], subscriptions=[subscription, subscription]))
        self.assertEqual(found, ['$.strategies[0].params.providers', '$.subscriptions[0].provider',
                                 '$.subscriptions[1].provider', '$.subscriptions[1]'])

    def test_automation(self):
        tasks = [{'task_id': 1, 'target': 'strategy:ghost'}, {'task_id': 1, 'target': 'allocator', 'vault': 'v9'}]
        self.assertEqual(paths(trading(automation=tasks)), [
            '$.automation[1].task_id', '$.automation[0].target', '$.automation[1].vault'])
        self.assertEqual(paths(trading(automation=[{'task_id': 1, 'target': 'rebalance'}])), [
            '$.automation[0].target'])

    def test_events(self):
        def event(block=1, action='deposit', payload=None):
            return {'block': block, 'action': action, 'actor': 'lp',
                    'payload': {'vault': 'v1', 'basket': {'USD': '100'}} if payload is None else payload}

        self.assertEqual(paths(trading(events=[event(block=21)])), ['$.events[0].block'])
        self.assertEqual(paths(trading(events=[event(action='mint')])), ['$.events[0].action'])
        self.assertEqual(paths(trading(events=[event(payload={'vault': 'v1', 'basket': {'USD': 100.0}})])), [
            '$.events[0].payload.basket.USD'])
        self.assertEqual(paths(trading(events=[event(payload={'vault': 'v9', 'basket': {'USD': '1'}})])), [
            '$.events[0].payload.vault'])
        self.assertEqual(paths(trading(events=[event(payload={'vault': 'v1'})])), ['$.events[0].payload.basket'])

        governance = event(action='governance', payload={
            'vault': 'v1', 'field': 'per_asset_cap', 'value': '2', 'votes': {'lp': 'yes'}})
        self.assertEqual(paths(trading(events=[governance])), ['$.events[0].payload.value.value'])
        governance['payload']['value'] = '0.5'
        self.assertEqual(paths(trading(events=[governance])), [])


@pytest.mark.smoke
class TestScenario(testlib.DMMFTestCase):

    def test_canonical_form(self):
        scenario = Scenario.from_json(testlib.TRADING_SCENARIO)
        document = scenario.to_json()
        self.assertNotIn('blocks_per_year', document['meta'])
        self.assertNotIn('csos', document)
        self.assertEqual(document['vaults'][0]['mgmt_fee_rate'], '0.02')
        self.assertEqual(Scenario.from_json(document).to_json(), document)
        self.assertEqual(Scenario.from_json(json.loads(scenario.dumps())).dumps(), scenario.dumps())

    def test_copies(self):
        scenario = Scenario.from_json(testlib.TRADING_SCENARIO)
        reseeded = scenario.with_seed(99)
        self.assertEqual((reseeded.seed, scenario.seed), (99, 7))
        self.assertEqual(reseeded['strategies'], scenario['strategies'])

        events = [{'block': 3, 'action': 'deposit', 'actor': 'lp2', 'payload': {'vault': 'v1', 'basket': {'USD': '5'}}}]
        replaced = scenario.with_events(events)
        self.assertEqual([(e.block, e.actor) for e in replaced.events()], [(3, 'lp2')])
        self.assertEqual(len(scenario.events()), 2)
        self.assertRaises(ScenarioInvalid, scenario.with_events, [dict(events[0], block=50)])

    def test_events_in_block_order(self):
        events = [
            {'block': 9, 'action': 'harvest', 'actor': 'keeper', 'payload': {'vault': 'v1'}},
            {'block': 2, 'action': 'deposit', 'actor': 'lp', 'payload': {'vault': 'v1', 'basket': {'USD': '5'}}},
            {'block': 9, 'action': 'deposit', 'actor': 'lp', 'payload': {'vault': 'v1', 'basket': {'USD': '7'}}}]
        scenario = Scenario.from_json(testlib.scenario_document(events=events))
        self.assertEqual([(e.block, e.action) for e in scenario.events()], [
            (2, 'deposit'), (9, 'harvest'), (9, 'deposit')])

    def test_sources(self):
        path = self.write_scenario(testlib.MINIMAL_SCENARIO)
        self.assertEqual(validate_scenario(path), [])
        self.assertEqual(Scenario.load(path).name, 'empty')
        with open(path) as f:
            self.assertEqual(validate_scenario(f.read()), [])

        self.assertRaises(ParseError, validate_scenario, '{"meta": ')
        self.assertRaises(ParseError, validate_scenario, '{"meta": 1}{')
        self.assertEqual(validate_scenario({}), [
            ('$.assets', 'Missing required field'), ('$.meta', 'Missing required field'),
            ('$.schema_version', 'Missing required field'), ('$.vaults', 'Missing required field')])
        self.assertEqual(ZERO, Scenario.from_json(testlib.MINIMAL_SCENARIO)['vaults'][0]['mgmt_fee_rate'])
