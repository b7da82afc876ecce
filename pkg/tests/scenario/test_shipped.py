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

import glob
import os

from dmmflib.ledger import ZERO
from dmmflib.scenario import Scenario, replay, run, validate_scenario
from dmmflib.vault import Status
from tests import testlib

import pytest

SCENARIO_DIR = os.path.join(os.path.dirname(os.path.dirname(os.path.dirname(os.path.abspath(__file__)))), 'scenarios')


def shipped(name):
    return os.path.join(SCENARIO_DIR, name + '.json')


class TestShippedScenarios(testlib.DMMFTestCase):

    def test_all_validate(self):
        paths = sorted(glob.glob(os.path.join(SCENARIO_DIR, '*.json')))
        self.assertGreaterEqual(len(paths), 4)
        for path in paths:
            self.assertEqual(validate_scenario(path), [], os.path.basename(path))

    def test_names_are_unique(self):
        names = [Scenario.load(path).name for path in glob.glob(os.path.join(SCENARIO_DIR, '*.json'))]
        self.assertEqual(len(names), len(set(names)))

    @pytest.mark.slow
    def test_spot_hold(self):
        result = run(shipped('spot_hold'), self.mkdtemp())
        self.assertGreater(result.summary['counters']['fills'], 0)
        vault = result.world.vaults['v1']
        self.assertGreater(vault.share_balances['lp-a'], ZERO)
        self.assertGreater(vault.share_balances['lp-b'], ZERO)
        self.assertTrue(replay(os.path.join(result.out_dir, 'events.jsonl')).ok)

    @pytest.mark.slow
    def test_validation_allocation(self):
        result = run(shipped('validation_allocation'), self.mkdtemp())
        vault = result.world.vaults['v1']
        self.assertEqual(vault.strategies['yield'].status, Status.active)
        self.assertEqual(vault.config.mgmt_fee_rate, testlib.d('0.015'))

    @pytest.mark.slow
    def test_signal_aggregation(self):
        result = run(shipped('signal_aggregation'), self.mkdtemp())
        self.assertTrue(result.summary['signal_fees'])
        self.assertEqual(sorted(result.world.marketplace.providers), ['momentum', 'trend'])
