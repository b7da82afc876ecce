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

import csv
import io
import os

from dmmflib.scenario import MissingArtifacts, Scenario, compare_runs, report, run
from dmmflib.scenario.report import nav_statistics, sharpe
from dmmflib.vault import UNALLOCATED
from tests import testlib

import pytest


@pytest.mark.smoke
class TestStatistics(testlib.DMMFTestCase):

    def test_nav_statistics(self):
        stats = nav_statistics([100, 110, 99])
        self.assertEqual((stats['start'], stats['end'], stats['min'], stats['max']), (100.0, 99.0, 99.0, 110.0))
        self.assertAlmostEqual(stats['mean'], 103.0)
        self.assertAlmostEqual(stats['return_mean'], 0.0)
        self.assertAlmostEqual(stats['return_std'], 0.1)
        self.assertAlmostEqual(stats['max_drawdown'], 0.1)

        self.assertEqual(set(nav_statistics([]).values()), {0.0})
        stats = nav_statistics([0, 0, 5])
        self.assertEqual((stats['return_mean'], stats['max_drawdown']), (0.0, 0.0))

    def test_sharpe(self):
        self.assertEqual(sharpe([]), 0.0)
        self.assertAlmostEqual(sharpe([0.02, 0.0]), 1.0)
        self.assertAlmostEqual(sharpe([0.01, 0.01]), 10000.0)
        self.assertAlmostEqual(sharpe([0.01, 0.01], epsilon=0.1), 0.1)


class TestReport(testlib.DMMFTestCase):

    def run_scenario(self, document, seed=None):
        return run(Scenario.from_json(document), self.mkdtemp(), seed).out_dir

    @pytest.mark.smoke
    def test_minimal(self):
        summary = report(self.run_scenario(testlib.MINIMAL_SCENARIO))
        self.assertEqual(list(summary.vaults), ['v1'])
        self.assertEqual(summary.vaults['v1']['terminal_nav'], '0')
        self.assertEqual(summary.signal_fees, {})
        self.assertEqual(summary.allocations, [])
        text = summary.to_text()
        self.assertTrue(text.startswith('Run empty (seed 1, 10 blocks'))
        self.assertIn('Vault v1', text)
        self.assertIn('Signal fees\n  none', text)
        self.assertIn('Allocation history\n  none', text)

    @pytest.mark.slow
    def test_trading(self):
        summary = report(self.run_scenario(testlib.TRADING_SCENARIO))
        vault = summary.vaults['v1']
        self.assertEqual([row['strategy'] for row in vault['strategies']], [UNALLOCATED, 'hold'])
        self.assertEqual(vault['nav']['start'], 0.0)
        self.assertGreater(vault['nav']['max'], 90000.0)
        self.assertEqual(vault['flows']['deposits'], '100000')

        path = os.path.join(self.mkdtemp(), 'attribution.csv')
        summary.write_csv(path)
        with io.open(path, 'r', encoding='utf-8') as f:
            rows = list(csv.reader(f))
        self.assertEqual(rows[0], ['vault', 'strategy', 'status', 'alpha', 'cumulative_pnl', 'sharpe'])
        self.assertEqual(rows[1:], summary.attribution_rows())
        self.assertEqual(rows[1][:4], ['v1', UNALLOCATED, '-', '-'])
        self.assertEqual(rows[2][:4], ['v1', 'hold', 'Active', '0.5'])

    @pytest.mark.slow
    def test_compare_runs(self):
        first = self.run_scenario(testlib.TRADING_SCENARIO, seed=1)
        second = self.run_scenario(testlib.TRADING_SCENARIO, seed=2)
        lines = compare_runs([first, second]).splitlines()
        self.assertEqual(len(lines), 3)
        self.assertTrue(lines[0].startswith('run'))
        self.assertIn('spot-hold', lines[1])
        self.assertEqual(lines[1].split()[1], '1')
        self.assertEqual(lines[2].split()[1], '2')

    def test_missing_artifacts(self):
        out = self.run_scenario(testlib.MINIMAL_SCENARIO)
        os.remove(os.path.join(out, 'nav.csv'))
        with self.assertRaises(MissingArtifacts) as context:
            report(out)
        self.assertEqual(context.exception.missing, ['nav.csv'])
        self.assertRaises(MissingArtifacts, compare_runs, [out])
