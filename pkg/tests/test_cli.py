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

from contextlib import redirect_stderr, redirect_stdout
import io
import json
import os

from dmmflib.cli import EXIT_FAILED, EXIT_OK, EXIT_USAGE, main
from tests import testlib

import pytest


class TestCli(testlib.DMMFTestCase):

    def invoke(self, *argv):
        stdout, stderr = io.StringIO(), io.StringIO()
        with redirect_stdout(stdout), redirect_stderr(stderr):
            status = main(list(argv))
        return status, stdout.getvalue(), stderr.getvalue()

    def run_minimal(self):
        path = self.write_scenario(testlib.MINIMAL_SCENARIO)
        out = os.path.join(self.mkdtemp(), 'run')
        status, stdout, _ = self.invoke('run', '--scenario', path, '--out', out)
        self.assertEqual(status, EXIT_OK)
        return out, stdout

    @pytest.mark.smoke
    def test_usage(self):
        self.assertEqual(self.invoke()[0], EXIT_USAGE)
        self.assertEqual(self.invoke('simulate')[0], EXIT_USAGE)
        self.assertEqual(self.invoke('run', '--out', self.mkdtemp())[0], EXIT_USAGE)
        self.assertEqual(self.invoke('validate')[0], EXIT_USAGE)

        path = self.write_scenario(testlib.MINIMAL_SCENARIO)
        status, _, stderr = self.invoke('run', '--scenario', path, '--out', self.mkdtemp(), '--jobs', '0')
        self.assertEqual(status, EXIT_USAGE)
        self.assertIn('--jobs', stderr)
        status = self.invoke('run', '--scenario', path, '--out', self.mkdtemp(), '--seed', '-1')[0]
        self.assertEqual(status, EXIT_USAGE)

    @pytest.mark.smoke
    def test_validate(self):
        status, stdout, _ = self.invoke('validate', '--scenario', self.write_scenario(testlib.MINIMAL_SCENARIO))
        self.assertEqual(status, EXIT_OK)
        self.assertIn('ok', stdout)

        document = testlib.scenario_document(assets={
            'quote': 'USD', 'feeds': [{'asset': 'ETH', 'mode': 'scripted', 'path': ['2'] * 5}]})
        status, _, stderr = self.invoke('validate', '--scenario', self.write_scenario(document))
        self.assertEqual(status, EXIT_FAILED)
        self.assertIn('assets', stderr)

        path = os.path.join(self.mkdtemp(), 'broken.json')
        with open(path, 'w') as f:
            f.write('{"meta": ')
        self.assertEqual(self.invoke('validate', '--scenario', path)[0], EXIT_FAILED)
        self.assertEqual(self.invoke('run', '--scenario', path, '--out', self.mkdtemp())[0], EXIT_FAILED)

    def test_run_replay_report(self):
        out, stdout = self.run_minimal()

        for name in 'events.jsonl', 'nav.csv', 'attribution.json', 'summary.json':
            self.assertTrue(os.path.isfile(os.path.join(out, name)), name)
        with open(os.path.join(out, 'nav.csv')) as f:
            self.assertEqual(len(f.read().splitlines()), 12)
        with open(os.path.join(out, 'summary.json')) as f:
            summary = json.load(f)
        self.assertIn(summary['log_digest'], stdout)

        status, stdout, _ = self.invoke('replay', '--log', os.path.join(out, 'events.jsonl'))
        self.assertEqual(status, EXIT_OK)
        self.assertTrue(json.loads(stdout)['ok'])

        csv_path = os.path.join(self.mkdtemp(), 'attribution.csv')
        status, stdout, _ = self.invoke('report', '--dir', out, '--csv', csv_path)
        self.assertEqual(status, EXIT_OK)
        self.assertIn('Vault v1', stdout)
        self.assertTrue(os.path.isfile(csv_path))

        status, stdout, _ = self.invoke('report', '--dir', out, '--dir', out)
        self.assertEqual(status, EXIT_OK)
        self.assertEqual(len(stdout.splitlines()), 3)

        self.assertEqual(self.invoke('report', '--dir', self.mkdtemp())[0], EXIT_FAILED)

    def test_replay_detects_tampering(self):
        out, _ = self.run_minimal()
        summary_path = os.path.join(out, 'summary.json')
        with open(summary_path) as f:
            summary = json.load(f)
        summary['state_digest'] = '0' * 64
        with open(summary_path, 'w') as f:
            json.dump(summary, f)

        status, stdout, _ = self.invoke('replay', '--log', os.path.join(out, 'events.jsonl'))
        self.assertEqual(status, EXIT_FAILED)
        self.assertFalse(json.loads(stdout)['ok'])

        log_path = os.path.join(out, 'events.jsonl')
        with open(log_path, 'rb') as f:
            data = f.read()
        with open(log_path, 'wb') as f:
            f.write(data[:-5])
        self.assertEqual(self.invoke('replay', '--log', log_path)[0], EXIT_FAILED)

    @pytest.mark.slow
    def test_run_several(self):
        first = self.write_scenario(testlib.MINIMAL_SCENARIO)
        second = self.write_scenario(testlib.scenario_document(meta={'name': 'other', 'seed': 2, 'horizon': 10}))
        out = self.mkdtemp()

        status, stdout, _ = self.invoke('run', '--scenario', first, '--scenario', second, '--out', out, '--jobs', '2')
        self.assertEqual(status, EXIT_OK)
        self.assertTrue(os.path.isfile(os.path.join(out, 'empty', 'summary.json')))
        self.assertTrue(os.path.isfile(os.path.join(out, 'other', 'summary.json')))
        self.assertEqual(len(stdout.splitlines()), 2)

        status = self.invoke('run', '--scenario', first, '--scenario', first, '--out', self.mkdtemp())[0]
        self.assertEqual(status, EXIT_USAGE)
