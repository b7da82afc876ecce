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

import os

from dmmflib.cmdopts import Parser, UsageError, cmdline, record
from tests import testlib

import pytest

RULES = {
    'scenario': {'flags': ['--scenario'], 'action': 'append', 'required': True},
    'seed': {'flags': ['-s', '--seed'], 'type': 'int'},
    'jobs': {'flags': ['--jobs'], 'type': 'int', 'default': 1},
    'out': {'flags': ['--out'], 'required': True}}


@pytest.mark.smoke
class TestCmdopts(testlib.DMMFTestCase):

    def test_record(self):
        value = record({'a': 1})
        value.b = 2
        self.assertEqual(value.a, 1)
        self.assertEqual(value['b'], 2)
        self.assertRaises(AttributeError, getattr, value, 'c')

    def test_cmdline(self):
        result = cmdline(['--scenario', 'a.json', '--scenario', 'b.json', '-s', '7', '--out', 'out', 'extra'], RULES)
        self.assertEqual(result.kwargs.scenario, ['a.json', 'b.json'])
        self.assertEqual(result.kwargs.seed, 7)
        self.assertEqual(result.kwargs.jobs, 1)
        self.assertEqual(result.kwargs.out, 'out')
        self.assertEqual(result.args, ['extra'])

    def test_usage_errors(self):
        self.assertRaises(UsageError, cmdline, ['--out', 'out'], RULES)
        self.assertRaises(UsageError, cmdline, ['--scenario', 'a.json', '--out', 'out', '--seed', 'x'], RULES)
        self.assertRaises(UsageError, cmdline, ['--scenario', 'a.json', '--out', 'out', '--bogus'], RULES)

        try:
            cmdline([], RULES)
        except UsageError as error:
            self.assertIn('--scenario', str(error))
            self.assertIn('--out', str(error))
        else:
            self.fail('Expected UsageError')

    def test_config_file(self):
        path = os.path.join(self.mkdtemp(), 'run.opts')
        with open(path, 'w') as f:
            f.write('# options\n\nseed 11\nout from-file\n--jobs 3\n')

        result = cmdline(['--scenario', 'a.json', '--out', 'override'], RULES, config=path)
        self.assertEqual(result.kwargs.seed, 11)
        self.assertEqual(result.kwargs.jobs, 3)
        self.assertEqual(result.kwargs.out, 'override')

        self.assertRaises(UsageError, Parser(RULES).load, os.path.join(self.mkdtemp(), 'missing.opts'))

    def test_repeated_parse(self):
        parser = Parser(RULES)
        parser.parse(['--seed', '3'])
        parser.parse(['--out', 'out'])
        self.assertEqual(parser.result.kwargs.seed, 3)
        self.assertEqual(parser.result.kwargs.out, 'out')
        self.assertRaises(UsageError, parser.check_required)
