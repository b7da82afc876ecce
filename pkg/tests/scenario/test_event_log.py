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
import hashlib
import io
import os

from dmmflib.ledger import Dec18
from dmmflib.scenario import (
    EventReader, EventWriter, LogCorrupt, OutOfOrder, ScenarioEvent, canonical_json, digest, read_log)
from tests import testlib

import pytest


def sample_log():
    writer = EventWriter(keep=True)
    writer(0, 0, 'engine', 'genesis', {'scenario': {'meta': {'name': 'x'}}})
    writer(0, 1, 'v1', 'nav', {'nav': '0'})
    writer(1, 0, 'lp', 'input', {'action': 'deposit', 'payload': {'vault': 'v1'}})
    writer(1, 1, 'engine', 'run_end', {'blocks': 1})
    return writer


@pytest.mark.smoke
class TestEvents(testlib.DMMFTestCase):

    def test_canonical_json(self):
        value = OrderedDict([('b', Dec18.parse('1.50')), ('a', [1, 'é'])])
        self.assertEqual(canonical_json(value), '{"a":[1,"\\u00e9"],"b":"1.5"}')
        self.assertEqual(canonical_json({'a': 1, 'b': 2}), canonical_json(OrderedDict([('b', 2), ('a', 1)])))
        self.assertRaises(TypeError, canonical_json, {'a': object()})
        self.assertEqual(digest({'a': 1}), hashlib.sha256(b'{"a":1}').hexdigest())

    def test_event(self):
        event = ScenarioEvent(3, 1, 'lp', 'deposit', {'shares': '5'})
        self.assertEqual(event.position, (3, 1))
        self.assertEqual(event.dumps(), '{"action":"deposit","actor":"lp","block":3,"payload":{"shares":"5"},"seq":1}')
        self.assertEqual(ScenarioEvent.loads(event.dumps()), event)
        self.assertNotEqual(ScenarioEvent(3, 1, 'lp', 'deposit', {'shares': '6'}), event)

    def test_malformed_event(self):
        self.assertRaises(ValueError, ScenarioEvent.from_json, [])
        self.assertRaises(ValueError, ScenarioEvent.from_json, {'block': 1, 'seq': 0, 'actor': 'a', 'action': 'b'})
        record = {'block': 1, 'seq': 0, 'actor': 'a', 'action': 'b', 'payload': {}}
        self.assertRaises(ValueError, ScenarioEvent.from_json, dict(record, extra=1))
        self.assertRaises(ValueError, ScenarioEvent.from_json, dict(record, block=-1))
        self.assertRaises(ValueError, ScenarioEvent.from_json, dict(record, seq=True))
        self.assertRaises(ValueError, ScenarioEvent.from_json, dict(record, block='1'))


@pytest.mark.smoke
class TestEventWriter(testlib.DMMFTestCase):

    def test_digest(self):
        ofile = io.BytesIO()
        writer = EventWriter(ofile)
        writer(0, 0, 'engine', 'genesis', {})
        writer(0, 1, 'v1', 'nav', {'nav': '0'})
        data = ofile.getvalue()
        self.assertEqual(len(data.splitlines()), 2)
        self.assertTrue(data.endswith(b'\n'))
        self.assertEqual(writer.log_digest, hashlib.sha256(data).hexdigest())
        self.assertEqual(writer.event_count, 2)
        self.assertEqual(writer.last_position, (0, 1))
        self.assertIsNone(writer.events)

    def test_order(self):
        writer = EventWriter()
        writer(2, 0, 'a', 'x', {})
        self.assertRaises(OutOfOrder, writer, 2, 0, 'a', 'x', {})
        self.assertRaises(OutOfOrder, writer, 1, 5, 'a', 'x', {})
        writer(2, 1, 'a', 'x', {})
        writer(3, 0, 'a', 'x', {})
        self.assertEqual(writer.event_count, 3)

    def test_closed(self):
        writer = EventWriter(io.BytesIO())
        writer.flush(finished=True)
        self.assertRaises(RuntimeError, writer, 0, 0, 'a', 'x', {})
        self.assertRaises(RuntimeError, writer.flush)


@pytest.mark.smoke
class TestEventReader(testlib.DMMFTestCase):

    def write(self, data):
        path = os.path.join(self.mkdtemp(), 'events.jsonl')
        with open(path, 'wb') as f:
            f.write(data)
        return path

    def data(self, writer=None):
        writer = sample_log() if writer is None else writer
        return b''.join(event.dumps().encode('utf-8') + b'\n' for event in writer.events)

    def test_read_log(self):
        writer = sample_log()
        events, log_digest = read_log(self.write(self.data(writer)))
        self.assertEqual(events, writer.events)
        self.assertEqual(log_digest, writer.log_digest)

        reader = EventReader(io.BytesIO(self.data(writer)))
        self.assertEqual([event.action for event in reader], ['genesis', 'nav', 'input', 'run_end'])
        self.assertEqual(reader.event_count, 4)
        self.assertEqual(reader.log_digest, writer.log_digest)

    def assertCorrupt(self, data, position):
        with self.assertRaises(LogCorrupt) as context:
            read_log(self.write(data))
        self.assertEqual(context.exception.position, position)

    def test_corruption(self):
        lines = self.data().splitlines(True)

        self.assertCorrupt(b'', (0, 0))
        self.assertCorrupt(b''.join(lines)[:-1], (1, 1))
        self.assertCorrupt(b''.join(lines[:3]), (1, 1))
        self.assertCorrupt(b''.join(lines[1:]), (0, 1))
        self.assertCorrupt(b''.join([lines[0], lines[2], lines[1], lines[3]]), (0, 1))
        self.assertCorrupt(b''.join(lines[:2]) + b'{not json}\n' + lines[3], (0, 2))
        self.assertCorrupt(b''.join(lines[:2] + [lines[2].replace(b'{"action"', b'{ "action"')] + lines[3:]), (1, 0))
        self.assertCorrupt(b''.join(lines[:1] + lines), (0, 0))

        genesis = ScenarioEvent(0, 2, 'engine', 'genesis', {}).dumps().encode('utf-8') + b'\n'
        self.assertCorrupt(b''.join(lines[:2]) + genesis + b''.join(lines[2:]), (0, 2))
