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
import json

from ..ledger import Dec18


def _default(value):
    if isinstance(value, Dec18):
        return str(value)
    raise TypeError('{!r} is not JSON serialisable'.format(value))


def canonical_json(value):
    """ The canonical text of a JSON value: sorted keys, no whitespace, Dec18 as decimal strings.

    """
    return json.dumps(value, sort_keys=True, separators=(',', ':'), ensure_ascii=True, default=_default)


def digest(value):
    """SHA-256 hex digest of the canonical text of `value`."""
    return hashlib.sha256(canonical_json(value).encode('utf-8')).hexdigest()


class ScenarioEvent(object):
    """ One record of a run's append-only event log.

    :param block: Block height.
    :param seq: Position within the block, starting at zero.
    :param actor: Id of the account, strategy, CSO, vault or venue that acted.
    :param action: Event name.
    :param payload: Action-specific JSON object.

    """
    genesis = 'genesis'
    input = 'input'
    run_end = 'run_end'

    def __init__(self, block, seq, actor, action, payload):
        self.block = block
        self.seq = seq
        self.actor = actor
        self.action = action
        self.payload = payload

    def __eq__(self, other):
        return isinstance(other, ScenarioEvent) and self.dumps() == other.dumps()

    def __ne__(self, other):
        return not self.__eq__(other)

    def __repr__(self):
        return 'ScenarioEvent({}, {}, {!r}, {!r})'.format(self.block, self.seq, self.actor, self.action)

    @property
    def position(self):
        return self.block, self.seq

    @classmethod
    def from_json(cls, data):
        """:raises ValueError: `data` is not an event record."""
        if not isinstance(data, dict):
            raise ValueError('Expected an object')
        missing = [name for name in ('block', 'seq', 'actor', 'action', 'payload') if name not in data]
        if missing:
            raise ValueError('Missing event field(s): {}'.format(', '.join(missing)))
        extra = sorted(set(data) - {'block', 'seq', 'actor', 'action', 'payload'})
        if extra:
            raise ValueError('Unknown event field(s): {}'.format(', '.join(extra)))
        for name in ('block', 'seq'):
            if isinstance(data[name], bool) or not isinstance(data[name], int) or data[name] < 0:
                raise ValueError('Event {} must be a non-negative integer, not {!r}'.format(name, data[name]))
        return cls(data['block'], data['seq'], data['actor'], data['action'], data['payload'])

    @classmethod
    def loads(cls, line):
        return cls.from_json(json.loads(line, object_pairs_hook=OrderedDict))

    def to_json(self):
        return OrderedDict([
            ('action', self.action), ('actor', self.actor), ('block', self.block), ('payload', self.payload),
            ('seq', self.seq)])

    def dumps(self):
        """The event's line in ``events.jsonl``, without the line break."""
        return canonical_json(self.to_json())


__all__ = ['ScenarioEvent', 'canonical_json', 'digest']
