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

"""Reading ``events.jsonl`` logs.

"""

from __future__ import absolute_import, division, print_function, unicode_literals

import hashlib
import io

from ..ledger import ProtocolError
from .event import ScenarioEvent


class LogCorrupt(ProtocolError):
    """ Raised for an event log that is not a well-formed, complete run log.

    :ivar position: ``(block, seq)`` of the first offending record. For an
        unreadable record it is the position that should have followed the
        last good one.
    """
    def __init__(self, message, position):
        super(LogCorrupt, self).__init__('{} at ({}, {})'.format(message, position[0], position[1]))
        self.position = position


class EventReader(object):
    """ Returns :class:`~dmmflib.scenario.event.ScenarioEvent` objects from a binary event log stream.

    Records must be one canonical JSON object per line, every line ended by a
    line break, with ``(block, seq)`` strictly increasing. The reader keeps the
    SHA-256 of every byte read.

    :param stream: The stream to read from (any object that supports iteration over lines).

    **Example**::

        with open('out/events.jsonl', 'rb') as f:
            for event in EventReader(f):
                print(event.block, event.seq, event.action)

    """
    def __init__(self, stream):
        self._hash = hashlib.sha256()
        self._last = None
        self.event_count = 0
        self._gen = self._parse_events(stream)

    def __iter__(self):
        return self

    def next(self):
        return next(self._gen)

    __next__ = next

    @property
    def log_digest(self):
        return self._hash.hexdigest()

    def _expected(self):
        return (0, 0) if self._last is None else (self._last[0], self._last[1] + 1)

    def _parse_events(self, stream):
        for line in stream:
            self._hash.update(line)
            if not line.endswith(b'\n'):
                raise LogCorrupt('Truncated record', self._expected())
            try:
                event = ScenarioEvent.loads(line.decode('utf-8'))
            except (UnicodeDecodeError, ValueError) as error:
                raise LogCorrupt('Unreadable record ({})'.format(error), self._expected())
            if event.dumps().encode('utf-8') + b'\n' != line:
                raise LogCorrupt('Record is not in canonical form', event.position)
            if self._last is not None and event.position <= self._last:
                raise LogCorrupt('Record out of order', event.position)
            self._last = event.position
            self.event_count += 1
            yield event


def read_log(path):
    """ Reads and checks a complete run log.

    :returns: ``(events, log_digest)``
    :raises LogCorrupt: The log is malformed, truncated, out of order, or does
        not start with ``genesis`` and end with ``run_end``.
    """
    with io.open(path, 'rb') as f:
        reader = EventReader(f)
        events = list(reader)
    if not events:
        raise LogCorrupt('Empty log', (0, 0))
    if events[0].action != ScenarioEvent.genesis or events[0].position != (0, 0):
        raise LogCorrupt('Log does not start with genesis', events[0].position)
    for event in events[1:]:
        if event.action == ScenarioEvent.genesis:
            raise LogCorrupt('Repeated genesis', event.position)
    if events[-1].action != ScenarioEvent.run_end:
        last = events[-1].position
        raise LogCorrupt('Log ends without run_end', (last[0], last[1] + 1))
    return events, reader.log_digest


__all__ = ['EventReader', 'LogCorrupt', 'read_log']
