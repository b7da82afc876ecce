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

import hashlib
from logging import getLogger

from ..ledger import ProtocolError
from .event import ScenarioEvent


class OutOfOrder(ProtocolError):
    pass


class EventWriter(object):
    """ Appends :class:`~dmmflib.scenario.event.ScenarioEvent` lines to a binary stream.

    An event writer is the sink of a :class:`~dmmflib.execution.World`: calling
    it with ``(block, seq, actor, action, payload)`` appends one line. The
    SHA-256 of every byte written is kept as the log digest.

    :param ofile: Binary output stream or `None` to only digest and collect.
    :param keep: Keep written events in :attr:`events`.

    """
    def __init__(self, ofile=None, keep=False):
        self._ofile = ofile
        self._hash = hashlib.sha256()
        self._last = None
        self._finished = False
        self.events = [] if keep else None
        self.event_count = 0
        self._logger = getLogger(self.__class__.__name__)

    def __call__(self, block, seq, actor, action, payload):
        return self.write_event(ScenarioEvent(block, seq, actor, action, payload))

    @property
    def last_position(self):
        return self._last

    @property
    def log_digest(self):
        return self._hash.hexdigest()

    def write(self, data):
        if not isinstance(data, bytes):
            data = data.encode('utf-8')
        self._hash.update(data)
        if self._ofile is not None:
            self._ofile.write(data)

    def write_event(self, event):
        """ Appends `event`.

        :raises OutOfOrder: ``(block, seq)`` does not exceed the previous event's.
        """
        self._ensure_validity()
        if self._last is not None and event.position <= self._last:
            raise OutOfOrder('Event ({}, {}) does not follow ({}, {})'.format(
                event.block, event.seq, self._last[0], self._last[1]))
        self.write(event.dumps() + '\n')
        self._last = event.position
        self.event_count += 1
        if self.events is not None:
            self.events.append(event)
        return event

    def write_events(self, events):
        self._ensure_validity()
        for event in events:
            self.write_event(event)

    def flush(self, finished=False):
        self._ensure_validity()
        if self._ofile is not None:
            self._ofile.flush()
        if finished:
            self._finished = True
            self._logger.debug('closed event log after %d events, digest %s', self.event_count, self.log_digest)

    def _ensure_validity(self):
        if self._finished:
            raise RuntimeError('I/O operation on closed event writer')


__all__ = ['EventWriter', 'OutOfOrder']
