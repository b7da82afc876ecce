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

from ..ledger import ProtocolError, StrategyId


class AutomationError(ProtocolError):
    pass


class DuplicateTask(AutomationError):
    pass


class InvalidTask(AutomationError, ValueError):
    pass


class Target(object):
    """ Block-level automation targets other than strategies.

    A strategy target is written ``strategy:<strategy-id>``.
    """
    allocator = 'allocator'
    fee_accrual = 'fee-accrual'
    fee_epoch = 'fee-epoch'
    fee_harvest = 'fee-harvest'

    builtin = (allocator, fee_accrual, fee_epoch, fee_harvest)
    strategy_prefix = 'strategy:'

    @classmethod
    def strategy(cls, strategy_id):
        return cls.strategy_prefix + strategy_id

    @classmethod
    def strategy_of(cls, target):
        """The strategy id of a strategy target, or `None`."""
        return target[len(cls.strategy_prefix):] if target.startswith(cls.strategy_prefix) else None


class AutomationTask(object):
    """ A task the automation service triggers every `cadence` blocks.

    The task fires at heights ``h`` where ``h % cadence == offset % cadence``.

    :param vault: Vault the task acts on, or `None` for marketplace-wide tasks.
    """
    def __init__(self, task_id, target, cadence=1, offset=0, vault=None):
        if isinstance(task_id, bool) or not isinstance(task_id, int) or task_id < 0:
            raise InvalidTask('task_id must be a non-negative integer, not {!r}'.format(task_id))
        if isinstance(cadence, bool) or not isinstance(cadence, int) or cadence < 1:
            raise InvalidTask('cadence must be a positive integer, not {!r}'.format(cadence))
        if isinstance(offset, bool) or not isinstance(offset, int) or offset < 0:
            raise InvalidTask('offset must be a non-negative integer, not {!r}'.format(offset))
        strategy = Target.strategy_of(target)
        if strategy is not None:
            StrategyId(strategy)
        elif target not in Target.builtin:
            raise InvalidTask('Unknown automation target: {!r}'.format(target))
        self.task_id = task_id
        self.target = target
        self.cadence = cadence
        self.offset = offset
        self.vault = vault

    @property
    def strategy(self):
        return Target.strategy_of(self.target)

    def is_due(self, height):
        return height % self.cadence == self.offset % self.cadence

    def __repr__(self):
        return 'AutomationTask({}, {!r}, cadence={}, offset={})'.format(
            self.task_id, self.target, self.cadence, self.offset)

    def to_json(self):
        return OrderedDict([
            ('task_id', self.task_id), ('target', self.target), ('cadence', self.cadence), ('offset', self.offset),
            ('vault', self.vault)])


def schedule_due(tasks, height):
    """ Returns the tasks due at `height` in ascending `task_id` order.

    **Example**::

        tasks = [AutomationTask(7, 'allocator'), AutomationTask(3, 'fee-accrual')]
        assert [t.task_id for t in schedule_due(tasks, 0)] == [3, 7]

    """
    return sorted((task for task in tasks if task.is_due(height)), key=lambda task: task.task_id)


class Scheduler(object):
    """ The block-level automation service: a registry of tasks keyed by id.

    Registration order has no effect on execution order.
    """
    def __init__(self, tasks=()):
        self._tasks = {}
        for task in tasks:
            self.register(task)

    def __len__(self):
        return len(self._tasks)

    def __iter__(self):
        return iter(sorted(self._tasks.values(), key=lambda task: task.task_id))

    def register(self, task):
        if task.task_id in self._tasks:
            raise DuplicateTask('Automation task {} is already registered'.format(task.task_id))
        self._tasks[task.task_id] = task
        return task

    def next_id(self):
        return max(self._tasks) + 1 if self._tasks else 0

    def add(self, target, cadence=1, offset=0, vault=None):
        """Registers a task under the next free id."""
        return self.register(AutomationTask(self.next_id(), target, cadence, offset, vault))

    def targets(self):
        return set((task.target, task.vault) for task in self._tasks.values())

    def due(self, height):
        return schedule_due(self._tasks.values(), height)


__all__ = ['AutomationError', 'AutomationTask', 'DuplicateTask', 'InvalidTask', 'Scheduler', 'Target', 'schedule_due']
