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

from .automation import AutomationTask, DuplicateTask, InvalidTask, Scheduler, Target, schedule_due
from .engine import ScriptedEvent, World, default_tasks, run_block
from .oracle import GbmFeed, HorizonExceeded, InvalidFeed, OracleFeed, PriceFeed, ScriptedFeed, oracle_prices
from .venues import (
    InsufficientStaked, LiquidityVenue, LockupActive, NoRoute, SlippageExceeded, SpotVenue, StakingVenue, UnknownPair,
    UnsupportedFunction, VenueError, execute_intent, execute_trade, select_route)
