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

from .event import ScenarioEvent, canonical_json, digest
from .event_writer import EventWriter, OutOfOrder
from .reader import EventReader, LogCorrupt, read_log
from .report import MissingArtifacts, Report, compare_runs, report
from .runner import ReplayResult, RunResult, build_world, execute, replay, run
from .scenario import ParseError, Scenario, ScenarioInvalid, serialise_scenario, validate_scenario
