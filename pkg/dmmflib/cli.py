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

"""The ``dmmf`` command.

Usage::

    dmmf run --scenario <file> [--scenario <file> ...] [--seed N] --out <dir> [--jobs N]
    dmmf validate --scenario <file>
    dmmf replay --log <file> [--summary <file>]
    dmmf report --dir <dir> [--dir <dir> ...] [--csv <file>]

Exit status is 0 on success, 1 when a scenario does not validate or a replay
diverges, and 2 on a usage error.

"""

from __future__ import absolute_import, division, print_function, unicode_literals

from concurrent.futures import ThreadPoolExecutor
import json
import os
import sys

from .cmdopts import UsageError, cmdline, error
from .environment import configure_logging
from .ledger import ProtocolError
from .scenario import (
    LogCorrupt, MissingArtifacts, ParseError, Scenario, ScenarioInvalid, compare_runs, replay, report, run,
    validate_scenario)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2

RULES_RUN = {
    'scenario': {
        'flags': ['--scenario'],
        'action': 'append',
        'required': True,
        'help': 'Scenario file; repeat to run several scenarios'},
    'seed': {
        'flags': ['--seed'],
        'type': 'int',
        'default': None,
        'help': 'Seed override'},
    'out': {
        'flags': ['--out'],
        'required': True,
        'help': 'Output directory'},
    'jobs': {
        'flags': ['--jobs'],
        'type': 'int',
        'default': 1,
        'help': 'Scenarios run in parallel (default 1)'}}

RULES_VALIDATE = {
    'scenario': {
        'flags': ['--scenario'],
        'required': True,
        'help': 'Scenario file'}}

RULES_REPLAY = {
    'log': {
        'flags': ['--log'],
        'required': True,
        'help': 'events.jsonl of a run'},
    'summary': {
        'flags': ['--summary'],
        'default': None,
        'help': 'summary.json to compare digests against (default: next to the log)'}}

RULES_REPORT = {
    'dir': {
        'flags': ['--dir'],
        'action': 'append',
        'required': True,
        'help': 'Run output directory; repeat to compare runs'},
    'csv': {
        'flags': ['--csv'],
        'default': None,
        'help': 'Also write the attribution table of the first run as CSV'}}


def _print_errors(errors):
    for path, message in errors:
        print('{}: {}'.format(path, message), file=sys.stderr)


def command_run(argv):
    opts = cmdline(argv, RULES_RUN, prog='dmmf run').kwargs
    if opts.jobs < 1:
        raise UsageError('--jobs must be a positive integer')
    if opts.seed is not None and not 0 <= opts.seed < 2 ** 64:
        raise UsageError('--seed must be in [0, 2**64)')
    scenarios = []
    for filename in opts.scenario:
        try:
            scenarios.append(Scenario.load(filename))
        except ParseError as e:
            error('{}: {}'.format(filename, e))
            return EXIT_FAILED
        except ScenarioInvalid as e:
            error('{} does not validate'.format(filename))
            _print_errors(e.errors)
            return EXIT_FAILED
    if len(scenarios) == 1:
        targets = [(scenarios[0], opts.out)]
    else:
        names = [scenario.name for scenario in scenarios]
        if len(set(names)) != len(names):
            raise UsageError('Scenario names must be unique when several scenarios run together')
        targets = [(scenario, os.path.join(opts.out, scenario.name)) for scenario in scenarios]

    with ThreadPoolExecutor(max_workers=opts.jobs) as executor:
        futures = [executor.submit(run, scenario, out_dir, opts.seed) for scenario, out_dir in targets]
        results = [future.result() for future in futures]
    for result in results:
        print('{} {} {}'.format(result.summary['name'], result.log_digest, result.out_dir))
    return EXIT_OK


def command_validate(argv):
    opts = cmdline(argv, RULES_VALIDATE, prog='dmmf validate').kwargs
    try:
        errors = validate_scenario(opts.scenario)
    except ParseError as e:
        error('{}: {}'.format(opts.scenario, e))
        return EXIT_FAILED
    if errors:
        _print_errors(errors)
        return EXIT_FAILED
    print('{}: ok'.format(opts.scenario))
    return EXIT_OK


def command_replay(argv):
    opts = cmdline(argv, RULES_REPLAY, prog='dmmf replay').kwargs
    try:
        result = replay(opts.log, opts.summary)
    except LogCorrupt as e:
        error(str(e))
        return EXIT_FAILED
    print(json.dumps(result.to_json(), indent=2, sort_keys=True))
    return EXIT_OK if result.ok else EXIT_FAILED


def command_report(argv):
    opts = cmdline(argv, RULES_REPORT, prog='dmmf report').kwargs
    try:
        if len(opts.dir) > 1:
            sys.stdout.write(compare_runs(opts.dir))
        else:
            summary = report(opts.dir[0])
            sys.stdout.write(summary.to_text())
            if opts.csv is not None:
                summary.write_csv(opts.csv)
    except MissingArtifacts as e:
        error(str(e))
        return EXIT_FAILED
    return EXIT_OK


commands = {
    'replay': command_replay,
    'report': command_report,
    'run': command_run,
    'validate': command_validate}


def main(argv=None):
    """ Entry point of the ``dmmf`` console script.

    :returns: Process exit status.
    """
    argv = sys.argv[1:] if argv is None else list(argv)
    configure_logging('dmmf')
    if not argv or argv[0] not in commands:
        error('Expected one of {} as the first argument'.format(', '.join(sorted(commands))))
        print(__doc__, file=sys.stderr)
        return EXIT_USAGE
    try:
        return commands[argv[0]](argv[1:])
    except UsageError as e:
        error(str(e))
        return EXIT_USAGE
    except ProtocolError as e:
        error(str(e))
        return EXIT_FAILED


__all__ = ['EXIT_FAILED', 'EXIT_OK', 'EXIT_USAGE', 'main']
