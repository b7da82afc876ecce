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

"""Command line option parsing driven by rule dictionaries."""

from __future__ import absolute_import, division, print_function, unicode_literals

from optparse import OptionParser
from os import path
import sys


class UsageError(Exception):
    pass


def error(message, exitcode=None):
    """Prints `message` to stderr and, when `exitcode` is given, exits with it."""
    print('Error: {}'.format(message), file=sys.stderr)
    if exitcode is not None:
        sys.exit(exitcode)


class record(dict):
    def __getattr__(self, name):
        try:
            return self[name]
        except KeyError:
            raise AttributeError(name)

    def __setattr__(self, name, value):
        self[name] = value


class Parser(OptionParser):
    """ An :class:`optparse.OptionParser` provisioned from a rule dictionary.

    Each rule maps an option destination to ``flags`` and, optionally,
    ``action``, ``default``, ``help``, ``metavar``, ``type`` and ``required``.
    Usage errors raise :class:`UsageError` instead of exiting.

    **Example**::

        rules = {'seed': {'flags': ['--seed'], 'type': 'int', 'help': 'Seed override'}}
        result = Parser(rules).parse(['--seed', '7']).result
        assert result.kwargs.seed == 7

    """
    def __init__(self, rules=None, **kwargs):
        OptionParser.__init__(self, **kwargs)
        self.dests = set()
        self.required = []
        self.result = record({'args': [], 'kwargs': record()})
        if rules is not None:
            self.init(rules)

    def init(self, rules):
        """Initialize the parser with the given command rules."""
        for dest in sorted(rules):
            rule = rules[dest]

            # Defaults are assigned here rather than in the option parser so that
            # repeated calls to parse do not reset earlier values.
            if 'default' in rule:
                self.result['kwargs'][dest] = rule['default']
            if rule.get('required'):
                self.required.append((dest, rule['flags'][-1]))

            kwargs = {'action': rule.get('action', 'store')}
            for key in ('callback', 'help', 'metavar', 'type'):
                if key in rule:
                    kwargs[key] = rule[key]
            self.add_option(*rule['flags'], dest=dest, **kwargs)
            self.dests.add(dest)

    def error(self, msg):
        raise UsageError(msg)

    def load(self, filepath):
        """ Loads options from a file, one per line; long options may omit the leading ``--``.

        """
        if not path.isfile(filepath):
            raise UsageError("Unable to open '{}'".format(filepath))
        argv = []
        with open(filepath) as f:
            for line in f:
                line = line.strip()
                if not line or line.startswith('#'):
                    continue
                if not line.startswith('-'):
                    line = '--' + line
                argv.extend(line.split(None, 1))
        self.parse(argv)
        return self

    def parse(self, argv):
        """Parse the given argument vector."""
        kwargs, args = self.parse_args(argv)
        self.result['args'] += args
        for dest in self.dests:
            value = getattr(kwargs, dest)
            if value is not None:
                self.result['kwargs'][dest] = value
        return self

    def check_required(self):
        missing = [flag for dest, flag in self.required if self.result['kwargs'].get(dest) is None]
        if missing:
            raise UsageError('Missing required option(s): {}'.format(', '.join(missing)))
        return self

    def format_epilog(self, formatter):
        return self.epilog or ''


def cmdline(argv, rules=None, config=None, **kwargs):
    """ Parses `argv` against `rules` and returns ``record(args=[...], kwargs=record(...))``.

    :param config: Options file loaded before `argv`, or `None`.
    :raises UsageError: An option is unknown, malformed or missing.
    """
    parser = Parser(rules, **kwargs)
    if config is not None:
        parser.load(config)
    return parser.parse(argv).check_required().result


__all__ = ['Parser', 'UsageError', 'cmdline', 'error', 'record']
