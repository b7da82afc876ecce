#!/usr/bin/env python
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

"""Shared unit test utilities."""
from __future__ import absolute_import, division, print_function, unicode_literals

import copy
import json
import logging
import os
import shutil
import tempfile

try:
    import unittest2 as unittest
except ImportError:
    import unittest

from dmmflib.ledger import Dec18, ONE, ZERO
from dmmflib.vault import Function, Status, VaultConfig, VenueEntry, deploy_vault

logging.basicConfig(
    filename='test.log',
    level=logging.DEBUG,
    format="%(asctime)s:%(levelname)s:%(message)s")


def d(text):
    """Shorthand for :meth:`Dec18.of`."""
    return Dec18.of(text)


PRICES = {'USD': ONE, 'ETH': d(2), 'BTC': d(4)}


def vault_config(**kwargs):
    """A valid three-asset configuration with a spot venue and a staking venue."""
    settings = dict(
        admissible_assets=['USD', 'ETH', 'BTC'],
        numeraire='USD',
        venue_registry=[
            VenueEntry('dex', [Function.trade]),
            VenueEntry('stake', [Function.stake, Function.unstake])],
        vault_id='v1')
    settings.update(kwargs)
    return VaultConfig(**settings)


def active_vault(alphas=None, deposit=1000, **kwargs):
    """ A vault holding `deposit` USD from account ``lp`` with Active strategies.

    :param alphas: ``{strategy: alpha}``; defaults to ``{"s1": 0.5}``.
    """
    vault = deploy_vault(vault_config(**kwargs))
    if deposit:
        vault.deposit('lp', {'USD': d(deposit)}, PRICES)
    alphas = {'s1': d('0.5')} if alphas is None else alphas
    for strategy_id in sorted(alphas):
        vault.register_strategy(strategy_id)
        vault.set_strategy_status(strategy_id, Status.validated)
        vault.set_strategy_status(strategy_id, Status.active)
    vault.set_allocations(alphas, 0)
    return vault


MINIMAL_SCENARIO = {
    'schema_version': 1,
    'meta': {'name': 'empty', 'seed': 1, 'horizon': 10},
    'assets': {
        'quote': 'USD',
        'feeds': [{'asset': 'ETH', 'mode': 'scripted', 'path': ['2'] * 11}]},
    'vaults': [{'id': 'v1', 'admissible_assets': ['USD', 'ETH'], 'numeraire': 'USD'}]}


TRADING_SCENARIO = {
    'schema_version': 1,
    'meta': {'name': 'spot-hold', 'seed': 7, 'horizon': 20},
    'assets': {
        'quote': 'USD',
        'feeds': [{'asset': 'ETH', 'mode': 'gbm', 'p0': '2000', 'mu': '0.05', 'sigma': '0.6'}]},
    'venues': [
        {'type': 'spot', 'id': 'dex', 'fee_bps': 30, 'slip_coeff': '0.1',
         'depth': [{'pair': ['USD', 'ETH'], 'depth': '1000000'}]},
        {'type': 'staking', 'id': 'stake', 'apr': '0.05'}],
    'vaults': [{
        'id': 'v1',
        'admissible_assets': ['USD', 'ETH'],
        'numeraire': 'USD',
        'venues': [
            {'venue': 'dex', 'functions': ['trade']},
            {'venue': 'stake', 'functions': ['stake', 'unstake']}],
        'mgmt_fee_rate': '0.02'}],
    'strategies': [{
        'id': 'hold',
        'vault': 'v1',
        'class': 'PureSpot',
        'universe': ['ETH'],
        'status': 'Active',
        'alpha': '0.5',
        'params': {'targets': {'ETH': '1'}, 'execution_frequency': 5, 'venue': 'dex'}}],
    'events': [
        {'block': 1, 'action': 'deposit', 'actor': 'lp', 'payload': {'vault': 'v1', 'basket': {'USD': '100000'}}},
        {'block': 12, 'action': 'withdraw', 'actor': 'lp', 'payload': {'vault': 'v1', 'shares': '1000'}}]}


def scenario_document(base=None, **sections):
    """A deep copy of `base` (the minimal scenario by default) with `sections` replaced."""
    document = copy.deepcopy(MINIMAL_SCENARIO if base is None else base)
    document.update(copy.deepcopy(sections))
    return document


class DMMFTestCase(unittest.TestCase):
    """ Base class of the unit tests.

    Adds fixed-point assertions and scratch directories that are removed
    when the test ends.
    """
    def assertDecEqual(self, first, second, tolerance=0, msg=None):
        """Asserts two :class:`Dec18` values differ by at most `tolerance` raw units."""
        first, second = Dec18.of(first), Dec18.of(second)
        if abs(first.raw - second.raw) > tolerance:
            self.fail(msg or '{} != {} (tolerance {} raw units)'.format(first, second, tolerance))

    def assertDecZero(self, value, msg=None):
        self.assertDecEqual(value, ZERO, msg=msg)

    def mkdtemp(self):
        path = tempfile.mkdtemp(prefix='dmmf-test-')
        self.addCleanup(shutil.rmtree, path, True)
        return path

    def write_scenario(self, document, name='scenario.json'):
        path = os.path.join(self.mkdtemp(), name)
        with open(path, 'w') as f:
            json.dump(document, f, indent=2, sort_keys=True)
        return path
