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

"""Deterministic runs and replays of scenarios.

A run writes four artifacts to its output directory:

================= ==========================================================
events.jsonl      the append-only event log, one canonical JSON object per line
nav.csv           the NAV history of the first vault; with several vaults each
                  one also gets ``nav-<vault>.csv``
attribution.json  per-vault attribution reports and signal fee totals
summary.json      run identity, counters, terminal values and both digests
================= ==========================================================

"""

from __future__ import absolute_import, division, print_function, unicode_literals

from collections import OrderedDict
import csv
import io
import json
from logging import getLogger
import os

from ..execution import (
    AutomationTask, GbmFeed, LiquidityVenue, OracleFeed, Scheduler, ScriptedFeed, SpotVenue, StakingVenue, World,
    default_tasks)
from ..ledger import BlockClock, ProtocolError, ZERO
from ..marketplace import Marketplace
from ..strategies import create_strategy
from ..validation import Allocator, StakeVoteMechanism
from ..vault import NavRecord, Status, VaultConfig, VenueEntry, deploy_vault
from .event import ScenarioEvent, digest
from .event_writer import EventWriter
from .reader import LogCorrupt, read_log
from .scenario import Scenario, ScenarioInvalid, subscription_model

ENGINE = 'engine'

EVENTS_FILE = 'events.jsonl'
NAV_FILE = 'nav.csv'
ATTRIBUTION_FILE = 'attribution.json'
SUMMARY_FILE = 'summary.json'

logger = getLogger('dmmflib.runner')


# region World construction

def _oracle(scenario):
    meta, assets = scenario['meta'], scenario['assets']
    feeds = []
    for feed in assets['feeds']:
        if feed['mode'] == 'scripted':
            feeds.append(ScriptedFeed(feed['asset'], feed['path'], meta['horizon']))
        else:
            feeds.append(GbmFeed(
                feed['asset'], feed['p0'], feed['mu'], feed['sigma'], meta['seed'], meta['blocks_per_year'],
                meta['horizon']))
    return OracleFeed(feeds, assets['quote'])


def _venue(spec):
    if spec['type'] == 'spot':
        depth = OrderedDict(((item['pair'][0], item['pair'][1]), item['depth']) for item in spec['depth'])
        return SpotVenue(spec['id'], spec['fee_bps'], depth, spec['slip_coeff'], spec['latency'])
    if spec['type'] == 'staking':
        return StakingVenue(spec['id'], spec['apr'], spec['latency'])
    return LiquidityVenue(spec['id'], spec['apr'], spec['lockup'], spec['latency'])


def _vault(spec):
    registry = [VenueEntry(entry['venue'], entry['functions'], entry['capital_cap']) for entry in spec['venues']]
    return deploy_vault(VaultConfig(
        spec['admissible_assets'], spec['numeraire'], registry, spec['mgmt_fee_rate'], spec['min_deposit_value'],
        spec['per_asset_cap'], list(spec['intent_spec'].items()), spec['id'], spec['governance_threshold'],
        spec['quorum'], tuple(spec['alpha_bounds']), spec['fee_recipient']))


_walk = {
    Status.proposed: (),
    Status.validated: (Status.validated,),
    Status.active: (Status.validated, Status.active)}


def build_world(scenario, sink=None):
    """ Builds the :class:`~dmmflib.execution.World` a scenario describes, at genesis and not yet started.

    Strategies listed as Validated or Active are walked through the status
    machine; Active strategies receive their alphas. Subscriptions declared in
    the scenario are made at block zero and are readable from block one.

    :type scenario: :class:`~dmmflib.scenario.Scenario`
    :param sink: Event sink passed to the world.
    """
    validation = scenario['validation']
    signal = scenario['signal']
    marketplace = Marketplace() if signal is None else Marketplace(signal['window'], signal['lambda'], signal['epsilon'])
    mechanism = StakeVoteMechanism() if validation is None else StakeVoteMechanism(
        validation['voting_window'], validation['theta'], validation['min_stake'])
    if validation is not None:
        for account, amount in validation['bonds'].items():
            mechanism.bond(account, amount)

    vaults = OrderedDict()
    allocators = OrderedDict()
    for spec in scenario['vaults']:
        vaults[spec['id']] = _vault(spec)
        allocator = spec['allocator']
        if allocator is not None:
            allocators[spec['id']] = Allocator(
                allocator['lambda'], allocator['cadence'], allocator['window'], allocator['epsilon'],
                allocator['max_turnover'], allocator['max_slippage'])

    for spec in scenario['csos']:
        marketplace.register_cso(spec['id'], spec['kinds'], spec['status'])

    strategies = OrderedDict()
    alphas = OrderedDict()
    for spec in scenario['strategies']:
        strategy = create_strategy(spec['class'], spec['id'], spec['universe'], spec['params'])
        vault = vaults[spec['vault']]
        vault.register_strategy(spec['id'])
        for status in _walk[spec['status']]:
            vault.set_strategy_status(spec['id'], status)
        if spec['status'] == Status.active:
            alphas.setdefault(spec['vault'], OrderedDict())[spec['id']] = spec['alpha']
        marketplace.register_strategy(spec['id'])
        if spec['fee_budget'] > ZERO:
            marketplace.fund_fee_budget(spec['id'], spec['fee_budget'])
        strategies[spec['id']] = (strategy, spec['vault'])
    for vault_id, values in alphas.items():
        vaults[vault_id].set_allocations(values, 0)

    for spec in scenario['subscriptions']:
        marketplace.subscribe(spec['strategy'], spec['provider'], subscription_model(spec['model']),
                              spec['epoch_length'], 0)

    scheduler = Scheduler(AutomationTask(task['task_id'], task['target'], task['cadence'], task['offset'], task['vault'])
                          for task in scenario['automation'])
    default_tasks(scheduler, strategies, vaults, allocators)

    return World(
        BlockClock(0, scenario.blocks_per_year), vaults, _oracle(scenario),
        OrderedDict((spec['id'], _venue(spec)) for spec in scenario['venues']), marketplace, strategies, scheduler,
        mechanism, allocators, scenario.events(), sink)

# endregion

# region Runs


def signal_fee_totals(marketplace):
    totals = OrderedDict()
    for transfer in marketplace.transfers:
        key = '{}->{}:{}'.format(transfer.payer, transfer.payee, transfer.kind)
        totals[key] = totals.get(key, ZERO) + transfer.amount
    return OrderedDict((key, str(totals[key])) for key in sorted(totals))


def execute(scenario, sink, genesis=None):
    """ Runs `scenario` to its horizon, reporting every event to `sink`.

    The first event is ``genesis`` carrying the canonical scenario, the last
    one ``run_end`` carrying the state digest.

    :param genesis: Logged genesis payload to emit instead of a fresh one.
    :returns: The finished world.
    """
    world = build_world(scenario, sink)
    world.emit(ENGINE, ScenarioEvent.genesis, genesis if genesis is not None else OrderedDict([
        ('scenario', scenario.to_json())]))
    world.run(scenario.horizon)
    world.emit(ENGINE, ScenarioEvent.run_end, OrderedDict([
        ('blocks', scenario.horizon), ('counters', OrderedDict(world.counters)),
        ('state_digest', digest(world.state()))]))
    return world


def _write_json(path, value):
    with io.open(path, 'w', encoding='utf-8', newline='\n') as f:
        f.write(json.dumps(value, indent=2, sort_keys=True, ensure_ascii=True) + '\n')


def write_nav(path, history):
    with io.open(path, 'w', encoding='utf-8', newline='') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(NavRecord.columns)
        for record in history:
            writer.writerow(record.to_row())


class RunResult(object):
    def __init__(self, out_dir, summary, world):
        self.out_dir = out_dir
        self.summary = summary
        self.world = world

    @property
    def state_digest(self):
        return self.summary['state_digest']

    @property
    def log_digest(self):
        return self.summary['log_digest']


def run(scenario, out_dir, seed=None):
    """ Runs a scenario and writes its artifacts to `out_dir`.

    **Example**::

        result = run(Scenario.load('scenarios/spot_hold.json'), 'out/spot_hold', seed=7)
        print(result.state_digest)

    :param scenario: :class:`~dmmflib.scenario.Scenario` or the path of a scenario file.
    :param seed: Seed override or `None` to use the scenario's seed.
    :raises ScenarioInvalid: The scenario does not validate.
    :rtype: :class:`RunResult`
    """
    if not isinstance(scenario, Scenario):
        scenario = Scenario.load(scenario)
    if seed is not None:
        scenario = scenario.with_seed(seed)
    if not os.path.isdir(out_dir):
        os.makedirs(out_dir)
    logger.info('running %s (seed %d, %d blocks) into %s', scenario.name, scenario.seed, scenario.horizon, out_dir)

    with io.open(os.path.join(out_dir, EVENTS_FILE), 'wb') as f:
        writer = EventWriter(f)
        world = execute(scenario, writer)
        writer.flush(finished=True)

    vaults = list(world.vaults.items())
    write_nav(os.path.join(out_dir, NAV_FILE), vaults[0][1].history)
    if len(vaults) > 1:
        for vault_id, vault in vaults:
            write_nav(os.path.join(out_dir, 'nav-{}.csv'.format(vault_id)), vault.history)

    _write_json(os.path.join(out_dir, ATTRIBUTION_FILE), OrderedDict([
        ('vaults', OrderedDict((vault_id, vault.attribution_report()) for vault_id, vault in vaults)),
        ('signal_fees', signal_fee_totals(world.marketplace))]))

    terminal = OrderedDict()
    for vault_id, vault in vaults:
        record = vault.history[-1]
        terminal[vault_id] = OrderedDict([
            ('nav', str(record.nav)), ('share_price', str(record.share_price)),
            ('share_supply', str(record.share_supply))])
    summary = OrderedDict([
        ('name', scenario.name),
        ('seed', scenario.seed),
        ('horizon', scenario.horizon),
        ('blocks_per_year', scenario.blocks_per_year),
        ('events', writer.event_count),
        ('counters', OrderedDict(world.counters)),
        ('terminal', terminal),
        ('state_digest', digest(world.state())),
        ('log_digest', writer.log_digest)])
    _write_json(os.path.join(out_dir, SUMMARY_FILE), summary)
    logger.info('finished %s: %d events, log digest %s', scenario.name, writer.event_count, writer.log_digest)
    return RunResult(out_dir, summary, world)

# endregion

# region Replay


class ReplayResult(object):
    """ Outcome of a replay.

    :ivar mismatch: ``(block, seq)`` of the first re-derived event that differs from the log, or `None`.
    :ivar expected: ``summary.json`` digests compared against, or `None`.
    """
    def __init__(self, state_digest, log_digest, mismatch=None, expected=None, world=None):
        self.state_digest = state_digest
        self.log_digest = log_digest
        self.mismatch = mismatch
        self.expected = expected
        self.world = world

    @property
    def digests_match(self):
        if self.expected is None:
            return True
        return self.expected.get('state_digest') == self.state_digest and \
            self.expected.get('log_digest') == self.log_digest

    @property
    def ok(self):
        return self.mismatch is None and self.digests_match

    def to_json(self):
        return OrderedDict([
            ('ok', self.ok),
            ('state_digest', self.state_digest),
            ('log_digest', self.log_digest),
            ('mismatch', None if self.mismatch is None else list(self.mismatch)),
            ('expected', self.expected)])


def logged_inputs(events):
    """The external inputs of a log as scenario event documents."""
    return [OrderedDict([
        ('block', event.block), ('action', event.payload['action']), ('actor', event.actor),
        ('payload', event.payload['payload'])]) for event in events if event.action == ScenarioEvent.input]


def replay(log_path, summary_path=None):
    """ Re-drives the engine from a log's genesis and its logged inputs.

    Every re-derived event is compared with the logged one; the final state
    digest and the log digest are compared with ``summary.json``, looked up
    next to the log when `summary_path` is `None`.

    :raises LogCorrupt: The log is not a well-formed, complete run log.
    :rtype: :class:`ReplayResult`
    """
    events, log_digest = read_log(log_path)
    genesis = events[0]
    try:
        scenario = Scenario.from_json(genesis.payload['scenario']).with_events(logged_inputs(events))
    except (KeyError, TypeError, ScenarioInvalid) as error:
        raise LogCorrupt('Genesis does not carry a valid scenario ({})'.format(error), genesis.position)

    writer = EventWriter(keep=True)
    try:
        world = execute(scenario, writer, genesis.payload)
    except ProtocolError as error:
        raise LogCorrupt('Log does not drive the engine ({})'.format(error), writer.last_position or (0, 0))

    mismatch = None
    for logged, derived in zip(events, writer.events):
        if logged != derived:
            mismatch = logged.position
            break
    if mismatch is None and len(events) != len(writer.events):
        shorter = events if len(events) < len(writer.events) else writer.events
        mismatch = (shorter[-1].block, shorter[-1].seq + 1)

    if summary_path is None:
        candidate = os.path.join(os.path.dirname(os.path.abspath(log_path)), SUMMARY_FILE)
        summary_path = candidate if os.path.exists(candidate) else None
    expected = None
    if summary_path is not None:
        with io.open(summary_path, 'r', encoding='utf-8') as f:
            summary = json.load(f)
        expected = OrderedDict([('state_digest', summary.get('state_digest')), ('log_digest', summary.get('log_digest'))])

    result = ReplayResult(digest(world.state()), log_digest, mismatch, expected, world)
    if result.ok:
        logger.info('replayed %s: %d events, digests match', log_path, len(events))
    else:
        logger.warning('replay of %s diverged at %s', log_path, mismatch)
    return result

# endregion


__all__ = ['ATTRIBUTION_FILE', 'EVENTS_FILE', 'NAV_FILE', 'ReplayResult', 'RunResult', 'SUMMARY_FILE', 'build_world',
           'execute', 'logged_inputs', 'replay', 'run', 'signal_fee_totals', 'write_nav']
