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

"""Scenario files: parsing, validation and canonical serialisation.

A scenario is a JSON document with ``"schema_version": 1``. Unknown members
are errors. :func:`validate_scenario` reports every schema and reference
violation with a path into the document; :class:`Scenario` holds a valid
document in typed form.

"""

from __future__ import absolute_import, division, print_function, unicode_literals

from collections import OrderedDict
import copy
import io
import json

from ..execution import ScriptedEvent
from ..ledger import Dec18, ONE, ProtocolError, ZERO
from ..marketplace import Kind, ParticipationModel, SubscriptionModel
from ..strategies import InvalidParameters, create_strategy, strategy_classes
from ..validators import Boolean, Decimal, Fraction, Identifier, Integer, List, Match, Set
from ..vault import Function, GovernanceProposal, Status, VenueEntry
from .schema import Field, ListOf, MapOf, Object, Raw, Tagged, child

SCHEMA_VERSION = 1


class ParseError(ProtocolError, ValueError):
    pass


class ScenarioInvalid(ProtocolError, ValueError):
    """ Raised for a scenario with schema or reference violations.

    :ivar errors: List of ``(path, message)``.
    """
    def __init__(self, errors):
        super(ScenarioInvalid, self).__init__('{} error(s); first: {}: {}'.format(len(errors), *errors[0]))
        self.errors = errors


# region Schema

def _positive():
    return Decimal(minimum=0, exclusive_minimum=True)


_asset = Identifier('asset')
_venue = Identifier('venue')
_vault = Identifier('vault')
_strategy = Identifier('strategy')
_cso = Identifier('CSO')
_account = Identifier('account')
_actor = Identifier('actor')
_metric = Match('a metric name', r'^[A-Za-z_][A-Za-z0-9_]*$')

_kinds = Set(*Kind.all)

VENUE_FUNCTIONS = {
    'spot': (Function.trade,),
    'staking': (Function.stake, Function.unstake),
    'liquidity': (Function.add_liquidity, Function.remove_liquidity)}

_model = Tagged('type', {
    'subscription': Object(
        type=Field(Set('subscription'), require=True),
        flat_fee=Field(Decimal(minimum=0), require=True)),
    'participation': Object(
        type=Field(Set('participation'), require=True),
        co_capital=Field(Decimal(minimum=0), require=True),
        carry_rate=Field(Fraction(), require=True))})

_venue_entry = Object(
    venue=Field(_venue, require=True),
    functions=Field(List(Set(*Function.all), minimum_length=1, unique=True), require=True),
    capital_cap=Field(Decimal(minimum=0)))

SCENARIO_SCHEMA = Object(
    schema_version=Field(Integer(SCHEMA_VERSION, SCHEMA_VERSION), require=True),
    meta=Field(Object(
        name=Field(Match('a scenario name', r'^[A-Za-z0-9][A-Za-z0-9_.-]{0,63}$'), require=True),
        description=Field(Match('a description', r'^[^\n]*$')),
        seed=Field(Integer(0, 2 ** 64 - 1), require=True),
        horizon=Field(Integer(0), require=True),
        blocks_per_year=Field(Integer(1), default=365)), require=True),
    assets=Field(Object(
        quote=Field(_asset, require=True),
        feeds=Field(ListOf(Tagged('mode', {
            'scripted': Object(
                asset=Field(_asset, require=True),
                mode=Field(Set('scripted'), require=True),
                path=Field(ListOf(_positive(), minimum_length=1), require=True)),
            'gbm': Object(
                asset=Field(_asset, require=True),
                mode=Field(Set('gbm'), require=True),
                p0=Field(_positive(), require=True),
                mu=Field(Decimal(), default=ZERO),
                sigma=Field(Decimal(minimum=0), default=ZERO))})), default=[])), require=True),
    venues=Field(ListOf(Tagged('type', {
        'spot': Object(
            id=Field(_venue, require=True),
            type=Field(Set('spot'), require=True),
            fee_bps=Field(Integer(0, 9999), default=0),
            slip_coeff=Field(Decimal(minimum=0), default=ZERO),
            depth=Field(ListOf(Object(
                pair=Field(List(_asset, minimum_length=2, unique=True), require=True),
                depth=Field(_positive(), require=True))), require=True),
            latency=Field(Integer(0), default=0)),
        'staking': Object(
            id=Field(_venue, require=True),
            type=Field(Set('staking'), require=True),
            apr=Field(Decimal(minimum=0), default=ZERO),
            latency=Field(Integer(0), default=0)),
        'liquidity': Object(
            id=Field(_venue, require=True),
            type=Field(Set('liquidity'), require=True),
            apr=Field(Decimal(minimum=0), default=ZERO),
            lockup=Field(Integer(0), default=0),
            latency=Field(Integer(0), default=0))})), default=[]),
    vaults=Field(ListOf(Object(
        id=Field(_vault, require=True),
        admissible_assets=Field(List(_asset, minimum_length=1, unique=True), require=True),
        numeraire=Field(_asset, require=True),
        venues=Field(ListOf(_venue_entry), default=[]),
        mgmt_fee_rate=Field(Decimal(minimum=0), default=ZERO),
        min_deposit_value=Field(Decimal(minimum=0), default=ZERO),
        per_asset_cap=Field(Fraction(positive=True), default=ONE),
        alpha_bounds=Field(List(Fraction(), minimum_length=2), default=[ZERO, ONE]),
        governance_threshold=Field(Fraction(), default=Dec18.parse('0.5')),
        quorum=Field(Fraction(), default=Dec18.parse('0.5')),
        fee_recipient=Field(_account, default='treasury'),
        intent_spec=Field(MapOf(_metric, Decimal()), default=OrderedDict()),
        allocator=Field(Object(
            cadence=Field(Integer(1), default=50),
            window=Field(Integer(1), default=100),
            epsilon=Field(_positive(), default=Dec18(10 ** 12)),
            max_turnover=Field(Fraction(positive=True), default=ONE),
            max_slippage=Field(Fraction(), default=Dec18.parse('0.01')),
            **{'lambda': Field(Decimal(minimum=0), default=ONE)}))), minimum_length=1), require=True),
    csos=Field(ListOf(Object(
        id=Field(_cso, require=True),
        kinds=Field(List(_kinds, minimum_length=1, unique=True), require=True),
        status=Field(Set('Proposed', 'Validated'), default='Proposed'))), default=[]),
    strategies=Field(ListOf(Object(
        id=Field(_strategy, require=True),
        vault=Field(_vault, require=True),
        universe=Field(List(_asset, minimum_length=1, unique=True), require=True),
        status=Field(Set(Status.proposed, Status.validated, Status.active), default=Status.proposed),
        alpha=Field(Fraction(), default=ZERO),
        fee_budget=Field(Decimal(minimum=0), default=ZERO),
        params=Field(Raw(), default=OrderedDict()),
        **{'class': Field(Set(*strategy_classes), require=True)})), default=[]),
    subscriptions=Field(ListOf(Object(
        strategy=Field(_strategy, require=True),
        provider=Field(_cso, require=True),
        model=Field(_model, require=True),
        epoch_length=Field(Integer(1), require=True))), default=[]),
    validation=Field(Object(
        voting_window=Field(Integer(1), default=10),
        theta=Field(Fraction(), default=Dec18.parse('0.5')),
        min_stake=Field(Decimal(minimum=0), default=ZERO),
        bonds=Field(MapOf(_account, _positive()), default=OrderedDict()))),
    signal=Field(Object(
        window=Field(Integer(1), default=50),
        epsilon=Field(_positive(), default=Dec18(10 ** 12)),
        **{'lambda': Field(Decimal(minimum=0), default=ONE)})),
    automation=Field(ListOf(Object(
        task_id=Field(Integer(0), require=True),
        target=Field(Match('an automation target', r'^(strategy:.+|allocator|fee-accrual|fee-epoch|fee-harvest)$'),
                     require=True),
        cadence=Field(Integer(1), default=1),
        offset=Field(Integer(0), default=0),
        vault=Field(_vault))), default=[]),
    events=Field(ListOf(Object(
        block=Field(Integer(0), require=True),
        action=Field(Match('an action name', r'^[a-z_]+$'), require=True),
        actor=Field(_actor, require=True),
        payload=Field(Raw(), default=OrderedDict()))), default=[]))


EVENT_SCHEMAS = {
    'deposit': Object(
        vault=Field(_vault, require=True),
        basket=Field(MapOf(_asset, _positive()), require=True)),
    'withdraw': Object(
        vault=Field(_vault, require=True),
        shares=Field(_positive(), require=True),
        queue=Field(Boolean(), default=False)),
    'register_cso': Object(
        kinds=Field(List(_kinds, minimum_length=1, unique=True), require=True),
        status=Field(Set('Proposed', 'Validated'), default='Proposed')),
    'publish': Object(
        kind=Field(_kinds, require=True),
        nonce=Field(Integer(0), require=True),
        data=Field(Raw(), require=True)),
    'subscribe': Object(
        provider=Field(_cso, require=True),
        model=Field(_model, require=True),
        epoch_length=Field(Integer(1), require=True)),
    'auction': Object(
        bids=Field(MapOf(_strategy, Decimal(minimum=0)), require=True),
        capacity=Field(Integer(1), require=True),
        epoch_length=Field(Integer(1), require=True)),
    'fund_budget': Object(amount=Field(_positive(), require=True)),
    'signal_multiplier': Object(
        provider=Field(_cso, require=True),
        multiplier=Field(Decimal(minimum=0), require=True)),
    'bond': Object(amount=Field(_positive(), require=True)),
    'candidate': Object(
        kind=Field(Set('strategy', 'cso'), default='strategy'),
        vault=Field(_vault),
        metrics=Field(MapOf(_metric, Decimal()), default=OrderedDict())),
    'ballot': Object(
        subject=Field(_actor, require=True),
        stake=Field(_positive(), require=True),
        direction=Field(Set('Accept', 'Reject'), require=True)),
    'finalize': Object(),
    'governance': Object(
        vault=Field(_vault, require=True),
        field=Field(Set(*GovernanceProposal.fields), require=True),
        value=Field(Raw(), require=True),
        votes=Field(MapOf(_account, Set('yes', 'no')), require=True)),
    'harvest': Object(vault=Field(_vault, require=True))}

PROPOSAL_SCHEMAS = {
    'venue': _venue_entry,
    'venue_remove': Object(venue=Field(_venue, require=True)),
    'strategy_status': Object(
        strategy=Field(_strategy, require=True),
        status=Field(Set(*Status.all), require=True)),
    'per_asset_cap': Object(value=Field(Fraction(positive=True), require=True)),
    'mgmt_fee_rate': Object(value=Field(Decimal(minimum=0), require=True)),
    'alpha_bounds': Object(value=Field(List(Fraction(), minimum_length=2), require=True)),
    'alpha': Object(
        strategy=Field(_strategy, require=True),
        alpha=Field(Fraction(), require=True))}

# endregion

# region Typed values


def subscription_model(model):
    if model['type'] == 'subscription':
        return SubscriptionModel(model['flat_fee'])
    return ParticipationModel(model['co_capital'], model['carry_rate'])


def governance_proposal(field, value):
    """Builds the :class:`~dmmflib.vault.GovernanceProposal` of a converted proposal value."""
    if field == 'venue':
        return GovernanceProposal(field, VenueEntry(value['venue'], value['functions'], value['capital_cap']))
    if field == 'venue_remove':
        return GovernanceProposal(field, value['venue'])
    if field in ('per_asset_cap', 'mgmt_fee_rate'):
        return GovernanceProposal(field, value['value'])
    if field == 'alpha_bounds':
        return GovernanceProposal(field, tuple(value['value']))
    return GovernanceProposal(field, dict(value))


def typed_payload(action, payload):
    """The payload a scripted action handler receives, built from its converted payload."""
    if action in ('subscribe',):
        payload = OrderedDict(payload)
        payload['model'] = subscription_model(payload['model'])
    elif action == 'governance':
        payload = OrderedDict(payload)
        payload['proposal'] = governance_proposal(payload.pop('field'), payload.pop('value'))
    return payload


def convert_event(event, path, errors):
    """ Converts the payload of a scripted event.

    :returns: ``(typed, document)`` or ``(None, None)`` when the payload is invalid.
    """
    schema = EVENT_SCHEMAS.get(event['action'])
    if schema is None:
        errors.append((child(path, 'action'), 'Unknown action: {}'.format(event['action'])))
        return None, None
    count = len(errors)
    payload = schema.convert(event['payload'], child(path, 'payload'), errors)
    if event['action'] == 'governance' and len(errors) == count:
        value = payload['value']
        if payload['field'] in ('per_asset_cap', 'mgmt_fee_rate', 'alpha_bounds', 'venue_remove') and \
                not isinstance(value, dict):
            value = {'venue' if payload['field'] == 'venue_remove' else 'value': value}
        payload['value'] = PROPOSAL_SCHEMAS[payload['field']].convert(
            value, child(child(path, 'payload'), 'value'), errors)
    if len(errors) != count:
        return None, None
    document = schema.format(payload)
    if event['action'] == 'governance':
        document['value'] = PROPOSAL_SCHEMAS[payload['field']].format(payload['value'])
    return typed_payload(event['action'], payload), document

# endregion

# region Reference checks


def _unique(items, key, path, errors, what):
    seen = set()
    for index, item in enumerate(items):
        if item is None or item.get(key) is None:
            continue
        if item[key] in seen:
            errors.append((child(child(path, index), key), 'Duplicate {} id: {}'.format(what, item[key])))
        seen.add(item[key])
    return seen


def _check_references(doc, errors):
    horizon = doc['meta']['horizon'] if doc['meta'] else None
    quote = doc['assets']['quote'] if doc['assets'] else None
    feeds = doc['assets']['feeds'] if doc['assets'] else []
    priced = set([quote])
    for index, feed in enumerate(feeds or []):
        if feed is None:
            continue
        path = '$.assets.feeds[{}]'.format(index)
        if feed['asset'] in priced:
            errors.append((child(path, 'asset'), 'Asset {} is already priced'.format(feed['asset'])))
        priced.add(feed['asset'])
        if feed['mode'] == 'scripted' and horizon is not None and feed['path'] is not None and \
                len(feed['path']) < horizon + 1:
            errors.append((child(path, 'path'), 'Path covers {} blocks, the horizon needs {}'.format(
                len(feed['path']), horizon + 1)))

    venues = {venue['id']: venue for venue in doc['venues'] or [] if venue is not None}
    _unique(doc['venues'] or [], 'id', '$.venues', errors, 'venue')
    vaults = {vault['id']: vault for vault in doc['vaults'] or [] if vault is not None}
    _unique(doc['vaults'] or [], 'id', '$.vaults', errors, 'vault')
    csos = {cso['id']: cso for cso in doc['csos'] or [] if cso is not None}
    _unique(doc['csos'] or [], 'id', '$.csos', errors, 'CSO')
    strategies = {s['id']: s for s in doc['strategies'] or [] if s is not None}
    _unique(doc['strategies'] or [], 'id', '$.strategies', errors, 'strategy')

    for index, vault in enumerate(doc['vaults'] or []):
        if vault is None:
            continue
        path = '$.vaults[{}]'.format(index)
        if vault['numeraire'] != quote:
            errors.append((child(path, 'numeraire'), 'Numeraire {} is not the quote asset {}'.format(
                vault['numeraire'], quote)))
        if vault['admissible_assets'] is not None:
            if vault['numeraire'] not in vault['admissible_assets']:
                errors.append((child(path, 'numeraire'), 'Numeraire is not an admissible asset'))
            for asset in vault['admissible_assets']:
                if asset not in priced:
                    errors.append((child(path, 'admissible_assets'), 'Asset {} has no price feed'.format(asset)))
        bounds = vault['alpha_bounds']
        if bounds is not None and (len(bounds) != 2 or bounds[0] > bounds[1]):
            errors.append((child(path, 'alpha_bounds'), 'Expected [alpha_min, alpha_max] with alpha_min <= alpha_max'))
        for entry_index, entry in enumerate(vault['venues'] or []):
            if entry is None:
                continue
            entry_path = child(child(path, 'venues'), entry_index)
            venue = venues.get(entry['venue'])
            if venue is None:
                errors.append((child(entry_path, 'venue'), 'Unknown venue: {}'.format(entry['venue'])))
                continue
            for function in entry['functions'] or []:
                if function not in VENUE_FUNCTIONS[venue['type']]:
                    errors.append((child(entry_path, 'functions'), 'Venue {} does not offer {}'.format(
                        entry['venue'], function)))

    totals = {}
    for index, spec in enumerate(doc['strategies'] or []):
        if spec is None:
            continue
        path = '$.strategies[{}]'.format(index)
        vault = vaults.get(spec['vault'])
        if vault is None:
            errors.append((child(path, 'vault'), 'Unknown vault: {}'.format(spec['vault'])))
            continue
        for asset in spec['universe'] or []:
            if asset not in (vault['admissible_assets'] or []):
                errors.append((child(path, 'universe'), 'Asset {} is not admissible in {}'.format(asset, vault['id'])))
        if spec['status'] == Status.active:
            totals[spec['vault']] = totals.get(spec['vault'], ZERO) + spec['alpha']
            if totals[spec['vault']] > ONE:
                errors.append((child(path, 'alpha'), 'Active alphas of {} exceed 1'.format(spec['vault'])))
        elif spec['alpha']:
            errors.append((child(path, 'alpha'), 'Only Active strategies carry an alpha'))
        if not isinstance(spec['params'], dict):
            errors.append((child(path, 'params'), 'Expected an object'))
            continue
        try:
            strategy = create_strategy(spec['class'], spec['id'], spec['universe'] or [], spec['params'])
        except (InvalidParameters, ProtocolError) as error:
            errors.append((child(path, 'params'), str(error)))
            continue
        listed = [entry['venue'] for entry in vault['venues'] or [] if entry is not None]
        for name in ('venue', 'staking_venue'):
            value = getattr(strategy, name, None)
            if value is not None and value not in listed:
                errors.append((child(child(path, 'params'), name), 'Venue {} is not whitelisted by {}'.format(
                    value, vault['id'])))
        for provider in getattr(strategy, 'providers', None) or []:
            if provider not in csos:
                errors.append((child(child(path, 'params'), 'providers'), 'Unknown CSO: {}'.format(provider)))

    pairs = set()
    for index, subscription in enumerate(doc['subscriptions'] or []):
        if subscription is None:
            continue
        path = '$.subscriptions[{}]'.format(index)
        if subscription['strategy'] not in strategies:
            errors.append((child(path, 'strategy'), 'Unknown strategy: {}'.format(subscription['strategy'])))
        if subscription['provider'] not in csos:
            errors.append((child(path, 'provider'), 'Unknown CSO: {}'.format(subscription['provider'])))
        pair = (subscription['strategy'], subscription['provider'])
        if pair in pairs:
            errors.append((path, 'Duplicate subscription {} -> {}'.format(*pair)))
        pairs.add(pair)

    _unique(doc['automation'] or [], 'task_id', '$.automation', errors, 'task')
    for index, task in enumerate(doc['automation'] or []):
        if task is None:
            continue
        path = '$.automation[{}]'.format(index)
        if task['target'] is not None and task['target'].startswith('strategy:') and \
                task['target'][len('strategy:'):] not in strategies:
            errors.append((child(path, 'target'), 'Unknown strategy: {}'.format(task['target'])))
        if task['vault'] is not None and task['vault'] not in vaults:
            errors.append((child(path, 'vault'), 'Unknown vault: {}'.format(task['vault'])))

    for index, event in enumerate(doc['events'] or []):
        if event is None:
            continue
        path = '$.events[{}]'.format(index)
        if horizon is not None and event['block'] is not None and event['block'] > horizon:
            errors.append((child(path, 'block'), 'Block {} is beyond the horizon {}'.format(event['block'], horizon)))
        if event['action'] is None:
            continue
        typed, _ = convert_event(event, path, errors)
        if typed is not None and typed.get('vault') is not None and typed['vault'] not in vaults:
            errors.append((child(child(path, 'payload'), 'vault'), 'Unknown vault: {}'.format(typed['vault'])))

# endregion


def parse_scenario(text):
    """ Parses scenario JSON text, keeping member order.

    :raises ParseError: The text is not a JSON object.
    """
    try:
        data = json.loads(text, object_pairs_hook=OrderedDict)
    except ValueError as error:
        raise ParseError('Scenario is not valid JSON: {}'.format(error))
    if not isinstance(data, dict):
        raise ParseError('Scenario must be a JSON object')
    return data


def read_scenario(path):
    with io.open(path, 'r', encoding='utf-8') as f:
        return parse_scenario(f.read())


def check_scenario(data):
    """:returns: ``(converted, errors)``"""
    converted, errors = SCENARIO_SCHEMA.check(data)
    if not errors:
        _check_references(converted, errors)
    return converted, errors


def validate_scenario(source):
    """ Validates a scenario file, text or parsed document.

    **Example**::

        errors = validate_scenario('scenarios/spot_hold.json')
        for path, message in errors:
            print('{}: {}'.format(path, message))

    :returns: List of ``(path, message)``; empty when the scenario is valid.
    :raises ParseError: The file does not parse.
    """
    if isinstance(source, dict):
        data = source
    elif source.lstrip().startswith('{'):
        data = parse_scenario(source)
    else:
        data = read_scenario(source)
    return check_scenario(data)[1]


class Scenario(object):
    """ A validated scenario in typed form.

    """
    def __init__(self, document):
        self.document = document

    @classmethod
    def from_json(cls, data):
        """:raises ScenarioInvalid: The document has errors."""
        converted, errors = check_scenario(data)
        if errors:
            raise ScenarioInvalid(errors)
        return cls(converted)

    @classmethod
    def load(cls, path):
        return cls.from_json(read_scenario(path))

    @property
    def name(self):
        return self.document['meta']['name']

    @property
    def seed(self):
        return self.document['meta']['seed']

    @property
    def horizon(self):
        return self.document['meta']['horizon']

    @property
    def blocks_per_year(self):
        return self.document['meta']['blocks_per_year']

    def __getitem__(self, name):
        return self.document[name]

    def events(self):
        """The scripted events as :class:`~dmmflib.execution.ScriptedEvent` objects in block order."""
        result = []
        errors = []
        for index, event in enumerate(self.document['events']):
            typed, document = convert_event(event, '$.events[{}]'.format(index), errors)
            result.append(ScriptedEvent(event['block'], event['action'], event['actor'], typed, document))
        return sorted(result, key=lambda event: event.block)

    def to_json(self):
        """The canonical JSON form of the scenario."""
        return SCENARIO_SCHEMA.format(self.document)

    def dumps(self):
        return json.dumps(self.to_json(), indent=2, sort_keys=True, ensure_ascii=True) + '\n'

    def with_seed(self, seed):
        """A copy of the scenario run with `seed`."""
        data = self.to_json()
        data['meta']['seed'] = seed
        return Scenario.from_json(data)

    def with_events(self, events):
        """ A copy of the scenario whose scripted events are replaced.

        :param events: JSON events ``{"block", "action", "actor", "payload"}``.
        """
        data = self.to_json()
        data['events'] = copy.deepcopy(list(events))
        return Scenario.from_json(data)


def serialise_scenario(scenario):
    return scenario.dumps()


__all__ = ['EVENT_SCHEMAS', 'ParseError', 'SCENARIO_SCHEMA', 'SCHEMA_VERSION', 'Scenario', 'ScenarioInvalid',
           'check_scenario', 'convert_event', 'governance_proposal', 'parse_scenario', 'read_scenario',
           'serialise_scenario', 'subscription_model', 'validate_scenario']
