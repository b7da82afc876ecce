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

"""The capital vault: holdings, V-token shares, NAV and fee accounting, registries,
governance, intent gating and per-strategy performance attribution.

Holdings are kept in *sleeves*, one per strategy plus the reserved
:data:`UNALLOCATED` sleeve. The numeraire is the unit of account (its price is
exactly one) and always sits in the unallocated sleeve: strategy buys draw on
it and strategy sells return to it. Attribution is the exact change of gross
value, so that for every block::

    NAV[t] - NAV[t-1] == sum(attribution deltas) + deposits - withdrawals - fee_delta

"""

from __future__ import absolute_import, division, print_function, unicode_literals

from collections import OrderedDict
from logging import getLogger

from .ledger import (
    AccountId, AssetId, Dec18, ONE, ProtocolError, SCALE, StrategyId, VenueId, ZERO, dec_div, dec_mul, mul_div, tdiv)

UNALLOCATED = '__unallocated__'


class VaultError(ProtocolError):
    pass


class InvalidConfig(VaultError, ValueError):
    """Raised when a vault configuration or governance value violates an invariant; names the field."""
    def __init__(self, field, message):
        VaultError.__init__(self, '{}: {}'.format(field, message))
        self.field = field


class BelowMinimum(VaultError):
    pass


class ZeroShares(VaultError):
    pass


class InsufficientShares(VaultError):
    pass


class InsufficientLiquidity(VaultError):
    pass


class VaultInsolvent(VaultError):
    pass


class MissingPrice(VaultError, KeyError):
    def __init__(self, asset):
        VaultError.__init__(self, 'No price for asset {}'.format(asset))
        self.asset = asset

    def __str__(self):
        return self.args[0]


class UnknownProposalField(VaultError):
    def __init__(self, field):
        VaultError.__init__(self, 'Unknown proposal field: {}'.format(field))
        self.field = field


class IneligibleVoter(VaultError):
    pass


class UnknownStrategy(VaultError):
    pass


class DuplicateStrategy(VaultError):
    pass


class InvalidTransition(VaultError):
    pass


class AllocationInvariant(VaultError):
    pass


class IntentRejected(ProtocolError):
    """ Base class for intent gate failures.

    :param message: Human readable description.
    :param bound: The violated bound (a field name, limit or asset).
    """
    def __init__(self, message, bound=None):
        ProtocolError.__init__(self, message)
        self.bound = bound


class InvalidIntent(IntentRejected):
    pass


class StrategyNotActive(IntentRejected):
    pass


class VenueNotAllowed(IntentRejected):
    pass


class FunctionNotAllowed(IntentRejected):
    pass


class InadmissibleAsset(IntentRejected):
    pass


class AllocationExceeded(IntentRejected):
    pass


class VenueCapExceeded(IntentRejected):
    pass


class InsufficientBalance(IntentRejected):
    pass


class Status(object):
    proposed = 'Proposed'
    validated = 'Validated'
    active = 'Active'
    retired = 'Retired'

    all = (proposed, validated, active, retired)

    transitions = {
        proposed: (validated, retired),
        validated: (active, retired),
        active: (retired,),
        retired: ()}


class Function(object):
    trade = 'trade'
    stake = 'stake'
    unstake = 'unstake'
    add_liquidity = 'add_liquidity'
    remove_liquidity = 'remove_liquidity'

    all = (trade, stake, unstake, add_liquidity, remove_liquidity)
    deploying = (stake, add_liquidity)
    releasing = (unstake, remove_liquidity)

    parameters = {
        trade: ('asset_in', 'asset_out', 'qty_in', 'min_out'),
        stake: ('asset', 'qty'),
        unstake: ('asset', 'qty'),
        add_liquidity: ('asset', 'qty'),
        remove_liquidity: ('asset', 'qty')}


class Outcome(object):
    passed = 'Passed'
    rejected = 'Rejected'


class VenueEntry(object):
    """ A registry entry of the whitelist vector: a venue, its allowed functions and its capital cap.

    :param capital_cap: Notional cap in numeraire, or `None` for no cap.
    """
    def __init__(self, venue, functions, capital_cap=None):
        self.venue = venue
        self.functions = frozenset(functions)
        self.capital_cap = capital_cap

    def to_json(self):
        return OrderedDict([
            ('venue', self.venue),
            ('functions', sorted(self.functions)),
            ('capital_cap', None if self.capital_cap is None else str(self.capital_cap))])


class VaultConfig(object):
    """ Static parameters of a vault: admissible assets, venue whitelist, numeraire, fees, caps and
    the capital owners' intention vector.

    :param intent_spec: Sequence of ``(metric, weight)`` pairs.
    :param alpha_bounds: ``(alpha_min, alpha_max)`` used by the allocator.
    """
    def __init__(self, admissible_assets, numeraire, venue_registry=(), mgmt_fee_rate=ZERO,
                 min_deposit_value=ZERO, per_asset_cap=ONE, intent_spec=(), vault_id='vault',
                 governance_threshold=Dec18.parse('0.5'), quorum=Dec18.parse('0.5'), alpha_bounds=(ZERO, ONE),
                 fee_recipient='treasury'):
        self.vault_id = vault_id
        self.admissible_assets = frozenset(admissible_assets)
        self.numeraire = numeraire
        self.venue_registry = OrderedDict()
        self.mgmt_fee_rate = mgmt_fee_rate
        self.min_deposit_value = min_deposit_value
        self.per_asset_cap = per_asset_cap
        self.intent_spec = [(metric, weight) for metric, weight in intent_spec]
        self.governance_threshold = governance_threshold
        self.quorum = quorum
        self.alpha_bounds = tuple(alpha_bounds)
        self.fee_recipient = fee_recipient
        self._duplicate_venues = []
        for entry in venue_registry:
            if entry.venue in self.venue_registry:
                self._duplicate_venues.append(entry.venue)
            self.venue_registry[entry.venue] = entry

    def validate(self):
        """ Checks the configuration invariants.

        :raises InvalidConfig: The first violated invariant, naming its field.
        """
        for name, validator in ('vault_id', VenueId), ('fee_recipient', AccountId):
            try:
                validator(getattr(self, name))
            except ProtocolError as error:
                raise InvalidConfig(name, str(error))
        if len(self.admissible_assets) == 0:
            raise InvalidConfig('admissible_assets', 'must not be empty')
        for asset in sorted(self.admissible_assets):
            try:
                AssetId(asset)
            except ProtocolError as error:
                raise InvalidConfig('admissible_assets', str(error))
        if self.numeraire not in self.admissible_assets:
            raise InvalidConfig('numeraire', '{} is not an admissible asset'.format(self.numeraire))
        if not ZERO < self.per_asset_cap <= ONE:
            raise InvalidConfig('per_asset_cap', 'must be in (0, 1], not {}'.format(self.per_asset_cap))
        if self.mgmt_fee_rate < ZERO:
            raise InvalidConfig('mgmt_fee_rate', 'must be non-negative, not {}'.format(self.mgmt_fee_rate))
        if self.min_deposit_value < ZERO:
            raise InvalidConfig('min_deposit_value', 'must be non-negative, not {}'.format(self.min_deposit_value))
        if self._duplicate_venues:
            raise InvalidConfig('venue_registry', 'duplicate venue ids: {}'.format(', '.join(self._duplicate_venues)))
        for entry in self.venue_registry.values():
            check_venue_entry(entry)
        for name in 'governance_threshold', 'quorum':
            value = getattr(self, name)
            if not ZERO <= value <= ONE:
                raise InvalidConfig(name, 'must be in [0, 1], not {}'.format(value))
        check_alpha_bounds(self.alpha_bounds)
        return self

    def to_json(self):
        return OrderedDict([
            ('id', self.vault_id),
            ('admissible_assets', sorted(self.admissible_assets)),
            ('numeraire', self.numeraire),
            ('venues', [entry.to_json() for entry in self.venue_registry.values()]),
            ('mgmt_fee_rate', str(self.mgmt_fee_rate)),
            ('min_deposit_value', str(self.min_deposit_value)),
            ('per_asset_cap', str(self.per_asset_cap)),
            ('intent_spec', [OrderedDict([('metric', m), ('weight', str(w))]) for m, w in self.intent_spec]),
            ('governance', OrderedDict([
                ('threshold', str(self.governance_threshold)), ('quorum', str(self.quorum))])),
            ('alpha_bounds', [str(bound) for bound in self.alpha_bounds]),
            ('fee_recipient', self.fee_recipient)])


def check_venue_entry(entry):
    try:
        VenueId(entry.venue)
    except ProtocolError as error:
        raise InvalidConfig('venue_registry', str(error))
    unknown = sorted(entry.functions - frozenset(Function.all))
    if unknown:
        raise InvalidConfig('venue_registry', 'unknown functions for {}: {}'.format(entry.venue, ', '.join(unknown)))
    if entry.capital_cap is not None and entry.capital_cap < ZERO:
        raise InvalidConfig('venue_registry', 'negative capital cap for {}'.format(entry.venue))


def check_alpha_bounds(bounds):
    if len(bounds) != 2:
        raise InvalidConfig('alpha_bounds', 'expected (alpha_min, alpha_max)')
    lower, upper = bounds
    if not ZERO <= lower <= upper <= ONE:
        raise InvalidConfig('alpha_bounds', 'expected 0 <= alpha_min <= alpha_max <= 1, not ({}, {})'.format(
            lower, upper))


class ExecutionIntent(object):
    """ A strategy's requested vault action against a whitelisted venue function.

    **Example**::

        intent = ExecutionIntent('s1', 'dex', Function.trade,
                                 asset_in='USD', asset_out='ETH', qty_in=Dec18.of(50), min_out=ZERO)

    `venue` may be `None`, in which case the engine routes the intent to the
    best whitelisted spot venue.

    """
    def __init__(self, strategy, venue, function, **params):
        self.strategy = strategy
        self.venue = venue
        self.function = function
        self.params = params

    def __getattr__(self, name):
        try:
            return self.__dict__['params'][name]
        except KeyError:
            raise AttributeError(name)

    def __eq__(self, other):
        return isinstance(other, ExecutionIntent) and self.to_json() == other.to_json()

    def __ne__(self, other):
        return not self.__eq__(other)

    def __repr__(self):
        return 'ExecutionIntent({!r}, {!r}, {!r}, {})'.format(
            self.strategy, self.venue, self.function,
            ', '.join('{}={}'.format(k, self.params[k]) for k in sorted(self.params)))

    def validate(self):
        if self.function not in Function.parameters:
            raise InvalidIntent('Unknown function: {}'.format(self.function), bound='function')
        expected = Function.parameters[self.function]
        if sorted(self.params) != sorted(expected):
            raise InvalidIntent('Function {} expects parameters {}, not {}'.format(
                self.function, ', '.join(expected), ', '.join(sorted(self.params))), bound='params')
        if self.function == Function.trade:
            if self.asset_in == self.asset_out:
                raise InvalidIntent('Trade assets must differ', bound='asset_out')
            if not self.qty_in > ZERO:
                raise InvalidIntent('qty_in must be positive, not {}'.format(self.qty_in), bound='qty_in')
            if self.min_out < ZERO:
                raise InvalidIntent('min_out must be non-negative, not {}'.format(self.min_out), bound='min_out')
        elif not self.qty > ZERO:
            raise InvalidIntent('qty must be positive, not {}'.format(self.qty), bound='qty')
        return self

    def assets(self):
        if self.function == Function.trade:
            return self.asset_in, self.asset_out
        return self.asset,

    @property
    def input(self):
        """The asset and quantity leaving the strategy's control, or `None` for releasing functions."""
        if self.function == Function.trade:
            return self.asset_in, self.qty_in
        if self.function in Function.deploying:
            return self.asset, self.qty
        return None

    def with_venue(self, venue):
        return ExecutionIntent(self.strategy, venue, self.function, **self.params)

    def to_json(self):
        params = OrderedDict((k, str(v) if isinstance(v, Dec18) else v) for k, v in sorted(self.params.items()))
        return OrderedDict([
            ('strategy', self.strategy), ('venue', self.venue), ('function', self.function), ('params', params)])


class CheckedIntent(object):
    """An intent that passed every vault bound, with the notionals it was checked against."""
    def __init__(self, intent, notional, gross_notional):
        self.intent = intent
        self.notional = notional
        self.gross_notional = gross_notional


class Fill(object):
    """ A venue execution result.

    :param debit: ``(asset, qty)`` leaving the vault, or `None`.
    :param credit: ``(asset, qty)`` entering the vault, or `None`.
    :param position: ``(asset, qty_after)`` of the strategy's position at the venue, or `None`.
    """
    def __init__(self, intent, venue, debit=None, credit=None, position=None):
        self.intent = intent
        self.venue = venue
        self.debit = debit
        self.credit = credit
        self.position = position

    def to_json(self):
        def leg(value):
            return None if value is None else [value[0], str(value[1])]
        return OrderedDict([
            ('venue', self.venue), ('debit', leg(self.debit)), ('credit', leg(self.credit)),
            ('position', leg(self.position))])


class StrategySlot(object):
    """An entry of the strategy vector: status, target share alpha and deployed notional."""
    def __init__(self, strategy_id, status=Status.proposed, alpha=ZERO):
        self.strategy_id = strategy_id
        self.status = status
        self.alpha = alpha
        self.deployed_notional = ZERO

    def to_json(self):
        return OrderedDict([
            ('status', self.status), ('alpha', str(self.alpha)), ('deployed_notional', str(self.deployed_notional))])


class GovernanceProposal(object):
    """ A parameter change put to a V-token holder vote.

    ============== ===========================================================
    field          value
    ============== ===========================================================
    venue          ``{"venue", "functions", "capital_cap"}`` added or replaced
    venue_remove   venue id
    strategy_status ``{"strategy", "status"}``
    per_asset_cap  decimal in (0, 1]
    mgmt_fee_rate  non-negative decimal
    alpha_bounds   ``[alpha_min, alpha_max]``
    alpha          ``{"strategy", "alpha"}``
    ============== ===========================================================

    """
    fields = ('venue', 'venue_remove', 'strategy_status', 'per_asset_cap', 'mgmt_fee_rate', 'alpha_bounds', 'alpha')

    def __init__(self, field, value):
        self.field = field
        self.value = value

    def to_json(self):
        value = self.value
        if isinstance(value, VenueEntry):
            value = value.to_json()
        elif isinstance(value, Dec18):
            value = str(value)
        elif isinstance(value, (tuple, list)):
            value = [str(item) for item in value]
        elif isinstance(value, dict):
            value = OrderedDict((k, str(v) if isinstance(v, Dec18) else v) for k, v in sorted(value.items()))
        return OrderedDict([('field', self.field), ('value', value)])


class RedemptionRequest(object):
    def __init__(self, account, shares, requested_at):
        self.account = account
        self.shares = shares
        self.requested_at = requested_at

    def to_json(self):
        return OrderedDict([
            ('account', self.account), ('shares', str(self.shares)), ('requested_at', self.requested_at)])


class NavRecord(object):
    """ One row of a vault's NAV history, with the flows and attribution deltas of its block.

    """
    columns = ('block', 'gross_nav', 'fees_accrued', 'nav', 'share_supply', 'share_price')

    def __init__(self, block, gross_nav, fees_accrued, nav, share_supply, share_price, deposits, withdrawals,
                 fee_delta, harvested, attribution):
        self.block = block
        self.gross_nav = gross_nav
        self.fees_accrued = fees_accrued
        self.nav = nav
        self.share_supply = share_supply
        self.share_price = share_price
        self.deposits = deposits
        self.withdrawals = withdrawals
        self.fee_delta = fee_delta
        self.harvested = harvested
        self.attribution = attribution

    def to_row(self):
        return [str(self.block)] + [str(getattr(self, name)) for name in self.columns[1:]]

    def to_json(self):
        return OrderedDict([
            ('block', self.block),
            ('gross_nav', str(self.gross_nav)),
            ('fees_accrued', str(self.fees_accrued)),
            ('nav', str(self.nav)),
            ('share_supply', str(self.share_supply)),
            ('share_price', str(self.share_price)),
            ('deposits', str(self.deposits)),
            ('withdrawals', str(self.withdrawals)),
            ('fee_delta', str(self.fee_delta)),
            ('harvested', str(self.harvested)),
            ('attribution', OrderedDict((k, str(v)) for k, v in sorted(self.attribution.items())))])


class VaultSnapshot(object):
    """ The read-only view of a vault a strategy receives when it steps.

    `holdings` and `positions` are the strategy's own sleeve; `capital` is
    ``alpha * nav``.

    """
    def __init__(self, vault_id, strategy, block, numeraire, nav, alpha, holdings, positions, cash,
                 pending_redemptions, venues, per_asset_cap):
        self.vault_id = vault_id
        self.strategy = strategy
        self.block = block
        self.numeraire = numeraire
        self.nav = nav
        self.alpha = alpha
        self.capital = dec_mul(alpha, nav) if nav > ZERO else ZERO
        self.holdings = holdings
        self.positions = positions
        self.cash = cash
        self.pending_redemptions = pending_redemptions
        self.venues = venues
        self.per_asset_cap = per_asset_cap

    def exposure(self, asset):
        """Quantity of `asset` the strategy holds, idle or deployed at venues."""
        total = self.holdings.get(asset, ZERO)
        for (venue, position_asset), qty in self.positions.items():
            if position_asset == asset:
                total += qty
        return total

    def staked(self, venue, asset):
        return self.positions.get((venue, asset), ZERO)


class Vault(object):
    """ The capital vault state machine.

    Use :func:`deploy_vault` to create one from a :class:`VaultConfig`.

    """
    def __init__(self, config):
        config.validate()
        self.config = config
        self.vault_id = config.vault_id
        self.share_supply = ZERO
        self.share_balances = {}
        self.strategies = OrderedDict()
        self.accrued_fees = ZERO
        self.hwm = ZERO
        self.attribution = {UNALLOCATED: ZERO}
        self.redemption_queue = []
        self.fees_paid = {}
        self.governance_log = []
        self.allocation_history = []
        self.history = []
        self._logger = getLogger(self.__class__.__name__)
        self._sleeves = {UNALLOCATED: {}}
        self._positions = {}
        self._prices = None
        self._values = {UNALLOCATED: ZERO}
        self._staged = []
        self._totals = {'deposits': ZERO, 'withdrawals': ZERO, 'fees_accrued': ZERO, 'fees_harvested': ZERO}
        self._reset_block()

    # region Properties

    @property
    def numeraire(self):
        return self.config.numeraire

    @property
    def holdings(self):
        """Aggregate quantity per asset over every sleeve."""
        result = {}
        for sleeve in self._sleeves.values():
            for asset, qty in sleeve.items():
                result[asset] = result.get(asset, ZERO) + qty
        return {asset: qty for asset, qty in result.items() if qty}

    @property
    def cash(self):
        """Numeraire available for withdrawals, fees and strategy purchases."""
        return self._sleeves[UNALLOCATED].get(self.config.numeraire, ZERO)

    @property
    def positions(self):
        """Venue positions as ``{(venue, owner, asset): qty}``."""
        return dict(self._positions)

    def sleeve(self, owner):
        return {asset: qty for asset, qty in self._sleeves.get(owner, {}).items() if qty}

    # endregion

    # region Valuation

    def prices_with_numeraire(self, prices):
        prices = dict(prices)
        prices[self.config.numeraire] = ONE
        return prices

    def _price(self, prices, asset):
        try:
            return prices[asset]
        except KeyError:
            raise MissingPrice(asset)

    def gross_nav(self, prices):
        """Liquidation value of holdings and venue positions, before fees."""
        prices = self.prices_with_numeraire(prices)
        total = ZERO
        for asset, qty in sorted(self.holdings.items()):
            total += dec_mul(qty, self._price(prices, asset))
        for key in sorted(self._positions):
            qty = self._positions[key]
            if qty:
                total += dec_mul(qty, self._price(prices, key[2]))
        return total

    def nav(self, prices):
        """ Net asset value: ``sum(q * P) - f``.

        :param prices: ``{asset: Dec18}``; the numeraire is priced at one.
        :raises MissingPrice: A held asset or open position has no price.
        """
        return self.gross_nav(prices) - self.accrued_fees

    def _sleeve_value(self, owner, prices):
        total = ZERO
        for asset, qty in sorted(self._sleeves.get(owner, {}).items()):
            if qty:
                total += dec_mul(qty, self._price(prices, asset))
        for key in sorted(self._positions):
            if key[1] == owner and self._positions[key]:
                total += dec_mul(self._positions[key], self._price(prices, key[2]))
        return total

    def _owner_values(self, prices):
        gross = self.gross_nav(prices)
        values = {owner: self._sleeve_value(owner, prices) for owner in self.strategies}
        values[UNALLOCATED] = gross - sum(values.values(), ZERO)
        return values

    def _commit(self, prices):
        """Re-caches owner values at `prices` and returns the change of gross value."""
        before = sum(self._values.values(), ZERO)
        self._values = self._owner_values(prices)
        for strategy_id, slot in self.strategies.items():
            slot.deployed_notional = self._values[strategy_id]
        return sum(self._values.values(), ZERO) - before

    def _attribute(self, owner, delta):
        if delta:
            self.attribution[owner] = self.attribution.get(owner, ZERO) + delta
            self._block_attribution[owner] = self._block_attribution.get(owner, ZERO) + delta

    def mark(self, prices):
        """ Revalues every sleeve at `prices`, attributing mark-to-market changes to their owners.

        :returns: The price map in use, with the numeraire priced at one.
        """
        prices = self.prices_with_numeraire(prices)
        if prices == self._prices:
            return prices
        values = self._owner_values(prices)
        for owner in sorted(values):
            self._attribute(owner, values[owner] - self._values.get(owner, ZERO))
        self._values = values
        self._prices = prices
        for strategy_id, slot in self.strategies.items():
            slot.deployed_notional = values[strategy_id]
        return prices

    # endregion

    # region Capital flows

    def deposit(self, account, basket, prices):
        """ Deposits a basket and mints V-tokens against it.

        The first deposit mints shares equal to its value; later deposits mint
        ``trunc(v * supply / NAV)``.

        :param basket: ``{asset: qty}``
        :returns: Shares minted.
        :raises InadmissibleAsset: A basket asset is not admissible.
        :raises BelowMinimum: The deposit value is below ``min_deposit_value``.
        :raises ZeroShares: The mint truncates to zero.
        """
        AccountId(account)
        prices = self.mark(prices)
        if not basket:
            raise BelowMinimum('Empty deposit basket')
        value = ZERO
        for asset in sorted(basket):
            if asset not in self.config.admissible_assets:
                raise InadmissibleAsset('Asset {} is not admissible'.format(asset), bound=asset)
            if not basket[asset] > ZERO:
                raise BelowMinimum('Deposit quantity of {} must be positive'.format(asset))
            value += dec_mul(basket[asset], self._price(prices, asset))
        if value < self.config.min_deposit_value:
            raise BelowMinimum('Deposit value {} is below the minimum {}'.format(value, self.config.min_deposit_value))

        before = sum(self._values.values(), ZERO)
        nav_before = before - self.accrued_fees
        if self.share_supply > ZERO and not nav_before > ZERO:
            raise VaultInsolvent('Vault NAV {} is not positive'.format(nav_before))

        unallocated = self._sleeves[UNALLOCATED]
        for asset in sorted(basket):
            unallocated[asset] = unallocated.get(asset, ZERO) + basket[asset]
        value = self.gross_nav(prices) - before

        if self.share_supply == ZERO:
            shares = value
        else:
            shares = mul_div(value, self.share_supply, nav_before)

        if not shares > ZERO:
            for asset in sorted(basket):
                unallocated[asset] -= basket[asset]
            raise ZeroShares('Deposit of value {} mints no shares'.format(value))

        self.share_balances[account] = self.share_balances.get(account, ZERO) + shares
        self.share_supply += shares
        self._commit(prices)
        self._block['deposits'] += value
        self._totals['deposits'] += value
        self._logger.debug('deposit vault=%s account=%s value=%s shares=%s', self.vault_id, account, value, shares)
        return shares

    def withdraw(self, account, shares, prices):
        """ Burns shares and pays ``trunc(shares * NAV / supply)`` in the numeraire.

        :raises InsufficientShares: `account` holds fewer than `shares`.
        :raises InsufficientLiquidity: The numeraire cash cannot cover the payout.
        """
        prices = self.mark(prices)
        if not shares > ZERO:
            raise InsufficientShares('Shares to burn must be positive, not {}'.format(shares))
        balance = self.share_balances.get(account, ZERO)
        if shares > balance:
            raise InsufficientShares('Account {} holds {} shares, cannot burn {}'.format(account, balance, shares))
        nav = sum(self._values.values(), ZERO) - self.accrued_fees
        payout = max(ZERO, mul_div(shares, nav, self.share_supply))
        if payout > self.cash:
            raise InsufficientLiquidity('Payout {} exceeds numeraire cash {}'.format(payout, self.cash))

        balance -= shares
        if balance:
            self.share_balances[account] = balance
        else:
            del self.share_balances[account]
        self.share_supply -= shares
        self._sleeves[UNALLOCATED][self.config.numeraire] = self.cash - payout
        self._commit(prices)
        self._block['withdrawals'] += payout
        self._totals['withdrawals'] += payout
        self._logger.debug('withdraw vault=%s account=%s shares=%s payout=%s', self.vault_id, account, shares, payout)
        return payout

    def request_withdrawal(self, account, shares, height):
        """Queues a redemption that is retried every block until cash allows it."""
        if not ZERO < shares <= self.share_balances.get(account, ZERO):
            raise InsufficientShares('Account {} cannot queue {} shares'.format(account, shares))
        request = RedemptionRequest(account, shares, height)
        self.redemption_queue.append(request)
        return request

    def pending_redemptions(self, prices=None):
        """Numeraire value of the queued redemptions at current NAV."""
        if not self.redemption_queue or self.share_supply == ZERO:
            return ZERO
        nav = self.nav(self._prices if prices is None else prices)
        total = sum((request.shares for request in self.redemption_queue), ZERO)
        return max(ZERO, mul_div(total, nav, self.share_supply))

    def process_redemptions(self, prices):
        """ Retries queued redemptions in request order, stopping at the first that cash cannot cover.

        :returns: List of ``(request, payout, error)``.
        """
        results = []
        while self.redemption_queue:
            request = self.redemption_queue[0]
            try:
                payout = self.withdraw(request.account, request.shares, prices)
            except InsufficientLiquidity:
                break
            except InsufficientShares as error:
                self.redemption_queue.pop(0)
                results.append((request, None, error))
                continue
            self.redemption_queue.pop(0)
            results.append((request, payout, None))
        return results

    # endregion

    # region Fees

    def accrue_management_fee(self, prices, clock):
        """ Accrues ``trunc(gross_nav * mgmt_fee_rate / blocks_per_year)`` to the fee liability.

        :returns: The fee increment.
        """
        prices = self.mark(prices)
        gross = sum(self._values.values(), ZERO)
        if not gross > ZERO:
            return ZERO
        delta = Dec18(tdiv(gross.raw * self.config.mgmt_fee_rate.raw, SCALE * clock.blocks_per_year))
        self.accrued_fees += delta
        self._block['fee_delta'] += delta
        self._totals['fees_accrued'] += delta
        return delta

    def harvest_fees(self):
        """ Pays the accrued fees from numeraire cash to the fee recipient.

        :raises InsufficientLiquidity: Cash is short of the liability.
        """
        fees = self.accrued_fees
        if fees == ZERO:
            return ZERO
        if self.cash < fees:
            raise InsufficientLiquidity('Fee liability {} exceeds numeraire cash {}'.format(fees, self.cash))
        self._sleeves[UNALLOCATED][self.config.numeraire] = self.cash - fees
        self.accrued_fees = ZERO
        recipient = self.config.fee_recipient
        self.fees_paid[recipient] = self.fees_paid.get(recipient, ZERO) + fees
        if self._prices is not None:
            self._commit(self._prices)
        self._block['harvested'] += fees
        self._totals['fees_harvested'] += fees
        return fees

    # endregion

    # region Strategies

    def register_strategy(self, strategy_id):
        StrategyId(strategy_id)
        if strategy_id in self.strategies:
            raise DuplicateStrategy('Strategy {} is already registered'.format(strategy_id))
        self.strategies[strategy_id] = StrategySlot(strategy_id)
        self._sleeves[strategy_id] = {}
        self._values[strategy_id] = ZERO
        return self.strategies[strategy_id]

    def _slot(self, strategy_id):
        try:
            return self.strategies[strategy_id]
        except KeyError:
            raise UnknownStrategy('Unknown strategy: {}'.format(strategy_id))

    def set_strategy_status(self, strategy_id, status):
        """ Moves a strategy through Proposed, Validated, Active and Retired.

        Retiring a strategy zeroes its alpha and returns its idle holdings to
        the unallocated sleeve, which leaves NAV unchanged.
        """
        slot = self._slot(strategy_id)
        if status not in Status.transitions.get(slot.status, ()):
            raise InvalidTransition('Strategy {} cannot move from {} to {}'.format(strategy_id, slot.status, status))
        slot.status = status
        if status == Status.retired:
            slot.alpha = ZERO
            sleeve = self._sleeves[strategy_id]
            unallocated = self._sleeves[UNALLOCATED]
            for asset in sorted(sleeve):
                unallocated[asset] = unallocated.get(asset, ZERO) + sleeve[asset]
            sleeve.clear()
            if self._prices is not None:
                self._commit(self._prices)
        self._logger.info('strategy %s of vault %s is now %s', strategy_id, self.vault_id, status)
        return slot

    def set_allocations(self, alphas, height=None):
        """ Sets target shares for Active strategies, keeping their sum at most one.

        :raises AllocationInvariant: A share is negative, targets a non-Active
            strategy, or the Active sum would exceed one.
        """
        for strategy_id in sorted(alphas):
            slot = self._slot(strategy_id)
            if slot.status != Status.active:
                raise AllocationInvariant('Strategy {} is {}, not Active'.format(strategy_id, slot.status))
            if alphas[strategy_id] < ZERO:
                raise AllocationInvariant('Negative alpha for {}'.format(strategy_id))
        total = ZERO
        for strategy_id, slot in self.strategies.items():
            if slot.status == Status.active:
                total += alphas.get(strategy_id, slot.alpha)
        if total > ONE:
            raise AllocationInvariant('Sum of Active alphas {} exceeds 1'.format(total))
        for strategy_id in sorted(alphas):
            self.strategies[strategy_id].alpha = alphas[strategy_id]
        self.allocation_history.append(OrderedDict([
            ('block', height),
            ('alpha', OrderedDict((k, str(s.alpha)) for k, s in self.strategies.items() if s.status == Status.active))]))
        return total

    def active_strategies(self):
        return [strategy_id for strategy_id, slot in self.strategies.items() if slot.status == Status.active]

    def snapshot(self, strategy_id, prices, height=None):
        slot = self._slot(strategy_id)
        prices = self.prices_with_numeraire(prices)
        positions = {(venue, asset): qty for (venue, owner, asset), qty in self._positions.items()
                     if owner == strategy_id and qty}
        return VaultSnapshot(
            vault_id=self.vault_id,
            strategy=strategy_id,
            block=height,
            numeraire=self.config.numeraire,
            nav=self.nav(prices),
            alpha=slot.alpha,
            holdings=self.sleeve(strategy_id),
            positions=positions,
            cash=self.cash,
            pending_redemptions=self.pending_redemptions(prices),
            venues={venue: entry.functions for venue, entry in self.config.venue_registry.items()},
            per_asset_cap=self.config.per_asset_cap)

    # endregion

    # region Intents

    def intent_notional(self, intent, prices):
        """Numeraire the intent draws from the shared cash pool (bound (d))."""
        leg = intent.input
        if leg is None or leg[0] != self.config.numeraire:
            return ZERO
        return leg[1]

    def gross_notional(self, intent, prices):
        """Value the intent adds to the venue's exposure (bound (e))."""
        leg = intent.input
        if leg is None:
            return ZERO
        return dec_mul(leg[1], self._price(prices, leg[0]))

    def venue_exposure(self, venue, prices):
        total = ZERO
        for key in sorted(self._positions):
            if key[0] == venue and self._positions[key]:
                total += dec_mul(self._positions[key], self._price(prices, key[2]))
        return total

    def check_intent(self, intent, prices):
        """ Gates an intent against the vault rules.

        Accepts iff (a) the strategy is Active, (b) the venue is whitelisted
        with the function, (c) every asset is admissible, (d) the intent's
        notional plus the strategy's deployed notional stays within
        ``alpha * NAV`` and (e) the venue's capital cap holds. The vault must
        also be able to fund the intent.

        :rtype: :class:`CheckedIntent`
        :raises IntentRejected: One of its subclasses, naming the violated bound.
        """
        prices = self.prices_with_numeraire(prices)
        intent.validate()
        slot = self.strategies.get(intent.strategy)
        if slot is None or slot.status != Status.active:
            raise StrategyNotActive('Strategy {} is not Active ({})'.format(
                intent.strategy, 'unregistered' if slot is None else slot.status), bound='status')
        entry = self.config.venue_registry.get(intent.venue)
        if entry is None:
            raise VenueNotAllowed('Venue {} is not whitelisted'.format(intent.venue), bound=intent.venue)
        if intent.function not in entry.functions:
            raise FunctionNotAllowed('Function {} is not allowed on venue {}'.format(
                intent.function, intent.venue), bound=intent.function)
        for asset in intent.assets():
            if asset not in self.config.admissible_assets:
                raise InadmissibleAsset('Asset {} is not admissible'.format(asset), bound=asset)

        nav = self.nav(prices)
        notional = self.intent_notional(intent, prices)
        limit = dec_mul(slot.alpha, nav)
        deployed = self._sleeve_value(intent.strategy, prices)
        if deployed + notional > limit:
            raise AllocationExceeded('Allocation exceeded: {} + {} > {}'.format(deployed, notional, limit),
                                     bound=str(limit))

        gross = self.gross_notional(intent, prices)
        if entry.capital_cap is not None:
            exposure = self.venue_exposure(intent.venue, prices)
            if exposure + gross > entry.capital_cap:
                raise VenueCapExceeded('Venue {} cap exceeded: {} + {} > {}'.format(
                    intent.venue, exposure, gross, entry.capital_cap), bound=str(entry.capital_cap))

        leg = intent.input
        if leg is not None:
            asset, qty = leg
            available = self.cash if asset == self.config.numeraire else \
                self._sleeves[intent.strategy].get(asset, ZERO)
            if qty > available:
                raise InsufficientBalance('Strategy {} cannot fund {} {} (available {})'.format(
                    intent.strategy, qty, asset, available), bound=asset)
        else:
            available = self._positions.get((intent.venue, intent.strategy, intent.asset), ZERO)
            if intent.qty > available:
                raise InsufficientBalance('Strategy {} holds {} {} at {}, cannot release {}'.format(
                    intent.strategy, available, intent.asset, intent.venue, intent.qty), bound=intent.asset)

        return CheckedIntent(intent, notional, gross)

    def apply_fill(self, intent, fill, prices):
        """ Books a venue fill and attributes its exact value change to the strategy.

        :returns: The attribution delta.
        """
        prices = self.mark(prices)
        owner = intent.strategy
        if fill.debit is not None:
            asset, qty = fill.debit
            sleeve = self._sleeves[UNALLOCATED if asset == self.config.numeraire else owner]
            remaining = sleeve.get(asset, ZERO) - qty
            if remaining < ZERO:
                raise InsufficientBalance('Fill debits {} {} beyond the balance'.format(qty, asset), bound=asset)
            sleeve[asset] = remaining
        if fill.credit is not None:
            asset, qty = fill.credit
            sleeve = self._sleeves[UNALLOCATED if asset == self.config.numeraire else owner]
            sleeve[asset] = sleeve.get(asset, ZERO) + qty
        if fill.position is not None:
            asset, qty = fill.position
            self._set_position(fill.venue, owner, asset, qty)
        delta = self._commit(prices)
        self._attribute(owner, delta)
        return delta

    def _set_position(self, venue, owner, asset, qty):
        key = (venue, owner, asset)
        if qty:
            self._positions[key] = qty
        else:
            self._positions.pop(key, None)

    def sync_positions(self, venue, positions):
        """ Mirrors a venue's positions for this vault, attributing yield to the owners.

        :param positions: ``{(owner, asset): qty}`` as reported by the venue.
        :returns: ``{owner: delta}``
        """
        prices = self._prices
        deltas = {}
        keys = set((owner, asset) for (v, owner, asset) in self._positions if v == venue) | set(positions)
        for owner, asset in sorted(keys):
            old = self._positions.get((venue, owner, asset), ZERO)
            new = positions.get((owner, asset), ZERO)
            if old == new:
                continue
            if prices is not None:
                price = self._price(prices, asset)
                deltas[owner] = deltas.get(owner, ZERO) + dec_mul(new, price) - dec_mul(old, price)
            self._set_position(venue, owner, asset, new)
        if prices is not None and deltas:
            self._commit(prices)
            for owner in sorted(deltas):
                self._attribute(owner, deltas[owner])
        return deltas

    # endregion

    # region Governance

    def governance_vote(self, proposal, votes, height=0):
        """ Tallies a share-weighted vote; a passed change applies at the next block.

        Passed iff ``yes / participating >= threshold`` and
        ``participating / supply >= quorum``; both comparisons are inclusive.

        :param votes: ``{account: 'yes' | 'no'}``
        :returns: :attr:`Outcome.passed` or :attr:`Outcome.rejected`
        :raises UnknownProposalField: The field is not governable.
        """
        if proposal.field not in GovernanceProposal.fields:
            raise UnknownProposalField(proposal.field)
        self._check_proposal(proposal)
        yes = no = ZERO
        for account in sorted(votes):
            choice = votes[account]
            if choice not in ('yes', 'no'):
                raise IneligibleVoter('Vote of {} must be yes or no, not {!r}'.format(account, choice))
            weight = self.share_balances.get(account, ZERO)
            if weight == ZERO:
                raise IneligibleVoter('Account {} holds no shares'.format(account))
            if choice == 'yes':
                yes += weight
            else:
                no += weight
        participating = yes + no
        passed = (
            participating > ZERO and
            yes.raw * SCALE >= self.config.governance_threshold.raw * participating.raw and
            participating.raw * SCALE >= self.config.quorum.raw * self.share_supply.raw)
        outcome = Outcome.passed if passed else Outcome.rejected
        if passed:
            self._staged.append((height + 1, proposal))
        self.governance_log.append(OrderedDict([
            ('block', height), ('proposal', proposal.to_json()), ('yes', str(yes)), ('no', str(no)),
            ('supply', str(self.share_supply)), ('outcome', outcome)]))
        self._logger.info('governance vault=%s field=%s outcome=%s', self.vault_id, proposal.field, outcome)
        return outcome

    def _check_proposal(self, proposal):
        field, value = proposal.field, proposal.value
        if field == 'venue':
            if not isinstance(value, VenueEntry):
                raise InvalidConfig(field, 'expected a venue registry entry')
            check_venue_entry(value)
        elif field == 'venue_remove':
            VenueId(value)
        elif field == 'strategy_status':
            if value.get('status') not in Status.all:
                raise InvalidConfig(field, 'unknown status {!r}'.format(value.get('status')))
            self._slot(value.get('strategy'))
        elif field == 'per_asset_cap':
            if not ZERO < value <= ONE:
                raise InvalidConfig(field, 'must be in (0, 1], not {}'.format(value))
        elif field == 'mgmt_fee_rate':
            if value < ZERO:
                raise InvalidConfig(field, 'must be non-negative, not {}'.format(value))
        elif field == 'alpha_bounds':
            check_alpha_bounds(tuple(value))
        elif field == 'alpha':
            self._slot(value.get('strategy'))
            if value.get('alpha') is None or value['alpha'] < ZERO:
                raise InvalidConfig(field, 'alpha must be non-negative')

    def apply_staged(self, height):
        """ Applies governance changes that take effect at `height`.

        :returns: List of ``(proposal, error)``; `error` is `None` on success.
        """
        due = [item for item in self._staged if item[0] <= height]
        self._staged = [item for item in self._staged if item[0] > height]
        results = []
        for _, proposal in due:
            try:
                self._apply_proposal(proposal, height)
            except ProtocolError as error:
                self._logger.warning('governance change %s of vault %s failed: %s', proposal.field, self.vault_id, error)
                results.append((proposal, error))
            else:
                results.append((proposal, None))
        return results

    def _apply_proposal(self, proposal, height):
        field, value, config = proposal.field, proposal.value, self.config
        if field == 'venue':
            config.venue_registry[value.venue] = value
        elif field == 'venue_remove':
            config.venue_registry.pop(value, None)
        elif field == 'strategy_status':
            self.set_strategy_status(value['strategy'], value['status'])
        elif field == 'per_asset_cap':
            config.per_asset_cap = value
        elif field == 'mgmt_fee_rate':
            config.mgmt_fee_rate = value
        elif field == 'alpha_bounds':
            config.alpha_bounds = tuple(value)
        elif field == 'alpha':
            self.set_allocations({value['strategy']: value['alpha']}, height)

    # endregion

    # region Accounting

    def _reset_block(self):
        self._block = {'deposits': ZERO, 'withdrawals': ZERO, 'fee_delta': ZERO, 'harvested': ZERO}
        self._block_attribution = {}

    def close_block(self, height):
        """ Appends and returns the :class:`NavRecord` of block `height`.
        """
        gross = sum(self._values.values(), ZERO)
        nav = gross - self.accrued_fees
        price = dec_div(nav, self.share_supply) if self.share_supply > ZERO else ONE
        if price > self.hwm:
            self.hwm = price
        record = NavRecord(
            height, gross, self.accrued_fees, nav, self.share_supply, price, self._block['deposits'],
            self._block['withdrawals'], self._block['fee_delta'], self._block['harvested'],
            dict(self._block_attribution))
        self.history.append(record)
        self._reset_block()
        return record

    def attribution_report(self, window=None):
        """ Summarises per-strategy PnL, fees, flows and the NAV path.

        :param window: Number of trailing blocks for windowed PnL, or `None` for the whole history.
        :returns: A JSON-ready dictionary whose ``reconciliation`` entry checks
            ``delta_nav == attribution + deposits - withdrawals - fees``.
        """
        history = self.history
        recent = history[-window:] if window else history
        windowed = {}
        for record in recent:
            for owner, delta in record.attribution.items():
                windowed[owner] = windowed.get(owner, ZERO) + delta
        owners = [UNALLOCATED] + list(self.strategies)
        strategies = OrderedDict()
        for owner in owners:
            slot = self.strategies.get(owner)
            strategies[owner] = OrderedDict([
                ('cumulative', str(self.attribution.get(owner, ZERO))),
                ('window', str(windowed.get(owner, ZERO))),
                ('status', None if slot is None else slot.status),
                ('alpha', None if slot is None else str(slot.alpha))])

        start = history[0].nav if history else ZERO
        end = history[-1].nav if history else ZERO
        attribution = sum(self.attribution.values(), ZERO)
        deposits, withdrawals = self._totals['deposits'], self._totals['withdrawals']
        fees = self._totals['fees_accrued']
        return OrderedDict([
            ('vault', self.vault_id),
            ('blocks', len(history)),
            ('window', window),
            ('strategies', strategies),
            ('fees', OrderedDict([
                ('accrued_total', str(fees)),
                ('harvested_total', str(self._totals['fees_harvested'])),
                ('outstanding', str(self.accrued_fees))])),
            ('flows', OrderedDict([('deposits', str(deposits)), ('withdrawals', str(withdrawals))])),
            ('nav_path', [[record.block, str(record.nav)] for record in history]),
            ('allocation_history', list(self.allocation_history)),
            ('reconciliation', OrderedDict([
                ('delta_nav', str(end - start)),
                ('attribution', str(attribution)),
                ('deposits', str(deposits)),
                ('withdrawals', str(withdrawals)),
                ('fees', str(fees)),
                ('residual', str(end - start - (attribution + deposits - withdrawals - fees)))]))])

    def state(self):
        """JSON-ready representation of the full vault state; the replay digest hashes it."""
        sleeves = OrderedDict()
        for owner in sorted(self._sleeves):
            sleeve = self.sleeve(owner)
            sleeves[owner] = OrderedDict((asset, str(sleeve[asset])) for asset in sorted(sleeve))
        return OrderedDict([
            ('config', self.config.to_json()),
            ('share_supply', str(self.share_supply)),
            ('share_balances', OrderedDict((k, str(self.share_balances[k])) for k in sorted(self.share_balances))),
            ('sleeves', sleeves),
            ('positions', [[venue, owner, asset, str(self._positions[(venue, owner, asset)])]
                           for venue, owner, asset in sorted(self._positions)]),
            ('strategies', OrderedDict((k, self.strategies[k].to_json()) for k in sorted(self.strategies))),
            ('accrued_fees', str(self.accrued_fees)),
            ('attribution', OrderedDict((k, str(self.attribution[k])) for k in sorted(self.attribution))),
            ('hwm', str(self.hwm)),
            ('fees_paid', OrderedDict((k, str(self.fees_paid[k])) for k in sorted(self.fees_paid))),
            ('redemption_queue', [request.to_json() for request in self.redemption_queue]),
            ('staged', [[block, proposal.to_json()] for block, proposal in self._staged])])

    # endregion


def deploy_vault(config):
    """ Deploys an empty vault from `config`.

    :raises InvalidConfig: A configuration invariant is violated.
    """
    return Vault(config)


__all__ = [
    'AllocationExceeded', 'AllocationInvariant', 'BelowMinimum', 'CheckedIntent', 'DuplicateStrategy',
    'ExecutionIntent', 'Fill', 'Function', 'FunctionNotAllowed', 'GovernanceProposal', 'InadmissibleAsset',
    'IneligibleVoter', 'InsufficientBalance', 'InsufficientLiquidity', 'InsufficientShares', 'IntentRejected',
    'InvalidConfig', 'InvalidIntent', 'InvalidTransition', 'MissingPrice', 'NavRecord', 'Outcome',
    'RedemptionRequest', 'Status', 'StrategyNotActive', 'StrategySlot', 'UNALLOCATED', 'UnknownProposalField',
    'UnknownStrategy', 'Vault', 'VaultConfig', 'VaultError', 'VaultInsolvent', 'VaultSnapshot', 'VenueCapExceeded',
    'VenueEntry', 'VenueNotAllowed', 'ZeroShares', 'check_alpha_bounds', 'deploy_vault']
