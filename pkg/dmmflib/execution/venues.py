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

"""Simulated execution venues.

:class:`SpotVenue` swaps with a fee and linear price impact,
:class:`StakingVenue` accrues a fixed APR on staked principal and
:class:`LiquidityVenue` does the same for liquidity positions behind a lock-up.
Venues hold no reference to vaults; they return :class:`~dmmflib.vault.Fill`
objects the vault books.

"""

from __future__ import absolute_import, division, print_function, unicode_literals

from collections import OrderedDict
from logging import getLogger

from ..ledger import Dec18, ProtocolError, SCALE, VenueId, ZERO, mul_div, tdiv
from ..vault import Fill, Function

BPS = 10000


class VenueError(ProtocolError):
    pass


class SlippageExceeded(VenueError):
    def __init__(self, qty_out, min_out):
        super(SlippageExceeded, self).__init__('Output {} is below min_out {}'.format(qty_out, min_out))
        self.qty_out = qty_out
        self.min_out = min_out


class UnknownPair(VenueError):
    pass


class UnsupportedFunction(VenueError):
    pass


class InsufficientStaked(VenueError):
    pass


class LockupActive(VenueError):
    pass


class NoRoute(VenueError):
    pass


def pair_key(a, b):
    return (a, b) if a <= b else (b, a)


class Venue(object):
    """ Base class of simulated venues.

    :param latency: Blocks between acceptance of an intent and its execution.
    """
    functions = ()
    kind = None

    def __init__(self, venue_id, latency=0):
        VenueId(venue_id)
        if isinstance(latency, bool) or not isinstance(latency, int) or latency < 0:
            raise ValueError('Venue latency must be a non-negative integer, not {!r}'.format(latency))
        self.venue_id = venue_id
        self.latency = latency
        self._logger = getLogger(self.__class__.__name__)

    def __repr__(self):
        return '{}({!r})'.format(self.__class__.__name__, self.venue_id)

    def _check_function(self, intent):
        if intent.function not in self.functions:
            raise UnsupportedFunction('Venue {} does not support {}'.format(self.venue_id, intent.function))

    def execute(self, intent, prices, vault_id, height):
        raise NotImplementedError()

    def accrue(self, blocks_per_year):
        pass

    def positions_for(self, vault_id):
        return {}

    def state(self):
        return OrderedDict([('venue', self.venue_id), ('kind', self.kind), ('latency', self.latency)])


class SpotVenue(Venue):
    """ A spot exchange with a proportional fee and linear price impact per pair.

    ``qty_out = qty_in * P_in / P_out * (1 - fee_bps / 10**4) * (1 - slip_coeff * qty_in / depth)``
    evaluated with a single truncation and floored at zero.

    **Example**::

        venue = SpotVenue('dex', 30, {('A', 'B'): Dec18.of(1000)}, ZERO)
        venue.quote('A', 'B', Dec18.of(10), {'A': Dec18.of(2), 'B': ONE})  # 19.94

    :param depth: ``{(asset, asset): Dec18}``; pairs are unordered.
    """
    functions = (Function.trade,)
    kind = 'spot'

    def __init__(self, venue_id, fee_bps, depth, slip_coeff=ZERO, latency=0):
        Venue.__init__(self, venue_id, latency)
        if isinstance(fee_bps, bool) or not isinstance(fee_bps, int) or not 0 <= fee_bps < BPS:
            raise ValueError('fee_bps must be an integer in [0, 10000), not {!r}'.format(fee_bps))
        if slip_coeff < ZERO:
            raise ValueError('slip_coeff must be non-negative, not {}'.format(slip_coeff))
        self.fee_bps = fee_bps
        self.slip_coeff = slip_coeff
        self.depth = OrderedDict()
        for (a, b), value in sorted(depth.items()):
            if not value > ZERO:
                raise ValueError('Depth of {}/{} must be positive, not {}'.format(a, b, value))
            self.depth[pair_key(a, b)] = value

    def has_pair(self, asset_in, asset_out):
        return pair_key(asset_in, asset_out) in self.depth

    def quote(self, asset_in, asset_out, qty_in, prices):
        """ Simulated output of swapping `qty_in` of `asset_in` for `asset_out`.

        :raises UnknownPair: The venue has no depth for the pair.
        """
        try:
            depth = self.depth[pair_key(asset_in, asset_out)]
        except KeyError:
            raise UnknownPair('Venue {} does not quote {}/{}'.format(self.venue_id, asset_in, asset_out))
        impact = depth.raw * SCALE - self.slip_coeff.raw * qty_in.raw
        if impact <= 0:
            return ZERO
        numerator = qty_in.raw * prices[asset_in].raw * (BPS - self.fee_bps) * impact
        denominator = prices[asset_out].raw * BPS * depth.raw * SCALE
        return Dec18(max(0, tdiv(numerator, denominator)))

    def execute(self, intent, prices, vault_id=None, height=None):
        """ Executes a trade intent.

        :raises SlippageExceeded: The output is below ``min_out``; nothing changes.
        """
        self._check_function(intent)
        qty_out = self.quote(intent.asset_in, intent.asset_out, intent.qty_in, prices)
        if qty_out < intent.min_out:
            raise SlippageExceeded(qty_out, intent.min_out)
        return Fill(intent, self.venue_id, debit=(intent.asset_in, intent.qty_in), credit=(intent.asset_out, qty_out))

    def liquidity(self):
        return OrderedDict(('{}/{}'.format(a, b), depth) for (a, b), depth in self.depth.items())

    def state(self):
        state = Venue.state(self)
        state['fee_bps'] = self.fee_bps
        state['slip_coeff'] = str(self.slip_coeff)
        state['depth'] = OrderedDict((pair, str(depth)) for pair, depth in self.liquidity().items())
        return state


class StakedPosition(object):
    __slots__ = ('principal', 'accrued', 'since')

    def __init__(self, principal=ZERO, accrued=ZERO, since=None):
        self.principal = principal
        self.accrued = accrued
        self.since = since

    @property
    def total(self):
        return self.principal + self.accrued


class StakingVenue(Venue):
    """ A staking protocol paying a fixed APR on principal.

    Every block ``accrued += trunc(principal * apr / blocks_per_year)``.
    Unstaking returns principal and accrued yield pro rata and never more than
    their sum.

    """
    functions = (Function.stake, Function.unstake)
    kind = 'staking'

    def __init__(self, venue_id, apr, latency=0):
        Venue.__init__(self, venue_id, latency)
        if apr < ZERO:
            raise ValueError('APR must be non-negative, not {}'.format(apr))
        self.apr = apr
        self.positions = {}

    def position(self, vault_id, owner, asset):
        return self.positions.get((vault_id, owner, asset))

    def balance(self, vault_id, owner, asset):
        position = self.position(vault_id, owner, asset)
        return ZERO if position is None else position.total

    def deploy(self, vault_id, owner, asset, qty, height=None):
        key = (vault_id, owner, asset)
        position = self.positions.get(key)
        if position is None:
            position = self.positions[key] = StakedPosition()
        position.principal += qty
        position.since = height
        return position.total

    def release(self, vault_id, owner, asset, qty, height=None):
        """ Withdraws `qty` of principal and accrued yield pro rata.

        :returns: The position total left.
        :raises InsufficientStaked: `qty` exceeds principal plus accrued yield.
        """
        key = (vault_id, owner, asset)
        position = self.positions.get(key)
        total = ZERO if position is None else position.total
        if not ZERO < qty <= total:
            raise InsufficientStaked('Cannot release {} {} from {} (staked {})'.format(qty, asset, self.venue_id, total))
        principal = mul_div(position.principal, qty, total)
        position.principal -= principal
        position.accrued -= qty - principal
        if position.total == ZERO:
            del self.positions[key]
            return ZERO
        return position.total

    def accrue(self, blocks_per_year):
        """Accrues one block of yield on every position."""
        if self.apr == ZERO:
            return
        for key in sorted(self.positions):
            position = self.positions[key]
            position.accrued += Dec18(tdiv(position.principal.raw * self.apr.raw, SCALE * blocks_per_year))

    def positions_for(self, vault_id):
        """``{(owner, asset): principal + accrued}`` of a vault."""
        return {(owner, asset): position.total for (vault, owner, asset), position in self.positions.items()
                if vault == vault_id}

    def execute(self, intent, prices, vault_id, height=None):
        self._check_function(intent)
        if intent.function in Function.deploying:
            total = self.deploy(vault_id, intent.strategy, intent.asset, intent.qty, height)
            return Fill(intent, self.venue_id, debit=(intent.asset, intent.qty), position=(intent.asset, total))
        total = self.release(vault_id, intent.strategy, intent.asset, intent.qty, height)
        return Fill(intent, self.venue_id, credit=(intent.asset, intent.qty), position=(intent.asset, total))

    def state(self):
        state = Venue.state(self)
        state['apr'] = str(self.apr)
        state['positions'] = [
            [vault, owner, asset, str(self.positions[(vault, owner, asset)].principal),
             str(self.positions[(vault, owner, asset)].accrued)]
            for vault, owner, asset in sorted(self.positions)]
        return state


class LiquidityVenue(StakingVenue):
    """ A liquidity pool paying a fixed APR whose deposits are locked for `lockup` blocks.

    Adding liquidity restarts the lock-up of the position.
    """
    functions = (Function.add_liquidity, Function.remove_liquidity)
    kind = 'liquidity'

    def __init__(self, venue_id, apr, lockup=0, latency=0):
        StakingVenue.__init__(self, venue_id, apr, latency)
        if isinstance(lockup, bool) or not isinstance(lockup, int) or lockup < 0:
            raise ValueError('Lock-up must be a non-negative integer, not {!r}'.format(lockup))
        self.lockup = lockup

    def release(self, vault_id, owner, asset, qty, height=None):
        position = self.position(vault_id, owner, asset)
        if position is not None and position.since is not None and height is not None and \
                height < position.since + self.lockup:
            raise LockupActive('Liquidity of {} at {} is locked until block {}'.format(
                owner, self.venue_id, position.since + self.lockup))
        return StakingVenue.release(self, vault_id, owner, asset, qty, height)

    def state(self):
        state = StakingVenue.state(self)
        state['lockup'] = self.lockup
        return state


def select_route(intent, venues, registry, prices):
    """ Picks the whitelisted spot venue with the best simulated output for a trade intent.

    Ties go to the lowest venue id.

    :param registry: The vault's venue registry ``{venue: VenueEntry}``.
    :raises NoRoute: No whitelisted venue quotes the pair.
    """
    best = None
    for venue_id in sorted(registry):
        venue = venues.get(venue_id)
        if not isinstance(venue, SpotVenue) or Function.trade not in registry[venue_id].functions:
            continue
        if not venue.has_pair(intent.asset_in, intent.asset_out):
            continue
        qty_out = venue.quote(intent.asset_in, intent.asset_out, intent.qty_in, prices)
        if best is None or qty_out > best[1]:
            best = (venue_id, qty_out)
    if best is None:
        raise NoRoute('No whitelisted venue trades {}/{}'.format(intent.asset_in, intent.asset_out))
    return best[0]


def execute_intent(venues, intent, prices, vault_id, height=None):
    """ Executes a routed intent at its venue.

    :raises VenueError: The venue is unknown or refuses the intent.
    """
    try:
        venue = venues[intent.venue]
    except KeyError:
        raise VenueError('Unknown venue: {}'.format(intent.venue))
    return venue.execute(intent, prices, vault_id, height)


def execute_trade(venue, intent, prices):
    return venue.execute(intent, prices)


__all__ = [
    'InsufficientStaked', 'LiquidityVenue', 'LockupActive', 'NoRoute', 'SlippageExceeded', 'SpotVenue',
    'StakedPosition', 'StakingVenue', 'UnknownPair', 'UnsupportedFunction', 'Venue', 'VenueError', 'execute_intent',
    'execute_trade', 'pair_key', 'select_route']
