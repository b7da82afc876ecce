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

"""Simulated decentralised oracle: scripted and geometric Brownian motion price paths.

"""

from __future__ import absolute_import, division, print_function, unicode_literals

from collections import OrderedDict

from ..ledger import AssetId, Dec18, DetRng, ONE, ProtocolError, ZERO, dec_div, dec_mul, exp_fixed, sqrt_fixed


class OracleError(ProtocolError):
    pass


class HorizonExceeded(OracleError):
    pass


class InvalidFeed(OracleError, ValueError):
    pass


class PriceFeed(object):
    """ A single asset's price path over block heights ``0..horizon``.

    Subclasses implement :meth:`price`.
    """
    mode = None

    def __init__(self, asset, horizon):
        AssetId(asset)
        if isinstance(horizon, bool) or not isinstance(horizon, int) or horizon < 0:
            raise InvalidFeed('Horizon must be a non-negative integer, not {!r}'.format(horizon))
        self.asset = asset
        self.horizon = horizon

    def _check_height(self, height):
        if height < 0 or height > self.horizon:
            raise HorizonExceeded('Block {} is outside the {} feed horizon [0, {}]'.format(
                height, self.asset, self.horizon))

    def price(self, height):
        raise NotImplementedError()


class ScriptedFeed(PriceFeed):
    """ A price path given block by block.

    :param path: Prices for heights ``0..horizon``; every price is positive.
    """
    mode = 'scripted'

    def __init__(self, asset, path, horizon=None):
        path = list(path)
        PriceFeed.__init__(self, asset, len(path) - 1 if horizon is None else horizon)
        if len(path) < self.horizon + 1:
            raise InvalidFeed('Scripted path of {} covers {} blocks, the horizon needs {}'.format(
                asset, len(path), self.horizon + 1))
        for height, price in enumerate(path):
            if not price > ZERO:
                raise InvalidFeed('Price of {} at block {} must be positive, not {}'.format(asset, height, price))
        self.path = path

    def price(self, height):
        self._check_height(height)
        return self.path[height]


class GbmFeed(PriceFeed):
    """ Geometric Brownian motion evaluated in fixed point.

    ``p[t+1] = p[t] * exp((mu - sigma**2 / 2) * dt + sigma * sqrt(dt) * z)``
    with ``dt = 1 / blocks_per_year`` and ``z`` drawn from the
    ``oracle:<asset>`` stream of the run seed. Prices never fall below one raw
    unit.

    ``z`` is a sum of twelve uniforms minus six, so it never leaves
    ``[-6, 6)``: one block moves the log price by at most six ``sigma *
    sqrt(dt)`` beyond the drift, and paths show no jumps fatter than that.

    :param mu: Drift per year.
    :param sigma: Volatility per year.
    """
    mode = 'gbm'

    def __init__(self, asset, p0, mu, sigma, seed, blocks_per_year, horizon):
        PriceFeed.__init__(self, asset, horizon)
        if not p0 > ZERO:
            raise InvalidFeed('Initial price of {} must be positive, not {}'.format(asset, p0))
        if sigma < ZERO:
            raise InvalidFeed('Volatility of {} must be non-negative, not {}'.format(asset, sigma))
        self.p0 = p0
        self.mu = mu
        self.sigma = sigma
        self.seed = seed
        self.blocks_per_year = blocks_per_year
        dt = Dec18.from_ratio(1, blocks_per_year)
        self._drift = dec_mul(mu - dec_mul(sigma, sigma) / 2, dt)
        self._diffusion = dec_mul(sigma, sqrt_fixed(dt))
        self._rng = DetRng(seed, 'oracle:' + asset)
        self._path = [p0]

    def price(self, height):
        self._check_height(height)
        path = self._path
        while len(path) <= height:
            z = self._rng.standard_normal()
            growth = exp_fixed(self._drift + dec_mul(self._diffusion, z))
            path.append(max(Dec18(1), dec_mul(path[-1], growth)))
        return path[height]


class OracleFeed(object):
    """ The price oracle of a world: one feed per risky asset, quoted in the numeraire.

    """
    def __init__(self, feeds, quote):
        AssetId(quote)
        self.quote = quote
        self.feeds = OrderedDict((feed.asset, feed) for feed in sorted(feeds, key=lambda feed: feed.asset))
        if quote in self.feeds:
            raise InvalidFeed('The quote asset {} is priced at one and takes no feed'.format(quote))

    @property
    def horizon(self):
        return min((feed.horizon for feed in self.feeds.values()), default=None)

    def prices(self, height):
        """``{asset: price}`` at `height`, including the quote asset at one."""
        result = OrderedDict((asset, feed.price(height)) for asset, feed in self.feeds.items())
        result[self.quote] = ONE
        return result

    def cross(self, base, quote, height):
        """Price of `base` in units of `quote`."""
        prices = self.prices(height)
        return dec_div(prices[base], prices[quote])


def oracle_prices(feed, height):
    """ Prices at `height` from an :class:`OracleFeed` or a single :class:`PriceFeed`.

    :raises HorizonExceeded: `height` is beyond the feed horizon.
    """
    if isinstance(feed, PriceFeed):
        return OrderedDict([(feed.asset, feed.price(height))])
    return feed.prices(height)


__all__ = ['GbmFeed', 'HorizonExceeded', 'InvalidFeed', 'OracleError', 'OracleFeed', 'PriceFeed', 'ScriptedFeed',
           'oracle_prices']
