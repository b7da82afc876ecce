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

"""Target-weight portfolio arithmetic: signal aggregation, the cap projection and
the translation of target weights into trade intents.

"""

from __future__ import absolute_import, division, print_function, unicode_literals

from collections import OrderedDict

from ..ledger import Dec18, ONE, ProtocolError, SCALE, ZERO, dec_div, dec_mul, mul_div, tdiv
from ..vault import ExecutionIntent, Function


class DegenerateWeights(ProtocolError):
    """Raised when no provider carries aggregation weight; the caller holds the numeraire."""
    pass


def aggregation_coefficient(subscribed_capital, performance, multiplier):
    """``s * P * g`` with a single truncation."""
    return Dec18(tdiv(subscribed_capital.raw * performance.raw * multiplier.raw, SCALE * SCALE))


def aggregate_signals(providers):
    """ Combines provider weight vectors into one.

    ``W = (1 / Z) * sum(s_j * P_j * g_j * w_j)`` where ``Z = sum(s_j * P_j * g_j)``.
    Each component is truncated once.

    **Example**::

        W = aggregate_signals([([ONE, ZERO], ONE, ONE, ONE), ([ZERO, ONE], ONE, ONE, ONE)])
        assert W == [Dec18.parse('0.5'), Dec18.parse('0.5')]

    :param providers: ``[(weights, s, P, g), ...]`` where every `weights` is a list over
        the same ordered assets.
    :rtype: ``list`` of :class:`~dmmflib.ledger.Dec18`
    :raises DegenerateWeights: ``Z`` is zero.
    """
    if len(providers) == 0:
        raise DegenerateWeights('No signal providers')
    size = len(providers[0][0])
    coefficients = []
    for weights, s, performance, g in providers:
        if len(weights) != size:
            raise ValueError('Weight vectors differ in length: {} and {}'.format(size, len(weights)))
        coefficients.append(aggregation_coefficient(s, performance, g))
    total = sum((c.raw for c in coefficients), 0)
    if total == 0:
        raise DegenerateWeights('Normalising factor is zero')
    result = []
    for i in range(size):
        numerator = sum(c.raw * provider[0][i].raw for c, provider in zip(coefficients, providers))
        result.append(Dec18(tdiv(numerator, total)))
    return result


def _values(weights):
    if isinstance(weights, dict):
        return list(weights.keys()), list(weights.values())
    return None, list(weights)


def _rebuild(keys, values, like):
    if keys is None:
        return values
    return type(like)(zip(keys, values)) if isinstance(like, OrderedDict) else dict(zip(keys, values))


def enforce_caps(weights, cap):
    """ Projects a weight vector onto ``|W_i| <= cap`` and ``sum(|W_i|) <= 1``.

    Components are clipped to ``[-cap, cap]`` first; if the absolute sum still
    exceeds one the whole vector is divided by it. The projection is idempotent.

    :param weights: ``list`` or ``{asset: Dec18}``
    :param cap: Per-asset cap in ``(0, 1]``.
    """
    if not ZERO < cap <= ONE:
        raise ValueError('Per-asset cap must be in (0, 1], not {}'.format(cap))
    keys, values = _values(weights)
    clipped = [max(-cap, min(cap, w)) for w in values]
    total = sum((abs(w) for w in clipped), ZERO)
    if total > ONE:
        clipped = [dec_div(w, total) for w in clipped]
    return _rebuild(keys, clipped, weights)


def categorical_to_weights(decisions, current, universe):
    """ Maps buy/hold/sell decisions to target weights.

    Sell (-1) maps to zero and hold (0) keeps the current weight; buy (+1)
    assets share the mass not held by hold assets equally. Assets without a
    decision are held.

    :param decisions: ``{asset: -1 | 0 | 1}``
    :param current: ``{asset: Dec18}`` current weights.
    """
    held = ZERO
    buys = []
    result = OrderedDict()
    for asset in universe:
        decision = decisions.get(asset, 0)
        if decision == 1:
            buys.append(asset)
            result[asset] = ZERO
        elif decision == -1:
            result[asset] = ZERO
        else:
            result[asset] = max(ZERO, current.get(asset, ZERO))
            held += result[asset]
    if buys:
        share = max(ZERO, ONE - held) / len(buys)
        for asset in buys:
            result[asset] = share
    return result


def current_weights(exposure, prices, capital):
    """``{asset: value / capital}`` for the strategy's exposure."""
    if not capital > ZERO:
        return {asset: ZERO for asset in exposure}
    return {asset: dec_div(dec_mul(qty, prices[asset]), capital) for asset, qty in exposure.items()}


def weights_to_intents(strategy, holdings, target, capital, prices, numeraire, min_trade=ZERO, max_turnover=None,
                       max_slippage=ZERO, venue=None, idle=None, cash=None):
    """ Translates target weights into trade intents against the numeraire.

    The trade notional of asset *i* is ``W_i * capital - value_i``. Trades
    smaller than `min_trade` are skipped, the remaining notionals are scaled
    pro rata so their total stays within `max_turnover`, and sells are
    emitted before buys. Buys are bounded so that the strategy's allocation
    bound still holds after worst-case slippage on every trade, and by the
    numeraire the vault can spend.

    :param holdings: ``{asset: qty}`` the strategy's exposure, idle or deployed.
    :param target: ``{asset: Dec18}`` target weights on `capital`; missing assets target zero.
    :param capital: The strategy's capital ``alpha * NAV``.
    :param min_trade: Absolute notional threshold.
    :param max_turnover: Absolute turnover limit or `None`.
    :param idle: ``{asset: qty}`` the strategy can sell; defaults to `holdings`.
    :param cash: Numeraire available to buys or `None` for no limit.
    :rtype: ``list`` of :class:`~dmmflib.vault.ExecutionIntent`
    """
    idle = holdings if idle is None else idle
    assets = sorted((set(holdings) | set(target)) - set([numeraire]))
    values = {asset: dec_mul(holdings.get(asset, ZERO), prices[asset]) for asset in assets}
    deployed = sum(values.values(), ZERO)

    notionals = OrderedDict()
    for asset in assets:
        notional = dec_mul(target.get(asset, ZERO), capital) - values[asset]
        if notional == ZERO or abs(notional) < min_trade:
            continue
        notionals[asset] = notional

    turnover = sum((abs(n) for n in notionals.values()), ZERO)
    if max_turnover is not None and turnover > max_turnover:
        notionals = OrderedDict((asset, mul_div(n, max_turnover, turnover)) for asset, n in notionals.items())

    sells, buys = [], []
    keep = ONE - max_slippage
    sold = ZERO
    for asset, notional in notionals.items():
        if notional >= ZERO:
            continue
        available = idle.get(asset, ZERO)
        if target.get(asset, ZERO) == ZERO and -notional >= values[asset] - min_trade:
            qty = available
        else:
            qty = min(available, dec_div(-notional, prices[asset]))
        if not qty > ZERO:
            continue
        value = dec_mul(qty, prices[asset])
        sold += value
        sells.append(ExecutionIntent(
            strategy, venue, Function.trade, asset_in=asset, asset_out=numeraire, qty_in=qty,
            min_out=dec_mul(value, keep)))

    wanted = [(asset, notional) for asset, notional in notionals.items() if notional > ZERO]
    demand = sum((notional for _, notional in wanted), ZERO)
    budget = capital - (deployed - sold) - dec_mul(max_slippage, capital + sold)
    if cash is not None:
        budget = min(budget, cash + dec_mul(sold, keep))
    if demand > budget:
        wanted = [(asset, mul_div(notional, max(budget, ZERO), demand)) for asset, notional in wanted]
    for asset, notional in wanted:
        if not notional > ZERO or notional < min_trade:
            continue
        buys.append(ExecutionIntent(
            strategy, venue, Function.trade, asset_in=numeraire, asset_out=asset, qty_in=notional,
            min_out=dec_div(dec_mul(notional, keep), prices[asset])))

    return sells + buys


__all__ = ['DegenerateWeights', 'aggregate_signals', 'aggregation_coefficient', 'categorical_to_weights',
           'current_weights', 'enforce_caps', 'weights_to_intents']
