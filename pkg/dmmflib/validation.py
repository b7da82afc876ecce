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

"""Validation of candidate strategies and signal providers, and the performance-driven allocator.

"""

from __future__ import absolute_import, division, print_function, unicode_literals

from collections import deque, OrderedDict
from logging import getLogger

from .ledger import AccountId, Dec18, ONE, ProtocolError, SCALE, ZERO, dec_div, dec_mul, exp_fixed, mul_div, \
    sharpe_ratio
from .vault import ExecutionIntent, Function, Status, UNALLOCATED

DEFAULT_PERF_WINDOW = 100
DEFAULT_CADENCE = 50
DEFAULT_EPSILON = Dec18(10 ** 12)


class ValidationError(ProtocolError):
    pass


class AlreadyPending(ValidationError):
    pass


class NotProposed(ValidationError):
    pass


class UnknownCandidate(ValidationError):
    pass


class WindowClosed(ValidationError):
    pass


class WindowStillOpen(ValidationError):
    pass


class DuplicateBallot(ValidationError):
    pass


class InsufficientStake(ValidationError):
    pass


class AllocationError(ProtocolError):
    pass


class NoActiveStrategies(AllocationError):
    pass


class InfeasibleBounds(AllocationError, ValueError):
    pass


class Direction(object):
    accept = 'Accept'
    reject = 'Reject'


class Decision(object):
    accepted = 'Accepted'
    rejected = 'Rejected'


# region Validation

def intent_score(metrics, intent_spec):
    """ Scores candidate metrics against a vault's intention vector: ``sum(weight * metric)``.

    Metrics the candidate did not report contribute nothing.
    """
    total = ZERO
    for metric, weight in intent_spec:
        value = metrics.get(metric)
        if value is not None:
            total += dec_mul(weight, value)
    return total


class Candidate(object):
    """ A strategy or signal provider put to a validation vote.

    """
    def __init__(self, subject, kind, submitted_at, closes_at, metrics=None, score=ZERO):
        self.subject = subject
        self.kind = kind
        self.submitted_at = submitted_at
        self.closes_at = closes_at
        self.metrics = OrderedDict((k, metrics[k]) for k in sorted(metrics or {}))
        self.score = score
        self.ballots = OrderedDict()
        self.accept_stake = ZERO
        self.reject_stake = ZERO
        self.decision = None

    def is_open(self, height):
        return height < self.closes_at

    def to_json(self):
        return OrderedDict([
            ('subject', self.subject), ('kind', self.kind), ('submitted_at', self.submitted_at),
            ('closes_at', self.closes_at), ('metrics', OrderedDict((k, str(v)) for k, v in self.metrics.items())),
            ('score', str(self.score)), ('accept_stake', str(self.accept_stake)),
            ('reject_stake', str(self.reject_stake)), ('decision', self.decision),
            ('ballots', [ballot.to_json() for ballot in self.ballots.values()])])


class StakeBallot(object):
    def __init__(self, validator, stake, direction):
        self.validator = validator
        self.stake = stake
        self.direction = direction

    def to_json(self):
        return OrderedDict([('validator', self.validator), ('stake', str(self.stake)), ('direction', self.direction)])


def finalize_validation(accept_stake, reject_stake, theta, min_stake):
    """ Decides a vote: accepted iff ``accept / (accept + reject) >= theta`` and ``accept + reject >= min_stake``.

    Both comparisons are inclusive and exact.
    """
    total = accept_stake + reject_stake
    if not total > ZERO or total < min_stake:
        return Decision.rejected
    if accept_stake.raw * SCALE >= theta.raw * total.raw:
        return Decision.accepted
    return Decision.rejected


class ValidationMechanism(object):
    """ Maps candidates to a binary accept/reject decision.

    Implementations override :meth:`submit_candidate`, :meth:`cast_ballot` and
    :meth:`finalize`.

    """
    def submit_candidate(self, subject, kind, status, height, metrics=None, intent_spec=()):
        raise NotImplementedError()

    def cast_ballot(self, subject, ballot, height):
        raise NotImplementedError()

    def finalize(self, subject, height):
        raise NotImplementedError()

    def state(self):
        return OrderedDict()


class StakeVoteMechanism(ValidationMechanism):
    """ Stake-weighted accept/reject voting over a fixed window of blocks.

    Validators bond stake with :meth:`bond`; a ballot locks the stake it
    carries until its candidate is finalised.

    :param voting_window: Blocks a candidate stays open for ballots.
    :param theta: Accept-stake fraction required, inclusive.
    :param min_stake: Smallest total stake for a valid vote.
    """
    def __init__(self, voting_window=10, theta=Dec18.parse('0.5'), min_stake=ZERO):
        if isinstance(voting_window, bool) or not isinstance(voting_window, int) or voting_window < 1:
            raise ValueError('voting_window must be a positive integer, not {!r}'.format(voting_window))
        if not ZERO <= theta <= ONE:
            raise ValueError('theta must be in [0, 1], not {}'.format(theta))
        self.voting_window = voting_window
        self.theta = theta
        self.min_stake = min_stake
        self.bonds = {}
        self.locked = {}
        self.pending = OrderedDict()
        self.finalized = []
        self._logger = getLogger(self.__class__.__name__)

    def bond(self, validator, amount):
        AccountId(validator)
        if not amount > ZERO:
            raise InsufficientStake('Bond must be positive, not {}'.format(amount))
        self.bonds[validator] = self.bonds.get(validator, ZERO) + amount
        return self.bonds[validator]

    def free_stake(self, validator):
        return self.bonds.get(validator, ZERO) - self.locked.get(validator, ZERO)

    def _candidate(self, subject):
        try:
            return self.pending[subject]
        except KeyError:
            raise UnknownCandidate('No pending candidate {}'.format(subject))

    def submit_candidate(self, subject, kind, status, height, metrics=None, intent_spec=()):
        """ Opens a candidate for ballots until ``height + voting_window``.

        :param status: Current registry status of `subject`.
        :raises AlreadyPending: `subject` already has an open candidate.
        :raises NotProposed: `subject` is not in Proposed status.
        """
        if subject in self.pending:
            raise AlreadyPending('{} is already pending validation'.format(subject))
        if status != Status.proposed:
            raise NotProposed('{} is {}, not Proposed'.format(subject, status))
        metrics = metrics or {}
        candidate = Candidate(subject, kind, height, height + self.voting_window, metrics,
                              intent_score(metrics, intent_spec))
        self.pending[subject] = candidate
        return candidate

    def cast_ballot(self, subject, ballot, height):
        """ Records a ballot and locks its stake.

        :returns: ``(accept_stake, reject_stake)``
        :raises WindowClosed: The voting window has closed.
        :raises DuplicateBallot: The validator already voted on `subject`.
        :raises InsufficientStake: The ballot's stake is not positive or exceeds the validator's free stake.
        """
        candidate = self._candidate(subject)
        if not candidate.is_open(height):
            raise WindowClosed('Voting on {} closed at block {}'.format(subject, candidate.closes_at))
        if ballot.validator in candidate.ballots:
            raise DuplicateBallot('{} already voted on {}'.format(ballot.validator, subject))
        if ballot.direction not in (Direction.accept, Direction.reject):
            raise ValueError('Unknown ballot direction: {!r}'.format(ballot.direction))
        if not ZERO < ballot.stake <= self.free_stake(ballot.validator):
            raise InsufficientStake('{} cannot lock {} (free {})'.format(
                ballot.validator, ballot.stake, self.free_stake(ballot.validator)))
        self.locked[ballot.validator] = self.locked.get(ballot.validator, ZERO) + ballot.stake
        candidate.ballots[ballot.validator] = ballot
        if ballot.direction == Direction.accept:
            candidate.accept_stake += ballot.stake
        else:
            candidate.reject_stake += ballot.stake
        return candidate.accept_stake, candidate.reject_stake

    def finalize(self, subject, height):
        """ Decides a candidate whose window has closed and unlocks its stakes.

        :raises WindowStillOpen: Ballots are still being accepted.
        """
        candidate = self._candidate(subject)
        if candidate.is_open(height):
            raise WindowStillOpen('Voting on {} is open until block {}'.format(subject, candidate.closes_at))
        candidate.decision = finalize_validation(
            candidate.accept_stake, candidate.reject_stake, self.theta, self.min_stake)
        for validator, ballot in candidate.ballots.items():
            self.locked[validator] -= ballot.stake
            if self.locked[validator] == ZERO:
                del self.locked[validator]
        del self.pending[subject]
        self.finalized.append(candidate)
        self._logger.info('candidate %s %s (accept %s, reject %s)', subject, candidate.decision,
                          candidate.accept_stake, candidate.reject_stake)
        return candidate

    def state(self):
        return OrderedDict([
            ('bonds', OrderedDict((k, str(self.bonds[k])) for k in sorted(self.bonds))),
            ('locked', OrderedDict((k, str(self.locked[k])) for k in sorted(self.locked))),
            ('pending', [c.to_json() for c in self.pending.values()]),
            ('finalized', [c.to_json() for c in self.finalized])])

# endregion

# region Allocation


class PerfWindow(object):
    """ Rolling per-block attribution returns of a strategy and their Sharpe ratio.

    """
    def __init__(self, strategy, window=DEFAULT_PERF_WINDOW, epsilon=DEFAULT_EPSILON):
        self.strategy = strategy
        self.returns = deque(maxlen=window)
        self.epsilon = epsilon
        self.sharpe = ZERO

    def append(self, value):
        self.returns.append(value)
        self.sharpe = rolling_sharpe(self, self.epsilon)
        return self.sharpe


def rolling_sharpe(window, epsilon=DEFAULT_EPSILON):
    """``mean / max(std, epsilon)`` over the window's returns; zero when it is empty."""
    return sharpe_ratio(list(window.returns), epsilon)


def _check_bounds(n, bounds):
    lower, upper = bounds
    if lower * n > ONE or upper * n < ONE:
        raise InfeasibleBounds('Bounds [{}, {}] are infeasible for {} strategies'.format(lower, upper, n))
    return lower, upper


def rebalance_allocations(perf, lambda_a=ONE, bounds=(ZERO, ONE)):
    """ Bounded softmax of rolling Sharpe ratios.

    Scores are ``exp(lambda_a * (sharpe - max sharpe))`` normalised to shares,
    then scaled by a common factor and clipped to ``[alpha_min, alpha_max]``.
    The factor is the largest for which the clipped shares sum to at most
    one, so the result sums to one within one raw unit per strategy. Higher
    Sharpe never receives a smaller share, and adding a constant to every
    Sharpe leaves the result unchanged.

    :param perf: ``{strategy: sharpe}``
    :returns: ``OrderedDict`` of ``strategy -> alpha`` in strategy order.
    :raises NoActiveStrategies: `perf` is empty.
    :raises InfeasibleBounds: ``n * alpha_min > 1`` or ``n * alpha_max < 1``.
    """
    if len(perf) == 0:
        raise NoActiveStrategies('No Active strategies to allocate to')
    strategies = sorted(perf)
    lower, upper = _check_bounds(len(strategies), bounds)
    best = max(perf.values())
    scores = [exp_fixed(dec_mul(lambda_a, perf[s] - best)) for s in strategies]
    total = sum(scores, ZERO)
    shares = [dec_div(score, total) for score in scores]

    def clipped(scale):
        return [max(lower, min(upper, dec_mul(share, scale))) for share in shares]

    def mass(scale):
        return sum(clipped(scale), ZERO)

    low, high = ZERO, ONE
    while mass(high) < ONE and any(dec_mul(share, high) < upper for share in shares):
        low, high = high, high * 2
    if mass(high) <= ONE:
        low = high
    else:
        low, high = low.raw, high.raw
        while high - low > 1:
            middle = (low + high) // 2
            if mass(Dec18(middle)) <= ONE:
                low = middle
            else:
                high = middle
        low = Dec18(low)
    return OrderedDict(zip(strategies, clipped(low)))


class Allocator(object):
    """ Re-weights the Active strategies of a vault by rolling risk-adjusted performance.

    :param lambda_a: Softmax temperature.
    :param cadence: Blocks between rebalances.
    :param window: Length of each strategy's :class:`PerfWindow`.
    :param max_turnover: Largest unwind notional per rebalance as a fraction of NAV.
    """
    def __init__(self, lambda_a=ONE, cadence=DEFAULT_CADENCE, window=DEFAULT_PERF_WINDOW, epsilon=DEFAULT_EPSILON,
                 max_turnover=ONE, max_slippage=Dec18.parse('0.01')):
        self.lambda_a = lambda_a
        self.cadence = cadence
        self.window = window
        self.epsilon = epsilon
        self.max_turnover = max_turnover
        self.max_slippage = max_slippage
        self.windows = OrderedDict()
        self._logger = getLogger(self.__class__.__name__)

    def record(self, strategy, value):
        window = self.windows.get(strategy)
        if window is None:
            window = self.windows[strategy] = PerfWindow(strategy, self.window, self.epsilon)
        return window.append(value)

    def sharpe(self, strategy):
        window = self.windows.get(strategy)
        return ZERO if window is None else window.sharpe

    def rebalance(self, vault, prices, height):
        """ Sets new allocations on `vault` and returns the unwind intents they imply.

        :returns: ``(alphas, intents)``
        """
        active = vault.active_strategies()
        alphas = rebalance_allocations(
            {strategy: self.sharpe(strategy) for strategy in active}, self.lambda_a, vault.config.alpha_bounds)
        vault.set_allocations(alphas, height)
        return alphas, self.unwind_intents(vault, prices, alphas)

    def unwind_intents(self, vault, prices, alphas):
        """ Sell and release intents that bring over-allocated strategies back toward ``alpha * NAV``.

        Each over-allocated strategy sells its holdings and releases its venue
        positions pro rata; the total unwound notional is bounded by
        ``max_turnover * NAV``.
        """
        prices = vault.prices_with_numeraire(prices)
        nav = vault.nav(prices)
        if not nav > ZERO:
            return []
        excess = OrderedDict()
        for strategy in sorted(alphas):
            deployed = vault.strategies[strategy].deployed_notional
            over = deployed - dec_mul(alphas[strategy], nav)
            if over > ZERO and deployed > ZERO:
                excess[strategy] = (over, deployed)
        total = sum((over for over, _ in excess.values()), ZERO)
        limit = dec_mul(self.max_turnover, nav)
        intents = []
        keep = ONE - self.max_slippage
        numeraire = vault.numeraire
        for strategy, (over, deployed) in excess.items():
            if total > limit:
                over = mul_div(over, limit, total)
            for asset, qty in sorted(vault.sleeve(strategy).items()):
                sell = mul_div(qty, over, deployed)
                if sell > ZERO:
                    intents.append(ExecutionIntent(
                        strategy, None, Function.trade, asset_in=asset, asset_out=numeraire, qty_in=sell,
                        min_out=dec_mul(dec_mul(sell, prices[asset]), keep)))
            for (venue, owner, asset), qty in sorted(vault.positions.items()):
                if owner != strategy or owner == UNALLOCATED:
                    continue
                functions = vault.config.venue_registry[venue].functions \
                    if venue in vault.config.venue_registry else frozenset()
                function = Function.unstake if Function.unstake in functions else Function.remove_liquidity
                release = mul_div(qty, over, deployed)
                if release > ZERO:
                    intents.append(ExecutionIntent(strategy, venue, function, asset=asset, qty=release))
        return intents

    def state(self):
        return OrderedDict(
            (strategy, OrderedDict([('returns', [str(r) for r in window.returns]), ('sharpe', str(window.sharpe))]))
            for strategy, window in sorted(self.windows.items()))

# endregion


__all__ = [
    'AllocationError', 'Allocator', 'AlreadyPending', 'Candidate', 'Decision', 'Direction', 'DuplicateBallot',
    'InfeasibleBounds', 'InsufficientStake', 'NoActiveStrategies', 'NotProposed', 'PerfWindow', 'StakeBallot',
    'StakeVoteMechanism', 'UnknownCandidate', 'ValidationError', 'ValidationMechanism', 'WindowClosed',
    'WindowStillOpen', 'finalize_validation', 'intent_score', 'rebalance_allocations', 'rolling_sharpe']
