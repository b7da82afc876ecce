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

"""Fixed-point arithmetic, identifiers, the block clock and deterministic randomness.

Every numeric quantity in protocol state is a :class:`Dec18`: a signed integer
``raw`` interpreted as ``raw / 10**18``. Arithmetic is exact integer arithmetic
on raw values and division truncates toward zero.

"""

from __future__ import absolute_import, division, print_function, unicode_literals

from hashlib import sha256
from math import isqrt
import re

import numpy

SCALE = 10 ** 18
RAW_MAX = 2 ** 127 - 1

EXP_ARGUMENT_LIMIT = 20
_GUARD = 10 ** 36


class ProtocolError(Exception):
    """Base class for every error raised by the engine."""
    pass


class Overflow(ProtocolError, ArithmeticError):
    pass


class DivisionByZero(ProtocolError, ZeroDivisionError):
    pass


class InvalidDecimal(ProtocolError, ValueError):
    pass


class InvalidIdentifier(ProtocolError, ValueError):
    pass


def tdiv(numerator, denominator):
    """Integer division truncating toward zero.

    :param numerator: Dividend.
    :type numerator: ``int``
    :param denominator: Divisor; must not be zero.
    :type denominator: ``int``
    :rtype: ``int``
    """
    if denominator == 0:
        raise DivisionByZero('Division by zero')
    quotient = abs(numerator) // abs(denominator)
    return quotient if (numerator >= 0) == (denominator > 0) else -quotient


def _checked(raw):
    if raw > RAW_MAX or raw < -RAW_MAX:
        raise Overflow('Dec18 overflow: raw value {} exceeds ±(2**127-1)'.format(raw))
    return raw


class Dec18(object):
    """ Signed fixed-point number with 18 fractional decimal digits.

    Instances are immutable. Operators accept :class:`Dec18` and ``int``
    operands; floats are refused so that no binary rounding ever enters
    protocol state.

    **Example**::

        from dmmflib.ledger import Dec18
        price = Dec18.parse('1.5')
        assert price * 2 == Dec18.of(3)
        assert str(Dec18.of(1) / 3) == '0.333333333333333333'

    """
    __slots__ = ('_raw',)

    pattern = re.compile(r'^([+-])?(\d+)(?:\.(\d{1,18}))?$')

    def __init__(self, raw=0):
        if isinstance(raw, bool) or not isinstance(raw, int):
            raise InvalidDecimal('Dec18 raw value must be an integer, not {}'.format(type(raw).__name__))
        self._raw = _checked(raw)

    @property
    def raw(self):
        return self._raw

    # region Construction

    @classmethod
    def parse(cls, text):
        """ Parses a decimal string with at most 18 fractional digits.

        :param text: Decimal string such as ``"1.5"`` or ``"-0.000000000000000001"``.
        :type text: ``str``
        :rtype: :class:`Dec18`
        """
        if not isinstance(text, str):
            raise InvalidDecimal('Expected a decimal string, not {}'.format(type(text).__name__))
        match = cls.pattern.match(text.strip())
        if match is None:
            raise InvalidDecimal('Invalid decimal string (at most 18 fractional digits): {!r}'.format(text))
        sign, whole, fraction = match.groups()
        fraction = fraction or ''
        raw = int(whole) * SCALE + int(fraction.ljust(18, '0') or '0')
        return cls(-raw if sign == '-' else raw)

    @classmethod
    def of(cls, value):
        """ Converts a :class:`Dec18`, ``int`` or decimal string to :class:`Dec18`.
        """
        if isinstance(value, Dec18):
            return value
        if isinstance(value, bool):
            raise InvalidDecimal('Cannot convert a bool to Dec18')
        if isinstance(value, int):
            return cls(_checked(value * SCALE))
        if isinstance(value, str):
            return cls.parse(value)
        raise InvalidDecimal('Cannot convert {} to Dec18'.format(type(value).__name__))

    @classmethod
    def from_ratio(cls, numerator, denominator):
        """Returns ``trunc(numerator / denominator)`` for integer arguments."""
        return cls(_checked(tdiv(numerator * SCALE, denominator)))

    # endregion

    # region Arithmetic

    def __add__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return other
        return Dec18(_checked(self._raw + other._raw))

    __radd__ = __add__

    def __sub__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return other
        return Dec18(_checked(self._raw - other._raw))

    def __rsub__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return other
        return Dec18(_checked(other._raw - self._raw))

    def __mul__(self, other):
        if isinstance(other, int) and not isinstance(other, bool):
            return Dec18(_checked(self._raw * other))
        other = _coerce(other)
        if other is NotImplemented:
            return other
        return dec_mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, int) and not isinstance(other, bool):
            return Dec18(_checked(tdiv(self._raw, other)))
        other = _coerce(other)
        if other is NotImplemented:
            return other
        return dec_div(self, other)

    def __rtruediv__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return other
        return dec_div(other, self)

    def __neg__(self):
        return Dec18(-self._raw)

    def __pos__(self):
        return self

    def __abs__(self):
        return Dec18(abs(self._raw))

    # endregion

    # region Comparison

    def __eq__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return False
        return self._raw == other._raw

    def __ne__(self, other):
        return not self.__eq__(other)

    def __lt__(self, other):
        return self._raw < _coerce_strict(other)._raw

    def __le__(self, other):
        return self._raw <= _coerce_strict(other)._raw

    def __gt__(self, other):
        return self._raw > _coerce_strict(other)._raw

    def __ge__(self, other):
        return self._raw >= _coerce_strict(other)._raw

    def __hash__(self):
        return hash(('Dec18', self._raw))

    def __bool__(self):
        return self._raw != 0

    # endregion

    def sign(self):
        return (self._raw > 0) - (self._raw < 0)

    def to_float(self):
        """Lossy conversion for offline report rendering only."""
        return self._raw / SCALE

    def __repr__(self):
        return 'Dec18(' + repr(str(self)) + ')'

    def __str__(self):
        magnitude = abs(self._raw)
        whole, fraction = divmod(magnitude, SCALE)
        text = str(whole)
        if fraction:
            text += '.' + str(fraction).rjust(18, '0').rstrip('0')
        return '-' + text if self._raw < 0 else text


def _coerce(value):
    if isinstance(value, Dec18):
        return value
    if isinstance(value, int) and not isinstance(value, bool):
        return Dec18.of(value)
    return NotImplemented


def _coerce_strict(value):
    result = _coerce(value)
    if result is NotImplemented:
        raise TypeError('Cannot compare Dec18 with {}'.format(type(value).__name__))
    return result


ZERO = Dec18(0)
ONE = Dec18(SCALE)
EPSILON = Dec18(1)


def dec_mul(a, b):
    """ Multiplies two :class:`Dec18` values.

    :returns: ``trunc(a.raw * b.raw / 10**18)``
    :raises Overflow: The result is out of range.
    """
    return Dec18(_checked(tdiv(a.raw * b.raw, SCALE)))


def dec_div(a, b):
    """ Divides two :class:`Dec18` values.

    :returns: ``trunc(a.raw * 10**18 / b.raw)``
    :raises DivisionByZero: ``b`` is zero.
    :raises Overflow: The result is out of range.
    """
    if b.raw == 0:
        raise DivisionByZero('Dec18 division by zero')
    return Dec18(_checked(tdiv(a.raw * SCALE, b.raw)))


def mul_div(a, b, c):
    """Computes ``a * b / c`` with a single truncation."""
    if c.raw == 0:
        raise DivisionByZero('Dec18 division by zero')
    return Dec18(_checked(tdiv(a.raw * b.raw, c.raw)))


def exp_fixed(x):
    """ Fixed-point exponential.

    The argument is clamped to ``[-20, 20]``. The Taylor series is summed at
    36 fractional digits until a term vanishes; negative arguments are
    evaluated as the reciprocal of ``exp(|x|)``. The result is monotone
    non-decreasing in ``x``.

    :type x: :class:`Dec18`
    :rtype: :class:`Dec18`
    """
    limit = EXP_ARGUMENT_LIMIT * SCALE
    raw = max(-limit, min(limit, x.raw))
    magnitude = abs(raw) * SCALE  # at guard scale
    total = term = _GUARD
    k = 1
    while term:
        term = term * magnitude // (k * _GUARD)
        total += term
        k += 1
    if raw >= 0:
        return Dec18(total // SCALE)
    return Dec18(_GUARD * SCALE // total)


def sqrt_fixed(x):
    """ Fixed-point square root rounded down.

    :raises InvalidDecimal: ``x`` is negative.
    """
    if x.raw < 0:
        raise InvalidDecimal('Square root of negative value {}'.format(x))
    return Dec18(isqrt(x.raw * SCALE))


def mean_and_std(values):
    """ Returns the mean and population standard deviation of a sequence of :class:`Dec18` values.

    Both are computed from exact integer sums; the standard deviation is
    rounded down.
    """
    n = len(values)
    if n == 0:
        return ZERO, ZERO
    total = sum(value.raw for value in values)
    squares = sum(value.raw * value.raw for value in values)
    variance = (n * squares - total * total) // (n * n)
    return Dec18(tdiv(total, n)), Dec18(isqrt(variance))


def sharpe_ratio(values, epsilon):
    """ Returns ``mean / max(std, epsilon)`` over ``values``; 0 for an empty sequence.
    """
    if len(values) == 0:
        return ZERO
    mean, std = mean_and_std(values)
    return dec_div(mean, std if std > epsilon else epsilon)


class BlockClock(object):
    """ Block height and the number of blocks per year used for rate conversion.

    The clock is immutable; :meth:`step` returns the next clock.
    """
    __slots__ = ('_height', '_blocks_per_year')

    def __init__(self, height=0, blocks_per_year=365):
        if isinstance(height, bool) or not isinstance(height, int) or height < 0:
            raise ValueError('Block height must be a non-negative integer, not {!r}'.format(height))
        if isinstance(blocks_per_year, bool) or not isinstance(blocks_per_year, int) or blocks_per_year < 1:
            raise ValueError('blocks_per_year must be a positive integer, not {!r}'.format(blocks_per_year))
        self._height = height
        self._blocks_per_year = blocks_per_year

    @property
    def height(self):
        return self._height

    @property
    def blocks_per_year(self):
        return self._blocks_per_year

    def step(self):
        return BlockClock(self._height + 1, self._blocks_per_year)

    def __eq__(self, other):
        return isinstance(other, BlockClock) and (self._height, self._blocks_per_year) == (
            other._height, other._blocks_per_year)

    def __hash__(self):
        return hash((self._height, self._blocks_per_year))

    def __repr__(self):
        return 'BlockClock(height={}, blocks_per_year={})'.format(self._height, self._blocks_per_year)


def clock_step(clock):
    return clock.step()


class DetRng(object):
    """ Counter-based deterministic random stream keyed by ``(seed, stream)``.

    Draws come from a Philox bit generator whose 128-bit key combines the
    64-bit seed with the first 8 bytes of ``sha256(stream)``, so each named
    stream is independent of every other and of the order in which streams
    are created.

    """
    _batch = 256

    def __init__(self, seed, stream):
        if isinstance(seed, bool) or not isinstance(seed, int) or not 0 <= seed < 2 ** 64:
            raise ValueError('Seed must be a 64-bit unsigned integer, not {!r}'.format(seed))
        self.seed = seed
        self.stream = stream
        label = int.from_bytes(sha256(stream.encode('utf-8')).digest()[:8], 'big')
        self._generator = numpy.random.Philox(key=(label << 64) | seed)
        self._buffer = []
        self._position = 0
        self.draws = 0

    def next_u64(self):
        if self._position == len(self._buffer):
            self._buffer = [int(value) for value in self._generator.random_raw(self._batch)]
            self._position = 0
        value = self._buffer[self._position]
        self._position += 1
        self.draws += 1
        return value

    def uniform(self):
        """Uniform :class:`Dec18` in ``[0, 1)``."""
        return Dec18((self.next_u64() * SCALE) >> 64)

    def below(self, n):
        """Uniform integer in ``[0, n)``."""
        if n < 1:
            raise ValueError('Upper bound must be positive, not {}'.format(n))
        return (self.next_u64() * n) >> 64

    def standard_normal(self):
        """ Approximately standard normal :class:`Dec18`: the sum of twelve uniforms minus six.

        Draws lie in ``[-6, 6)``; the tails beyond six standard deviations are cut off.
        """
        return Dec18(sum(self.uniform().raw for _ in range(12)) - 6 * SCALE)


class Identifier(object):
    """ Validates identifiers of a namespace (asset, venue, strategy, CSO, account).

    Identifiers are non-empty, at most 64 characters, start with an
    alphanumeric character and otherwise use ``[A-Za-z0-9_.:-]``.

    """
    pattern = re.compile(r'^[A-Za-z0-9][A-Za-z0-9_.:-]{0,63}$')

    def __init__(self, namespace):
        self.namespace = namespace

    def __call__(self, value):
        if not isinstance(value, str) or self.pattern.match(value) is None:
            raise InvalidIdentifier('Invalid {} identifier: {!r}'.format(self.namespace, value))
        return value


AssetId = Identifier('asset')
VenueId = Identifier('venue')
StrategyId = Identifier('strategy')
CsoId = Identifier('CSO')
AccountId = Identifier('account')


__all__ = [
    'AccountId', 'AssetId', 'BlockClock', 'CsoId', 'Dec18', 'DetRng', 'DivisionByZero', 'EPSILON', 'Identifier',
    'InvalidDecimal', 'InvalidIdentifier', 'ONE', 'Overflow', 'ProtocolError', 'RAW_MAX', 'SCALE', 'StrategyId',
    'VenueId', 'ZERO', 'clock_step', 'dec_div', 'dec_mul', 'exp_fixed', 'mean_and_std', 'mul_div', 'sharpe_ratio',
    'sqrt_fixed', 'tdiv']
