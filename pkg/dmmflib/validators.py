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

from __future__ import absolute_import, division, print_function, unicode_literals

from json.encoder import encode_basestring_ascii as json_encode_string
from io import StringIO
import csv
import re

from .ledger import Dec18, InvalidDecimal, ONE, ZERO, Identifier as _Identifier, ProtocolError


class Validator(object):
    """ Base class for validators that check and format configuration values.

    You must inherit from this class and override :code:`Validator.__call__` and
    :code:`Validator.format`. :code:`Validator.__call__` should convert the
    value it receives as argument and then return it or raise a
    :code:`ValueError`, if the value will not convert.

    :code:`Validator.format` should return a JSON-ready version of the value
    it receives as argument; scenario files are re-serialised with it.

    """
    def __call__(self, value):
        raise NotImplementedError()

    def format(self, value):
        raise NotImplementedError()


class Boolean(Validator):
    """ Validates Boolean values.

    """
    truth_values = {
        '1': True, '0': False,
        't': True, 'f': False,
        'true': True, 'false': False,
        'y': True, 'n': False,
        'yes': True, 'no': False
    }

    def __call__(self, value):
        if not (value is None or isinstance(value, bool)):
            value = str(value).lower()
            if value not in Boolean.truth_values:
                raise ValueError('Unrecognized truth value: {0}'.format(value))
            value = Boolean.truth_values[value]
        return value

    def format(self, value):
        return value


class Integer(Validator):
    """ Validates integer values.

    Floats and booleans are refused; a block count of ``2.5`` is a typo, not a
    number to round.

    """
    def __init__(self, minimum=None, maximum=None):
        if minimum is not None and maximum is not None:
            def check_range(value):
                if not (minimum <= value <= maximum):
                    raise ValueError('Expected integer in the range [{0},{1}], not {2}'.format(minimum, maximum, value))
                return
        elif minimum is not None:
            def check_range(value):
                if value < minimum:
                    raise ValueError('Expected integer in the range [{0},+∞], not {1}'.format(minimum, value))
                return
        elif maximum is not None:
            def check_range(value):
                if value > maximum:
                    raise ValueError('Expected integer in the range [-∞,{0}], not {1}'.format(maximum, value))
                return
        else:
            def check_range(value):
                return

        self.check_range = check_range
        return

    def __call__(self, value):
        if value is None:
            return None
        if isinstance(value, bool) or isinstance(value, float):
            raise ValueError('Expected integer value, not {}'.format(json_encode_string(repr(value))))
        try:
            value = int(value)
        except (TypeError, ValueError):
            raise ValueError('Expected integer value, not {}'.format(json_encode_string(str(value))))

        self.check_range(value)
        return value

    def format(self, value):
        return None if value is None else int(value)


class Decimal(Validator):
    """ Validates :class:`~dmmflib.ledger.Dec18` values given as decimal strings or integers.

    :param minimum: Smallest admissible value or `None`.
    :param maximum: Largest admissible value or `None`.
    :param exclusive_minimum: If true the minimum itself is refused.

    """
    def __init__(self, minimum=None, maximum=None, exclusive_minimum=False):
        self.minimum = None if minimum is None else Dec18.of(minimum)
        self.maximum = None if maximum is None else Dec18.of(maximum)
        self.exclusive_minimum = exclusive_minimum

    def __call__(self, value):
        if value is None:
            return None
        if isinstance(value, float):
            raise ValueError('Expected a decimal string, not the float {!r}'.format(value))
        try:
            value = Dec18.of(value)
        except InvalidDecimal as error:
            raise ValueError(str(error))
        minimum, maximum = self.minimum, self.maximum
        if minimum is not None:
            if value < minimum or (self.exclusive_minimum and value == minimum):
                raise ValueError('Expected decimal in the range {}{},{}], not {}'.format(
                    '(' if self.exclusive_minimum else '[', minimum, '+∞' if maximum is None else maximum, value))
        if maximum is not None and value > maximum:
            raise ValueError('Expected decimal in the range [{},{}], not {}'.format(
                '-∞' if minimum is None else minimum, maximum, value))
        return value

    def format(self, value):
        return None if value is None else str(value)


class Fraction(Decimal):
    """ Validates fractions in ``[0, 1]``, or ``(0, 1]`` when `positive` is true.

    """
    def __init__(self, positive=False):
        Decimal.__init__(self, ZERO, ONE, exclusive_minimum=positive)


class Identifier(Validator):
    """ Validates identifiers of a namespace.

    """
    def __init__(self, namespace):
        self._identifier = _Identifier(namespace)

    def __call__(self, value):
        if value is None:
            return None
        try:
            return self._identifier(value)
        except ProtocolError as error:
            raise ValueError(str(error))

    def format(self, value):
        return value


class List(Validator):
    """ Validates a list of values.

    Lists arrive as JSON arrays; comma separated strings are accepted as well
    so the same validator serves command line values.

    """
    class Dialect(csv.Dialect):
        """ Describes the properties of list values given as strings. """
        strict = True
        delimiter = str(',')
        quotechar = str('"')
        doublequote = True
        lineterminator = str('\n')
        skipinitialspace = True
        quoting = csv.QUOTE_MINIMAL

    def __init__(self, validator=None, minimum_length=0, unique=False):
        if not (validator is None or isinstance(validator, Validator)):
            raise ValueError('Expected a Validator instance or None for validator, not {}'.format(repr(validator)))
        self._validator = validator
        self._minimum_length = minimum_length
        self._unique = unique

    def __call__(self, value):

        if value is None:
            return None

        if isinstance(value, str):
            try:
                value = next(csv.reader([value], self.Dialect))
            except csv.Error as error:
                raise ValueError(error)
        elif not isinstance(value, (list, tuple)):
            raise ValueError('Expected a list, not {}'.format(type(value).__name__))

        value = list(value)

        if len(value) < self._minimum_length:
            raise ValueError('Expected at least {} item(s), not {}'.format(self._minimum_length, len(value)))

        if self._validator is not None:
            index = 0
            try:
                for index, item in enumerate(value):
                    value[index] = self._validator(item)
            except ValueError as error:
                raise ValueError('Could not convert item {}: {}'.format(index, error))

        if self._unique and len(set(value)) != len(value):
            raise ValueError('Duplicate items in {}'.format(value))

        return value

    def format(self, value):
        if value is None:
            return None
        if self._validator is None:
            return list(value)
        return [self._validator.format(item) for item in value]

    def format_text(self, value):
        output = StringIO()
        writer = csv.writer(output, List.Dialect)
        writer.writerow(self.format(value))
        value = output.getvalue()
        return value[:-1]


class Map(Validator):
    """ Validates values drawn from a fixed mapping of names.

    """
    def __init__(self, **kwargs):
        self.membership = kwargs

    def __call__(self, value):

        if value is None:
            return None

        value = str(value)

        if value not in self.membership:
            raise ValueError('Unrecognized value: {0}'.format(value))

        return self.membership[value]

    def format(self, value):
        return None if value is None else list(self.membership.keys())[list(self.membership.values()).index(value)]


class WeightMap(Validator):
    """ Validates a JSON object of ``asset -> Dec18`` entries.

    :param validator: Validator applied to each value.
    :param l1_limit: Upper bound on the sum of absolute values or `None`.

    """
    def __init__(self, validator=None, l1_limit=None):
        self._key = Identifier('asset')
        self._validator = Decimal() if validator is None else validator
        self._l1_limit = None if l1_limit is None else Dec18.of(l1_limit)

    def __call__(self, value):
        if value is None:
            return None
        if not isinstance(value, dict):
            raise ValueError('Expected an object of asset weights, not {}'.format(type(value).__name__))
        result = {}
        for key in sorted(value):
            try:
                result[self._key(key)] = self._validator(value[key])
            except ValueError as error:
                raise ValueError('Could not convert {}: {}'.format(key, error))
        if self._l1_limit is not None:
            total = sum((abs(weight) for weight in result.values()), ZERO)
            if total > self._l1_limit:
                raise ValueError('Sum of absolute weights {} exceeds {}'.format(total, self._l1_limit))
        return result

    def format(self, value):
        return None if value is None else {key: self._validator.format(value[key]) for key in sorted(value)}


class Match(Validator):
    """ Validates that a value matches a regular expression pattern.

    """
    def __init__(self, name, pattern, flags=0):
        self.name = str(name)
        self.pattern = re.compile(pattern, flags)

    def __call__(self, value):
        if value is None:
            return None
        value = str(value)
        if self.pattern.match(value) is None:
            raise ValueError('Expected {}, not {}'.format(self.name, json_encode_string(value)))
        return value

    def format(self, value):
        return None if value is None else str(value)


class OptionName(Validator):
    """ Validates option names.

    """
    pattern = re.compile(r'''(?=\w)[^\d]\w*$''', re.UNICODE)

    def __call__(self, value):
        if value is not None:
            value = str(value)
            if OptionName.pattern.match(value) is None:
                raise ValueError('Illegal characters in option name: {}'.format(value))
        return value

    def format(self, value):
        return None if value is None else str(value)


class Set(Validator):
    """ Validates set membership.

    """
    def __init__(self, *args):
        self.membership = set(args)

    def __call__(self, value):
        if value is None:
            return None
        value = str(value)
        if value not in self.membership:
            raise ValueError('Unrecognized value: {} (expected one of {})'.format(
                value, ', '.join(sorted(self.membership))))
        return value

    def format(self, value):
        return self.__call__(value)


__all__ = ['Boolean', 'Decimal', 'Fraction', 'Identifier', 'Integer', 'List', 'Map', 'Match', 'OptionName', 'Set',
           'Validator', 'WeightMap']
