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

from collections import OrderedDict
from inspect import getmembers, isclass

from .validators import OptionName


class Configuration(object):
    """ Declares a strategy class and fixes up its :class:`Option` definitions.

    Adds a :code:`name` class variable to strategy classes that don't have one
    of their own; the name is the class name and it is the value scenario files
    put in a strategy's ``class`` field.

    """
    def __init__(self, **kwargs):
        #
        # The decorator is always applied with parentheses. For example:
        #
        #   @Configuration()
        #   class PureSpot(Strategy):
        #       ...
        #
        #   @Configuration(name='Index')
        #   class IndexTracker(Strategy):
        #       ...
        #
        self.settings = kwargs

    def __call__(self, o):
        if not isclass(o):
            raise TypeError('Incorrect usage: Configuration decorator applied to {0}'.format(type(o)))
        o.name = str(self.settings.get('name', o.__name__))
        Option.fix_up(o)
        return o


class Option(property):
    """ Represents a strategy parameter (an entry of θ_S).

    Required options must be given in the strategy's ``params``; the others
    take their `default`.

    **Example:**

    ..  code-block:: python
        :linenos:

        from dmmflib.decorators import Option
        from dmmflib.validators import Fraction

        drift_band = Option(
            doc=''' **Syntax:** **drift_band=***<fraction>*
            **Description:** Weight drift that triggers a rebalance''',
            default='0.05', validate=Fraction())

    """
    def __init__(self, doc=None, name=None, default=None, require=None, validate=None):
        property.__init__(self, None, None, None, doc)
        self.name = name
        self.default = default
        self.validate = validate
        self.require = bool(require)

    # region Methods

    def getter(self, function):
        return self._copy_extra_attributes(self._copy_property(function, self.fset))

    def setter(self, function):
        return self._copy_extra_attributes(self._copy_property(self.fget, function))

    @classmethod
    def fix_up(cls, strategy_class):
        """ Backs each option of `strategy_class` with a ``_<attribute>`` field set through its validator.

        Options a base class already fixed up are backed again so that every
        class holds its own accessors.
        """
        is_option = lambda attribute: isinstance(attribute, Option)
        definitions = getmembers(strategy_class, is_option)
        validate_option_name = OptionName()

        for i, (name, option) in enumerate(definitions):

            if option.name is None:
                option.name = name  # no validation required
            else:
                validate_option_name(option.name)

            backing_field_name = '_' + name

            def fget(bfn):
                return lambda this: getattr(this, bfn, None)

            def fset(bfn, validate):
                if validate is None:
                    return lambda this, value: setattr(this, bfn, value)
                return lambda this, value: setattr(this, bfn, validate(value))

            option = option.getter(fget(backing_field_name)).setter(fset(backing_field_name, option.validate))
            setattr(strategy_class, name, option)
            definitions[i] = name, option

        strategy_class.option_definitions = definitions

    def _copy_property(self, fget, fset):
        # property.getter/setter copy through type(self)(fget, fset, fdel, doc), which does not match the
        # signature of Option.__init__
        other = type(self).__new__(type(self))
        property.__init__(other, fget, fset, self.fdel, self.__doc__)
        return other

    def _copy_extra_attributes(self, other):
        other.name = self.name
        other.default = self.default
        other.require = self.require
        other.validate = self.validate
        return other

    # endregion

    # region Types

    class Item(object):
        """ Presents an instance/class view over a strategy `Option`.

        """
        def __init__(self, strategy, option):
            self._strategy = strategy
            self._option = option
            self._is_set = False
            validator = self.validator
            self._format = str if validator is None else validator.format

        def __repr__(self):
            return '(' + repr(self.name) + ', ' + repr(self._format(self.value)) + ')'

        # region Properties

        @property
        def is_required(self):
            return bool(self._option.require)

        @property
        def is_set(self):
            """ Indicates whether an option value was provided as argument.

            """
            return self._is_set

        @property
        def name(self):
            return self._option.name

        @property
        def validator(self):
            return self._option.validate

        @property
        def value(self):
            return self._option.__get__(self._strategy)

        @value.setter
        def value(self, value):
            self._option.__set__(self._strategy, value)
            self._is_set = True

        # endregion

        # region Methods

        def format(self):
            value = self.value
            return None if value is None else self._format(value)

        def reset(self):
            self._option.__set__(self._strategy, self._option.default)
            self._is_set = False

        # endregion

    class View(OrderedDict):
        """ Presents an ordered dictionary view of the set of :class:`Option` arguments to a strategy.

        """
        def __init__(self, strategy):
            definitions = type(strategy).option_definitions
            item_class = Option.Item
            OrderedDict.__init__(self, ((option.name, item_class(strategy, option)) for (name, option) in definitions))

        def __repr__(self):
            text = 'Option.View([' + ','.join(repr(item) for item in self.values()) + '])'
            return text

        # region Methods

        def get_missing(self):
            missing = [item.name for item in self.values() if item.is_required and not item.is_set]
            return missing if len(missing) > 0 else None

        def reset(self):
            for value in self.values():
                value.reset()

        def to_json(self):
            return OrderedDict((name, item.format()) for name, item in self.items())

        # endregion

    # endregion


__all__ = ['Configuration', 'Option']
