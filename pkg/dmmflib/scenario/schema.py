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

"""Composable document schemas built from :mod:`dmmflib.validators`.

A schema converts a JSON document into typed values, collecting every
violation as a ``(path, message)`` pair instead of stopping at the first one,
and formats typed values back into their canonical JSON form.

Paths look like ``$.strategies[2].params.targets``.

"""

from __future__ import absolute_import, division, print_function, unicode_literals

from collections import OrderedDict
import copy

from ..validators import List, Validator, WeightMap


def child(path, key):
    return '{}[{}]'.format(path, key) if isinstance(key, int) else '{}.{}'.format(path, key)


class Schema(object):
    """ Base class of schemas.

    Override :meth:`convert` and :meth:`format`.
    """
    def convert(self, value, path, errors):
        raise NotImplementedError()

    def format(self, value):
        raise NotImplementedError()

    def check(self, value, path='$'):
        """:returns: ``(converted, errors)``"""
        errors = []
        result = self.convert(value, path, errors)
        return result, errors


class Value(Schema):
    """ A leaf value checked by a :class:`~dmmflib.validators.Validator`.

    """
    def __init__(self, validator, nullable=False):
        if not isinstance(validator, Validator):
            raise ValueError('Expected a Validator instance, not {!r}'.format(validator))
        self.validator = validator
        self.nullable = nullable

    def convert(self, value, path, errors):
        if value is None:
            if not self.nullable:
                errors.append((path, 'A value is required'))
            return None
        if isinstance(value, (dict, list)) and not isinstance(self.validator, (List, WeightMap)):
            errors.append((path, 'Expected a scalar, not {}'.format('an object' if isinstance(value, dict) else 'a list')))
            return None
        try:
            return self.validator(value)
        except ValueError as error:
            errors.append((path, str(error)))
            return None

    def format(self, value):
        return None if value is None else self.validator.format(value)


class Field(object):
    """ A member of an :class:`Object`.

    :param schema: :class:`Schema` or :class:`~dmmflib.validators.Validator` of the member.
    :param require: The member must be present.
    :param default: Value used when the member is absent; the absent member is not serialised.
    """
    def __init__(self, schema, require=False, default=None):
        self.schema = schema if isinstance(schema, Schema) else Value(schema, nullable=not require)
        self.require = require
        self.default = default


class Object(Schema):
    """ A JSON object with a fixed set of members; unknown members are errors.

    Converted objects are ``OrderedDict`` in declaration order.
    """
    def __init__(self, **fields):
        self.fields = OrderedDict(sorted(fields.items()))

    def convert(self, value, path, errors):
        if not isinstance(value, dict):
            errors.append((path, 'Expected an object'))
            return None
        for name in sorted(value):
            if name not in self.fields:
                errors.append((child(path, name), 'Unknown field'))
        result = OrderedDict()
        for name, field in self.fields.items():
            if name not in value:
                if field.require:
                    errors.append((child(path, name), 'Missing required field'))
                result[name] = copy.deepcopy(field.default)
                continue
            result[name] = field.schema.convert(value[name], child(path, name), errors)
        return result

    def format(self, value):
        if value is None:
            return None
        result = OrderedDict()
        for name, field in self.fields.items():
            item = value.get(name)
            if not field.require and (item is None or item == field.default):
                continue
            result[name] = field.schema.format(item)
        return result


class ListOf(Schema):
    def __init__(self, schema, minimum_length=0):
        self.schema = schema if isinstance(schema, Schema) else Value(schema)
        self.minimum_length = minimum_length

    def convert(self, value, path, errors):
        if not isinstance(value, list):
            errors.append((path, 'Expected a list'))
            return None
        if len(value) < self.minimum_length:
            errors.append((path, 'Expected at least {} item(s), not {}'.format(self.minimum_length, len(value))))
        return [self.schema.convert(item, child(path, index), errors) for index, item in enumerate(value)]

    def format(self, value):
        return None if value is None else [self.schema.format(item) for item in value]


class MapOf(Schema):
    """ A JSON object with validated keys and uniformly typed values, kept in key order.

    """
    def __init__(self, key, schema):
        self.key = key
        self.schema = schema if isinstance(schema, Schema) else Value(schema)

    def convert(self, value, path, errors):
        if not isinstance(value, dict):
            errors.append((path, 'Expected an object'))
            return None
        result = OrderedDict()
        for name in sorted(value):
            try:
                key = self.key(name)
            except ValueError as error:
                errors.append((child(path, name), str(error)))
                continue
            result[key] = self.schema.convert(value[name], child(path, name), errors)
        return result

    def format(self, value):
        if value is None:
            return None
        return OrderedDict((self.key.format(k), self.schema.format(value[k])) for k in sorted(value))


class Tagged(Schema):
    """ One of several object schemas selected by the value of a tag member.

    """
    def __init__(self, tag, variants):
        self.tag = tag
        self.variants = variants

    def _variant(self, value):
        return self.variants.get(value.get(self.tag)) if isinstance(value, dict) else None

    def convert(self, value, path, errors):
        if not isinstance(value, dict):
            errors.append((path, 'Expected an object'))
            return None
        variant = self._variant(value)
        if variant is None:
            errors.append((child(path, self.tag), 'Expected one of {}, not {!r}'.format(
                ', '.join(sorted(self.variants)), value.get(self.tag))))
            return None
        return variant.convert(value, path, errors)

    def format(self, value):
        variant = self._variant(value)
        return None if variant is None else variant.format(value)


class Raw(Schema):
    """A JSON value passed through unchanged; its consumer checks it."""
    def convert(self, value, path, errors):
        return value

    def format(self, value):
        return value


__all__ = ['Field', 'ListOf', 'MapOf', 'Object', 'Raw', 'Schema', 'Tagged', 'Value', 'child']
