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

from .base import InvalidParameters, MarketState, SignalSpace, Strategy, VaultSnapshot, option_values, strategy_step
from .index import IndexTracker, SignalAggregator
from .portfolio import (
    DegenerateWeights, aggregate_signals, categorical_to_weights, current_weights, enforce_caps, weights_to_intents)
from .spot import PureSpot, StakedSpot

strategy_classes = {cls.name: cls for cls in (PureSpot, StakedSpot, IndexTracker, SignalAggregator)}


def create_strategy(class_name, strategy_id, universe, params=None):
    """ Instantiates a shipped strategy class by name.

    :raises InvalidParameters: The class is unknown or its parameters are invalid.
    """
    try:
        cls = strategy_classes[class_name]
    except KeyError:
        raise InvalidParameters('Unknown strategy class {} (expected one of {})'.format(
            class_name, ', '.join(sorted(strategy_classes))))
    return cls(strategy_id, universe, params)
