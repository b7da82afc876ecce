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

"""Deterministic block-clocked engine for decentralised multi-manager funds."""

from __future__ import absolute_import

__version_info__ = (0, 3, 0)
__version__ = '.'.join(map(str, __version_info__))
