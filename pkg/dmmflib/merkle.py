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

"""Hash trees over ``(account, amount)`` reward leaves.

Leaves hash as ``SHA-256(0x00 || utf8(account) || amount.raw as 16 signed big-endian bytes)``
and internal nodes as ``SHA-256(0x01 || left || right)``. Nodes pair left to
right and an odd last node is promoted unchanged to the next level.

"""

from __future__ import absolute_import, division, print_function, unicode_literals

from hashlib import sha256

from .ledger import ProtocolError

LEAF_PREFIX = b'\x00'
NODE_PREFIX = b'\x01'

LEFT = 'left'
RIGHT = 'right'


class EmptyLeaves(ProtocolError, ValueError):
    pass


def leaf_hash(account, amount):
    """ Hashes one reward leaf.

    :param account: Account id.
    :type account: ``str``
    :param amount: Reward amount.
    :type amount: :class:`~dmmflib.ledger.Dec18`
    :rtype: ``bytes``
    """
    return sha256(LEAF_PREFIX + account.encode('utf-8') + amount.raw.to_bytes(16, 'big', signed=True)).digest()


def node_hash(left, right):
    return sha256(NODE_PREFIX + left + right).digest()


def merkle_levels(leaves):
    """Returns every level of the tree, leaf hashes first and the root level last."""
    if len(leaves) == 0:
        raise EmptyLeaves('A reward tree needs at least one leaf')
    level = [leaf_hash(account, amount) for account, amount in leaves]
    levels = [level]
    while len(level) > 1:
        parent = [node_hash(level[i], level[i + 1]) for i in range(0, len(level) - 1, 2)]
        if len(level) % 2:
            parent.append(level[-1])
        levels.append(parent)
        level = parent
    return levels


def compute_merkle_root(leaves):
    """ Computes the 32-byte root of ``[(account, amount), ...]``.

    :raises EmptyLeaves: `leaves` is empty.
    """
    return merkle_levels(leaves)[-1][0]


def merkle_proof(leaves, index):
    """ Builds the path of ``(sibling hash, side)`` pairs from leaf `index` to the root.

    `side` tells on which side of the running hash the sibling sits. Levels
    where the node is promoted contribute no step.
    """
    levels = merkle_levels(leaves)
    if not 0 <= index < len(leaves):
        raise IndexError('Leaf index {} out of range'.format(index))
    path = []
    for level in levels[:-1]:
        sibling = index ^ 1
        if sibling < len(level):
            path.append((level[sibling], LEFT if sibling < index else RIGHT))
        index //= 2
    return path


def verify_merkle_proof(root, leaf, path):
    """ Folds `leaf` through `path` and compares the result with `root`.

    :param leaf: Leaf hash, see :func:`leaf_hash`.
    :rtype: ``bool``
    """
    node = leaf
    for sibling, side in path:
        if side == LEFT:
            node = node_hash(sibling, node)
        elif side == RIGHT:
            node = node_hash(node, sibling)
        else:
            return False
    return node == root


__all__ = ['EmptyLeaves', 'LEFT', 'RIGHT', 'compute_merkle_root', 'leaf_hash', 'merkle_levels', 'merkle_proof',
           'node_hash', 'verify_merkle_proof']
