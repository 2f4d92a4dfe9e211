"""Independent reference implementations used to freeze expected test values.

The tree-edit-distance oracle here is a top-down memoized recursion over
forest tuples (rightmost-root decomposition). It shares no code or shape with
the production keyroot DP, so agreement between the two is a meaningful check.
"""

from __future__ import annotations

import random

from slowforge.sqltree.nodes import Node

Tup = tuple  # (label, (children...))


def to_tuple(node: Node) -> Tup:
    return (node.label, tuple(to_tuple(c) for c in node.children))


def tuple_size(tree: Tup) -> int:
    return 1 + sum(tuple_size(c) for c in tree[1])


def forest_size(forest: tuple[Tup, ...]) -> int:
    return sum(tuple_size(t) for t in forest)


def oracle_ted(a: Node, b: Node) -> int:
    memo: dict[tuple, int] = {}

    def fd(f1: tuple[Tup, ...], f2: tuple[Tup, ...]) -> int:
        if not f1 and not f2:
            return 0
        key = (f1, f2)
        hit = memo.get(key)
        if hit is not None:
            return hit
        if not f1:
            result = forest_size(f2)
        elif not f2:
            result = forest_size(f1)
        else:
            v, w = f1[-1], f2[-1]
            delete = fd(f1[:-1] + v[1], f2) + 1
            insert = fd(f1, f2[:-1] + w[1]) + 1
            match = (
                fd(f1[:-1], f2[:-1])
                + fd(v[1], w[1])
                + (0 if v[0] == w[0] else 1)
            )
            result = min(delete, insert, match)
        memo[key] = result
        return result

    return fd((to_tuple(a),), (to_tuple(b),))


def random_tree(rng: random.Random, max_nodes: int, labels: str = "abcde") -> Node:
    """Random ordered labeled tree with 1..max_nodes nodes.

    Built as nested mutable lists and frozen into Nodes at the end, so child
    order is stable and attachment points are uniform over existing nodes.
    """
    target = rng.randint(1, max_nodes)
    root: list = [rng.choice(labels), []]
    nodes = [root]
    for _ in range(target - 1):
        parent = rng.choice(nodes)
        child: list = [rng.choice(labels), []]
        parent[1].append(child)
        nodes.append(child)

    def freeze(item: list) -> Node:
        return Node(item[0], tuple(freeze(c) for c in item[1]))

    return freeze(root)
