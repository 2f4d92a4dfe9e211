"""Tree edit distance over ordered labeled trees.

Zhang-Shasha dynamic programming with keyroot decomposition and unit costs
for insert, delete, and relabel. Distances feed the normalized structural
divergence used by the search reward.
"""

from __future__ import annotations

from .nodes import Node, SqlTree


class _Annotated:
    """Post-order node array with leftmost-leaf-descendant and keyroot info."""

    __slots__ = ("labels", "lmds", "keyroots")

    def __init__(self, root: Node):
        labels: list[str] = []
        lmds: list[int] = []

        def visit(node: Node) -> int:
            first_leaf = -1
            for child in node.children:
                leaf = visit(child)
                if first_leaf < 0:
                    first_leaf = leaf
            index = len(labels)
            labels.append(node.label)
            lmds.append(first_leaf if first_leaf >= 0 else index)
            return lmds[index]

        visit(root)
        self.labels = labels
        self.lmds = lmds
        last_for_lmd: dict[int, int] = {}
        for i, lmd in enumerate(lmds):
            last_for_lmd[lmd] = i
        self.keyroots = sorted(last_for_lmd.values())


def tree_edit_distance(a: SqlTree | Node, b: SqlTree | Node) -> int:
    """Minimal number of unit-cost node insertions, deletions, and relabels
    transforming ordered tree ``a`` into ``b``."""
    ra = a.root if isinstance(a, SqlTree) else a
    rb = b.root if isinstance(b, SqlTree) else b
    ta, tb = _Annotated(ra), _Annotated(rb)
    n, m = len(ta.labels), len(tb.labels)
    treedist = [[0] * m for _ in range(n)]

    for i in ta.keyroots:
        for j in tb.keyroots:
            _subtree_dist(ta, tb, i, j, treedist)
    return treedist[n - 1][m - 1]


def _subtree_dist(
    ta: _Annotated, tb: _Annotated, i: int, j: int, treedist: list[list[int]]
) -> None:
    # Hot loop: locals and explicit comparisons instead of min() keep the
    # pure-Python DP fast enough for search-time reward computation.
    a_lmds, b_lmds = ta.lmds, tb.lmds
    a_labels, b_labels = ta.labels, tb.labels
    li, lj = a_lmds[i], b_lmds[j]
    rows, cols = i - li + 2, j - lj + 2
    fd = [[0] * cols for _ in range(rows)]
    fd[0] = list(range(cols))  # insertions along the empty-forest border
    for x in range(1, rows):
        fd[x][0] = x  # deletions along the other border
    for x in range(1, rows):
        ai = x + li - 1
        a_lmd = a_lmds[ai]
        a_label = a_labels[ai]
        a_in_band = a_lmd == li
        row = fd[x]
        above = fd[x - 1]
        treedist_row = treedist[ai]
        for y in range(1, cols):
            bj = y + lj - 1
            best = above[y] + 1  # delete
            insert = row[y - 1] + 1
            if insert < best:
                best = insert
            if a_in_band and b_lmds[bj] == lj:
                match = above[y - 1] + (0 if a_label == b_labels[bj] else 1)
                if match < best:
                    best = match
                row[y] = best
                treedist_row[bj] = best
            else:
                match = fd[a_lmd - li][b_lmds[bj] - lj] + treedist_row[bj]
                if match < best:
                    best = match
                row[y] = best


def structural_distance(a: SqlTree, b: SqlTree) -> float:
    """Edit distance normalized by the larger tree size; always in [0, 1].

    The raw ratio can exceed 1 for label-disjoint shapes (a deep chain versus
    a wide star needs more edits than the larger size), so the value is
    clamped to keep the divergence signal bounded.
    """
    denom = max(a.node_count(), b.node_count())
    return min(1.0, tree_edit_distance(a, b) / denom)


def structural_score(node_q: SqlTree, parent_q: SqlTree, seed_q: SqlTree) -> float:
    """Mean normalized divergence from both the parent and the seed query."""
    return 0.5 * (
        structural_distance(node_q, parent_q) + structural_distance(node_q, seed_q)
    )
