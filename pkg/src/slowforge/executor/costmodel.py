"""Synthetic latency model for the simulated backend.

latency = (base + per_row * scanned_rows) * product(factor ** feature_count)

Every degradation feature carries a multiplier >= 1, so latency is strictly
monotone in each feature count. Scanned rows sum the fixture row count of
every physical-table occurrence, which keeps the base unchanged under purely
structural rewrites (wrapping, join inversion) and doubles it when a rewrite
duplicates table scans (disjunct splitting).
"""

from __future__ import annotations

from dataclasses import dataclass

from ..sqltree import SqlTree
from ..sqltree.nodes import STATEMENT_LABELS, Node

_SCOPED_LABELS = frozenset({"subquery", "derived", "cte"})
_DEDUP_SET_OPS = frozenset({"union", "intersect", "except"})


@dataclass(frozen=True, slots=True)
class CostParams:
    base_seconds: float = 0.002
    per_row_seconds: float = 1e-05
    correlated_subquery_factor: float = 3.0
    nesting_factor: float = 1.5
    scalar_subquery_factor: float = 1.4
    sort_factor: float = 1.3
    or_term_factor: float = 1.2
    not_factor: float = 1.1


@dataclass(frozen=True, slots=True)
class CostFeatures:
    scanned_rows: int
    correlated_subqueries: int
    nesting_units: int
    scalar_subqueries: int
    sort_units: int
    extra_or_terms: int
    not_units: int


def _local_names(stmt: Node) -> set[str]:
    """Table names and aliases defined by FROM clauses or CTEs within this
    statement, excluding scopes nested deeper inside further subqueries."""
    names: set[str] = set()

    def visit(node: Node, depth: int) -> None:
        if node.label in _SCOPED_LABELS and depth > 0:
            return  # nested scope: names there are not visible here
        if node.label == "table" and node.text:
            names.add(node.text)
        elif node.label in ("alias", "derived", "cte") and node.text:
            names.add(node.text)
        for c in node.children:
            visit(c, depth + (1 if node.label in _SCOPED_LABELS else 0))

    visit(stmt, 0)
    return names


def _references_outer(stmt: Node, outer_names: set[str]) -> bool:
    local = _local_names(stmt) | outer_names_defined_inside(stmt)
    for n in stmt.walk():
        if n.label.startswith("ident:") and "." in n.label:
            qualifier = n.label[6:].split(".", 1)[0]
            if qualifier in outer_names and qualifier not in local:
                return True
    return False


def outer_names_defined_inside(stmt: Node) -> set[str]:
    # All names defined anywhere inside (covers deeper scopes too); a
    # qualifier resolved by any inner scope is not a correlation.
    names: set[str] = set()
    for n in stmt.walk():
        if n.label == "table" and n.text:
            names.add(n.text)
        elif n.label in ("alias", "derived", "cte") and n.text:
            names.add(n.text)
    return names


def extract_features(tree: SqlTree, table_rows: dict[str, int]) -> CostFeatures:
    scanned = 0
    correlated = 0
    nesting = 0
    scalar = 0
    sorts = 0
    or_terms = 0
    nots = 0

    root = tree.root

    def visible_names_at(path: list[Node]) -> set[str]:
        names: set[str] = set()
        for ancestor in path:
            if ancestor.label in STATEMENT_LABELS:
                names |= _local_names(ancestor)
        return names

    def visit(node: Node, path: list[Node]) -> None:
        label = node.label
        nonlocal scanned, correlated, nesting, scalar, sorts, or_terms, nots
        if label == "table" and node.text:
            scanned += table_rows.get(node.text, 0)
        elif label in ("derived", "cte"):
            nesting += 1
        elif label == "subquery":
            outer = visible_names_at(path)
            if _references_outer(node.children[0], outer):
                correlated += 1
            else:
                scalar += 1
        elif label == "distinct":
            sorts += 1
        elif label == "order_by" and path and path[-1] is not root:
            sorts += 1
        elif label in _DEDUP_SET_OPS:
            sorts += 1
        elif label == "or":
            or_terms += len(node.children) - 1
        elif label == "not":
            nots += 1
        for c in node.children:
            visit(c, path + [node])

    visit(root, [])
    return CostFeatures(
        scanned_rows=scanned,
        correlated_subqueries=correlated,
        nesting_units=nesting,
        scalar_subqueries=scalar,
        sort_units=sorts,
        extra_or_terms=or_terms,
        not_units=nots,
    )


def synthetic_latency(tree: SqlTree, table_rows: dict[str, int], params: CostParams) -> float:
    f = extract_features(tree, table_rows)
    latency = params.base_seconds + params.per_row_seconds * f.scanned_rows
    latency *= params.correlated_subquery_factor**f.correlated_subqueries
    latency *= params.nesting_factor**f.nesting_units
    latency *= params.scalar_subquery_factor**f.scalar_subqueries
    latency *= params.sort_factor**f.sort_units
    latency *= params.or_term_factor**f.extra_or_terms
    latency *= params.not_factor**f.not_units
    return latency
