"""Structural complexity counters for parsed queries.

Counting rules (documented so corpus statistics are reproducible):

* token_count      lexer tokens of the canonically rendered text (EOF excluded)
* predicate_count  comparison / IN / LIKE / BETWEEN / IS-NULL atoms appearing
                   inside WHERE, HAVING, or join ON clauses; boolean
                   connectives are not counted
* subquery_count   SELECT statements nested inside expression subqueries,
                   derived tables, or CTE bodies (set-operation branches are
                   not subqueries)
* join_count       explicit join operators plus (n - 1) for every FROM clause
                   listing n comma-joined relations
* nesting_depth    maximum subquery/derived/CTE nesting depth; 0 for a flat
                   query, >= 1 whenever at least one subquery exists
"""

from __future__ import annotations

from dataclasses import dataclass

from .lexer import tokenize
from .nodes import Node, SqlTree
from .render import render

_PREDICATE_LABELS = frozenset(
    {
        "in",
        "not_in",
        "like",
        "not_like",
        "between",
        "not_between",
        "is_null",
        "is_not_null",
    }
)
_CONDITION_CLAUSES = frozenset({"where", "having", "on"})
_NESTING_LABELS = frozenset({"subquery", "derived", "cte"})


@dataclass(frozen=True, slots=True)
class ComplexityProfile:
    token_count: int
    predicate_count: int
    subquery_count: int
    join_count: int
    nesting_depth: int


def _is_predicate_atom(node: Node) -> bool:
    return node.label.startswith("cmp:") or node.label in _PREDICATE_LABELS


def complexity_profile(tree: SqlTree) -> ComplexityProfile:
    tokens = len(tokenize(render(tree), tree.dialect)) - 1  # drop EOF

    predicates = 0
    for clause in tree.find_all(lambda n: n.label in _CONDITION_CLAUSES):
        for n in clause.walk():
            if n is clause:
                continue
            if _is_predicate_atom(n):
                predicates += 1

    subqueries = sum(1 for n in tree.walk() if n.label in _NESTING_LABELS)

    joins = 0
    for n in tree.walk():
        if n.label.startswith("join:"):
            joins += 1
        elif n.label == "from":
            joins += max(0, len(n.children) - 1)

    def depth(node: Node, current: int) -> int:
        bump = 1 if node.label in _NESTING_LABELS else 0
        level = current + bump
        best = level
        for c in node.children:
            best = max(best, depth(c, level))
        return best

    return ComplexityProfile(
        token_count=tokens,
        predicate_count=predicates,
        subquery_count=subqueries,
        join_count=joins,
        nesting_depth=depth(tree.root, 0),
    )
