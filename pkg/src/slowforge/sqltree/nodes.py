"""Labeled ordered trees for SQL statements.

Every parsed query becomes an immutable tree of ``Node`` objects. The label
carries the structural identity used by the edit-distance and complexity
metrics; ``text`` carries the lexical payload (literal text, identifier name,
alias) needed to render the node back to SQL.

Label conventions
-----------------
statements   ``select``, ``union``, ``union_all``, ``intersect``, ``except``,
             ``with``, ``cte`` (text = cte name)
clauses      ``distinct``, ``projections``, ``from``, ``where``, ``group_by``,
             ``having``, ``order_by``, ``limit``, ``offset``, ``on``
from refs    ``table`` (text = name), ``alias`` (text = alias, one child),
             ``derived`` (text = alias, child = statement),
             ``join:inner|left|right|full|cross``
booleans     ``and``, ``or`` (n-ary, flattened), ``not``
predicates   ``cmp:=``, ``cmp:<>``, ``cmp:<``, ``cmp:<=``, ``cmp:>``,
             ``cmp:>=``, ``in``, ``not_in``, ``like``, ``not_like``,
             ``between``, ``not_between``, ``is_null``, ``is_not_null``,
             ``exists``, ``not_exists``
expressions  ``op:+ - * / % ||``, ``neg``, ``func:<name>``, ``over``,
             ``partition_by``, ``case``, ``when``, ``else``, ``cast``
             (text = type), ``subquery``, ``exprlist``, ``star``,
             ``star:<table>``, ``sort:asc``, ``sort:desc``
leaves       ``ident:<name>`` (lower-cased unless quoted), ``<int>``,
             ``<num>``, ``<str>``, ``<bool>``, ``<null>``

Literal leaves deliberately use token-class labels so that swapping one
constant for another of the same class does not register as a structural
change, while the exact text survives in ``text`` for rendering.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, Iterator


class Dialect(enum.Enum):
    POSTGRES = "postgres"
    MYSQL = "mysql"


@dataclass(frozen=True, slots=True)
class Node:
    label: str
    children: tuple["Node", ...] = ()
    text: str | None = None

    def child(self, label: str) -> "Node | None":
        """First direct child with the given label, or None."""
        for c in self.children:
            if c.label == label:
                return c
        return None

    def replace_child(self, old: "Node", new: "Node") -> "Node":
        kids = tuple(new if c is old else c for c in self.children)
        return Node(self.label, kids, self.text)

    def with_children(self, children: tuple["Node", ...]) -> "Node":
        return Node(self.label, children, self.text)

    def walk(self) -> Iterator["Node"]:
        """Pre-order traversal of the subtree rooted here."""
        stack = [self]
        while stack:
            n = stack.pop()
            yield n
            stack.extend(reversed(n.children))

    def size(self) -> int:
        return sum(1 for _ in self.walk())

    def __repr__(self) -> str:  # compact, debugging only
        t = f" {self.text!r}" if self.text is not None else ""
        return f"<{self.label}{t} ({len(self.children)})>"


@dataclass(frozen=True, slots=True)
class SqlTree:
    """A parsed SQL statement: a rooted, acyclic, ordered labeled tree."""

    root: Node
    dialect: Dialect = Dialect.POSTGRES

    def node_count(self) -> int:
        return self.root.size()

    def walk(self) -> Iterator[Node]:
        return self.root.walk()

    def find_all(self, predicate: Callable[[Node], bool]) -> list[Node]:
        return [n for n in self.root.walk() if predicate(n)]

    def labels_preorder(self) -> list[str]:
        return [n.label for n in self.root.walk()]


def rewrite(node: Node, fn: Callable[[Node], Node | None]) -> Node:
    """Bottom-up rewrite: ``fn`` maps a node to its replacement (or None to
    keep it). Children are rewritten before their parent sees them."""
    kids = tuple(rewrite(c, fn) for c in node.children)
    candidate = node if kids == node.children else node.with_children(kids)
    replaced = fn(candidate)
    return candidate if replaced is None else replaced


SET_OP_LABELS = frozenset({"union", "union_all", "intersect", "except"})
STATEMENT_LABELS = frozenset({"select", "with"} | SET_OP_LABELS)
