"""Curated library of semantics-preserving, cost-increasing SQL rewrites.

Each strategy pairs a syntactic applicability check with a deterministic AST
transform, plus the prompt text used when the rewrite is delegated to a
language model instead. Transforms never weaken filters or projections; where
equivalence depends on data properties (join-key uniqueness), downstream
execution verification is the safety net and the applicability check is
deliberately conservative.

Strategies that could change semantics under NULLs (NOT IN inversions and
friends) are excluded on purpose: correctness over coverage.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from typing import Callable

from .sqltree import ParseError, SqlTree, parse, render
from .sqltree.nodes import SET_OP_LABELS, STATEMENT_LABELS, Node

_AGG_FUNCS = frozenset({"count", "sum", "avg", "min", "max"})
_LITERAL_LABELS = frozenset({"<int>", "<num>", "<str>", "<bool>"})
_SLOT_ORDER = (
    "with",
    "distinct",
    "projections",
    "from",
    "where",
    "group_by",
    "having",
    "order_by",
    "limit",
    "offset",
)


class TransformError(Exception):
    """A strategy whose applicability held could not be instantiated; this
    signals a library bug and callers skip the strategy."""


@dataclass(frozen=True)
class SlowdownStrategy:
    id: str
    description: str
    applicability: Callable[[SqlTree], bool] = field(repr=False)
    transform: Callable[[SqlTree, random.Random], Node] = field(repr=False)
    prompt_template: str = ""


@dataclass(frozen=True, slots=True)
class StrategyHistory:
    applied_ids: tuple[str, ...] = ()

    def extend(self, strategy_id: str) -> "StrategyHistory":
        return StrategyHistory(self.applied_ids + (strategy_id,))

    def __contains__(self, strategy_id: str) -> bool:
        return strategy_id in self.applied_ids


# -- tree helpers -------------------------------------------------------------


def _replace(node: Node, target: Node, replacement: Node) -> Node:
    if node is target:
        return replacement
    changed = False
    kids = []
    for c in node.children:
        new = _replace(c, target, replacement)
        changed = changed or new is not c
        kids.append(new)
    return node.with_children(tuple(kids)) if changed else node


def _selects(root: Node) -> list[Node]:
    return [n for n in root.walk() if n.label == "select"]


def _with_clause(select: Node, clause: Node) -> Node:
    """Insert or replace a clause, keeping canonical clause order."""
    slots = {c.label: c for c in select.children}
    slots[clause.label] = clause
    ordered = tuple(slots[label] for label in _SLOT_ORDER if label in slots)
    return select.with_children(ordered)


def _drop_clause(select: Node, label: str) -> Node:
    return select.with_children(tuple(c for c in select.children if c.label != label))


def _used_names(root: Node) -> set[str]:
    names = set()
    for n in root.walk():
        if n.label in ("table", "alias", "derived", "cte") and n.text:
            names.add(n.text)
        if n.label.startswith("ident:"):
            names.add(n.label[6:].split(".", 1)[0])
    return names


def _fresh_name(root: Node, prefix: str) -> str:
    used = _used_names(root)
    i = 0
    while f"{prefix}_{i}" in used:
        i += 1
    return f"{prefix}_{i}"


def _conjoin(existing: Node | None, extra: Node) -> Node:
    if existing is None:
        return extra
    terms = list(existing.children) if existing.label == "and" else [existing]
    terms.append(extra)
    return Node("and", tuple(terms))


def _ref_name(ref: Node) -> str | None:
    """Name under which a FROM reference is visible (alias wins)."""
    if ref.label in ("alias", "derived"):
        return ref.text
    if ref.label == "table":
        return ref.text
    return None


def _has_aggregate(select: Node) -> bool:
    proj = select.child("projections")
    nodes = list(proj.walk()) if proj is not None else []
    having = select.child("having")
    if having is not None:
        nodes += list(having.walk())
    return any(
        n.label.startswith("func:") and n.label[5:] in _AGG_FUNCS or n.label == "over"
        for n in nodes
    )


# -- strategy: no-op self wrap ----------------------------------------------------


def _wrap_applicable(tree: SqlTree) -> bool:
    return tree.root.label in STATEMENT_LABELS


def _wrap_transform(tree: SqlTree, rng: random.Random) -> Node:
    alias = _fresh_name(tree.root, "wrap")
    return Node(
        "select",
        (
            Node("projections", (Node("star"),)),
            Node("from", (Node("derived", (tree.root,), alias),)),
        ),
    )


# -- strategy: CTE indirection ------------------------------------------------------


def _cte_applicable(tree: SqlTree) -> bool:
    root = tree.root
    if root.label not in STATEMENT_LABELS or root.label == "with":
        return False
    return root.child("with") is None


def _cte_transform(tree: SqlTree, rng: random.Random) -> Node:
    name = _fresh_name(tree.root, "staged")
    cte = Node("cte", (tree.root,), name)
    return Node(
        "select",
        (
            Node("with", (cte,)),
            Node("projections", (Node("star"),)),
            Node("from", (Node("table", (), name),)),
        ),
    )


# -- strategy: equi-join to correlated EXISTS ------------------------------------------


def _scope_join_nodes(from_clause: Node) -> list[Node]:
    """Join nodes belonging to this FROM clause only (derived-table bodies
    open their own scope and are not descended into)."""
    found: list[Node] = []

    def visit(ref: Node) -> None:
        if ref.label.startswith("join:"):
            found.append(ref)
            visit(ref.children[0])
            visit(ref.children[1])

    for ref in from_clause.children:
        visit(ref)
    return found


def _join_target(tree: SqlTree) -> tuple[Node, Node] | None:
    """First inner join whose right side is a plain (possibly aliased) table
    joined by a single equality and referenced nowhere else."""
    for select in _selects(tree.root):
        from_clause = select.child("from")
        if from_clause is None:
            continue
        for node in _scope_join_nodes(from_clause):
            if node.label != "join:inner" or len(node.children) != 3:
                continue
            left, right, on = node.children
            if on.label != "on" or on.children[0].label != "cmp:=":
                continue
            if right.label not in ("table", "alias"):
                continue
            if right.label == "alias" and right.children[0].label != "table":
                continue
            name = _ref_name(right)
            if not name:
                continue
            cmp_node = on.children[0]
            lhs, rhs = cmp_node.children
            if not (lhs.label.startswith("ident:") and rhs.label.startswith("ident:")):
                continue
            quals = {side.label[6:].split(".", 1)[0] for side in (lhs, rhs) if "." in side.label}
            if name not in quals or len(quals) != 2:
                continue
            # The joined relation must contribute nothing outside the ON clause.
            outside_refs = 0
            for n in tree.root.walk():
                if n is node:
                    continue
                if n.label.startswith("ident:") and n.label[6:].split(".", 1)[0] == name:
                    outside_refs += 1
            on_refs = sum(
                1
                for n in on.walk()
                if n.label.startswith("ident:") and n.label[6:].split(".", 1)[0] == name
            )
            if outside_refs > on_refs:
                continue
            host = select
            return node, host
    return None


def _join_applicable(tree: SqlTree) -> bool:
    return _join_target(tree) is not None


def _join_transform(tree: SqlTree, rng: random.Random) -> Node:
    found = _join_target(tree)
    if found is None:
        raise TransformError("no invertible equi-join despite applicability")
    join_node, host = found
    left, right, on = join_node.children
    exists_body = Node(
        "select",
        (
            Node("projections", (Node("<int>", (), "1"),)),
            Node("from", (right,)),
            Node("where", (on.children[0],)),
        ),
    )
    exists_pred = Node("exists", (Node("subquery", (exists_body,)),))
    # Rebuild the host select in one step: join collapses to its left side and
    # the EXISTS predicate joins the WHERE conjunction.
    new_from = _replace(host.child("from"), join_node, left)
    where = host.child("where")
    new_where = Node("where", (_conjoin(where.children[0] if where else None, exists_pred),))
    rebuilt = _with_clause(_with_clause(host, new_from), new_where)
    return _replace(tree.root, host, rebuilt)


# -- strategy: redundant DISTINCT ----------------------------------------------------


def _distinct_target(tree: SqlTree) -> Node | None:
    for select in _selects(tree.root):
        if select.child("distinct") is not None:
            continue
        group = select.child("group_by")
        proj = select.child("projections")
        if group is None or proj is None:
            continue
        exposed = [p.children[0] if p.label == "alias" else p for p in proj.children]
        if all(any(key == e for e in exposed) for key in group.children):
            return select
    return None


def _distinct_applicable(tree: SqlTree) -> bool:
    return _distinct_target(tree) is not None


def _distinct_transform(tree: SqlTree, rng: random.Random) -> Node:
    select = _distinct_target(tree)
    if select is None:
        raise TransformError("no distinct-safe select despite applicability")
    return _replace(tree.root, select, _with_clause(select, Node("distinct")))


# -- strategy: superfluous ORDER BY inside a subquery -------------------------------------


def _orderby_target(tree: SqlTree) -> Node | None:
    for n in tree.root.walk():
        if n.label not in ("subquery", "derived", "cte"):
            continue
        inner = n.children[0]
        if inner.label != "select":
            continue
        if inner.child("order_by") is None and inner.child("limit") is None:
            return inner
    return None


def _orderby_applicable(tree: SqlTree) -> bool:
    return _orderby_target(tree) is not None


def _orderby_transform(tree: SqlTree, rng: random.Random) -> Node:
    inner = _orderby_target(tree)
    if inner is None:
        raise TransformError("no subquery to sort despite applicability")
    order = Node("order_by", (Node("sort:asc", (Node("<int>", (), "1"),)),))
    return _replace(tree.root, inner, _with_clause(inner, order))


# -- strategy: IN-list to OR chain ------------------------------------------------------


def _inlist_target(tree: SqlTree) -> Node | None:
    for n in tree.root.walk():
        if n.label != "in":
            continue
        source = n.children[1]
        if source.label != "exprlist" or len(source.children) < 2:
            continue
        if all(item.label in _LITERAL_LABELS for item in source.children):
            return n
    return None


def _inlist_applicable(tree: SqlTree) -> bool:
    return _inlist_target(tree) is not None


def _inlist_transform(tree: SqlTree, rng: random.Random) -> Node:
    target = _inlist_target(tree)
    if target is None:
        raise TransformError("no literal IN list despite applicability")
    lhs, source = target.children
    chain = Node("or", tuple(Node("cmp:=", (lhs, item)) for item in source.children))
    return _replace(tree.root, target, chain)


# -- strategy: scalar-subquery duplication of a constant comparison -------------------------


def _scalar_target(tree: SqlTree) -> Node | None:
    for select in _selects(tree.root):
        where = select.child("where")
        if where is None:
            continue
        for n in where.walk():
            if not n.label.startswith("cmp:"):
                continue
            if n.children[1].label in _LITERAL_LABELS:
                return n
    return None


def _scalar_applicable(tree: SqlTree) -> bool:
    return _scalar_target(tree) is not None


def _scalar_transform(tree: SqlTree, rng: random.Random) -> Node:
    cmp_node = _scalar_target(tree)
    if cmp_node is None:
        raise TransformError("no constant comparison despite applicability")
    lhs, literal = cmp_node.children
    boxed = Node("subquery", (Node("select", (Node("projections", (literal,)),)),))
    duplicate = Node(cmp_node.label, (lhs, boxed))
    return _replace(tree.root, cmp_node, Node("and", (cmp_node, duplicate)))


# -- strategy: disjunct split into UNION ----------------------------------------------------


def _union_target(tree: SqlTree) -> Node | None:
    root = tree.root
    if root.label != "select":
        return None
    if root.child("distinct") is None:
        return None
    for label in ("group_by", "having", "order_by", "limit", "offset", "with"):
        if root.child(label) is not None:
            return None
    if _has_aggregate(root):
        return None
    where = root.child("where")
    if where is None or where.children[0].label != "or":
        return None
    return root


def _union_applicable(tree: SqlTree) -> bool:
    return _union_target(tree) is not None


def _union_transform(tree: SqlTree, rng: random.Random) -> Node:
    select = _union_target(tree)
    if select is None:
        raise TransformError("no splittable disjunction despite applicability")
    disjuncts = select.child("where").children[0].children  # type: ignore[union-attr]
    branches = [_with_clause(select, Node("where", (d,))) for d in disjuncts]
    combined = branches[0]
    for branch in branches[1:]:
        combined = Node("union", (combined, branch))
    return combined


# -- strategy: predicate pull-up through a derived table --------------------------------------


def _pullup_target(tree: SqlTree) -> Node | None:
    for select in _selects(tree.root):
        proj = select.child("projections")
        frm = select.child("from")
        where = select.child("where")
        if proj is None or frm is None or where is None:
            continue
        if [p.label for p in proj.children] != ["star"]:
            continue
        if len(frm.children) != 1 or frm.children[0].label not in ("table", "alias", "derived"):
            continue
        if any(select.child(lbl) is not None for lbl in ("group_by", "having", "distinct")):
            continue
        return select
    return None


def _pullup_applicable(tree: SqlTree) -> bool:
    return _pullup_target(tree) is not None


def _requalify(expr: Node, old: str, new: str) -> Node:
    def fix(node: Node) -> Node | None:
        if node.label.startswith("ident:") and "." in node.label:
            qual, col = node.label[6:].split(".", 1)
            if qual == old:
                return Node(f"ident:{new}.{col}", (), f"{new}.{col}")
        return None

    from .sqltree.nodes import rewrite

    return rewrite(expr, fix)


def _pullup_transform(tree: SqlTree, rng: random.Random) -> Node:
    select = _pullup_target(tree)
    if select is None:
        raise TransformError("no pullable predicate despite applicability")
    frm = select.child("from")
    where = select.child("where")
    assert frm is not None and where is not None
    source_name = _ref_name(frm.children[0])
    alias = _fresh_name(tree.root, "pulled")
    predicate = where.children[0]
    if source_name:
        predicate = _requalify(predicate, source_name, alias)
    inner = _drop_clause(select, "where")
    outer = Node(
        "select",
        (
            Node("projections", (Node("star"),)),
            Node("from", (Node("derived", (inner,), alias),)),
            Node("where", (predicate,)),
        ),
    )
    return _replace(tree.root, select, outer)


# -- strategy: double negation ------------------------------------------------------------------


def _negation_target(tree: SqlTree) -> Node | None:
    for select in _selects(tree.root):
        where = select.child("where")
        if where is not None:
            return where
    return None


def _negation_applicable(tree: SqlTree) -> bool:
    return _negation_target(tree) is not None


def _negation_transform(tree: SqlTree, rng: random.Random) -> Node:
    where = _negation_target(tree)
    if where is None:
        raise TransformError("no predicate to negate despite applicability")
    doubled = Node("not", (Node("not", (where.children[0],)),))
    return _replace(tree.root, where, Node("where", (doubled,)))


# -- library ---------------------------------------------------------------------------------------


def _strategy(sid: str, description: str, applicability, transform, prompt: str) -> SlowdownStrategy:
    return SlowdownStrategy(
        id=sid,
        description=description,
        applicability=applicability,
        transform=transform,
        prompt_template=prompt,
    )


_LIBRARY: tuple[SlowdownStrategy, ...] = (
    _strategy(
        "equi_join_to_exists",
        "Invert join decorrelation: replace an equi-join whose joined relation "
        "contributes no output columns with a correlated EXISTS subquery, "
        "forcing per-row probing instead of set-oriented processing.",
        _join_applicable,
        _join_transform,
        "Rewrite one equi-join into a correlated EXISTS subquery over the same "
        "relation. Keep every returned row identical; only the join shape may change.",
    ),
    _strategy(
        "predicate_pullup",
        "Hoist a WHERE filter above a freshly introduced derived table so the "
        "filter no longer sits next to the scan it prunes.",
        _pullup_applicable,
        _pullup_transform,
        "Move the WHERE clause outside the query by wrapping the unfiltered query "
        "in a derived table and filtering the wrapper. Do not change any predicate.",
    ),
    _strategy(
        "redundant_distinct",
        "Add DISTINCT to a grouped query whose output rows are already unique, "
        "forcing a pointless deduplication pass.",
        _distinct_applicable,
        _distinct_transform,
        "Add a DISTINCT keyword to a SELECT whose rows are provably unique already "
        "(for example, grouped output that projects all grouping keys).",
    ),
    _strategy(
        "subquery_orderby",
        "Inject a superfluous ORDER BY into a subquery whose output order is "
        "irrelevant to the final result.",
        _orderby_applicable,
        _orderby_transform,
        "Add an ORDER BY inside one subquery or derived table. The outer query "
        "must stay byte-for-byte compatible in its result set.",
    ),
    _strategy(
        "self_wrap",
        "Wrap the whole query in SELECT * FROM (...) to deepen nesting without "
        "changing a single output row.",
        _wrap_applicable,
        _wrap_transform,
        "Wrap the entire query in one additional layer of SELECT * FROM ( ... ) AS w "
        "without altering projections or filters.",
    ),
    _strategy(
        "in_list_to_or",
        "Explode a literal IN list into an equivalent chain of OR equality "
        "comparisons the optimizer can no longer collapse into one probe.",
        _inlist_applicable,
        _inlist_transform,
        "Replace one IN (literal, literal, ...) predicate with the equivalent "
        "chain of OR equality comparisons.",
    ),
    _strategy(
        "scalar_subquery_duplicate",
        "Duplicate a constant comparison through a scalar subquery, adding a "
        "redundant conjunct the engine must evaluate per row.",
        _scalar_applicable,
        _scalar_transform,
        "Pick a comparison against a constant and AND it with the same comparison "
        "where the constant is wrapped in a scalar subquery (SELECT constant).",
    ),
    _strategy(
        "union_split",
        "Split a disjunctive filter on a DISTINCT query into a UNION of "
        "per-disjunct branches, multiplying scans of the same relations.",
        _union_applicable,
        _union_transform,
        "Split the top-level OR in the WHERE clause into separate SELECT branches "
        "combined with UNION. The query already deduplicates, so results must match.",
    ),
    _strategy(
        "cte_indirection",
        "Route the whole query through a WITH clause and reselect from it, "
        "adding a materialization point.",
        _cte_applicable,
        _cte_transform,
        "Wrap the entire query as a CTE and SELECT * from the CTE name. Keep the "
        "result set identical.",
    ),
    _strategy(
        "double_negation",
        "Wrap the row filter in NOT(NOT(...)), which blocks sargable-predicate "
        "analysis while preserving three-valued logic.",
        _negation_applicable,
        _negation_transform,
        "Wrap the whole WHERE predicate in a double negation NOT (NOT ( ... )). "
        "Three-valued logic keeps the filtered rows identical.",
    ),
)

# Strategies whose only effect is syntactic noise; the corpus audit drops
# records whose lineage contains nothing else.
NOISE_STRATEGY_IDS = frozenset({"subquery_orderby", "self_wrap"})


def builtin_library() -> list[SlowdownStrategy]:
    return list(_LIBRARY)


def get_strategy(strategy_id: str) -> SlowdownStrategy:
    for s in _LIBRARY:
        if s.id == strategy_id:
            return s
    raise KeyError(strategy_id)


def applicable_strategies(tree: SqlTree, history: StrategyHistory) -> list[SlowdownStrategy]:
    return [s for s in _LIBRARY if s.id not in history and s.applicability(tree)]


def apply(strategy: SlowdownStrategy, tree: SqlTree, seed: int) -> SqlTree:
    """Apply a strategy deterministically. The result is re-parsed from its
    rendered text, so the output is canonical and guaranteed to parse."""
    if not strategy.applicability(tree):
        raise TransformError(f"{strategy.id} is not applicable to this query")
    rng = random.Random(seed)
    try:
        new_root = strategy.transform(tree, rng)
        rendered = render(SqlTree(new_root, tree.dialect))
        return parse(rendered, tree.dialect)
    except TransformError:
        raise
    except (ParseError, ValueError) as exc:
        raise TransformError(f"{strategy.id} produced unusable output: {exc}") from exc


def library_manifest() -> str:
    """JSON manifest of the builtin library for audit."""
    doc = [
        {"id": s.id, "description": s.description, "prompt_template": s.prompt_template}
        for s in _LIBRARY
    ]
    return json.dumps(doc, indent=2)
