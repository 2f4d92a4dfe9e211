"""Canonical SQL text from a labeled tree.

Rendering is deterministic: upper-case keywords, single spaces, lower-case
identifiers, minimal-but-safe parentheses. ``parse(render(tree))`` yields a
tree with identical labels in identical order for every tree the parser can
produce.
"""

from __future__ import annotations

from .nodes import SET_OP_LABELS, STATEMENT_LABELS, Dialect, Node, SqlTree

_PREC = {
    "or": 1,
    "and": 2,
    "not": 3,
    "in": 4,
    "not_in": 4,
    "like": 4,
    "not_like": 4,
    "between": 4,
    "not_between": 4,
    "is_null": 4,
    "is_not_null": 4,
    "op:+": 5,
    "op:-": 5,
    "op:||": 5,
    "op:*": 6,
    "op:/": 6,
    "op:%": 6,
    "neg": 7,
}
_SET_OP_SQL = {
    "union": "UNION",
    "union_all": "UNION ALL",
    "intersect": "INTERSECT",
    "except": "EXCEPT",
}
_SELECT_SLOTS = (
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


def render(tree: SqlTree) -> str:
    return _statement(tree.root, tree.dialect)


def render_node(node: Node, dialect: Dialect = Dialect.POSTGRES) -> str:
    """Render an arbitrary statement node (used by transforms and tests)."""
    return _statement(node, dialect)


def _prec(node: Node) -> int:
    if node.label.startswith("cmp:"):
        return 4
    return _PREC.get(node.label, 8)


def _statement(node: Node, d: Dialect) -> str:
    if node.label == "select":
        return _select(node, d)
    if node.label in SET_OP_LABELS:
        return _set_op(node, d)
    if node.label == "with":
        ctes = [c for c in node.children if c.label == "cte"]
        body = [c for c in node.children if c.label in STATEMENT_LABELS]
        if len(body) != 1:
            raise ValueError("with-wrapper must contain exactly one statement")
        return f"{_with_prefix(ctes, d)} {_statement(body[0], d)}"
    raise ValueError(f"not a statement node: {node.label}")


def _with_prefix(ctes: list[Node], d: Dialect) -> str:
    parts = [f"{_ident(c.text or '', d)} AS ({_statement(c.children[0], d)})" for c in ctes]
    return "WITH " + ", ".join(parts)


def _select(node: Node, d: Dialect) -> str:
    slots: dict[str, list[Node]] = {}
    for c in node.children:
        slots.setdefault(c.label, []).append(c)
    unknown = set(slots) - set(_SELECT_SLOTS)
    if unknown:
        raise ValueError(f"unexpected select clause(s): {sorted(unknown)}")
    out: list[str] = []
    if "with" in slots:
        out.append(_with_prefix(list(slots["with"][0].children), d))
    out.append("SELECT")
    if "distinct" in slots:
        out.append("DISTINCT")
    proj = slots["projections"][0]
    out.append(", ".join(_expr(p, d) for p in proj.children))
    if "from" in slots:
        out.append("FROM " + ", ".join(_from_ref(r, d) for r in slots["from"][0].children))
    if "where" in slots:
        out.append("WHERE " + _expr(slots["where"][0].children[0], d))
    if "group_by" in slots:
        out.append("GROUP BY " + ", ".join(_expr(e, d) for e in slots["group_by"][0].children))
    if "having" in slots:
        out.append("HAVING " + _expr(slots["having"][0].children[0], d))
    for label in ("order_by", "limit", "offset"):
        if label in slots:
            out.append(_tail_clause(slots[label][0], d))
    return " ".join(out)


def _set_op(node: Node, d: Dialect) -> str:
    stmts = [c for c in node.children if c.label in STATEMENT_LABELS]
    extras = [c for c in node.children if c.label not in STATEMENT_LABELS]
    if len(stmts) != 2:
        raise ValueError(f"{node.label} needs exactly two statement children")
    left = _set_operand(stmts[0], d)
    right = _set_operand(stmts[1], d)
    parts = [f"{left} {_SET_OP_SQL[node.label]} {right}"]
    for extra in extras:
        parts.append(_tail_clause(extra, d))
    return " ".join(parts)


def _set_operand(node: Node, d: Dialect) -> str:
    # Nested set operations are parenthesized to keep associativity explicit.
    if node.label in SET_OP_LABELS:
        return f"({_statement(node, d)})"
    return _statement(node, d)


def _tail_clause(node: Node, d: Dialect) -> str:
    if node.label == "order_by":
        items = []
        for s in node.children:
            direction = " DESC" if s.label == "sort:desc" else ""
            items.append(_expr(s.children[0], d) + direction)
        return "ORDER BY " + ", ".join(items)
    if node.label == "limit":
        return "LIMIT " + (node.children[0].text or "0")
    if node.label == "offset":
        return "OFFSET " + (node.children[0].text or "0")
    raise ValueError(f"unexpected trailing clause: {node.label}")


def _from_ref(node: Node, d: Dialect) -> str:
    if node.label == "table":
        return _ident(node.text or "", d)
    if node.label == "alias":
        return f"{_from_ref(node.children[0], d)} AS {_ident(node.text or '', d)}"
    if node.label == "derived":
        return f"({_statement(node.children[0], d)}) AS {_ident(node.text or '', d)}"
    if node.label.startswith("join:"):
        kind = node.label.split(":", 1)[1]
        kw = {
            "inner": "JOIN",
            "left": "LEFT JOIN",
            "right": "RIGHT JOIN",
            "full": "FULL JOIN",
            "cross": "CROSS JOIN",
        }[kind]
        left = _from_ref(node.children[0], d)
        right = _from_ref(node.children[1], d)
        text = f"{left} {kw} {right}"
        on = node.child("on")
        if on is not None:
            text += f" ON {_expr(on.children[0], d)}"
        return text
    raise ValueError(f"unexpected FROM reference: {node.label}")


def _ident(name: str, d: Dialect) -> str:
    safe = name.replace(".", "").replace("_", "")
    if safe.isalnum() and not name[:1].isdigit() and name == name.lower():
        return name
    q = '"' if d is Dialect.POSTGRES else "`"
    return ".".join(f"{q}{part}{q}" for part in name.split("."))


def _expr(node: Node, d: Dialect, parent_prec: int = 0, right_operand: bool = False) -> str:
    text = _expr_inner(node, d)
    p = _prec(node)
    if p < 8 and (p < parent_prec or (p == parent_prec and right_operand)):
        return f"({text})"
    return text


def _expr_inner(node: Node, d: Dialect) -> str:
    label = node.label
    if label.startswith("ident:"):
        return _ident(node.text or label[6:], d)
    if label == "<int>" or label == "<num>":
        return node.text or "0"
    if label == "<str>":
        return "'" + (node.text or "").replace("'", "''") + "'"
    if label == "<null>":
        return "NULL"
    if label == "<bool>":
        return node.text or "TRUE"
    if label == "star":
        return "*"
    if label.startswith("star:"):
        return f"{_ident(label[5:], d)}.*"
    if label in ("and", "or"):
        p = _prec(node)
        kw = f" {label.upper()} "
        return kw.join(_expr(c, d, p) for c in node.children)
    if label == "not":
        return "NOT " + _expr(node.children[0], d, _prec(node), right_operand=True)
    if label.startswith("cmp:"):
        op = label.split(":", 1)[1]
        lhs = _expr(node.children[0], d, 4)
        rhs = _expr(node.children[1], d, 4, right_operand=True)
        return f"{lhs} {op} {rhs}"
    if label in ("in", "not_in"):
        lhs = _expr(node.children[0], d, 4)
        kw = "NOT IN" if label == "not_in" else "IN"
        src = node.children[1]
        if src.label == "exprlist":
            inner = ", ".join(_expr(e, d) for e in src.children)
        else:
            inner = _statement(src.children[0], d)
        return f"{lhs} {kw} ({inner})"
    if label in ("like", "not_like"):
        kw = "NOT LIKE" if label == "not_like" else "LIKE"
        return f"{_expr(node.children[0], d, 4)} {kw} {_expr(node.children[1], d, 4, True)}"
    if label in ("between", "not_between"):
        kw = "NOT BETWEEN" if label == "not_between" else "BETWEEN"
        lhs = _expr(node.children[0], d, 4)
        lo = _expr(node.children[1], d, 5)
        hi = _expr(node.children[2], d, 5)
        return f"{lhs} {kw} {lo} AND {hi}"
    if label in ("is_null", "is_not_null"):
        kw = "IS NOT NULL" if label == "is_not_null" else "IS NULL"
        return f"{_expr(node.children[0], d, 4)} {kw}"
    if label in ("exists", "not_exists"):
        kw = "NOT EXISTS" if label == "not_exists" else "EXISTS"
        return f"{kw} ({_statement(node.children[0].children[0], d)})"
    if label == "subquery":
        return f"({_statement(node.children[0], d)})"
    if label.startswith("op:"):
        op = label.split(":", 1)[1]
        p = _prec(node)
        lhs = _expr(node.children[0], d, p)
        rhs = _expr(node.children[1], d, p, right_operand=True)
        return f"{lhs} {op} {rhs}"
    if label == "neg":
        return "-" + _expr(node.children[0], d, 7, right_operand=True)
    if label.startswith("func:"):
        name = label.split(":", 1)[1]
        if len(node.children) == 1 and node.children[0].label == "star":
            return f"{name}(*)"
        if len(node.children) == 1 and node.children[0].label == "distinct":
            inner = ", ".join(_expr(e, d) for e in node.children[0].children)
            return f"{name}(DISTINCT {inner})"
        return f"{name}({', '.join(_expr(e, d) for e in node.children)})"
    if label == "over":
        func = _expr(node.children[0], d)
        inner_parts = []
        for c in node.children[1:]:
            if c.label == "partition_by":
                inner_parts.append("PARTITION BY " + ", ".join(_expr(e, d) for e in c.children))
            elif c.label == "order_by":
                inner_parts.append(_tail_clause(c, d))
        return f"{func} OVER ({' '.join(inner_parts)})"
    if label == "case":
        parts = ["CASE"]
        for c in node.children:
            if c.label == "when":
                parts.append(f"WHEN {_expr(c.children[0], d)} THEN {_expr(c.children[1], d)}")
            elif c.label == "else":
                parts.append(f"ELSE {_expr(c.children[0], d)}")
        parts.append("END")
        return " ".join(parts)
    if label == "cast":
        return f"CAST({_expr(node.children[0], d)} AS {node.text or 'TEXT'})"
    if label == "alias":
        return f"{_expr(node.children[0], d)} AS {_ident(node.text or '', d)}"
    raise ValueError(f"cannot render node: {label}")
