"""Recursive-descent parser for the supported SELECT-statement subset.

The subset covers joins, CTEs, set operations, correlated subqueries,
aggregates, and window functions. DDL and DML are out of scope: the pipeline
only ever handles read queries. Keyword case and insignificant whitespace
never affect the resulting tree; unquoted identifiers are lower-cased and
literals keep their text but take token-class labels.
"""

from __future__ import annotations

from .errors import ParseError
from .lexer import Token, tokenize
from .nodes import Dialect, Node, SqlTree

_CMP_OPS = {"=", "<>", "<", "<=", ">", ">="}
_STATEMENT_STARTERS = ("SELECT", "WITH", "(")


def parse(sql_text: str, dialect: Dialect = Dialect.POSTGRES) -> SqlTree:
    """Parse SQL into a normalized labeled ordered tree.

    Raises ParseError (with byte offset and an expected-token hint) on
    malformed input or on constructs outside the supported subset.
    """
    if not sql_text or not sql_text.strip():
        raise ParseError("empty statement", 0, _STATEMENT_STARTERS)
    tokens = tokenize(sql_text, dialect)
    p = _Parser(tokens)
    root = p.statement()
    p.expect_eof()
    return SqlTree(root, dialect)


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.pos = 0

    # -- token plumbing ----------------------------------------------------

    def peek(self, ahead: int = 0) -> Token:
        return self.tokens[min(self.pos + ahead, len(self.tokens) - 1)]

    def advance(self) -> Token:
        tok = self.tokens[self.pos]
        if tok.kind != "EOF":
            self.pos += 1
        return tok

    def at_kw(self, *words: str) -> bool:
        t = self.peek()
        return t.kind == "KW" and t.value in words

    def at_punct(self, ch: str) -> bool:
        t = self.peek()
        return t.kind == "PUNCT" and t.value == ch

    def accept_kw(self, *words: str) -> Token | None:
        if self.at_kw(*words):
            return self.advance()
        return None

    def accept_punct(self, ch: str) -> bool:
        if self.at_punct(ch):
            self.advance()
            return True
        return False

    def expect_kw(self, word: str) -> Token:
        if not self.at_kw(word):
            self.fail(word)
        return self.advance()

    def expect_punct(self, ch: str) -> Token:
        if not self.at_punct(ch):
            self.fail(ch)
        return self.advance()

    def expect_ident(self) -> Token:
        t = self.peek()
        if t.kind not in ("IDENT", "QIDENT"):
            self.fail("identifier")
        return self.advance()

    def expect_eof(self) -> None:
        t = self.peek()
        if t.kind != "EOF":
            self.fail("end of statement")

    def fail(self, *expected: str) -> None:
        t = self.peek()
        shown = t.value if t.kind != "EOF" else "end of input"
        raise ParseError(f"unexpected {shown!r}", t.offset, expected)

    # -- statements --------------------------------------------------------

    def statement(self) -> Node:
        with_node = None
        if self.at_kw("WITH"):
            with_node = self.with_clause()
        node = self.set_expr()
        if with_node is not None:
            if node.label != "select":
                # WITH over a set operation: keep the with node as the root.
                return Node("with", with_node.children + (node,))
            node = Node("select", (with_node,) + node.children)
        return node

    def with_clause(self) -> Node:
        self.expect_kw("WITH")
        ctes = [self.cte()]
        while self.accept_punct(","):
            ctes.append(self.cte())
        return Node("with", tuple(ctes))

    def cte(self) -> Node:
        name = self.expect_ident().value
        self.expect_kw("AS")
        self.expect_punct("(")
        body = self.statement()
        self.expect_punct(")")
        return Node("cte", (body,), name)

    def set_expr(self) -> Node:
        node = self.set_term()
        while self.at_kw("UNION", "INTERSECT", "EXCEPT"):
            op = self.advance().value
            label = {"UNION": "union", "INTERSECT": "intersect", "EXCEPT": "except"}[op]
            if label == "union" and self.accept_kw("ALL"):
                label = "union_all"
            right = self.set_term()
            node = Node(label, (node, right))
        tail: list[Node] = []
        if self.at_kw("ORDER"):
            tail.append(self.order_by())
        if self.at_kw("LIMIT"):
            tail.append(self.limit_clause())
        if self.at_kw("OFFSET"):
            tail.append(self.offset_clause())
        if tail:
            node = node.with_children(node.children + tuple(tail))
        return node

    def set_term(self) -> Node:
        if self.at_punct("("):
            self.advance()
            inner = self.statement()
            self.expect_punct(")")
            return inner
        return self.select_core()

    def select_core(self) -> Node:
        if not self.at_kw("SELECT"):
            self.fail(*_STATEMENT_STARTERS)
        self.advance()
        children: list[Node] = []
        if self.accept_kw("DISTINCT"):
            children.append(Node("distinct"))
        else:
            self.accept_kw("ALL")
        projections = [self.projection()]
        while self.accept_punct(","):
            projections.append(self.projection())
        children.append(Node("projections", tuple(projections)))
        if self.accept_kw("FROM"):
            refs = [self.from_item()]
            while self.accept_punct(","):
                refs.append(self.from_item())
            children.append(Node("from", tuple(refs)))
        if self.accept_kw("WHERE"):
            children.append(Node("where", (self.expr(),)))
        if self.at_kw("GROUP"):
            self.advance()
            self.expect_kw("BY")
            exprs = [self.expr()]
            while self.accept_punct(","):
                exprs.append(self.expr())
            children.append(Node("group_by", tuple(exprs)))
        if self.accept_kw("HAVING"):
            children.append(Node("having", (self.expr(),)))
        return Node("select", tuple(children))

    def order_by(self) -> Node:
        self.expect_kw("ORDER")
        self.expect_kw("BY")
        items = [self.sort_item()]
        while self.accept_punct(","):
            items.append(self.sort_item())
        return Node("order_by", tuple(items))

    def sort_item(self) -> Node:
        e = self.expr()
        direction = "desc" if self.accept_kw("DESC") else "asc"
        if direction == "asc":
            self.accept_kw("ASC")
        return Node(f"sort:{direction}", (e,))

    def limit_clause(self) -> Node:
        self.expect_kw("LIMIT")
        t = self.peek()
        if t.kind != "INT":
            self.fail("integer")
        self.advance()
        return Node("limit", (Node("<int>", (), t.value),))

    def offset_clause(self) -> Node:
        self.expect_kw("OFFSET")
        t = self.peek()
        if t.kind != "INT":
            self.fail("integer")
        self.advance()
        return Node("offset", (Node("<int>", (), t.value),))

    # -- FROM items ----------------------------------------------------------

    def from_item(self) -> Node:
        node = self.primary_ref()
        while True:
            join_label = self.join_prefix()
            if join_label is None:
                return node
            right = self.primary_ref()
            kids: tuple[Node, ...] = (node, right)
            if join_label != "join:cross" and self.accept_kw("ON"):
                kids = kids + (Node("on", (self.expr(),)),)
            node = Node(join_label, kids)

    def join_prefix(self) -> str | None:
        if self.at_kw("JOIN"):
            self.advance()
            return "join:inner"
        for kw, label in (
            ("INNER", "join:inner"),
            ("LEFT", "join:left"),
            ("RIGHT", "join:right"),
            ("FULL", "join:full"),
            ("CROSS", "join:cross"),
        ):
            if self.at_kw(kw):
                self.advance()
                self.accept_kw("OUTER")
                self.expect_kw("JOIN")
                return label
        return None

    def primary_ref(self) -> Node:
        if self.at_punct("("):
            self.advance()
            stmt = self.statement()
            self.expect_punct(")")
            self.accept_kw("AS")
            alias = self.expect_ident().value
            return Node("derived", (stmt,), alias)
        name = self.expect_ident().value
        node = Node("table", (), name)
        alias = self.maybe_alias()
        if alias is not None:
            node = Node("alias", (node,), alias)
        return node

    def maybe_alias(self) -> str | None:
        if self.accept_kw("AS"):
            return self.expect_ident().value
        t = self.peek()
        if t.kind in ("IDENT", "QIDENT"):
            return self.advance().value
        return None

    # -- projections -------------------------------------------------------

    def projection(self) -> Node:
        t = self.peek()
        if t.kind == "OP" and t.value == "*":
            self.advance()
            return Node("star")
        if (
            t.kind in ("IDENT", "QIDENT")
            and self.peek(1).kind == "PUNCT"
            and self.peek(1).value == "."
            and self.peek(2).kind == "OP"
            and self.peek(2).value == "*"
        ):
            self.advance()
            self.advance()
            self.advance()
            return Node(f"star:{t.value}")
        e = self.expr()
        alias = self.maybe_alias()
        if alias is not None:
            return Node("alias", (e,), alias)
        return e

    # -- expressions ---------------------------------------------------------

    def expr(self) -> Node:
        return self.or_expr()

    def or_expr(self) -> Node:
        terms = [self.and_expr()]
        while self.accept_kw("OR"):
            terms.append(self.and_expr())
        if len(terms) == 1:
            return terms[0]
        return Node("or", tuple(self._flatten("or", terms)))

    def and_expr(self) -> Node:
        terms = [self.not_expr()]
        while self.accept_kw("AND"):
            terms.append(self.not_expr())
        if len(terms) == 1:
            return terms[0]
        return Node("and", tuple(self._flatten("and", terms)))

    @staticmethod
    def _flatten(label: str, terms: list[Node]) -> list[Node]:
        out: list[Node] = []
        for t in terms:
            if t.label == label:
                out.extend(t.children)
            else:
                out.append(t)
        return out

    def not_expr(self) -> Node:
        if self.at_kw("NOT"):
            self.advance()
            if self.at_kw("EXISTS"):
                return self.exists_expr(negated=True)
            return Node("not", (self.not_expr(),))
        return self.predicate()

    def predicate(self) -> Node:
        left = self.additive()
        t = self.peek()
        if t.kind == "OP" and t.value in _CMP_OPS:
            self.advance()
            right = self.additive()
            return Node(f"cmp:{t.value}", (left, right))
        negated = False
        if self.at_kw("NOT"):
            nxt = self.peek(1)
            if nxt.kind == "KW" and nxt.value in ("IN", "LIKE", "BETWEEN"):
                self.advance()
                negated = True
            else:
                self.fail("IN", "LIKE", "BETWEEN")
        if self.accept_kw("IN"):
            self.expect_punct("(")
            if self.at_kw("SELECT", "WITH"):
                source: Node = Node("subquery", (self.statement(),))
            else:
                items = [self.expr()]
                while self.accept_punct(","):
                    items.append(self.expr())
                source = Node("exprlist", tuple(items))
            self.expect_punct(")")
            return Node("not_in" if negated else "in", (left, source))
        if self.accept_kw("LIKE"):
            pattern = self.additive()
            return Node("not_like" if negated else "like", (left, pattern))
        if self.accept_kw("BETWEEN"):
            low = self.additive()
            self.expect_kw("AND")
            high = self.additive()
            return Node("not_between" if negated else "between", (left, low, high))
        if self.at_kw("IS"):
            self.advance()
            neg = self.accept_kw("NOT") is not None
            self.expect_kw("NULL")
            return Node("is_not_null" if neg else "is_null", (left,))
        return left

    def additive(self) -> Node:
        node = self.multiplicative()
        while True:
            t = self.peek()
            if t.kind == "OP" and t.value in ("+", "-", "||"):
                self.advance()
                node = Node(f"op:{t.value}", (node, self.multiplicative()))
            else:
                return node

    def multiplicative(self) -> Node:
        node = self.unary()
        while True:
            t = self.peek()
            if t.kind == "OP" and t.value in ("*", "/", "%"):
                self.advance()
                node = Node(f"op:{t.value}", (node, self.unary()))
            else:
                return node

    def unary(self) -> Node:
        t = self.peek()
        if t.kind == "OP" and t.value == "-":
            self.advance()
            return Node("neg", (self.unary(),))
        return self.primary()

    def exists_expr(self, negated: bool) -> Node:
        self.expect_kw("EXISTS")
        self.expect_punct("(")
        stmt = self.statement()
        self.expect_punct(")")
        return Node("not_exists" if negated else "exists", (Node("subquery", (stmt,)),))

    def primary(self) -> Node:
        t = self.peek()
        if t.kind == "INT":
            self.advance()
            return Node("<int>", (), t.value)
        if t.kind == "NUM":
            self.advance()
            return Node("<num>", (), t.value)
        if t.kind == "STR":
            self.advance()
            return Node("<str>", (), t.value)
        if t.kind == "KW":
            if t.value == "NULL":
                self.advance()
                return Node("<null>")
            if t.value in ("TRUE", "FALSE"):
                self.advance()
                return Node("<bool>", (), t.value)
            if t.value == "EXISTS":
                return self.exists_expr(negated=False)
            if t.value == "CASE":
                return self.case_expr()
            if t.value == "CAST":
                return self.cast_expr()
            self.fail("expression")
        if t.kind == "PUNCT" and t.value == "(":
            self.advance()
            if self.at_kw("SELECT", "WITH"):
                stmt = self.statement()
                self.expect_punct(")")
                return Node("subquery", (stmt,))
            inner = self.expr()
            self.expect_punct(")")
            return inner
        if t.kind in ("IDENT", "QIDENT"):
            nxt = self.peek(1)
            if nxt.kind == "PUNCT" and nxt.value == "(":
                return self.func_call()
            self.advance()
            name = t.value
            if self.at_punct(".") and self.peek(1).kind in ("IDENT", "QIDENT"):
                self.advance()
                col = self.advance().value
                name = f"{name}.{col}"
            return Node(f"ident:{name}", (), name)
        self.fail("expression")
        raise AssertionError("unreachable")

    def func_call(self) -> Node:
        name = self.advance().value
        self.expect_punct("(")
        args: tuple[Node, ...] = ()
        if self.at_punct(")"):
            self.advance()
        else:
            t = self.peek()
            if t.kind == "OP" and t.value == "*":
                self.advance()
                args = (Node("star"),)
            else:
                distinct = self.accept_kw("DISTINCT") is not None
                exprs = [self.expr()]
                while self.accept_punct(","):
                    exprs.append(self.expr())
                if distinct:
                    args = (Node("distinct", tuple(exprs)),)
                else:
                    args = tuple(exprs)
            self.expect_punct(")")
        node = Node(f"func:{name}", args)
        if self.at_kw("OVER"):
            self.advance()
            node = self.window_spec(node)
        return node

    def window_spec(self, func: Node) -> Node:
        self.expect_punct("(")
        kids: list[Node] = [func]
        if self.at_kw("PARTITION"):
            self.advance()
            self.expect_kw("BY")
            exprs = [self.expr()]
            while self.accept_punct(","):
                exprs.append(self.expr())
            kids.append(Node("partition_by", tuple(exprs)))
        if self.at_kw("ORDER"):
            kids.append(self.order_by())
        self.expect_punct(")")
        return Node("over", tuple(kids))

    def case_expr(self) -> Node:
        self.expect_kw("CASE")
        whens: list[Node] = []
        while self.at_kw("WHEN"):
            self.advance()
            cond = self.expr()
            self.expect_kw("THEN")
            result = self.expr()
            whens.append(Node("when", (cond, result)))
        if not whens:
            self.fail("WHEN")
        if self.accept_kw("ELSE"):
            whens.append(Node("else", (self.expr(),)))
        self.expect_kw("END")
        return Node("case", tuple(whens))

    def cast_expr(self) -> Node:
        self.expect_kw("CAST")
        self.expect_punct("(")
        inner = self.expr()
        self.expect_kw("AS")
        type_tok = self.peek()
        if type_tok.kind not in ("IDENT", "QIDENT"):
            self.fail("type name")
        self.advance()
        self.expect_punct(")")
        return Node("cast", (inner,), type_tok.value.upper())
