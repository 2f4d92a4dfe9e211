"""Tokenizer for the supported SELECT-statement dialect subset."""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ParseError
from .nodes import Dialect

KEYWORDS = frozenset(
    """
    SELECT FROM WHERE GROUP BY HAVING ORDER LIMIT OFFSET AS ON AND OR NOT
    IN IS NULL LIKE BETWEEN EXISTS DISTINCT ALL ANY JOIN INNER LEFT RIGHT FULL
    OUTER CROSS UNION INTERSECT EXCEPT WITH CASE WHEN THEN ELSE END CAST
    ASC DESC TRUE FALSE OVER PARTITION
    """.split()
)

# Multi-char operators first so the scanner is longest-match.
OPERATORS = ("<>", "!=", "<=", ">=", "||", "=", "<", ">", "+", "-", "*", "/", "%")
PUNCT = ("(", ")", ",", ".")


@dataclass(frozen=True, slots=True)
class Token:
    kind: str  # KW, IDENT, QIDENT, INT, NUM, STR, OP, PUNCT, EOF
    value: str
    offset: int


def tokenize(text: str, dialect: Dialect = Dialect.POSTGRES) -> list[Token]:
    quote_char = '"' if dialect is Dialect.POSTGRES else "`"
    tokens: list[Token] = []
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch in " \t\r\n":
            i += 1
            continue
        if ch == "-" and text.startswith("--", i):
            j = text.find("\n", i)
            i = n if j < 0 else j + 1
            continue
        if ch == "/" and text.startswith("/*", i):
            j = text.find("*/", i + 2)
            if j < 0:
                raise ParseError("unterminated block comment", i, ("*/",))
            i = j + 2
            continue
        if ch == "'":
            j = i + 1
            buf: list[str] = []
            while True:
                if j >= n:
                    raise ParseError("unterminated string literal", i, ("'",))
                if text[j] == "'":
                    if j + 1 < n and text[j + 1] == "'":  # escaped quote
                        buf.append("'")
                        j += 2
                        continue
                    break
                buf.append(text[j])
                j += 1
            tokens.append(Token("STR", "".join(buf), i))
            i = j + 1
            continue
        if ch == quote_char:
            j = text.find(quote_char, i + 1)
            if j < 0:
                raise ParseError("unterminated quoted identifier", i, (quote_char,))
            tokens.append(Token("QIDENT", text[i + 1 : j], i))
            i = j + 1
            continue
        if ch.isdigit() or (ch == "." and i + 1 < n and text[i + 1].isdigit()):
            j = i
            seen_dot = False
            seen_exp = False
            while j < n:
                c = text[j]
                if c.isdigit():
                    j += 1
                elif c == "." and not seen_dot and not seen_exp:
                    seen_dot = True
                    j += 1
                elif c in "eE" and not seen_exp and j > i:
                    if j + 1 < n and (text[j + 1].isdigit() or text[j + 1] in "+-"):
                        seen_exp = True
                        j += 2 if text[j + 1] in "+-" else 1
                    else:
                        break
                else:
                    break
            value = text[i:j]
            tokens.append(Token("NUM" if (seen_dot or seen_exp) else "INT", value, i))
            i = j
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            word = text[i:j]
            upper = word.upper()
            if upper in KEYWORDS:
                tokens.append(Token("KW", upper, i))
            else:
                tokens.append(Token("IDENT", word.lower(), i))
            i = j
            continue
        matched = False
        for op in OPERATORS:
            if text.startswith(op, i):
                tokens.append(Token("OP", "<>" if op == "!=" else op, i))
                i += len(op)
                matched = True
                break
        if matched:
            continue
        if ch in PUNCT:
            tokens.append(Token("PUNCT", ch, i))
            i += 1
            continue
        raise ParseError(f"unexpected character {ch!r}", i, ())
    tokens.append(Token("EOF", "", n))
    return tokens
