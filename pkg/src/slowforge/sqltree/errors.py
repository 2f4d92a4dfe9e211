"""Exceptions raised by the SQL tree layer."""

from __future__ import annotations


class ParseError(Exception):
    """Malformed SQL. Carries the byte offset of the offending token and the
    tokens the parser would have accepted there."""

    def __init__(self, message: str, offset: int, expected: tuple[str, ...] = ()):
        self.offset = offset
        self.expected = tuple(expected)
        hint = f" (expected {' or '.join(self.expected)})" if self.expected else ""
        super().__init__(f"{message} at offset {offset}{hint}")
