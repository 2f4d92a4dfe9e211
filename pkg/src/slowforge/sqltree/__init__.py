"""Parsing, rendering, edit distance, and complexity metrics for SQL trees."""

from .distance import structural_distance, structural_score, tree_edit_distance
from .errors import ParseError
from .lexer import tokenize
from .metrics import ComplexityProfile, complexity_profile
from .nodes import Dialect, Node, SqlTree, rewrite
from .parser import parse
from .render import render, render_node

__all__ = [
    "ComplexityProfile",
    "Dialect",
    "Node",
    "ParseError",
    "SqlTree",
    "complexity_profile",
    "parse",
    "render",
    "render_node",
    "rewrite",
    "structural_distance",
    "structural_score",
    "tokenize",
    "tree_edit_distance",
]
