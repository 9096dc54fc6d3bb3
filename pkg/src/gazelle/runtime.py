"""Shared runtime semantics: arithmetic and pattern matching.

Integer division and modulo truncate toward zero with the remainder taking
the dividend's sign, matching the source language.  Values are plain Python
data: ints, bools, None for unit, Python lists for lists, tuples, ("C",
name, args) for constructors, ("R", type, fields) for records, ("A", cells)
for arrays.
"""

from __future__ import annotations

from typing import Any, Optional

from .source_ast import (PAs, PConstruct, POr, PTuple, PTyped, PVar, PWild,
                         Pattern)


class SemanticError(Exception):
    pass


def int_div(a: int, b: int) -> int:
    if b == 0:
        raise ZeroDivisionError
    q = abs(a) // abs(b)
    return q if (a >= 0) == (b >= 0) else -q


def int_mod(a: int, b: int) -> int:
    return a - b * int_div(a, b)


def match_value(pat: Pattern, value) -> Optional[dict[str, Any]]:
    """Ordered structural matching of runtime values against patterns."""
    if isinstance(pat, PWild):
        return {}
    if isinstance(pat, PVar):
        return {pat.name: value}
    if isinstance(pat, PAs):
        inner = match_value(pat.pattern, value)
        if inner is None:
            return None
        inner[pat.name] = value
        return inner
    if isinstance(pat, PTyped):
        return match_value(pat.pattern, value)
    if isinstance(pat, POr):
        left = match_value(pat.left, value)
        if left is not None:
            return left
        return match_value(pat.right, value)
    if isinstance(pat, PTuple):
        if not isinstance(value, tuple) or len(value) != len(pat.items):
            return None
        out: dict[str, Any] = {}
        for p, v in zip(pat.items, value):
            r = match_value(p, v)
            if r is None:
                return None
            out.update(r)
        return out
    if isinstance(pat, PConstruct):
        if pat.name == "[]":
            return {} if value == [] else None
        if pat.name == "::":
            if not isinstance(value, list) or not value:
                return None
            head = match_value(pat.args[0], value[0])
            if head is None:
                return None
            tail = match_value(pat.args[1], value[1:])
            if tail is None:
                return None
            head.update(tail)
            return head
        if not (isinstance(value, tuple) and value and value[0] == "C"):
            return None
        if value[1] != pat.name or len(value[2]) != len(pat.args):
            return None
        out = {}
        for p, v in zip(pat.args, value[2]):
            r = match_value(p, v)
            if r is None:
                return None
            out.update(r)
        return out
    return None
