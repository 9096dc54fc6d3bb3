"""Typed representations of parsed specification payloads."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

from ..diagnostics import Loc, UNKNOWN_LOC
from ..source_ast import SrcType
from ..terms import Term


@dataclass(frozen=True)
class SpecHeader:
    """`r = f x y` introducing names for the result and the arguments."""

    result: Optional[str]
    name: str
    args: tuple[str, ...]
    loc: Loc = UNKNOWN_LOC


@dataclass
class FunSpec:
    header: Optional[SpecHeader] = None
    requires: list[Term] = field(default_factory=list)
    ensures: list[Term] = field(default_factory=list)
    raises: list[tuple[str, Term]] = field(default_factory=list)
    variants: list[Term] = field(default_factory=list)

    def is_empty(self) -> bool:
        return not (self.header or self.requires or self.ensures
                    or self.raises or self.variants)


@dataclass
class LoopSpec:
    invariants: list[Term] = field(default_factory=list)
    variants: list[Term] = field(default_factory=list)


@dataclass
class TypeInvariant:
    """Record invariant; field names occur free in the terms."""

    terms: list[Term] = field(default_factory=list)


@dataclass(frozen=True)
class LFunction:
    """Logical function; body is None for an uninterpreted signature."""

    name: str
    params: tuple[tuple[str, Optional[SrcType]], ...]
    result: Optional[SrcType]
    body: Optional[Term]
    loc: Loc = UNKNOWN_LOC


@dataclass(frozen=True)
class LPredicate:
    name: str
    params: tuple[tuple[str, Optional[SrcType]], ...]
    body: Optional[Term]
    loc: Loc = UNKNOWN_LOC


@dataclass(frozen=True)
class LAxiom:
    name: str
    term: Term
    loc: Loc = UNKNOWN_LOC


@dataclass(frozen=True)
class LLemma:
    name: str
    term: Term
    loc: Loc = UNKNOWN_LOC


LogicalDecl = Union[LFunction, LPredicate, LAxiom, LLemma]

ParsedSpec = Union[FunSpec, LoopSpec, TypeInvariant, LogicalDecl]
