"""Verification IR: a core-WhyML-like language with kinds and ghost markers.

One module per translated program; sub-modules become scopes.  The textual
emitter defines the canonical layout (two-space indentation, `match`/`try`
closed by `end`, type parameters right of the type name, clause order
requires/variant/ensures/raises) and is deterministic: equal modules emit
byte-identical text.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

from .diagnostics import Diagnostic, Loc, UNKNOWN_LOC
from .source_ast import (GHOST, Pattern, SrcType, TApp, TArrow, TTuple, TVar,
                         TaggedType)
from .terms import Term, term_to_text, type_to_text, pattern_to_text

REG = "reg"
LOGIC = "logic"


@dataclass(frozen=True)
class IRParam:
    name: str
    ghost: bool = False
    ty: Optional[SrcType] = None


@dataclass(frozen=True)
class FunSpecIR:
    requires: tuple[Term, ...] = ()
    ensures: tuple[Term, ...] = ()
    raises: tuple[tuple[str, Term], ...] = ()
    variants: tuple[Term, ...] = ()
    result: Optional[str] = None  # name the ensures clauses give the result

    def is_empty(self) -> bool:
        return not (self.requires or self.ensures or self.raises
                    or self.variants)


EMPTY_SPEC = FunSpecIR()


@dataclass(frozen=True)
class LoopSpecIR:
    invariants: tuple[Term, ...] = ()
    variants: tuple[Term, ...] = ()


# ---------------------------------------------------------------------------
# Expressions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EVar:
    name: str
    loc: Loc = field(default=UNKNOWN_LOC, compare=False)


@dataclass(frozen=True)
class EConst:
    value: Union[int, bool, None]
    loc: Loc = field(default=UNKNOWN_LOC, compare=False)


@dataclass(frozen=True)
class EIf:
    cond: "TgtExpr"
    then: "TgtExpr"
    orelse: "TgtExpr"
    loc: Loc = field(default=UNKNOWN_LOC, compare=False)


@dataclass(frozen=True)
class EMatch:
    scrutinee: "TgtExpr"
    arms: tuple[tuple[Pattern, "TgtExpr"], ...]
    loc: Loc = field(default=UNKNOWN_LOC, compare=False)


@dataclass(frozen=True)
class ELet:
    kind: str
    name: str
    bound: "TgtExpr"
    body: "TgtExpr"
    loc: Loc = field(default=UNKNOWN_LOC, compare=False)

    def is_ghost(self) -> bool:
        return isinstance(self.bound, EGhost)


@dataclass(frozen=True)
class IRRecFun:
    kind: str
    name: str
    params: tuple[IRParam, ...]
    spec: FunSpecIR
    body: "TgtExpr"
    lemma: bool = False
    loc: Loc = field(default=UNKNOWN_LOC, compare=False)


@dataclass(frozen=True)
class ERecGroup:
    functions: tuple[IRRecFun, ...]
    body: "TgtExpr"
    loc: Loc = field(default=UNKNOWN_LOC, compare=False)


@dataclass(frozen=True)
class EApp:
    fn: str
    args: tuple["TgtExpr", ...]
    loc: Loc = field(default=UNKNOWN_LOC, compare=False)


@dataclass(frozen=True)
class EFun:
    params: tuple[IRParam, ...]
    spec: FunSpecIR
    body: "TgtExpr"
    loc: Loc = field(default=UNKNOWN_LOC, compare=False)


@dataclass(frozen=True)
class ERecord:
    fields: tuple[tuple[str, "TgtExpr"], ...]
    loc: Loc = field(default=UNKNOWN_LOC, compare=False)


@dataclass(frozen=True)
class EField:
    expr: "TgtExpr"
    field_name: str
    loc: Loc = field(default=UNKNOWN_LOC, compare=False)


@dataclass(frozen=True)
class ESetField:
    expr: "TgtExpr"
    field_name: str
    value: "TgtExpr"
    loc: Loc = field(default=UNKNOWN_LOC, compare=False)


@dataclass(frozen=True)
class EConstruct:
    name: str
    args: tuple["TgtExpr", ...]
    loc: Loc = field(default=UNKNOWN_LOC, compare=False)


@dataclass(frozen=True)
class ETuple:
    items: tuple["TgtExpr", ...]
    loc: Loc = field(default=UNKNOWN_LOC, compare=False)


@dataclass(frozen=True)
class ERaise:
    exn: str
    args: tuple["TgtExpr", ...]
    loc: Loc = field(default=UNKNOWN_LOC, compare=False)


@dataclass(frozen=True)
class ETry:
    body: "TgtExpr"
    handlers: tuple[tuple[str, tuple[Pattern, ...], "TgtExpr"], ...]
    loc: Loc = field(default=UNKNOWN_LOC, compare=False)


@dataclass(frozen=True)
class EWhile:
    cond: "TgtExpr"
    spec: LoopSpecIR
    body: "TgtExpr"
    loc: Loc = field(default=UNKNOWN_LOC, compare=False)


@dataclass(frozen=True)
class EFor:
    var: str
    lo: "TgtExpr"
    hi: "TgtExpr"
    spec: LoopSpecIR
    body: "TgtExpr"
    loc: Loc = field(default=UNKNOWN_LOC, compare=False)


@dataclass(frozen=True)
class EAbsurd:
    loc: Loc = field(default=UNKNOWN_LOC, compare=False)


@dataclass(frozen=True)
class EGhost:
    expr: "TgtExpr"
    loc: Loc = field(default=UNKNOWN_LOC, compare=False)


@dataclass(frozen=True)
class EArrayGet:
    array: "TgtExpr"
    index: "TgtExpr"
    loc: Loc = field(default=UNKNOWN_LOC, compare=False)


@dataclass(frozen=True)
class EArraySet:
    array: "TgtExpr"
    index: "TgtExpr"
    value: "TgtExpr"
    loc: Loc = field(default=UNKNOWN_LOC, compare=False)


TgtExpr = Union[EVar, EConst, EIf, EMatch, ELet, ERecGroup, EApp, EFun,
                ERecord, EField, ESetField, EConstruct, ETuple, ERaise, ETry,
                EWhile, EFor, EAbsurd, EGhost, EArrayGet, EArraySet]


def expr_children(e: TgtExpr) -> list[TgtExpr]:
    if isinstance(e, (EVar, EConst, EAbsurd)):
        return []
    if isinstance(e, EIf):
        return [e.cond, e.then, e.orelse]
    if isinstance(e, EMatch):
        return [e.scrutinee] + [b for _, b in e.arms]
    if isinstance(e, ELet):
        return [e.bound, e.body]
    if isinstance(e, ERecGroup):
        return [f.body for f in e.functions] + [e.body]
    if isinstance(e, EApp):
        return list(e.args)
    if isinstance(e, EFun):
        return [e.body]
    if isinstance(e, ERecord):
        return [v for _, v in e.fields]
    if isinstance(e, EField):
        return [e.expr]
    if isinstance(e, ESetField):
        return [e.expr, e.value]
    if isinstance(e, (EConstruct, ETuple)):
        return list(e.args) if isinstance(e, EConstruct) else list(e.items)
    if isinstance(e, ERaise):
        return list(e.args)
    if isinstance(e, ETry):
        return [e.body] + [b for _, _, b in e.handlers]
    if isinstance(e, EWhile):
        return [e.cond, e.body]
    if isinstance(e, EFor):
        return [e.lo, e.hi, e.body]
    if isinstance(e, EGhost):
        return [e.expr]
    if isinstance(e, EArrayGet):
        return [e.array, e.index]
    if isinstance(e, EArraySet):
        return [e.array, e.index, e.value]
    raise TypeError(f"not an IR expression: {e!r}")


# ---------------------------------------------------------------------------
# Declarations
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class IRFieldDef:
    name: str
    mutable: bool
    ghost: bool
    ty: SrcType


@dataclass(frozen=True)
class IRTypeDef:
    name: str
    params: tuple[str, ...]
    body: "IRTypeBody"
    loc: Loc = field(default=UNKNOWN_LOC, compare=False)


@dataclass(frozen=True)
class TBAbstract:
    pass


@dataclass(frozen=True)
class TBAlias:
    ty: SrcType


@dataclass(frozen=True)
class TBRecord:
    fields: tuple[IRFieldDef, ...]
    invariants: tuple[Term, ...] = ()


@dataclass(frozen=True)
class TBVariant:
    constructors: tuple[tuple[str, tuple[SrcType, ...]], ...]


IRTypeBody = Union[TBAbstract, TBAlias, TBRecord, TBVariant]


@dataclass(frozen=True)
class DIRExn:
    name: str
    mask: tuple[TaggedType, ...]
    loc: Loc = field(default=UNKNOWN_LOC, compare=False)


@dataclass(frozen=True)
class DIRType:
    defs: tuple[IRTypeDef, ...]
    loc: Loc = field(default=UNKNOWN_LOC, compare=False)


@dataclass(frozen=True)
class DIRLet:
    kind: str
    name: str
    params: tuple[IRParam, ...]
    spec: FunSpecIR
    body: "TgtExpr"
    lemma: bool = False
    loc: Loc = field(default=UNKNOWN_LOC, compare=False)


@dataclass(frozen=True)
class DIRLetRec:
    functions: tuple[IRRecFun, ...]
    loc: Loc = field(default=UNKNOWN_LOC, compare=False)


@dataclass(frozen=True)
class DIRVal:
    kind: str
    ghost: bool
    name: str
    params: tuple[tuple[str, TaggedType], ...]
    spec: FunSpecIR
    result: TaggedType
    loc: Loc = field(default=UNKNOWN_LOC, compare=False)


@dataclass(frozen=True)
class DIRScope:
    name: str
    decls: tuple["TgtDecl", ...]
    loc: Loc = field(default=UNKNOWN_LOC, compare=False)


@dataclass(frozen=True)
class DIRFunction:
    """Logical function; body None when uninterpreted."""

    name: str
    params: tuple[tuple[str, Optional[SrcType]], ...]
    result: Optional[SrcType]
    body: Optional[Term]
    loc: Loc = field(default=UNKNOWN_LOC, compare=False)


@dataclass(frozen=True)
class DIRPredicate:
    name: str
    params: tuple[tuple[str, Optional[SrcType]], ...]
    body: Optional[Term]
    loc: Loc = field(default=UNKNOWN_LOC, compare=False)


@dataclass(frozen=True)
class DIRAxiom:
    name: str
    term: Term
    loc: Loc = field(default=UNKNOWN_LOC, compare=False)


@dataclass(frozen=True)
class DIRLemma:
    name: str
    term: Term
    loc: Loc = field(default=UNKNOWN_LOC, compare=False)


@dataclass(frozen=True)
class DIRGoal:
    name: str
    term: Term
    loc: Loc = field(default=UNKNOWN_LOC, compare=False)


TgtDecl = Union[DIRExn, DIRType, DIRLet, DIRLetRec, DIRVal, DIRScope,
                DIRFunction, DIRPredicate, DIRAxiom, DIRLemma, DIRGoal]


@dataclass(frozen=True)
class TgtModule:
    name: str
    decls: tuple[TgtDecl, ...]


# ---------------------------------------------------------------------------
# Emission
# ---------------------------------------------------------------------------


def emit_text(m: TgtModule) -> str:
    """Canonical text for a module; deterministic and golden-file stable."""
    out: list[str] = [f"module {m.name}"]
    for d in m.decls:
        out.extend(_emit_decl(d, 1))
    out.append("end")
    return "\n".join(out) + "\n"


def _ind(level: int) -> str:
    return "  " * level


def _tagged(t: TaggedType) -> str:
    ghost = "ghost " if t.status == GHOST else ""
    return ghost + type_to_text(t.ty)


def _param_text(p: IRParam) -> str:
    prefix = "ghost " if p.ghost else ""
    if p.ty is not None:
        return f"({prefix}{p.name} : {type_to_text(p.ty)})"
    return f"({prefix}{p.name})"


def _spec_lines(spec: FunSpecIR, level: int) -> list[str]:
    lines = []
    if spec.result is not None:
        lines.append(f"{_ind(level)}returns {spec.result}")
    for t in spec.requires:
        lines.append(f"{_ind(level)}requires {{ {term_to_text(t)} }}")
    for t in spec.variants:
        lines.append(f"{_ind(level)}variant {{ {term_to_text(t)} }}")
    for t in spec.ensures:
        lines.append(f"{_ind(level)}ensures {{ {term_to_text(t)} }}")
    for exn, t in spec.raises:
        lines.append(f"{_ind(level)}raises {{ {exn} -> {term_to_text(t)} }}")
    return lines


def _loop_spec_lines(spec: LoopSpecIR, level: int) -> list[str]:
    lines = []
    for t in spec.invariants:
        lines.append(f"{_ind(level)}invariant {{ {term_to_text(t)} }}")
    for t in spec.variants:
        lines.append(f"{_ind(level)}variant {{ {term_to_text(t)} }}")
    return lines


def _emit_decl(d: TgtDecl, level: int) -> list[str]:
    ind = _ind(level)
    if isinstance(d, DIRScope):
        lines = [f"{ind}scope {d.name}"]
        for inner in d.decls:
            lines.extend(_emit_decl(inner, level + 1))
        lines.append(f"{ind}end")
        return lines
    if isinstance(d, DIRExn):
        if not d.mask:
            return [f"{ind}exception {d.name}"]
        mask = ", ".join(("ghost " if t.status == GHOST else "reg ")
                         + type_to_text(t.ty) for t in d.mask)
        return [f"{ind}exception {d.name} : [{mask}]"]
    if isinstance(d, DIRType):
        lines = []
        for i, td in enumerate(d.defs):
            kw = "type" if i == 0 else "with"
            head = td.name + ("".join(f" '{p}" for p in td.params))
            body = td.body
            if isinstance(body, TBAbstract):
                lines.append(f"{ind}{kw} {head}")
            elif isinstance(body, TBAlias):
                lines.append(f"{ind}{kw} {head} = {type_to_text(body.ty)}")
            elif isinstance(body, TBVariant):
                ctors = []
                for name, args in body.constructors:
                    if args:
                        ctors.append(name + " " + " ".join(
                            _atomic_type(a) for a in args))
                    else:
                        ctors.append(name)
                lines.append(f"{ind}{kw} {head} = " + " | ".join(ctors))
            elif isinstance(body, TBRecord):
                fields = []
                for f in body.fields:
                    mut = "mutable " if f.mutable else ""
                    ghost = "ghost " if f.ghost else ""
                    fields.append(f"{mut}{f.name} : {ghost}{_atomic_type(f.ty)}")
                line = f"{ind}{kw} {head} = {{ " + "; ".join(fields) + " }"
                lines.append(line)
                for t in body.invariants:
                    lines.append(f"{_ind(level + 1)}invariant "
                                 f"{{ {term_to_text(t)} }}")
        return lines
    if isinstance(d, DIRLet):
        if not d.params and d.spec.is_empty():
            body = _emit_expr(d.body, level + 1)
            return [f"{ind}let {d.kind} {d.name} =", *body]
        head = f"{ind}let {d.kind} {d.name}"
        if d.params:
            head += " " + " ".join(_param_text(p) for p in d.params)
        lines = [head]
        lines.extend(_spec_lines(d.spec, level + 1))
        lines.append(f"{ind}=")
        lines.extend(_emit_expr(d.body, level + 1))
        return lines
    if isinstance(d, DIRLetRec):
        lines = []
        for i, f in enumerate(d.functions):
            kw = "let rec" if i == 0 else "with"
            head = f"{ind}{kw} {f.kind} {f.name}"
            if f.params:
                head += " " + " ".join(_param_text(p) for p in f.params)
            lines.append(head)
            lines.extend(_spec_lines(f.spec, level + 1))
            lines.append(f"{ind}=")
            lines.extend(_emit_expr(f.body, level + 1))
        return lines
    if isinstance(d, DIRVal):
        ghost = "ghost " if d.ghost else ""
        params = " ".join(f"({n} : {_tagged(t)})" for n, t in d.params)
        head = f"{ind}val {d.kind} {ghost}{d.name}"
        if params:
            head += " " + params
        head += f" : {_tagged(d.result)}"
        lines = [head]
        lines.extend(_spec_lines(d.spec, level + 1))
        return lines
    if isinstance(d, DIRFunction):
        params = " ".join(
            f"({n} : {type_to_text(t)})" if t is not None else f"({n})"
            for n, t in d.params)
        head = f"{ind}function {d.name}"
        if params:
            head += " " + params
        if d.result is not None:
            head += f" : {type_to_text(d.result)}"
        if d.body is not None:
            head += f" = {term_to_text(d.body)}"
        return [head]
    if isinstance(d, DIRPredicate):
        params = " ".join(
            f"({n} : {type_to_text(t)})" if t is not None else f"({n})"
            for n, t in d.params)
        head = f"{ind}predicate {d.name}"
        if params:
            head += " " + params
        if d.body is not None:
            head += f" = {term_to_text(d.body)}"
        return [head]
    if isinstance(d, DIRAxiom):
        return [f"{ind}axiom {d.name} : {term_to_text(d.term)}"]
    if isinstance(d, DIRLemma):
        return [f"{ind}lemma {d.name} : {term_to_text(d.term)}"]
    if isinstance(d, DIRGoal):
        return [f"{ind}goal {d.name} : {term_to_text(d.term)}"]
    raise TypeError(f"not an IR declaration: {d!r}")


def _atomic_type(ty: SrcType) -> str:
    text = type_to_text(ty)
    if isinstance(ty, TVar) or (isinstance(ty, TApp) and not ty.args):
        return text
    return f"({text})"


_PREC_STMT = 0
_PREC_TUPLE = 1
_PREC_OR = 2
_PREC_AND = 3
_PREC_CMP = 4
_PREC_CONS = 5
_PREC_ADD = 6
_PREC_MUL = 7
_PREC_APP = 8
_PREC_ATOM = 9

_OPS = {"||": _PREC_OR, "&&": _PREC_AND, "=": _PREC_CMP, "<>": _PREC_CMP,
        "<": _PREC_CMP, "<=": _PREC_CMP, ">": _PREC_CMP, ">=": _PREC_CMP,
        "@": _PREC_CONS, "+": _PREC_ADD, "-": _PREC_ADD, "*": _PREC_MUL,
        "/": _PREC_MUL, "mod": _PREC_MUL}


def _emit_expr(e: TgtExpr, level: int) -> list[str]:
    """Multi-line rendering of a statement-position expression."""
    ind = _ind(level)
    if isinstance(e, ELet):
        ghost = "ghost " if isinstance(e.bound, EGhost) else ""
        bound = e.bound.expr if isinstance(e.bound, EGhost) else e.bound
        if isinstance(bound, (EMatch, ETry, EWhile, EFor, ELet, ERecGroup)):
            lines = [f"{ind}let {e.kind} {ghost}{e.name} ="]
            lines.extend(_emit_expr(bound, level + 1))
            lines.append(f"{ind}in")
        else:
            lines = [f"{ind}let {e.kind} {ghost}{e.name} = "
                     f"{_inline(bound, _PREC_TUPLE)} in"]
        lines.extend(_emit_expr(e.body, level))
        return lines
    if isinstance(e, ERecGroup):
        lines = []
        for i, f in enumerate(e.functions):
            kw = "let rec" if i == 0 else "with"
            head = f"{ind}{kw} {f.kind} {f.name}"
            if f.params:
                head += " " + " ".join(_param_text(p) for p in f.params)
            lines.append(head)
            lines.extend(_spec_lines(f.spec, level + 1))
            lines.append(f"{ind}=")
            lines.extend(_emit_expr(f.body, level + 1))
        lines.append(f"{ind}in")
        lines.extend(_emit_expr(e.body, level))
        return lines
    if isinstance(e, EIf):
        then_lines = _emit_expr(e.then, level + 1)
        lines = [f"{ind}if {_inline(e.cond, _PREC_TUPLE)} then", *then_lines]
        if not (isinstance(e.orelse, EConst) and e.orelse.value is None):
            lines.append(f"{ind}else")
            lines.extend(_emit_expr(e.orelse, level + 1))
        return lines
    if isinstance(e, EMatch):
        lines = [f"{ind}match {_inline(e.scrutinee, _PREC_TUPLE)} with"]
        for pat, body in e.arms:
            lines.append(f"{ind}| {pattern_to_text(pat)} ->")
            lines.extend(_emit_expr(body, level + 1))
        lines.append(f"{ind}end")
        return lines
    if isinstance(e, ETry):
        lines = [f"{ind}try"]
        lines.extend(_emit_expr(e.body, level + 1))
        lines.append(f"{ind}with")
        for exn, args, body in e.handlers:
            pat = exn + "".join(" " + pattern_to_text(p) for p in args)
            lines.append(f"{ind}| {pat} ->")
            lines.extend(_emit_expr(body, level + 1))
        lines.append(f"{ind}end")
        return lines
    if isinstance(e, EWhile):
        lines = [f"{ind}while {_inline(e.cond, _PREC_TUPLE)} do"]
        lines.extend(_loop_spec_lines(e.spec, level + 1))
        lines.extend(_emit_expr(e.body, level + 1))
        lines.append(f"{ind}done")
        return lines
    if isinstance(e, EFor):
        lines = [f"{ind}for {e.var} = {_inline(e.lo, _PREC_TUPLE)} to "
                 f"{_inline(e.hi, _PREC_TUPLE)} do"]
        lines.extend(_loop_spec_lines(e.spec, level + 1))
        lines.extend(_emit_expr(e.body, level + 1))
        lines.append(f"{ind}done")
        return lines
    return [ind + _inline(e, _PREC_STMT)]


def _inline(e: TgtExpr, prec: int) -> str:
    if isinstance(e, EVar):
        return e.name
    if isinstance(e, EConst):
        if e.value is None:
            return "()"
        if isinstance(e.value, bool):
            return "true" if e.value else "false"
        if e.value < 0:
            return _wrap(f"- {-e.value}", _PREC_APP, prec)
        return str(e.value)
    if isinstance(e, EApp):
        if e.fn in _OPS and len(e.args) == 2:
            p = _OPS[e.fn]
            op = "++" if e.fn == "@" else e.fn
            text = f"{_inline(e.args[0], p)} {op} {_inline(e.args[1], p + 1)}"
            return _wrap(text, p, prec)
        if e.fn == "not" and len(e.args) == 1:
            return _wrap(f"not {_inline(e.args[0], _PREC_APP + 1)}",
                         _PREC_APP, prec)
        if not e.args:
            return e.fn
        text = f"{e.fn} " + " ".join(_inline(a, _PREC_ATOM) for a in e.args)
        return _wrap(text, _PREC_APP, prec)
    if isinstance(e, EConstruct):
        name = {"[]": "Nil", "::": "Cons"}.get(e.name, e.name)
        if not e.args:
            return name
        text = f"{name} " + " ".join(_inline(a, _PREC_ATOM) for a in e.args)
        return _wrap(text, _PREC_APP, prec)
    if isinstance(e, ETuple):
        return "(" + ", ".join(_inline(x, _PREC_TUPLE + 1) for x in e.items) + ")"
    if isinstance(e, ERecord):
        inner = "; ".join(f"{n} = {_inline(v, _PREC_TUPLE)}" for n, v in e.fields)
        return f"{{ {inner} }}"
    if isinstance(e, EField):
        return f"{_inline(e.expr, _PREC_ATOM)}.{e.field_name}"
    if isinstance(e, ESetField):
        text = (f"{_inline(e.expr, _PREC_ATOM)}.{e.field_name} <- "
                f"{_inline(e.value, _PREC_TUPLE)}")
        return _wrap(text, _PREC_TUPLE, prec)
    if isinstance(e, ERaise):
        if not e.args:
            return _wrap(f"raise {e.exn}", _PREC_APP, prec)
        text = f"raise ({e.exn} " + " ".join(_inline(a, _PREC_ATOM)
                                             for a in e.args) + ")"
        return _wrap(text, _PREC_APP, prec)
    if isinstance(e, EAbsurd):
        return "absurd"
    if isinstance(e, EGhost):
        return _wrap(f"ghost {_inline(e.expr, _PREC_ATOM)}", _PREC_APP, prec)
    if isinstance(e, EArrayGet):
        return f"{_inline(e.array, _PREC_ATOM)}.({_inline(e.index, _PREC_STMT)})"
    if isinstance(e, EArraySet):
        text = (f"{_inline(e.array, _PREC_ATOM)}.({_inline(e.index, _PREC_STMT)})"
                f" <- {_inline(e.value, _PREC_TUPLE)}")
        return _wrap(text, _PREC_TUPLE, prec)
    if isinstance(e, EIf):
        text = (f"if {_inline(e.cond, _PREC_TUPLE)} then "
                f"{_inline(e.then, _PREC_TUPLE)} else "
                f"{_inline(e.orelse, _PREC_TUPLE)}")
        return _wrap(text, _PREC_TUPLE, prec)
    if isinstance(e, EFun):
        params = " ".join(_param_text(p) for p in e.params)
        spec = " ".join(s.strip() for s in _spec_lines(e.spec, 0))
        middle = f" {spec}" if spec else ""
        text = f"fun {params}{middle} -> {_inline(e.body, _PREC_TUPLE)}"
        return _wrap(text, _PREC_TUPLE, prec)
    # statement-shaped node in inline position: emit as a block
    block = _emit_expr(e, 0)
    return "(" + " ".join(line.strip() for line in block) + ")"


def _wrap(text: str, produced: int, required: int) -> str:
    return f"({text})" if produced < required else text


# ---------------------------------------------------------------------------
# Well-formedness
# ---------------------------------------------------------------------------

NON_PURE_FIELD = ("This field has non-pure type, it cannot be used in a "
                  "recursive type definition")


def well_formed(m: TgtModule) -> list[Diagnostic]:
    """Checks the IR invariants that the translation cannot enforce alone.

    (a) every member of a recursive group is a function;
    (b) no recursive type group reaches a mutable field of its own recursion;
    (c) anonymous functions are syntactically pure.
    """
    diags: list[Diagnostic] = []
    _walk_decls(m.decls, diags)
    return diags


def _walk_decls(decls, diags: list[Diagnostic]) -> None:
    for d in decls:
        if isinstance(d, DIRScope):
            _walk_decls(d.decls, diags)
        elif isinstance(d, DIRType):
            _check_type_group(d, diags)
        elif isinstance(d, DIRLetRec):
            for f in d.functions:
                if not f.params:
                    diags.append(Diagnostic(
                        "error",
                        f"recursive binding '{f.name}' is not a function",
                        f.loc, "rec-function"))
                _check_exprs(f.body, diags)
        elif isinstance(d, DIRLet):
            _check_exprs(d.body, diags)


def _check_exprs(e: TgtExpr, diags: list[Diagnostic]) -> None:
    if isinstance(e, ERecGroup):
        for f in e.functions:
            if not f.params:
                diags.append(Diagnostic(
                    "error",
                    f"recursive binding '{f.name}' is not a function",
                    f.loc, "rec-function"))
    if isinstance(e, EFun):
        impure = _impure_node(e.body)
        if impure is not None:
            diags.append(Diagnostic(
                "error",
                f"anonymous function is not pure ({impure})",
                e.loc, "pure-fun"))
    for child in expr_children(e):
        _check_exprs(child, diags)


def _impure_node(e: TgtExpr) -> str | None:
    todo = [e]
    while todo:
        node = todo.pop()
        if isinstance(node, ESetField):
            return "field assignment"
        if isinstance(node, ERaise):
            return "raise"
        if isinstance(node, (EWhile, EFor)):
            return "loop"
        if isinstance(node, EArraySet):
            return "array assignment"
        todo.extend(expr_children(node))
    return None


def _type_refs(ty: SrcType, group: set[str]) -> set[str]:
    out: set[str] = set()
    todo = [ty]
    while todo:
        t = todo.pop()
        if isinstance(t, TApp):
            if t.name in group:
                out.add(t.name)
            todo.extend(t.args)
        elif isinstance(t, TArrow):
            todo.extend([t.lhs, t.rhs])
        elif isinstance(t, TTuple):
            todo.extend(t.items)
    return out


def _check_type_group(d: DIRType, diags: list[Diagnostic]) -> None:
    group = {td.name for td in d.defs}
    plain_edges: dict[str, set[str]] = {n: set() for n in group}
    mutable_edges: list[tuple[str, str, Loc]] = []
    for td in d.defs:
        body = td.body
        if isinstance(body, TBAlias):
            plain_edges[td.name] |= _type_refs(body.ty, group)
        elif isinstance(body, TBRecord):
            for f in body.fields:
                refs = _type_refs(f.ty, group)
                plain_edges[td.name] |= refs
                if f.mutable:
                    for ref in refs:
                        mutable_edges.append((td.name, ref, td.loc))
        elif isinstance(body, TBVariant):
            for _, args in body.constructors:
                for a in args:
                    plain_edges[td.name] |= _type_refs(a, group)

    def reaches(src: str, dst: str) -> bool:
        seen = set()
        todo = [src]
        while todo:
            n = todo.pop()
            if n == dst:
                return True
            if n in seen:
                continue
            seen.add(n)
            todo.extend(plain_edges.get(n, ()))
        return False

    for owner, target, loc in mutable_edges:
        if reaches(target, owner):
            diags.append(Diagnostic("error", NON_PURE_FIELD, loc,
                                    "recursive-mutable"))
            return
