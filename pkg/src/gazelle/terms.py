"""First-order term language used in contracts, invariants and proof goals.

Terms cover the logical fragment needed by the toolchain: arithmetic,
comparisons, connectives, quantifiers, conditionals, lets, pattern matches,
datatype constructors, function application, record field access, `!` on
references, `old`, and builtin list/array operators.  List constructors use
the canonical names "[]" and "::"; builtin operators are applications of the
reserved names in BUILTIN_FUNCTIONS.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

from .diagnostics import Loc, UNKNOWN_LOC
from .source_ast import (Pattern, PAs, PConstruct, POr, PTuple, PTyped, PVar,
                         PWild, SrcType, pattern_vars)

ARITH_OPS = ("+", "-", "*", "/", "mod")
CMP_OPS = ("=", "<>", "<", "<=", ">", ">=")
CONN_OPS = ("and", "or", "implies", "iff")

BUILTIN_FUNCTIONS = {
    "length": 1,
    "append": 2,
    "reverse": 1,
    "mem": 2,
    "min": 2,
    "max": 2,
    "array_length": 1,
    "array_get": 2,
}


@dataclass(frozen=True)
class TmVar:
    name: str
    loc: Loc = field(default=UNKNOWN_LOC, compare=False)


@dataclass(frozen=True)
class TmInt:
    value: int


@dataclass(frozen=True)
class TmBool:
    value: bool


@dataclass(frozen=True)
class TmUnit:
    pass


@dataclass(frozen=True)
class TmBin:
    op: str  # one of ARITH_OPS
    lhs: "Term"
    rhs: "Term"


@dataclass(frozen=True)
class TmNeg:
    arg: "Term"


@dataclass(frozen=True)
class TmCmp:
    op: str  # one of CMP_OPS
    lhs: "Term"
    rhs: "Term"


@dataclass(frozen=True)
class TmNot:
    arg: "Term"


@dataclass(frozen=True)
class TmConn:
    op: str  # one of CONN_OPS
    lhs: "Term"
    rhs: "Term"


@dataclass(frozen=True)
class TmQuant:
    quant: str  # "forall" | "exists"
    binders: tuple[tuple[str, Optional[SrcType]], ...]
    body: "Term"


@dataclass(frozen=True)
class TmIf:
    cond: "Term"
    then: "Term"
    orelse: "Term"


@dataclass(frozen=True)
class TmLet:
    name: str
    bound: "Term"
    body: "Term"


@dataclass(frozen=True)
class TmMatch:
    scrutinee: "Term"
    arms: tuple[tuple[Pattern, "Term"], ...]


@dataclass(frozen=True)
class TmTuple:
    items: tuple["Term", ...]


@dataclass(frozen=True)
class TmConstruct:
    name: str
    args: tuple["Term", ...] = ()


@dataclass(frozen=True)
class TmApp:
    fn: str
    args: tuple["Term", ...]


@dataclass(frozen=True)
class TmField:
    record: "Term"
    field: str


@dataclass(frozen=True)
class TmDeref:
    ref: "Term"


@dataclass(frozen=True)
class TmOld:
    arg: "Term"


Term = Union[TmVar, TmInt, TmBool, TmUnit, TmBin, TmNeg, TmCmp, TmNot, TmConn,
             TmQuant, TmIf, TmLet, TmMatch, TmTuple, TmConstruct, TmApp,
             TmField, TmDeref, TmOld]

TRUE = TmBool(True)
FALSE = TmBool(False)
NIL = TmConstruct("[]")


def cons(h: Term, t: Term) -> Term:
    return TmConstruct("::", (h, t))


def mk_and(terms: list[Term]) -> Term:
    terms = [t for t in terms if t != TRUE]
    if not terms:
        return TRUE
    out = terms[0]
    for t in terms[1:]:
        out = TmConn("and", out, t)
    return out


def mk_implies(hyps: list[Term], concl: Term) -> Term:
    for h in reversed([t for t in hyps if t != TRUE]):
        concl = TmConn("implies", h, concl)
    return concl


def conjuncts(t: Term) -> list[Term]:
    """Flatten top-level conjunctions."""
    if isinstance(t, TmConn) and t.op == "and":
        return conjuncts(t.lhs) + conjuncts(t.rhs)
    return [t]


def term_children(t: Term) -> list[Term]:
    if isinstance(t, (TmVar, TmInt, TmBool, TmUnit)):
        return []
    if isinstance(t, (TmBin, TmCmp, TmConn)):
        return [t.lhs, t.rhs]
    if isinstance(t, (TmNot, TmNeg)):
        return [t.arg]
    if isinstance(t, TmQuant):
        return [t.body]
    if isinstance(t, TmIf):
        return [t.cond, t.then, t.orelse]
    if isinstance(t, TmLet):
        return [t.bound, t.body]
    if isinstance(t, TmMatch):
        return [t.scrutinee] + [b for _, b in t.arms]
    if isinstance(t, TmTuple):
        return list(t.items)
    if isinstance(t, (TmConstruct, TmApp)):
        return list(t.args)
    if isinstance(t, TmField):
        return [t.record]
    if isinstance(t, TmDeref):
        return [t.ref]
    if isinstance(t, TmOld):
        return [t.arg]
    raise TypeError(f"not a term: {t!r}")


def free_vars(t: Term) -> set[str]:
    """Free variables of a term; applied function names are symbols, not vars."""
    if isinstance(t, TmVar):
        return {t.name}
    if isinstance(t, TmQuant):
        return free_vars(t.body) - {n for n, _ in t.binders}
    if isinstance(t, TmLet):
        return free_vars(t.bound) | (free_vars(t.body) - {t.name})
    if isinstance(t, TmMatch):
        out = free_vars(t.scrutinee)
        for pat, body in t.arms:
            out |= free_vars(body) - set(pattern_vars(pat))
        return out
    out: set[str] = set()
    for child in term_children(t):
        out |= free_vars(child)
    return out


_FRESH_COUNTER = [0]


def fresh_name(base: str) -> str:
    _FRESH_COUNTER[0] += 1
    return f"{base}'{_FRESH_COUNTER[0]}"


def subst(t: Term, env: dict[str, Term]) -> Term:
    """Capture-avoiding substitution of variables by terms."""
    if not env:
        return t
    if isinstance(t, TmVar):
        return env.get(t.name, t)
    if isinstance(t, (TmInt, TmBool, TmUnit)):
        return t
    if isinstance(t, TmBin):
        return TmBin(t.op, subst(t.lhs, env), subst(t.rhs, env))
    if isinstance(t, TmNeg):
        return TmNeg(subst(t.arg, env))
    if isinstance(t, TmCmp):
        return TmCmp(t.op, subst(t.lhs, env), subst(t.rhs, env))
    if isinstance(t, TmNot):
        return TmNot(subst(t.arg, env))
    if isinstance(t, TmConn):
        return TmConn(t.op, subst(t.lhs, env), subst(t.rhs, env))
    if isinstance(t, TmQuant):
        bound = {n for n, _ in t.binders}
        inner = {k: v for k, v in env.items() if k not in bound}
        captured = bound & _range_vars(inner)
        if captured:
            renaming = {n: fresh_name(n) for n in captured}
            binders = tuple((renaming.get(n, n), ty) for n, ty in t.binders)
            body = subst(t.body, {n: TmVar(m) for n, m in renaming.items()})
            return TmQuant(t.quant, binders, subst(body, inner))
        return TmQuant(t.quant, t.binders, subst(t.body, inner))
    if isinstance(t, TmIf):
        return TmIf(subst(t.cond, env), subst(t.then, env), subst(t.orelse, env))
    if isinstance(t, TmLet):
        bound_t = subst(t.bound, env)
        inner = {k: v for k, v in env.items() if k != t.name}
        if t.name in _range_vars(inner):
            new = fresh_name(t.name)
            body = subst(t.body, {t.name: TmVar(new)})
            return TmLet(new, bound_t, subst(body, inner))
        return TmLet(t.name, bound_t, subst(t.body, inner))
    if isinstance(t, TmMatch):
        arms = []
        for pat, body in t.arms:
            bound = set(pattern_vars(pat))
            inner = {k: v for k, v in env.items() if k not in bound}
            if bound & _range_vars(inner):
                renaming = {n: fresh_name(n) for n in bound & _range_vars(inner)}
                pat = _rename_pattern(pat, renaming)
                body = subst(body, {n: TmVar(m) for n, m in renaming.items()})
            arms.append((pat, subst(body, inner)))
        return TmMatch(subst(t.scrutinee, env), tuple(arms))
    if isinstance(t, TmTuple):
        return TmTuple(tuple(subst(x, env) for x in t.items))
    if isinstance(t, TmConstruct):
        return TmConstruct(t.name, tuple(subst(x, env) for x in t.args))
    if isinstance(t, TmApp):
        return TmApp(t.fn, tuple(subst(x, env) for x in t.args))
    if isinstance(t, TmField):
        return TmField(subst(t.record, env), t.field)
    if isinstance(t, TmDeref):
        return TmDeref(subst(t.ref, env))
    if isinstance(t, TmOld):
        return TmOld(subst(t.arg, env))
    raise TypeError(f"not a term: {t!r}")


def _range_vars(env: dict[str, Term]) -> set[str]:
    out: set[str] = set()
    for v in env.values():
        out |= free_vars(v)
    return out


def _rename_pattern(p: Pattern, renaming: dict[str, str]) -> Pattern:
    if isinstance(p, PVar):
        return PVar(renaming.get(p.name, p.name), p.loc)
    if isinstance(p, PWild):
        return p
    if isinstance(p, PTuple):
        return PTuple(tuple(_rename_pattern(x, renaming) for x in p.items), p.loc)
    if isinstance(p, PConstruct):
        return PConstruct(p.name,
                          tuple(_rename_pattern(x, renaming) for x in p.args),
                          p.loc)
    if isinstance(p, POr):
        return POr(_rename_pattern(p.left, renaming),
                   _rename_pattern(p.right, renaming), p.loc)
    if isinstance(p, PAs):
        return PAs(_rename_pattern(p.pattern, renaming),
                   renaming.get(p.name, p.name), p.loc)
    if isinstance(p, PTyped):
        return PTyped(_rename_pattern(p.pattern, renaming), p.ty, p.loc)
    return p


# ---------------------------------------------------------------------------
# Rendering
# ---------------------------------------------------------------------------

_PREC_IFF = 1
_PREC_IMPLIES = 2
_PREC_OR = 3
_PREC_AND = 4
_PREC_NOT = 5
_PREC_CMP = 6
_PREC_CONS = 7
_PREC_ADD = 8
_PREC_MUL = 9
_PREC_NEG = 10
_PREC_APP = 11
_PREC_ATOM = 12

_CONN_PREC = {"iff": _PREC_IFF, "implies": _PREC_IMPLIES, "or": _PREC_OR,
              "and": _PREC_AND}
_CONN_TEXT = {"iff": "<->", "implies": "->", "or": "||", "and": "&&"}


def type_to_text(ty: SrcType) -> str:
    from .source_ast import TApp, TArrow, TTuple, TVar
    if isinstance(ty, TVar):
        return f"'{ty.name}"
    if isinstance(ty, TArrow):
        lhs = type_to_text(ty.lhs)
        if isinstance(ty.lhs, TArrow):
            lhs = f"({lhs})"
        return f"{lhs} -> {type_to_text(ty.rhs)}"
    if isinstance(ty, TTuple):
        return " * ".join(_atomic_type_text(t) for t in ty.items)
    if isinstance(ty, TApp):
        if not ty.args:
            return ty.name
        args = " ".join(_atomic_type_text(a) for a in ty.args)
        return f"{ty.name} {args}"
    raise TypeError(f"not a type: {ty!r}")


def _atomic_type_text(ty: SrcType) -> str:
    from .source_ast import TApp, TVar
    text = type_to_text(ty)
    if isinstance(ty, TVar) or (isinstance(ty, TApp) and not ty.args):
        return text
    return f"({text})"


def pattern_to_text(p: Pattern) -> str:
    if isinstance(p, PWild):
        return "_"
    if isinstance(p, PVar):
        return p.name
    if isinstance(p, PTuple):
        return "(" + ", ".join(pattern_to_text(x) for x in p.items) + ")"
    if isinstance(p, PConstruct):
        if p.name == "[]":
            return "Nil"
        if p.name == "::":
            return f"(Cons {pattern_to_text(p.args[0])} {pattern_to_text(p.args[1])})"
        if not p.args:
            return p.name
        return f"({p.name} " + " ".join(pattern_to_text(x) for x in p.args) + ")"
    if isinstance(p, POr):
        return f"{pattern_to_text(p.left)} | {pattern_to_text(p.right)}"
    if isinstance(p, PAs):
        return f"({pattern_to_text(p.pattern)} as {p.name})"
    if isinstance(p, PTyped):
        return f"({pattern_to_text(p.pattern)} : {type_to_text(p.ty)})"
    if isinstance(p, PException):
        return f"exception {pattern_to_text(p.pattern)}"
    raise TypeError(f"not a pattern: {p!r}")


def term_to_text(t: Term) -> str:
    """Deterministic rendering with minimal parentheses."""
    return _render(t, 0)


def _render(t: Term, prec: int) -> str:
    if isinstance(t, TmVar):
        return t.name
    if isinstance(t, TmInt):
        return str(t.value) if t.value >= 0 else _wrap(f"- {-t.value}", _PREC_NEG, prec)
    if isinstance(t, TmBool):
        return "true" if t.value else "false"
    if isinstance(t, TmUnit):
        return "()"
    if isinstance(t, TmBin):
        p = _PREC_MUL if t.op in ("*", "/", "mod") else _PREC_ADD
        text = f"{_render(t.lhs, p)} {t.op} {_render(t.rhs, p + 1)}"
        return _wrap(text, p, prec)
    if isinstance(t, TmNeg):
        return _wrap(f"- {_render(t.arg, _PREC_NEG + 1)}", _PREC_NEG, prec)
    if isinstance(t, TmCmp):
        text = f"{_render(t.lhs, _PREC_CMP + 1)} {t.op} {_render(t.rhs, _PREC_CMP + 1)}"
        return _wrap(text, _PREC_CMP, prec)
    if isinstance(t, TmNot):
        return _wrap(f"not {_render(t.arg, _PREC_NOT + 1)}", _PREC_NOT, prec)
    if isinstance(t, TmConn):
        p = _CONN_PREC[t.op]
        if t.op == "implies":  # right-associative
            text = f"{_render(t.lhs, p + 1)} {_CONN_TEXT[t.op]} {_render(t.rhs, p)}"
        else:
            text = f"{_render(t.lhs, p)} {_CONN_TEXT[t.op]} {_render(t.rhs, p + 1)}"
        return _wrap(text, p, prec)
    if isinstance(t, TmQuant):
        binders = ", ".join(
            n if ty is None else f"{n} : {type_to_text(ty)}"
            for n, ty in t.binders)
        return _wrap(f"{t.quant} {binders}. {_render(t.body, 0)}", 0, prec)
    if isinstance(t, TmIf):
        text = (f"if {_render(t.cond, 0)} then {_render(t.then, 0)} "
                f"else {_render(t.orelse, 0)}")
        return _wrap(text, 0, prec)
    if isinstance(t, TmLet):
        text = f"let {t.name} = {_render(t.bound, 0)} in {_render(t.body, 0)}"
        return _wrap(text, 0, prec)
    if isinstance(t, TmMatch):
        arms = " ".join(f"| {pattern_to_text(p)} -> {_render(b, 0)}"
                        for p, b in t.arms)
        return f"match {_render(t.scrutinee, 0)} with {arms} end"
    if isinstance(t, TmTuple):
        return "(" + ", ".join(_render(x, 0) for x in t.items) + ")"
    if isinstance(t, TmConstruct):
        if t.name == "[]":
            return "Nil"
        if t.name == "::":
            text = f"Cons {_render(t.args[0], _PREC_APP + 1)} {_render(t.args[1], _PREC_APP + 1)}"
            return _wrap(text, _PREC_APP, prec)
        if not t.args:
            return t.name
        text = f"{t.name} " + " ".join(_render(x, _PREC_APP + 1) for x in t.args)
        return _wrap(text, _PREC_APP, prec)
    if isinstance(t, TmApp):
        if t.fn == "append":
            text = f"{_render(t.args[0], _PREC_CONS + 1)} ++ {_render(t.args[1], _PREC_CONS)}"
            return _wrap(text, _PREC_CONS, prec)
        if t.fn == "array_get":
            return f"{_render(t.args[0], _PREC_ATOM)}.({_render(t.args[1], 0)})"
        name = {"array_length": "Array.length"}.get(t.fn, t.fn)
        if not t.args:
            return name
        text = f"{name} " + " ".join(_render(x, _PREC_APP + 1) for x in t.args)
        return _wrap(text, _PREC_APP, prec)
    if isinstance(t, TmField):
        return f"{_render(t.record, _PREC_ATOM)}.{t.field}"
    if isinstance(t, TmDeref):
        return f"!{_render(t.ref, _PREC_ATOM)}"
    if isinstance(t, TmOld):
        return _wrap(f"old {_render(t.arg, _PREC_APP + 1)}", _PREC_APP, prec)
    raise TypeError(f"not a term: {t!r}")


def _wrap(text: str, produced: int, required: int) -> str:
    return f"({text})" if produced < required else text
