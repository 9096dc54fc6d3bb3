"""Renders source programs back to parseable text.

Used for erased output and for parse/print round-trip tests.  Desugared
forms print back in their surface syntax: wildcard lets as `e1; e2`, lambda
chains as parameter lists, list constructors as literals where possible.
"""

from __future__ import annotations

from .source_ast import (App, AssertFalse, Assign, ArrayGet, ArraySet, Attr,
                         AttrSet, Const, Construct, DExn, DFloatingSpec, DLet,
                         DLetRec, DModule, DModuleType, DType, Deref,
                         FieldGet, FieldSet, For, Fun, GHOST, Handler, If,
                         Let, LetRec, LocalExn, Match, MFunctor, MStruct,
                         Param, Raise, Record, RefMake, SFloatingSpec, SType,
                         SVal, SrcDecl, SrcExpr, SrcModule, SrcModuleType,
                         SrcProgram, SrcTypeDef, TDAbstract, TDAlias,
                         TDRecord, TDVariant, Try, Tuple, Var, While)
from .source_ast import (PAs, PConstruct, PException, POr, PTuple, PTyped,
                         PVar, PWild, Pattern, SrcType, TApp, TArrow, TTuple,
                         TVar)

_INFIX = {"+", "-", "*", "/", "mod", "=", "<>", "<", "<=", ">", ">=",
          "&&", "||", "@"}


def type_to_text(ty: SrcType) -> str:
    """OCaml-style rendering: type arguments to the left of the name."""
    if isinstance(ty, TVar):
        return f"'{ty.name}"
    if isinstance(ty, TArrow):
        lhs = type_to_text(ty.lhs)
        if isinstance(ty.lhs, TArrow):
            lhs = f"({lhs})"
        return f"{lhs} -> {type_to_text(ty.rhs)}"
    if isinstance(ty, TTuple):
        return " * ".join(_atomic(t) for t in ty.items)
    if isinstance(ty, TApp):
        if not ty.args:
            return ty.name
        if len(ty.args) == 1:
            return f"{_atomic(ty.args[0])} {ty.name}"
        inner = ", ".join(type_to_text(a) for a in ty.args)
        return f"({inner}) {ty.name}"
    raise TypeError(f"not a type: {ty!r}")


def _atomic(ty: SrcType) -> str:
    text = type_to_text(ty)
    if isinstance(ty, (TArrow, TTuple)):
        return f"({text})"
    return text


def pattern_to_text(p: Pattern) -> str:
    """OCaml-style rendering with list literals where possible."""
    if isinstance(p, PWild):
        return "_"
    if isinstance(p, PVar):
        return p.name
    if isinstance(p, PTuple):
        return "(" + ", ".join(pattern_to_text(x) for x in p.items) + ")"
    if isinstance(p, PConstruct):
        items = _list_pattern(p)
        if items is not None:
            return "[" + "; ".join(pattern_to_text(x) for x in items) + "]"
        if p.name == "::":
            return (f"{_pattern_atomic(p.args[0])} :: "
                    f"{pattern_to_text(p.args[1])}")
        if not p.args:
            return p.name
        inner = ", ".join(pattern_to_text(x) for x in p.args)
        return f"{p.name} ({inner})"
    if isinstance(p, POr):
        return f"{pattern_to_text(p.left)} | {pattern_to_text(p.right)}"
    if isinstance(p, PAs):
        return f"({pattern_to_text(p.pattern)} as {p.name})"
    if isinstance(p, PTyped):
        return f"({pattern_to_text(p.pattern)} : {type_to_text(p.ty)})"
    if isinstance(p, PException):
        return f"exception {pattern_to_text(p.pattern)}"
    raise TypeError(f"not a pattern: {p!r}")


def _pattern_atomic(p: Pattern) -> str:
    text = pattern_to_text(p)
    if isinstance(p, (POr,)) or (isinstance(p, PConstruct) and p.args
                                 and p.name == "::" and _list_pattern(p) is None):
        return f"({text})"
    return text


def _list_pattern(p: Pattern) -> list[Pattern] | None:
    items = []
    while isinstance(p, PConstruct) and p.name == "::":
        items.append(p.args[0])
        p = p.args[1]
    if isinstance(p, PConstruct) and p.name == "[]" and not p.args:
        return items
    return None

_PREC = {"||": 2, "&&": 3, "=": 4, "<>": 4, "<": 4, "<=": 4, ">": 4, ">=": 4,
         "@": 5, "+": 7, "-": 7, "*": 8, "/": 8, "mod": 8}

_PREC_SEQ = 0
_PREC_TUPLE = 1
_PREC_CONS = 6
_PREC_APP = 9
_PREC_ATOM = 10


def print_program(p: SrcProgram) -> str:
    chunks = [_decl(d, 0) for d in p.decls]
    return "\n\n".join(chunks) + "\n"


def print_expr(e: SrcExpr) -> str:
    return _expr(e, _PREC_SEQ)


def _indent(level: int) -> str:
    return "  " * level


def _spec_comment(attrs: AttrSet, level: int) -> str:
    payload = attrs.merged_payload()
    if payload is None:
        return ""
    return f"{_indent(level)}(*@ {payload} *)\n"


def _attr_text(attrs: AttrSet) -> str:
    parts = [f"[@{a.name}]" for a in attrs if a.name != "gospel"]
    return (" " + " ".join(parts)) if parts else ""


def _params_of(e: SrcExpr) -> tuple[list[Param], SrcExpr]:
    params = []
    while isinstance(e, Fun):
        params.append(e.param)
        e = e.body
    return params, e


def _param_text(p: Param) -> str:
    if p.ty is not None and type_to_text(p.ty) == "unit" and p.name == "_":
        return "()"
    if p.ghost and p.ty is not None:
        return f"({p.name} [@ghost] : {type_to_text(p.ty)})"
    if p.ghost:
        return f"({p.name} [@ghost])"
    if p.ty is not None:
        return f"({p.name} : {type_to_text(p.ty)})"
    return p.name


def _decl(d: SrcDecl, level: int) -> str:
    ind = _indent(level)
    if isinstance(d, DLet):
        params, body = _params_of(d.expr)
        head = f"{ind}let{_attr_text(d.attrs)} {d.name}"
        if params:
            head += " " + " ".join(_param_text(p) for p in params)
        text = f"{head} =\n{_indent(level + 1)}{_expr(body, _PREC_SEQ)}"
        spec = _spec_comment(d.spec_attrs, level)
        return text + ("\n" + spec.rstrip("\n") if spec else "")
    if isinstance(d, DLetRec):
        parts = []
        for i, b in enumerate(d.bindings):
            kw = f"let{_attr_text(d.attrs)} rec" if i == 0 else "and"
            params, body = _params_of(b.expr)
            head = f"{ind}{kw} {b.name}"
            if params:
                head += " " + " ".join(_param_text(p) for p in params)
            text = f"{head} =\n{_indent(level + 1)}{_expr(body, _PREC_SEQ)}"
            spec = _spec_comment(b.spec_attrs, level)
            parts.append(text + ("\n" + spec.rstrip("\n") if spec else ""))
        return "\n".join(parts)
    if isinstance(d, DType):
        parts = []
        for i, td in enumerate(d.defs):
            kw = "type" if i == 0 else "and"
            parts.append(f"{ind}{kw} {_typedef(td, level)}")
        return "\n".join(parts)
    if isinstance(d, DExn):
        if not d.args:
            return f"{ind}exception {d.name}"
        tys = " * ".join(
            type_to_text(t.ty) + (" [@ghost]" if t.status == GHOST else "")
            for t in d.args)
        return f"{ind}exception {d.name} of {tys}"
    if isinstance(d, DModuleType):
        return f"{ind}module type {d.name} = {_modtype(d.sig, level)}"
    if isinstance(d, DModule):
        return f"{ind}module {d.name} = {_module(d.module, level)}"
    if isinstance(d, DFloatingSpec):
        return _spec_comment(d.attrs, level).rstrip("\n")
    raise TypeError(f"not a declaration: {d!r}")


def _typedef(td: SrcTypeDef, level: int) -> str:
    params = ""
    if len(td.params) == 1:
        params = f"'{td.params[0]} "
    elif td.params:
        params = "(" + ", ".join(f"'{p}" for p in td.params) + ") "
    head = f"{params}{td.name}"
    body = td.body
    if isinstance(body, TDAbstract):
        return head
    if isinstance(body, TDAlias):
        return f"{head} = {type_to_text(body.ty)}"
    if isinstance(body, TDRecord):
        fields = []
        for f in body.fields:
            mut = "mutable " if f.mutable else ""
            ghost = " [@ghost]" if f.tagged.status == GHOST else ""
            fields.append(f"{mut}{f.name} : {type_to_text(f.tagged.ty)}{ghost}")
        text = f"{head} = {{ " + "; ".join(fields) + " }"
        if body.invariant_attrs:
            text += "\n" + _spec_comment(body.invariant_attrs, level).rstrip("\n")
        return text
    if isinstance(body, TDVariant):
        ctors = []
        for name, args in body.constructors:
            if args:
                ctors.append(f"{name} of " + " * ".join(type_to_text(a)
                                                        for a in args))
            else:
                ctors.append(name)
        return f"{head} = " + " | ".join(ctors)
    raise TypeError(f"not a type definition body: {body!r}")


def _module(m: SrcModule, level: int) -> str:
    ind = _indent(level)
    if isinstance(m, MStruct):
        inner = "\n\n".join(_decl(d, level + 1) for d in m.decls)
        return f"struct\n{inner}\nend" if inner else "struct end"
    if isinstance(m, MFunctor):
        sig = (m.param_sig.name if m.param_sig.name
               else _modtype(m.param_sig, level))
        return (f"functor ({m.param} : {sig}) -> "
                f"{_module(m.body, level)}")
    raise TypeError(f"not a module expression: {m!r}")


def _modtype(mt: SrcModuleType, level: int) -> str:
    items = []
    for item in mt.items:
        ind = _indent(level + 1)
        if isinstance(item, SVal):
            ghost = " [@ghost]" if any(a.name == "ghost" for a in item.attrs) else ""
            text = f"{ind}val{ghost} {item.name} : {type_to_text(item.tagged.ty)}"
            spec = _spec_comment(item.spec_attrs, level + 1)
            items.append(text + ("\n" + spec.rstrip("\n") if spec else ""))
        elif isinstance(item, SType):
            parts = []
            for i, td in enumerate(item.defs):
                kw = "type" if i == 0 else "and"
                parts.append(f"{ind}{kw} {_typedef(td, level + 1)}")
            items.append("\n".join(parts))
        elif isinstance(item, SFloatingSpec):
            items.append(_spec_comment(item.attrs, level + 1).rstrip("\n"))
    inner = "\n".join(items)
    return f"sig\n{inner}\n{_indent(level)}end" if inner else "sig end"


def _list_literal(e: SrcExpr) -> list[SrcExpr] | None:
    items = []
    while isinstance(e, Construct) and e.name == "::":
        items.append(e.args[0])
        e = e.args[1]
    if isinstance(e, Construct) and e.name == "[]":
        return items
    return None


def _expr(e: SrcExpr, prec: int) -> str:
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Const):
        if e.value is None:
            return "()"
        if isinstance(e.value, bool):
            return "true" if e.value else "false"
        if e.value < 0:
            return _wrap(f"-{-e.value}", _PREC_APP, prec)
        return str(e.value)
    if isinstance(e, Let):
        if e.name == "_" and not e.attrs and not e.spec_attrs:
            text = (f"{_expr(e.bound, _PREC_TUPLE)};\n"
                    f"{_expr(e.body, _PREC_SEQ)}")
            return _wrap(text, _PREC_SEQ, prec)
        params, bound = _params_of(e.bound)
        head = f"let{_attr_text(e.attrs)} {e.name}"
        if params:
            head += " " + " ".join(_param_text(p) for p in params)
        spec = ""
        if e.spec_attrs and e.spec_attrs.merged_payload():
            spec = f" (*@ {e.spec_attrs.merged_payload()} *)"
        text = (f"{head} = {_expr(bound, _PREC_TUPLE)}{spec} in\n"
                f"{_expr(e.body, _PREC_SEQ)}")
        return _wrap(text, _PREC_SEQ, prec)
    if isinstance(e, LetRec):
        parts = []
        for i, b in enumerate(e.bindings):
            kw = f"let{_attr_text(e.attrs)} rec" if i == 0 else "and"
            params, bound = _params_of(b.expr)
            head = f"{kw} {b.name}"
            if params:
                head += " " + " ".join(_param_text(p) for p in params)
            spec = ""
            if b.spec_attrs and b.spec_attrs.merged_payload():
                spec = f" (*@ {b.spec_attrs.merged_payload()} *)"
            parts.append(f"{head} = {_expr(bound, _PREC_TUPLE)}{spec}")
        text = "\n".join(parts) + f" in\n{_expr(e.body, _PREC_SEQ)}"
        return _wrap(text, _PREC_SEQ, prec)
    if isinstance(e, If):
        text = (f"if {_expr(e.cond, _PREC_TUPLE)} "
                f"then {_expr(e.then, _PREC_TUPLE)}")
        if not (isinstance(e.orelse, Const) and e.orelse.value is None):
            text += f" else {_expr(e.orelse, _PREC_TUPLE)}"
        return _wrap(text, _PREC_TUPLE, prec)
    if isinstance(e, Match):
        arms = "\n".join(
            f"  | {pattern_to_text(a.pattern)} -> {_expr(a.body, _PREC_TUPLE)}"
            for a in e.arms)
        text = f"begin match {_expr(e.scrutinee, _PREC_TUPLE)} with\n{arms}\nend"
        return text
    if isinstance(e, App):
        if e.fn in _INFIX and len(e.args) == 2:
            p = _PREC[e.fn]
            text = (f"{_expr(e.args[0], p)} {e.fn if e.fn != '@' else '@'} "
                    f"{_expr(e.args[1], p + 1)}")
            return _wrap(text, p, prec)
        if not e.args:
            return e.fn
        text = f"{e.fn} " + " ".join(_expr(a, _PREC_ATOM) for a in e.args)
        return _wrap(text, _PREC_APP, prec)
    if isinstance(e, Fun):
        params, body = _params_of(e)
        text = ("fun " + " ".join(_param_text(p) for p in params)
                + f" -> {_expr(body, _PREC_TUPLE)}")
        return _wrap(text, _PREC_TUPLE, prec)
    if isinstance(e, Record):
        fields = "; ".join(f"{n} = {_expr(v, _PREC_TUPLE)}" for n, v in e.fields)
        return f"{{ {fields} }}"
    if isinstance(e, FieldGet):
        return f"{_expr(e.expr, _PREC_ATOM)}.{e.field}"
    if isinstance(e, FieldSet):
        text = (f"{_expr(e.expr, _PREC_ATOM)}.{e.field} <- "
                f"{_expr(e.value, _PREC_TUPLE)}")
        return _wrap(text, _PREC_TUPLE, prec)
    if isinstance(e, Construct):
        items = _list_literal(e)
        if items is not None:
            return "[" + "; ".join(_expr(x, _PREC_TUPLE) for x in items) + "]"
        if e.name == "::":
            text = f"{_expr(e.args[0], _PREC_CONS + 1)} :: {_expr(e.args[1], _PREC_CONS)}"
            return _wrap(text, _PREC_CONS, prec)
        if not e.args:
            return e.name
        if len(e.args) == 1:
            return _wrap(f"{e.name} {_expr(e.args[0], _PREC_ATOM)}",
                         _PREC_APP, prec)
        inner = ", ".join(_expr(a, _PREC_TUPLE) for a in e.args)
        return _wrap(f"{e.name} ({inner})", _PREC_APP, prec)
    if isinstance(e, Tuple):
        inner = ", ".join(_expr(x, _PREC_TUPLE + 1) for x in e.items)
        return _wrap(inner, _PREC_TUPLE, prec)
    if isinstance(e, Raise):
        if not e.args:
            return _wrap(f"raise {e.exn}", _PREC_TUPLE, prec)
        inner = ", ".join(_expr(a, _PREC_TUPLE) for a in e.args)
        return _wrap(f"raise ({e.exn} ({inner}))" if len(e.args) > 1
                     else f"raise ({e.exn} {_expr(e.args[0], _PREC_ATOM)})",
                     _PREC_TUPLE, prec)
    if isinstance(e, Try):
        handlers = " | ".join(
            f"{h.exn}" + ("".join(" " + pattern_to_text(p) for p in h.args))
            + f" -> {_expr(h.body, _PREC_TUPLE)}"
            for h in e.handlers)
        text = f"try\n{_expr(e.body, _PREC_SEQ)}\nwith {handlers}"
        return _wrap(text, _PREC_SEQ, prec)
    if isinstance(e, While):
        spec = _spec_comment(e.attrs, 1)
        text = (f"while {_expr(e.cond, _PREC_TUPLE)} do\n{spec}"
                f"{_expr(e.body, _PREC_SEQ)}\ndone")
        return text
    if isinstance(e, For):
        spec = _spec_comment(e.attrs, 1)
        text = (f"for {e.var} = {_expr(e.lo, _PREC_TUPLE)} to "
                f"{_expr(e.hi, _PREC_TUPLE)} do\n{spec}"
                f"{_expr(e.body, _PREC_SEQ)}\ndone")
        return text
    if isinstance(e, AssertFalse):
        return "assert false"
    if isinstance(e, RefMake):
        return _wrap(f"ref {_expr(e.expr, _PREC_ATOM)}", _PREC_APP, prec)
    if isinstance(e, Deref):
        return f"!{_expr(e.expr, _PREC_ATOM)}"
    if isinstance(e, Assign):
        text = f"{_expr(e.ref, _PREC_APP)} := {_expr(e.value, _PREC_TUPLE)}"
        return _wrap(text, _PREC_TUPLE, prec)
    if isinstance(e, ArrayGet):
        return f"{_expr(e.array, _PREC_ATOM)}.({_expr(e.index, _PREC_SEQ)})"
    if isinstance(e, ArraySet):
        text = (f"{_expr(e.array, _PREC_ATOM)}.({_expr(e.index, _PREC_SEQ)}) "
                f"<- {_expr(e.value, _PREC_TUPLE)}")
        return _wrap(text, _PREC_TUPLE, prec)
    if isinstance(e, LocalExn):
        tys = " * ".join(type_to_text(t) for t in e.arg_types)
        head = f"let exception {e.name}" + (f" of {tys}" if tys else "")
        return _wrap(f"{head} in\n{_expr(e.body, _PREC_SEQ)}", _PREC_SEQ, prec)
    raise TypeError(f"not an expression: {e!r}")


def _wrap(text: str, produced: int, required: int) -> str:
    if produced < required:
        if "\n" in text:
            return f"begin {text} end"
        return f"({text})"
    return text


# ---------------------------------------------------------------------------
# Specification payloads
# ---------------------------------------------------------------------------

from .frontend.specs import FunSpec, LoopSpec
from .terms import (TmApp, TmBin, TmBool, TmCmp, TmConn, TmConstruct,
                    TmDeref, TmField, TmIf, TmInt, TmLet, TmMatch, TmNeg,
                    TmNot, TmOld, TmQuant, TmTuple, TmUnit, TmVar, Term)

_SPEC_CONN = {"iff": ("<->", 1), "implies": ("->", 2), "or": ("||", 3),
              "and": ("&&", 4)}
_SPEC_BUILTIN = {"reverse": "List.rev", "length": "List.length",
                 "mem": "List.mem", "array_length": "Array.length"}


def spec_term_to_text(t: Term) -> str:
    """Source-surface rendering of a term, re-parseable by the spec parser."""
    return _sterm(t, 0)


def _sterm(t: Term, prec: int) -> str:
    if isinstance(t, TmVar):
        return _SPEC_BUILTIN.get(t.name, t.name)
    if isinstance(t, TmInt):
        return str(t.value) if t.value >= 0 else _swrap(f"-{-t.value}", 10, prec)
    if isinstance(t, TmBool):
        return "true" if t.value else "false"
    if isinstance(t, TmUnit):
        return "()"
    if isinstance(t, TmBin):
        p = 9 if t.op in ("*", "/", "mod") else 8
        return _swrap(f"{_sterm(t.lhs, p)} {t.op} {_sterm(t.rhs, p + 1)}",
                      p, prec)
    if isinstance(t, TmNeg):
        return _swrap(f"-{_sterm(t.arg, 11)}", 10, prec)
    if isinstance(t, TmCmp):
        return _swrap(f"{_sterm(t.lhs, 7)} {t.op} {_sterm(t.rhs, 7)}", 6, prec)
    if isinstance(t, TmNot):
        return _swrap(f"not {_sterm(t.arg, 6)}", 5, prec)
    if isinstance(t, TmConn):
        text, p = _SPEC_CONN[t.op]
        if t.op == "implies":
            return _swrap(f"{_sterm(t.lhs, p + 1)} {text} {_sterm(t.rhs, p)}",
                          p, prec)
        return _swrap(f"{_sterm(t.lhs, p)} {text} {_sterm(t.rhs, p + 1)}",
                      p, prec)
    if isinstance(t, TmQuant):
        groups = []
        for name, ty in t.binders:
            if ty is None:
                groups.append(name)
            else:
                groups.append(f"{name}: {type_to_text(ty)}")
        return _swrap(f"{t.quant} " + ", ".join(groups)
                      + f". {_sterm(t.body, 0)}", 0, prec)
    if isinstance(t, TmIf):
        return _swrap(f"if {_sterm(t.cond, 0)} then {_sterm(t.then, 0)} "
                      f"else {_sterm(t.orelse, 0)}", 0, prec)
    if isinstance(t, TmLet):
        return _swrap(f"let {t.name} = {_sterm(t.bound, 0)} in "
                      f"{_sterm(t.body, 0)}", 0, prec)
    if isinstance(t, TmMatch):
        arms = " ".join(f"| {pattern_to_text(p)} -> {_sterm(b, 0)}"
                        for p, b in t.arms)
        return _swrap(f"match {_sterm(t.scrutinee, 1)} with {arms} end",
                      0, prec)
    if isinstance(t, TmTuple):
        return "(" + ", ".join(_sterm(x, 1) for x in t.items) + ")"
    if isinstance(t, TmConstruct):
        items = _list_term(t)
        if items is not None:
            return "[" + "; ".join(_sterm(x, 1) for x in items) + "]"
        if t.name == "::":
            return _swrap(f"{_sterm(t.args[0], 8)} :: {_sterm(t.args[1], 7)}",
                          7, prec)
        if not t.args:
            return t.name
        return _swrap(f"{t.name} " + " ".join(_sterm(a, 11) for a in t.args),
                      10, prec)
    if isinstance(t, TmApp):
        if t.fn == "append":
            return _swrap(f"{_sterm(t.args[0], 8)} @ {_sterm(t.args[1], 7)}",
                          7, prec)
        if t.fn == "array_get":
            return f"{_sterm(t.args[0], 11)}.({_sterm(t.args[1], 0)})"
        name = _SPEC_BUILTIN.get(t.fn, t.fn)
        if not t.args:
            return name
        return _swrap(f"{name} " + " ".join(_sterm(a, 11) for a in t.args),
                      10, prec)
    if isinstance(t, TmField):
        return f"{_sterm(t.record, 11)}.{t.field}"
    if isinstance(t, TmDeref):
        return f"!{_sterm(t.ref, 11)}"
    if isinstance(t, TmOld):
        return _swrap(f"old {_sterm(t.arg, 11)}", 10, prec)
    raise TypeError(f"not a term: {t!r}")


def _list_term(t: Term):
    items = []
    while isinstance(t, TmConstruct) and t.name == "::":
        items.append(t.args[0])
        t = t.args[1]
    if isinstance(t, TmConstruct) and t.name == "[]":
        return items
    return None


def _swrap(text: str, produced: int, required: int) -> str:
    return f"({text})" if produced < required else text


def print_spec(spec) -> str:
    """Render a parsed spec back into payload text."""
    lines = []
    if isinstance(spec, FunSpec):
        if spec.header is not None:
            head = spec.header.name
            if spec.header.args:
                head += " " + " ".join(spec.header.args)
            if spec.header.result:
                head = f"{spec.header.result} = {head}"
            lines.append(head)
        for t in spec.requires:
            lines.append(f"requires {spec_term_to_text(t)}")
        for t in spec.variants:
            lines.append(f"variant {spec_term_to_text(t)}")
        for t in spec.ensures:
            lines.append(f"ensures {spec_term_to_text(t)}")
        for exn, t in spec.raises:
            if t == TmBool(True):
                lines.append(f"raises {exn}")
            else:
                lines.append(f"raises {exn} -> {spec_term_to_text(t)}")
    elif isinstance(spec, LoopSpec):
        for t in spec.invariants:
            lines.append(f"invariant {spec_term_to_text(t)}")
        for t in spec.variants:
            lines.append(f"variant {spec_term_to_text(t)}")
    else:
        raise TypeError(f"cannot print {type(spec).__name__}")
    return "\n".join(lines)
