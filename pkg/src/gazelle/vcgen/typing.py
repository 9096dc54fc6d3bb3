"""Type reconstruction over the IR, for the proof-obligation machinery.

The translation itself is syntactic; types only become necessary when
obligations quantify over program state (havoc variables, call results,
quantifier binders).  This is a small unification-based inferencer: it
computes parameter and result types for every program function, and offers
term/expression type synthesis against that signature table.  Polymorphism is
per-top-level-binding; unresolved types stay as type variables and later
instantiate to the checking domain.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from ..diagnostics import GazelleError, Loc
from ..source_ast import (Pattern, PAs, PConstruct, POr, PTuple, PTyped, PVar,
                          PWild, SrcType, TApp, TArrow, TTuple, TVar, T_BOOL,
                          T_INT, T_UNIT)
from ..terms import (Term, TmApp, TmBin, TmBool, TmCmp, TmConn, TmConstruct,
                     TmDeref, TmField, TmIf, TmInt, TmLet, TmMatch, TmNeg,
                     TmNot, TmOld, TmQuant, TmTuple, TmUnit, TmVar)
from .. import target_ir as IR


class TypeError_(GazelleError):
    pass


_counter = itertools.count()


def fresh_tvar() -> TVar:
    return TVar(f"_t{next(_counter)}")


def t_list(elem: SrcType) -> SrcType:
    return TApp("list", (elem,))


def t_array(elem: SrcType) -> SrcType:
    return TApp("array", (elem,))


def t_ref(elem: SrcType) -> SrcType:
    return TApp("ref", (elem,))


class Unifier:
    """Union-find style substitution over SrcType terms."""

    def __init__(self, world: "TypeWorld | None" = None) -> None:
        self.subst: dict[str, SrcType] = {}
        self.world = world

    def resolve(self, ty: SrcType) -> SrcType:
        while True:
            while isinstance(ty, TVar) and ty.name in self.subst:
                ty = self.subst[ty.name]
            if self.world is not None and isinstance(ty, TApp) \
                    and ty.name in self.world.aliases:
                ty = self.world.resolve_alias(ty)
                continue
            return ty

    def deep(self, ty: SrcType) -> SrcType:
        ty = self.resolve(ty)
        if isinstance(ty, TArrow):
            return TArrow(self.deep(ty.lhs), self.deep(ty.rhs))
        if isinstance(ty, TTuple):
            return TTuple(tuple(self.deep(t) for t in ty.items))
        if isinstance(ty, TApp):
            return TApp(ty.name, tuple(self.deep(t) for t in ty.args))
        return ty

    def unify(self, a: SrcType, b: SrcType, loc: Loc | None = None) -> None:
        a = self.resolve(a)
        b = self.resolve(b)
        if a == b:
            return
        if isinstance(a, TVar) and isinstance(b, TVar):
            # bind inference-fresh variables in preference to user ones
            if a.name.startswith("_t"):
                self.subst[a.name] = b
            else:
                self.subst[b.name] = a
            return
        if isinstance(a, TVar):
            if self._occurs(a.name, b):
                raise TypeError_("cannot construct an infinite type",
                                 loc or Loc("<types>", 0, 0))
            self.subst[a.name] = b
            return
        if isinstance(b, TVar):
            if self._occurs(b.name, a):
                raise TypeError_("cannot construct an infinite type",
                                 loc or Loc("<types>", 0, 0))
            self.subst[b.name] = a
            return
        if isinstance(a, TArrow) and isinstance(b, TArrow):
            self.unify(a.lhs, b.lhs, loc)
            self.unify(a.rhs, b.rhs, loc)
            return
        if isinstance(a, TTuple) and isinstance(b, TTuple) \
                and len(a.items) == len(b.items):
            for x, y in zip(a.items, b.items):
                self.unify(x, y, loc)
            return
        if isinstance(a, TApp) and isinstance(b, TApp) and a.name == b.name \
                and len(a.args) == len(b.args):
            for x, y in zip(a.args, b.args):
                self.unify(x, y, loc)
            return
        from ..terms import type_to_text
        raise TypeError_(
            f"cannot unify {type_to_text(a)} with {type_to_text(b)}",
            loc or Loc("<types>", 0, 0))

    def _occurs(self, name: str, ty: SrcType) -> bool:
        ty = self.resolve(ty)
        if isinstance(ty, TVar):
            return ty.name == name
        if isinstance(ty, TArrow):
            return self._occurs(name, ty.lhs) or self._occurs(name, ty.rhs)
        if isinstance(ty, TTuple):
            return any(self._occurs(name, t) for t in ty.items)
        if isinstance(ty, TApp):
            return any(self._occurs(name, t) for t in ty.args)
        return False


def instantiate(ty: SrcType, mapping: dict[str, SrcType]) -> SrcType:
    if isinstance(ty, TVar):
        return mapping.setdefault(ty.name, fresh_tvar())
    if isinstance(ty, TArrow):
        return TArrow(instantiate(ty.lhs, mapping), instantiate(ty.rhs, mapping))
    if isinstance(ty, TTuple):
        return TTuple(tuple(instantiate(t, mapping) for t in ty.items))
    if isinstance(ty, TApp):
        return TApp(ty.name, tuple(instantiate(t, mapping) for t in ty.args))
    return ty


@dataclass
class FnSig:
    params: list[SrcType]
    result: SrcType

    def instantiated(self) -> "FnSig":
        mapping: dict[str, SrcType] = {}
        return FnSig([instantiate(p, mapping) for p in self.params],
                     instantiate(self.result, mapping))


_CMP_POLY = {"=", "<>"}
_CMP_INT = {"<", "<=", ">", ">="}


class TypeWorld:
    """Signature table shared by inference and the obligation engine."""

    def __init__(self) -> None:
        self.records: dict[str, tuple[tuple[str, ...], list[tuple[str, SrcType]]]] = {}
        self.variants: dict[str, tuple[tuple[str, ...], list[tuple[str, tuple[SrcType, ...]]]]] = {}
        self.aliases: dict[str, tuple[tuple[str, ...], SrcType]] = {}
        self.abstract: set[str] = set()
        self.constructors: dict[str, tuple[str, tuple[str, ...], tuple[SrcType, ...]]] = {}
        self.field_types: dict[str, tuple[str, SrcType]] = {}  # field -> (record, ty)
        self.functions: dict[str, FnSig] = {}
        self.exceptions: dict[str, tuple[SrcType, ...]] = {}
        # scope-relative type name -> canonical path-qualified name
        self.canon: dict[str, str] = {}

        self.records["ref"] = (("a",), [("contents", TVar("a"))])
        self.field_types["contents"] = ("ref", TVar("a"))
        self.variants["list"] = (
            ("a",), [("[]", ()), ("::", (TVar("a"), t_list(TVar("a"))))])
        self.constructors["[]"] = ("list", ("a",), ())
        self.constructors["::"] = ("list", ("a",),
                                   (TVar("a"), t_list(TVar("a"))))
        a = TVar("a")
        self.functions.update({
            "length": FnSig([t_list(a)], T_INT),
            "append": FnSig([t_list(a), t_list(a)], t_list(a)),
            "reverse": FnSig([t_list(a)], t_list(a)),
            "mem": FnSig([a, t_list(a)], T_BOOL),
            "min": FnSig([T_INT, T_INT], T_INT),
            "max": FnSig([T_INT, T_INT], T_INT),
            "array_length": FnSig([t_array(a)], T_INT),
            "array_get": FnSig([t_array(a), T_INT], a),
            "not": FnSig([T_BOOL], T_BOOL),
            "@": FnSig([t_list(a), t_list(a)], t_list(a)),
        })

    # -- registration -------------------------------------------------------

    def register_typedef(self, td: IR.IRTypeDef) -> None:
        body = td.body
        if isinstance(body, IR.TBAbstract):
            self.abstract.add(td.name)
        elif isinstance(body, IR.TBAlias):
            self.aliases[td.name] = (td.params, body.ty)
        elif isinstance(body, IR.TBRecord):
            fields = [(f.name, f.ty) for f in body.fields]
            self.records[td.name] = (td.params, fields)
            for fname, fty in fields:
                self.field_types[fname] = (td.name, fty)
            # whole-record values appear in formulas via a mk-constructor
            self.constructors[f"%mk:{td.name}"] = (
                td.name, td.params, tuple(t for _, t in fields))
        elif isinstance(body, IR.TBVariant):
            self.variants[td.name] = (td.params, list(body.constructors))
            for cname, args in body.constructors:
                self.constructors[cname] = (td.name, td.params, args)

    def record_instance(self, name: str) -> tuple[SrcType, dict[str, SrcType]]:
        params, fields = self.records[name]
        mapping = {p: fresh_tvar() for p in params}
        inst_fields = {f: _subst_params(t, mapping) for f, t in fields}
        ty = TApp(name, tuple(mapping[p] for p in params))
        return ty, inst_fields

    def constructor_instance(self, name: str) -> tuple[tuple[SrcType, ...], SrcType]:
        tyname, params, args = self.constructors[name]
        mapping = {p: fresh_tvar() for p in params}
        inst_args = tuple(_subst_params(a, mapping) for a in args)
        return inst_args, TApp(tyname, tuple(mapping[p] for p in params))

    def resolve_alias(self, ty: SrcType) -> SrcType:
        seen = 0
        while isinstance(ty, TApp) and ty.name in self.aliases and seen < 32:
            params, target = self.aliases[ty.name]
            mapping = dict(zip(params, ty.args))
            ty = _subst_params(target, mapping)
            seen += 1
        return ty

    def canonize(self, ty: SrcType) -> SrcType:
        """Rewrite type-constructor references to canonical scope paths."""
        if isinstance(ty, TVar):
            return ty
        if isinstance(ty, TArrow):
            return TArrow(self.canonize(ty.lhs), self.canonize(ty.rhs))
        if isinstance(ty, TTuple):
            return TTuple(tuple(self.canonize(t) for t in ty.items))
        if isinstance(ty, TApp):
            name = self.canon.get(ty.name, ty.name)
            return TApp(name, tuple(self.canonize(t) for t in ty.args))
        return ty


def _subst_params(ty: SrcType, mapping: dict[str, SrcType]) -> SrcType:
    if isinstance(ty, TVar):
        return mapping.get(ty.name, ty)
    if isinstance(ty, TArrow):
        return TArrow(_subst_params(ty.lhs, mapping),
                      _subst_params(ty.rhs, mapping))
    if isinstance(ty, TTuple):
        return TTuple(tuple(_subst_params(t, mapping) for t in ty.items))
    if isinstance(ty, TApp):
        return TApp(ty.name, tuple(_subst_params(t, mapping) for t in ty.args))
    return ty


class TermTyper:
    """Synthesis/checking of term types against a TypeWorld."""

    def __init__(self, world: TypeWorld, uni: Unifier):
        self.world = world
        self.uni = uni

    def check(self, t: Term, env: dict[str, SrcType], expected: SrcType,
              loc: Loc | None = None) -> None:
        actual = self.infer(t, env)
        self.uni.unify(actual, expected, loc)

    def infer(self, t: Term, env: dict[str, SrcType]) -> SrcType:
        if isinstance(t, TmVar):
            if t.name in env:
                return env[t.name]
            if t.name in self.world.functions:
                sig = self.world.functions[t.name].instantiated()
                out = sig.result
                for p in reversed(sig.params):
                    out = TArrow(p, out)
                return out
            raise TypeError_(f"unknown name '{t.name}' in term", t.loc)
        if isinstance(t, TmInt):
            return T_INT
        if isinstance(t, TmBool):
            return T_BOOL
        if isinstance(t, TmUnit):
            return T_UNIT
        if isinstance(t, TmNeg):
            self.check(t.arg, env, T_INT)
            return T_INT
        if isinstance(t, TmBin):
            self.check(t.lhs, env, T_INT)
            self.check(t.rhs, env, T_INT)
            return T_INT
        if isinstance(t, TmCmp):
            if t.op in _CMP_INT:
                self.check(t.lhs, env, T_INT)
                self.check(t.rhs, env, T_INT)
            else:
                a = self.infer(t.lhs, env)
                self.check(t.rhs, env, a)
            return T_BOOL
        if isinstance(t, TmNot):
            self.check(t.arg, env, T_BOOL)
            return T_BOOL
        if isinstance(t, TmConn):
            self.check(t.lhs, env, T_BOOL)
            self.check(t.rhs, env, T_BOOL)
            return T_BOOL
        if isinstance(t, TmQuant):
            inner = dict(env)
            for name, ty in t.binders:
                inner[name] = (self.world.canonize(ty) if ty is not None
                               else fresh_tvar())
            self.check(t.body, inner, T_BOOL)
            return T_BOOL
        if isinstance(t, TmIf):
            self.check(t.cond, env, T_BOOL)
            a = self.infer(t.then, env)
            self.check(t.orelse, env, a)
            return a
        if isinstance(t, TmLet):
            a = self.infer(t.bound, env)
            inner = dict(env)
            inner[t.name] = a
            return self.infer(t.body, inner)
        if isinstance(t, TmMatch):
            sty = self.infer(t.scrutinee, env)
            result = fresh_tvar()
            for pat, body in t.arms:
                inner = dict(env)
                self.bind_pattern(pat, sty, inner)
                self.check(body, inner, result)
            return result
        if isinstance(t, TmTuple):
            return TTuple(tuple(self.infer(x, env) for x in t.items))
        if isinstance(t, TmConstruct):
            if t.name not in self.world.constructors:
                raise TypeError_(f"unknown constructor '{t.name}'",
                                 Loc("<term>", 0, 0))
            arg_tys, ty = self.world.constructor_instance(t.name)
            if len(arg_tys) != len(t.args):
                raise TypeError_(
                    f"constructor '{t.name}' arity mismatch", Loc("<term>", 0, 0))
            for a, ety in zip(t.args, arg_tys):
                self.check(a, env, ety)
            return ty
        if isinstance(t, TmApp):
            if t.fn not in self.world.functions:
                raise TypeError_(f"unknown function '{t.fn}' in term",
                                 Loc("<term>", 0, 0))
            sig = self.world.functions[t.fn].instantiated()
            if len(sig.params) != len(t.args):
                raise TypeError_(f"'{t.fn}' arity mismatch", Loc("<term>", 0, 0))
            for a, ety in zip(t.args, sig.params):
                self.check(a, env, ety)
            return sig.result
        if isinstance(t, TmField):
            rty = self.uni.resolve(self.infer(t.record, env))
            rty = self.world.resolve_alias(rty)
            rty = self.uni.resolve(rty)
            if isinstance(rty, TApp) and rty.name in self.world.records:
                params, fields = self.world.records[rty.name]
                mapping = dict(zip(params, rty.args))
                for fname, fty in fields:
                    if fname == t.field:
                        return _subst_params(fty, mapping)
                raise TypeError_(
                    f"record '{rty.name}' has no field '{t.field}'",
                    Loc("<term>", 0, 0))
            if t.field in self.world.field_types:
                rec_name, fty = self.world.field_types[t.field]
                params, _ = self.world.records[rec_name]
                mapping = {p: fresh_tvar() for p in params}
                self.uni.unify(rty, TApp(rec_name,
                                         tuple(mapping[p] for p in params)))
                return _subst_params(fty, mapping)
            raise TypeError_(f"unknown field '{t.field}'", Loc("<term>", 0, 0))
        if isinstance(t, TmOld):
            return self.infer(t.arg, env)
        if isinstance(t, TmDeref):
            elem = fresh_tvar()
            self.check(t.ref, env, t_ref(elem))
            return elem
        raise TypeError_(f"cannot type term {t!r}", Loc("<term>", 0, 0))

    def bind_pattern(self, pat: Pattern, ty: SrcType,
                     env: dict[str, SrcType]) -> None:
        if isinstance(pat, PWild):
            return
        if isinstance(pat, PVar):
            env[pat.name] = ty
            return
        if isinstance(pat, PTuple):
            comps = [fresh_tvar() for _ in pat.items]
            self.uni.unify(ty, TTuple(tuple(comps)))
            for p, cty in zip(pat.items, comps):
                self.bind_pattern(p, cty, env)
            return
        if isinstance(pat, PConstruct):
            if pat.name not in self.world.constructors:
                raise TypeError_(f"unknown constructor '{pat.name}'", pat.loc)
            arg_tys, cty = self.world.constructor_instance(pat.name)
            self.uni.unify(ty, cty, pat.loc)
            if len(arg_tys) != len(pat.args):
                raise TypeError_(
                    f"constructor pattern '{pat.name}' arity mismatch", pat.loc)
            for p, aty in zip(pat.args, arg_tys):
                self.bind_pattern(p, aty, env)
            return
        if isinstance(pat, POr):
            self.bind_pattern(pat.left, ty, env)
            self.bind_pattern(pat.right, ty, env)
            return
        if isinstance(pat, PAs):
            self.bind_pattern(pat.pattern, ty, env)
            env[pat.name] = ty
            return
        if isinstance(pat, PTyped):
            self.uni.unify(ty, self.world.canonize(pat.ty), pat.loc)
            self.bind_pattern(pat.pattern, ty, env)
            return
        raise TypeError_(f"unsupported pattern {pat!r}", Loc("<pattern>", 0, 0))
