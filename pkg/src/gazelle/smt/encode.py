"""Encoding of verification conditions as SMT-LIB v2 scripts.

Polymorphic symbols monomorphize per occurring type instantiation; residual
type variables become fresh uninterpreted sorts.  Lists are algebraic
datatypes with defined length/append/reverse/mem functions plus a small
package of true helper lemmas of the list theory; records and variants are
datatypes; arrays pair a map with a length.  Defining equations of logical
functions are asserted as guarded axioms; the goal is asserted negated.
Reachability pulls in exactly the axioms whose symbols the VC (transitively)
mentions.  Scripts embed the VC id as their first comment line and encoding
is deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dfield
from typing import Optional

from ..diagnostics import GazelleError
from ..source_ast import (Pattern, PAs, PConstruct, PTuple, PTyped, PVar,
                          PWild, SrcType, TApp, TTuple, TVar, T_BOOL, T_INT,
                          pattern_vars)
from ..terms import (Term, TmApp, TmBin, TmBool, TmCmp, TmConn, TmConstruct,
                     TmField, TmIf, TmInt, TmLet, TmMatch, TmNeg, TmNot,
                     TmOld, TmQuant, TmTuple, TmUnit, TmVar, mk_implies,
                     term_children)
from ..vcgen.context import LogicalContext, LogicalFn, annotate_binders
from ..vcgen.typing import TermTyper, TypeError_, Unifier, fresh_tvar, _subst_params
from ..vcgen.vcs import VC


@dataclass
class SmtScript:
    vc_id: str
    lines: list[str]

    @property
    def text(self) -> str:
        return "\n".join(self.lines) + "\n"


class EncodeError(GazelleError):
    pass


def _mangle_ty(ty: SrcType) -> str:
    if isinstance(ty, TVar):
        return f"tv_{ty.name}"
    if isinstance(ty, TTuple):
        return "tup" + str(len(ty.items)) + "_" + "_".join(
            _mangle_ty(t) for t in ty.items)
    if isinstance(ty, TApp):
        base = ty.name.replace(".", "_").replace("%", "")
        if not ty.args:
            return base
        return base + "_" + "_".join(_mangle_ty(t) for t in ty.args)
    raise EncodeError(f"cannot encode arrow type")


def _mangle_fn(name: str, inst: tuple) -> str:
    base = name.replace(".", "_").replace("%", "").replace(":", "_")
    if not inst:
        return base
    return base + "__" + "_".join(_mangle_ty(t) for t in inst)


class Encoder:
    def __init__(self, ctx: LogicalContext):
        self.ctx = ctx
        self.world = ctx.world
        self.sorts: dict[str, str] = {}        # mangled -> declaration block
        self.sort_order: list[str] = []
        self.fun_decls: dict[str, str] = {}
        self.fun_order: list[str] = []
        self.assertions: list[tuple[str, str]] = []  # (label, smt)
        self._list_insts: dict[str, SrcType] = {}
        self._seen_assert: set[str] = set()
        self._residuals: dict[str, str] = {}   # inference tvar -> stable name

    # -- sorts -----------------------------------------------------------------

    def sort(self, ty: SrcType) -> str:
        ty = self.world.resolve_alias(ty)
        if isinstance(ty, TVar):
            base = ty.name
            if base.startswith("_t"):
                # residual inference variable: stable per-script name
                base = self._residuals.setdefault(
                    base, f"E{len(self._residuals)}")
            name = f"TV_{base.replace(chr(39), '')}"
            if name not in self.sorts:
                self.sorts[name] = f"(declare-sort {name} 0)"
                self.sort_order.append(name)
            return name
        if isinstance(ty, TTuple):
            return self._tuple_sort(ty)
        if isinstance(ty, TApp):
            if ty.name == "int":
                return "Int"
            if ty.name == "bool":
                return "Bool"
            if ty.name == "unit":
                return self._unit_sort()
            if ty.name == "list":
                return self._list_sort(ty.args[0] if ty.args else TVar("a"))
            if ty.name == "array":
                return self._array_sort(ty.args[0] if ty.args else TVar("a"))
            if ty.name in self.world.variants:
                return self._variant_sort(ty)
            if ty.name in self.world.records:
                return self._record_sort(ty)
            # abstract types become uninterpreted sorts
            name = "S_" + _mangle_ty(ty)
            if name not in self.sorts:
                self.sorts[name] = f"(declare-sort {name} 0)"
                self.sort_order.append(name)
            return name
        raise EncodeError("cannot encode this type")

    def _norm(self, ty: SrcType) -> SrcType:
        """Stable names for residual inference variables in sort names."""
        if isinstance(ty, TVar):
            if ty.name.startswith("_t"):
                return TVar(self._residuals.setdefault(
                    ty.name, f"E{len(self._residuals)}"))
            return ty
        if isinstance(ty, TTuple):
            return TTuple(tuple(self._norm(x) for x in ty.items))
        if isinstance(ty, TApp):
            return TApp(ty.name, tuple(self._norm(x) for x in ty.args))
        return ty

    def _unit_sort(self) -> str:
        if "Unit" not in self.sorts:
            self.sorts["Unit"] = \
                "(declare-datatypes ((Unit 0)) (((mk-unit))))"
            self.sort_order.append("Unit")
        return "Unit"

    def _list_sort(self, elem: SrcType) -> str:
        elem = self._norm(self.world.resolve_alias(elem))
        elem_s = self.sort(elem)
        name = f"List_{_mangle_ty(elem)}"
        if name in self.sorts:
            return name
        self.sorts[name] = (
            f"(declare-datatypes (({name} 0)) "
            f"(((nil-{name}) (cons-{name} (head-{name} {elem_s}) "
            f"(tail-{name} {name})))))")
        self.sort_order.append(name)
        self._list_insts[name] = elem
        self._list_theory(name, elem_s)
        return name

    def _list_theory(self, name: str, elem_s: str) -> None:
        """Defined list functions and true lemmas of the list theory."""
        nil = f"nil-{name}"
        cons = f"cons-{name}"
        for fn, sig in (
                (f"length-{name}", f"(({name})) Int"),
                (f"append-{name}", f"(({name}) ({name})) {name}"),
                (f"reverse-{name}", f"(({name})) {name}"),
                (f"mem-{name}", f"(({elem_s}) ({name})) Bool")):
            decl = f"(declare-fun {fn} {sig.replace('((', '(', 1) if False else sig})"
            # keep plain declare-fun formatting
            args, res = sig.rsplit(" ", 1)
            self._declare(fn, f"(declare-fun {fn} {args} {res})")
        ln, ap, rv, me = (f"length-{name}", f"append-{name}",
                          f"reverse-{name}", f"mem-{name}")
        x, y, l, m = "x!e", "y!e", "l!l", "m!l"
        self._assert(f"{ln}-def", f"""(forall ((l!l {name})) (= ({ln} l!l) (ite ((_ is {nil}) l!l) 0 (+ 1 ({ln} (tail-{name} l!l))))))""")
        self._assert(f"{ln}-nonneg",
                     f"(forall ((l!l {name})) (<= 0 ({ln} l!l)))")
        self._assert(f"{ap}-nil",
                     f"(forall ((m!l {name})) (= ({ap} {nil} m!l) m!l))")
        self._assert(f"{ap}-cons", f"""(forall ((x!e {elem_s}) (l!l {name}) (m!l {name})) (= ({ap} ({cons} x!e l!l) m!l) ({cons} x!e ({ap} l!l m!l))))""")
        self._assert(f"{ap}-nil-right",
                     f"(forall ((l!l {name})) (= ({ap} l!l {nil}) l!l))")
        self._assert(f"{ap}-assoc", f"""(forall ((l!l {name}) (m!l {name}) (n!l {name})) (= ({ap} ({ap} l!l m!l) n!l) ({ap} l!l ({ap} m!l n!l))))""")
        self._assert(f"{ln}-append", f"""(forall ((l!l {name}) (m!l {name})) (= ({ln} ({ap} l!l m!l)) (+ ({ln} l!l) ({ln} m!l))))""")
        self._assert(f"{rv}-nil", f"(= ({rv} {nil}) {nil})")
        self._assert(f"{rv}-cons", f"""(forall ((x!e {elem_s}) (l!l {name})) (= ({rv} ({cons} x!e l!l)) ({ap} ({rv} l!l) ({cons} x!e {nil}))))""")
        self._assert(f"{ln}-reverse",
                     f"(forall ((l!l {name})) (= ({ln} ({rv} l!l)) ({ln} l!l)))")
        self._assert(f"{me}-nil",
                     f"(forall ((x!e {elem_s})) (not ({me} x!e {nil})))")
        self._assert(f"{me}-cons", f"""(forall ((x!e {elem_s}) (y!e {elem_s}) (l!l {name})) (= ({me} x!e ({cons} y!e l!l)) (or (= x!e y!e) ({me} x!e l!l))))""")
        self._assert(f"{me}-append", f"""(forall ((x!e {elem_s}) (l!l {name}) (m!l {name})) (= ({me} x!e ({ap} l!l m!l)) (or ({me} x!e l!l) ({me} x!e m!l))))""")

    def _array_sort(self, elem: SrcType) -> str:
        elem = self._norm(self.world.resolve_alias(elem))
        elem_s = self.sort(elem)
        name = f"Arr_{_mangle_ty(elem)}"
        if name in self.sorts:
            return name
        self.sorts[name] = (
            f"(declare-datatypes (({name} 0)) "
            f"(((mk-{name} (elts-{name} (Array Int {elem_s})) "
            f"(len-{name} Int)))))")
        self.sort_order.append(name)
        self._assert(f"{name}-len-nonneg",
                     f"(forall ((a!a {name})) (<= 0 (len-{name} a!a)))")
        return name

    def _tuple_sort(self, ty: TTuple) -> str:
        ty = self._norm(ty)
        name = "T" + _mangle_ty(ty)
        comps = [self.sort(t) for t in ty.items]
        if name in self.sorts:
            return name
        fields = " ".join(f"(proj-{name}-{i} {s})"
                          for i, s in enumerate(comps))
        self.sorts[name] = (f"(declare-datatypes (({name} 0)) "
                            f"(((mk-{name} {fields}))))")
        self.sort_order.append(name)
        return name

    def _variant_sort(self, ty: TApp) -> str:
        ty = self._norm(ty)
        name = "D_" + _mangle_ty(ty)
        if name in self.sorts:
            return name
        self.sorts[name] = ""  # reserve against recursion
        params, ctors = self.world.variants[ty.name]
        mapping = dict(zip(params, ty.args))
        parts = []
        for cname, arg_tys in ctors:
            cm = self._ctor_name(cname, name)
            if not arg_tys:
                parts.append(f"({cm})")
            else:
                fields = " ".join(
                    f"(sel-{cm}-{i} {self.sort(_subst_params(a, mapping))})"
                    for i, a in enumerate(arg_tys))
                parts.append(f"({cm} {fields})")
        self.sorts[name] = (f"(declare-datatypes (({name} 0)) "
                            f"(({' '.join(parts)})))")
        self.sort_order.append(name)
        return name

    def _record_sort(self, ty: TApp) -> str:
        ty = self._norm(ty)
        name = "R_" + _mangle_ty(ty)
        if name in self.sorts:
            return name
        self.sorts[name] = ""
        params, fields = self.world.records[ty.name]
        mapping = dict(zip(params, ty.args))
        comps = " ".join(
            f"(field-{name}-{fname} {self.sort(_subst_params(fty, mapping))})"
            for fname, fty in fields)
        self.sorts[name] = (f"(declare-datatypes (({name} 0)) "
                            f"(((mk-{name} {comps}))))")
        self.sort_order.append(name)
        return name

    def _ctor_name(self, cname: str, sort_name: str) -> str:
        return f"c-{cname.replace('.', '_')}-{sort_name}"

    def _declare(self, name: str, decl: str) -> None:
        if name not in self.fun_decls:
            self.fun_decls[name] = decl
            self.fun_order.append(name)

    def _assert(self, label: str, smt: str) -> None:
        if label not in self._seen_assert:
            self._seen_assert.add(label)
            self.assertions.append((label, smt))

    # -- terms -------------------------------------------------------------------

    def encode_term(self, t: Term, env: dict[str, SrcType],
                    expected: Optional[SrcType] = None) -> tuple[str, SrcType]:
        if isinstance(t, TmVar):
            if t.name in env:
                return _sym(t.name), env[t.name]
            fn = self.ctx.logicals.get(t.name)
            if fn is not None and not fn.params:
                return self.logical_app(fn, [], []), \
                    fn.result if fn.result is not None else T_BOOL
            raise EncodeError(f"symbol '{t.name}' has no declaration")
        if isinstance(t, TmInt):
            if t.value < 0:
                return f"(- {-t.value})", T_INT
            return str(t.value), T_INT
        if isinstance(t, TmBool):
            return ("true" if t.value else "false"), T_BOOL
        if isinstance(t, TmUnit):
            self._unit_sort()
            return "mk-unit", TApp("unit")
        if isinstance(t, TmNeg):
            a, _ = self.encode_term(t.arg, env)
            return f"(- {a})", T_INT
        if isinstance(t, TmBin):
            a, _ = self.encode_term(t.lhs, env)
            b, _ = self.encode_term(t.rhs, env)
            op = {"+": "+", "-": "-", "*": "*", "/": "div", "mod": "mod"}[t.op]
            return f"({op} {a} {b})", T_INT
        if isinstance(t, TmCmp):
            if t.op in ("=", "<>") and _underdetermined(t.lhs):
                b, tb = self.encode_term(t.rhs, env)
                a, _ = self.encode_term(t.lhs, env, tb)
            else:
                a, ta = self.encode_term(t.lhs, env)
                b, _ = self.encode_term(t.rhs, env,
                                        ta if t.op in ("=", "<>") else None)
            if t.op == "=":
                return f"(= {a} {b})", T_BOOL
            if t.op == "<>":
                return f"(not (= {a} {b}))", T_BOOL
            return f"({t.op} {a} {b})", T_BOOL
        if isinstance(t, TmNot):
            a, _ = self.encode_term(t.arg, env)
            return f"(not {a})", T_BOOL
        if isinstance(t, TmConn):
            a, _ = self.encode_term(t.lhs, env)
            b, _ = self.encode_term(t.rhs, env)
            op = {"and": "and", "or": "or", "implies": "=>", "iff": "="}[t.op]
            return f"({op} {a} {b})", T_BOOL
        if isinstance(t, TmQuant):
            inner = dict(env)
            binds = []
            for name, ty in t.binders:
                if ty is None:
                    raise EncodeError(f"binder '{name}' has no type")
                inner[name] = ty
                binds.append(f"({_sym(name)} {self.sort(ty)})")
            body, _ = self.encode_term(t.body, inner)
            return f"({t.quant} ({' '.join(binds)}) {body})", T_BOOL
        if isinstance(t, TmIf):
            c, _ = self.encode_term(t.cond, env)
            a, ta = self.encode_term(t.then, env, expected)
            b, _ = self.encode_term(t.orelse, env, ta)
            return f"(ite {c} {a} {b})", ta
        if isinstance(t, TmLet):
            bound, tb = self.encode_term(t.bound, env)
            inner = dict(env)
            inner[t.name] = tb
            body, ty = self.encode_term(t.body, inner)
            return f"(let (({_sym(t.name)} {bound})) {body})", ty
        if isinstance(t, TmMatch):
            return self.encode_match(t, env)
        if isinstance(t, TmTuple):
            parts = [self.encode_term(x, env) for x in t.items]
            ty = TTuple(tuple(p[1] for p in parts))
            sort_name = self._tuple_sort(ty)
            return (f"(mk-{sort_name} " + " ".join(p[0] for p in parts) + ")",
                    ty)
        if isinstance(t, TmConstruct):
            return self.encode_construct(t, env, expected)
        if isinstance(t, TmApp):
            return self.encode_app(t, env, expected)
        if isinstance(t, TmField):
            rec, rty = self.encode_term(t.record, env)
            rty = self.world.resolve_alias(rty)
            if not (isinstance(rty, TApp) and rty.name in self.world.records):
                raise EncodeError("field access on a non-record value")
            sort_name = self._record_sort(rty)
            params, fields = self.world.records[rty.name]
            mapping = dict(zip(params, rty.args))
            fty = next(f for n, f in fields if n == t.field)
            return (f"(field-{sort_name}-{t.field} {rec})",
                    _subst_params(fty, mapping))
        if isinstance(t, TmOld):
            raise EncodeError("old(..) left unresolved in formula")
        raise EncodeError(f"cannot encode {type(t).__name__}")

    def infer(self, t: Term, env: dict[str, SrcType]) -> SrcType:
        uni = Unifier(self.world)
        typer = TermTyper(self.world, uni)
        try:
            return uni.deep(typer.infer(t, dict(env)))
        except (TypeError_, GazelleError) as err:
            raise EncodeError(f"cannot type formula fragment: {err}")

    def encode_construct(self, t: TmConstruct, env: dict,
                         expected: Optional[SrcType] = None) -> tuple[str, SrcType]:
        if t.name == "[]" or t.name == "::":
            ty = None
            if expected is not None:
                r = self.world.resolve_alias(expected)
                if isinstance(r, TApp) and r.name == "list":
                    ty = r
            if ty is None:
                ty = self.world.resolve_alias(self.infer(t, env))
            elem = ty.args[0] if isinstance(ty, TApp) and ty.args \
                else fresh_tvar()
            sort_name = self._list_sort(elem)
            if t.name == "[]":
                return f"nil-{sort_name}", ty
            h, _ = self.encode_term(t.args[0], env, elem)
            tl, _ = self.encode_term(t.args[1], env, ty)
            return f"(cons-{sort_name} {h} {tl})", ty
        if t.name.startswith("%mk:"):
            rec = t.name[4:]
            ty = self.infer(t, env)
            sort_name = self._record_sort(self.world.resolve_alias(ty))
            parts = [self.encode_term(a, env)[0] for a in t.args]
            return (f"(mk-{sort_name} " + " ".join(parts) + ")"
                    if parts else f"mk-{sort_name}", ty)
        ty = self.world.resolve_alias(self.infer(t, env))
        sort_name = self._variant_sort(ty)
        cm = self._ctor_name(t.name, sort_name)
        if not t.args:
            return cm, ty
        parts = [self.encode_term(a, env)[0] for a in t.args]
        return f"({cm} " + " ".join(parts) + ")", ty

    def encode_app(self, t: TmApp, env: dict,
                   expected: Optional[SrcType] = None) -> tuple[str, SrcType]:
        if t.fn in ("length", "append", "reverse", "mem"):
            arg_i = 1 if t.fn == "mem" else 0
            lty = None
            if expected is not None and t.fn in ("append", "reverse"):
                r = self.world.resolve_alias(expected)
                if isinstance(r, TApp) and r.name == "list":
                    lty = r
            if lty is None:
                lty = self.world.resolve_alias(self.infer(t.args[arg_i], env))
                if not (isinstance(lty, TApp) and lty.name == "list"
                        and lty.args and not _is_fresh(lty.args[0])):
                    for a in t.args:
                        alt = self.world.resolve_alias(self.infer(a, env))
                        if isinstance(alt, TApp) and alt.name == "list" \
                                and alt.args and not _is_fresh(alt.args[0]):
                            lty = alt
                            break
            elem = lty.args[0] if isinstance(lty, TApp) and lty.args \
                else fresh_tvar()
            sort_name = self._list_sort(elem)
            if t.fn == "mem":
                parts = [self.encode_term(t.args[0], env, elem)[0],
                         self.encode_term(t.args[1], env, lty)[0]]
            elif t.fn == "length":
                parts = [self.encode_term(t.args[0], env, lty)[0]]
            else:
                parts = [self.encode_term(a, env, lty)[0] for a in t.args]
            result = {"length": T_INT, "append": lty, "reverse": lty,
                      "mem": T_BOOL}[t.fn]
            return f"({t.fn}-{sort_name} " + " ".join(parts) + ")", result
        if t.fn in ("min", "max"):
            a, _ = self.encode_term(t.args[0], env)
            b, _ = self.encode_term(t.args[1], env)
            cmp_op = "<=" if t.fn == "min" else ">="
            return f"(ite ({cmp_op} {a} {b}) {a} {b})", T_INT
        if t.fn == "array_length":
            a, aty = self.encode_term(t.args[0], env)
            sort_name = self.sort(aty)
            return f"(len-{sort_name} {a})", T_INT
        if t.fn == "array_get":
            a, aty = self.encode_term(t.args[0], env)
            i, _ = self.encode_term(t.args[1], env)
            aty = self.world.resolve_alias(aty)
            elem = aty.args[0] if isinstance(aty, TApp) and aty.args \
                else fresh_tvar()
            sort_name = self.sort(aty)
            return f"(select (elts-{sort_name} {a}) {i})", elem
        fn = self.ctx.logicals.get(t.fn)
        if fn is None:
            raise EncodeError(f"symbol '{t.fn}' has no declaration")
        parts = []
        arg_tys = []
        for a, (_, pty) in zip(t.args, fn.params):
            hint = pty if not list(_tyvars(pty)) else None
            s, ty = self.encode_term(a, env, hint)
            parts.append(s)
            arg_tys.append(ty)
        return self.logical_app(fn, parts, arg_tys), self._result_type(
            fn, arg_tys)

    def _instantiation(self, fn: LogicalFn,
                       arg_tys: list[SrcType]) -> tuple[SrcType, ...]:
        """Type-parameter instantiation of a polymorphic logical symbol."""
        uni = Unifier(self.world)
        mapping: dict[str, SrcType] = {}
        fresh_params = [_freshen(ty, mapping) for _, ty in fn.params]
        for fp, at in zip(fresh_params, arg_tys):
            try:
                uni.unify(fp, at)
            except (TypeError_, GazelleError):
                pass
        tvars = sorted({v.name for _, ty in fn.params
                        for v in _tyvars(ty)} |
                       ({v.name for v in _tyvars(fn.result)}
                        if fn.result is not None else set()))
        inst = []
        for tv in tvars:
            if tv in mapping:
                inst.append(uni.deep(mapping[tv]))
            else:
                inst.append(TVar(tv))
        return tuple(inst)

    def _result_type(self, fn: LogicalFn, arg_tys: list[SrcType]) -> SrcType:
        if fn.result is None:
            return T_BOOL
        uni = Unifier(self.world)
        mapping: dict[str, SrcType] = {}
        fresh_params = [_freshen(ty, mapping) for _, ty in fn.params]
        for fp, at in zip(fresh_params, arg_tys):
            try:
                uni.unify(fp, at)
            except (TypeError_, GazelleError):
                pass
        return uni.deep(_freshen(fn.result, mapping))

    def logical_app(self, fn: LogicalFn, encoded_args: list[str],
                    arg_tys: list[SrcType]) -> str:
        inst = self._instantiation(fn, arg_tys)
        name = self.declare_logical(fn, inst)
        if not encoded_args:
            return name
        return f"({name} " + " ".join(encoded_args) + ")"

    def declare_logical(self, fn: LogicalFn,
                        inst: tuple[SrcType, ...]) -> str:
        tvars = sorted({v.name for _, ty in fn.params for v in _tyvars(ty)} |
                       ({v.name for v in _tyvars(fn.result)}
                        if fn.result is not None else set()))
        mapping = dict(zip(tvars, inst))
        name = _mangle_fn(fn.name, inst)
        if name in self.fun_decls:
            return name
        param_sorts = [self.sort(_subst_params(ty, mapping))
                       for _, ty in fn.params]
        result_sort = "Bool" if fn.result is None else \
            self.sort(_subst_params(fn.result, mapping))
        self._declare(name, f"(declare-fun {name} "
                            f"({' '.join(param_sorts)}) {result_sort})")
        # defining equations, instantiated at this monomorphic type
        for i, eq in enumerate(fn.equations):
            binders = [(n, _subst_params(ty, mapping) if ty is not None
                        else None)
                       for n, ty in ((p, t) for p, t in fn.params)]
            extra = list(eq.binders)
            lhs = TmApp(fn.name, eq.args)
            if fn.result is None:
                body: Term = TmConn("iff", lhs, eq.value)
            else:
                body = TmCmp("=", lhs, eq.value)
            full = mk_implies(list(eq.conds), body)
            quant = TmQuant("forall", tuple(binders) + tuple(extra), full)
            uni = Unifier(self.world)
            closed = annotate_binders(quant, {}, TermTyper(self.world, uni),
                                      uni)
            closed = _subst_binder_types(closed, mapping)
            try:
                smt, _ = self.encode_term(closed, {})
            except EncodeError:
                continue
            self._assert(f"{name}-def-{i}", smt.strip("()") if False else smt)
        return name

    def encode_match(self, t: TmMatch, env: dict) -> tuple[str, SrcType]:
        scrut, sty = self.encode_term(t.scrutinee, env)
        sty = self.world.resolve_alias(sty)
        result_ty = None
        cases: list[tuple[str, str]] = []  # (condition, body)
        for pat, body in t.arms:
            cond, bindings = self.pattern_test(pat, scrut, sty, env)
            inner = dict(env)
            lets = []
            for name, (sel, ty) in bindings.items():
                inner[name] = ty
                lets.append(f"({_sym(name)} {sel})")
            b, bty = self.encode_term(body, inner)
            if lets:
                b = f"(let ({' '.join(lets)}) {b})"
            result_ty = result_ty or bty
            cases.append((cond, b))
        default_sort = self.sort(result_ty)
        default = f"default!{default_sort}"
        self._declare(default, f"(declare-const {default} {default_sort})")
        out = default
        for cond, body in reversed(cases):
            out = body if cond == "true" else f"(ite {cond} {body} {out})"
        return out, result_ty

    def pattern_test(self, pat: Pattern, scrut: str, sty: SrcType,
                     env: dict) -> tuple[str, dict]:
        """Match condition and selector bindings for a pattern."""
        conds: list[str] = []
        bindings: dict[str, tuple[str, SrcType]] = {}

        def go(p: Pattern, value: str, ty: SrcType) -> None:
            ty = self.world.resolve_alias(ty)
            if isinstance(p, PWild):
                return
            if isinstance(p, PVar):
                bindings[p.name] = (value, ty)
                return
            if isinstance(p, (PAs,)):
                go(p.pattern, value, ty)
                bindings[p.name] = (value, ty)
                return
            if isinstance(p, PTyped):
                go(p.pattern, value, ty)
                return
            if isinstance(p, PTuple):
                sort_name = self._tuple_sort(
                    ty if isinstance(ty, TTuple)
                    else TTuple(tuple(fresh_tvar() for _ in p.items)))
                comps = ty.items if isinstance(ty, TTuple) else \
                    [fresh_tvar() for _ in p.items]
                for i, (sub, cty) in enumerate(zip(p.items, comps)):
                    go(sub, f"(proj-{sort_name}-{i} {value})", cty)
                return
            if isinstance(p, PConstruct):
                if p.name == "[]":
                    sort_name = self.sort(ty)
                    conds.append(f"((_ is nil-{sort_name}) {value})")
                    return
                if p.name == "::":
                    sort_name = self.sort(ty)
                    elem = ty.args[0] if isinstance(ty, TApp) and ty.args \
                        else fresh_tvar()
                    conds.append(f"((_ is cons-{sort_name}) {value})")
                    go(p.args[0], f"(head-{sort_name} {value})", elem)
                    go(p.args[1], f"(tail-{sort_name} {value})", ty)
                    return
                sort_name = self._variant_sort(ty)
                cm = self._ctor_name(p.name, sort_name)
                conds.append(f"((_ is {cm}) {value})")
                _, tparams, arg_tys = self.world.constructors[p.name]
                mapping = dict(zip(tparams, ty.args)) \
                    if isinstance(ty, TApp) else {}
                for i, (sub, aty) in enumerate(zip(p.args, arg_tys)):
                    go(sub, f"(sel-{cm}-{i} {value})",
                       _subst_params(aty, mapping))
                return
            raise EncodeError(f"cannot encode pattern {type(p).__name__}")

        go(pat, scrut, sty)
        if not conds:
            return "true", bindings
        if len(conds) == 1:
            return conds[0], bindings
        return "(and " + " ".join(conds) + ")", bindings


def _underdetermined(t: Term) -> bool:
    """Literals whose element type only context determines."""
    return isinstance(t, TmConstruct) and t.name in ("[]", "::")


def _is_fresh(ty: SrcType) -> bool:
    return isinstance(ty, TVar) and ty.name.startswith("_t")


def _sym(name: str) -> str:
    out = name.replace("'", "!").replace(".", "_")
    return out


def _tyvars(ty: SrcType):
    if isinstance(ty, TVar):
        yield ty
    elif isinstance(ty, TTuple):
        for t in ty.items:
            yield from _tyvars(t)
    elif isinstance(ty, TApp):
        for t in ty.args:
            yield from _tyvars(t)


def _freshen(ty: SrcType, mapping: dict[str, SrcType]) -> SrcType:
    if isinstance(ty, TVar):
        return mapping.setdefault(ty.name, fresh_tvar())
    if isinstance(ty, TTuple):
        return TTuple(tuple(_freshen(t, mapping) for t in ty.items))
    if isinstance(ty, TApp):
        return TApp(ty.name, tuple(_freshen(t, mapping) for t in ty.args))
    return ty


def _subst_binder_types(t: Term, mapping: dict[str, SrcType]) -> Term:
    if isinstance(t, TmQuant):
        binders = tuple(
            (n, _subst_params(ty, mapping) if ty is not None else None)
            for n, ty in t.binders)
        return TmQuant(t.quant, binders, _subst_binder_types(t.body, mapping))
    from ..vcgen.context import _map_term
    return _map_term(t, lambda c: _subst_binder_types(c, mapping))


def _symbols_of(t: Term) -> set[str]:
    out: set[str] = set()
    todo = [t]
    while todo:
        x = todo.pop()
        if isinstance(x, TmApp):
            out.add(x.fn)
        todo.extend(term_children(x))
    return out


def encode(vc: VC, ctx: LogicalContext) -> SmtScript:
    """One self-contained SMT-LIB script per VC, goal asserted negated."""
    enc = Encoder(ctx)
    uni = Unifier(ctx.world)
    formula = annotate_binders(vc.formula, {}, TermTyper(ctx.world, uni), uni)
    goal, _ = enc.encode_term(formula, {})

    # pull in the axioms whose symbols the goal (transitively) reaches
    reachable = _symbols_of(formula)
    axioms = []
    remaining = list(ctx.axioms) + [
        (f"{name}'goal-as-axiom", term) for name, term in []]
    changed = True
    used = set()
    while changed:
        changed = False
        for name, term in ctx.axioms:
            if name in used:
                continue
            syms = _symbols_of(term)
            if syms & reachable:
                used.add(name)
                reachable |= syms
                axioms.append((name, term))
                changed = True
    for name, term in axioms:
        auni = Unifier(ctx.world)
        closed = annotate_binders(term, {}, TermTyper(ctx.world, auni), auni)
        try:
            smt, _ = enc.encode_term(closed, {})
        except EncodeError:
            continue
        label = "ax-" + name.replace(".", "_").replace("'", "-")
        enc._assert(label, smt)

    lines = [f"; vc: {vc.id}",
             f"; {vc.description}",
             "(set-logic ALL)"]
    for s in enc.sort_order:
        lines.append(enc.sorts[s])
    for f in enc.fun_order:
        lines.append(enc.fun_decls[f])
    for label, smt in enc.assertions:
        lines.append(f"(assert (! {smt} :named |{label}|))")
    lines.append(f"(assert (not {goal}))")
    lines.append("(check-sat)")
    return SmtScript(vc.id, lines)
