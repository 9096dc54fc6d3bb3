"""Proof-obligation generation by forward symbolic execution.

Each program function is walked once, carrying a symbolic state (terms for
scalars, field maps for records), a hypothesis path, and an exception-handler
stack.  Obligations are collected with a category, hypotheses and conclusion,
and close into first-order formulas over the introduced universals.

The discipline, fixed here and relied on by the obligation counts:

* calls are modeled by the callee's contract at face value; the type
  invariants of record arguments are separate obligations at the call site,
  emitted only when the argument is not invariant-tracked at that point;
* a loop havocs the records its body may mutate; user invariant clauses are
  the only retained knowledge, and a record stays invariant-tracked across
  the havoc only when the loop invariants syntactically contain its type
  invariant;
* loop invariant initialization and preservation are one obligation each;
  an integer variant obligation conjoins "bounded below" and "decreases";
  structural variants discharge by the immediate-subterm ordering;
* postconditions split per execution path and per top-level conjunct; a
  for-loop contributes the zero-iterations path and the executed path;
* every mutated record parameter owes its type invariant at each normal
  exit; raising an exception not listed in raises owes False;
* division, modulo and array reads add safety obligations.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Optional, Union

from ..diagnostics import Diagnostic, GazelleError, Loc, UNKNOWN_LOC
from ..source_ast import (Pattern, PAs, PConstruct, POr, PTuple, PTyped, PVar,
                          PWild, SrcType, TApp, TTuple, TVar, T_INT,
                          pattern_vars)
from ..terms import (FALSE, TRUE, Term, TmApp, TmBin, TmBool, TmCmp, TmConn,
                     TmConstruct, TmField, TmIf, TmInt, TmLet, TmMatch, TmNeg,
                     TmNot, TmOld, TmQuant, TmTuple, TmUnit, TmVar, conjuncts,
                     free_vars, mk_and, mk_implies, subst)
from .. import target_ir as IR
from .context import LogicalContext, ProgramFn
from .typing import TermTyper, TypeError_, Unifier, fresh_tvar, _subst_params

CATEGORIES = (
    "precondition-at-call", "postcondition", "exceptional-postcondition",
    "variant-decrease", "loop-invariant-init", "loop-invariant-preservation",
    "type-invariant-establish", "absurd-unreachable", "safety",
)

_BUILTIN_PURE = {"length", "append", "reverse", "mem", "min", "max",
                 "array_length"}


@dataclass
class Obligation:
    category: str
    binders: tuple[tuple[str, SrcType], ...]
    hyps: tuple[Term, ...]
    concl: Term
    loc: Loc
    description: str
    function: str

    @property
    def formula(self) -> Term:
        body = mk_implies(list(self.hyps), self.concl)
        used = free_vars(body)
        binders = tuple((n, t) for n, t in self.binders if n in used)
        return TmQuant("forall", binders, body) if binders else body


class RecordVal:
    """Symbolic record instance; cloned on control-flow forks."""

    _keys = itertools.count()

    def __init__(self, type_name: str, fields: dict[str, Term],
                 tracked: bool, key: Optional[int] = None):
        self.type_name = type_name
        self.fields = fields
        self.tracked = tracked
        self.key = key if key is not None else next(RecordVal._keys)

    def clone(self, memo: dict[int, "RecordVal"]) -> "RecordVal":
        if self.key in memo:
            return memo[self.key]
        copy = RecordVal(self.type_name, dict(self.fields), self.tracked,
                         self.key)
        memo[self.key] = copy
        return copy


SymVal = Union[Term, RecordVal]


class State:
    def __init__(self, vars: dict[str, SymVal], params: dict[str, SymVal]):
        self.vars = vars
        self.params = params

    def clone(self) -> "State":
        memo: dict[int, RecordVal] = {}

        def cp(v: SymVal) -> SymVal:
            return v.clone(memo) if isinstance(v, RecordVal) else v

        return State({k: cp(v) for k, v in self.vars.items()},
                     {k: cp(v) for k, v in self.params.items()})

    def bind(self, name: str, v: SymVal) -> "State":
        out = State(dict(self.vars), self.params)
        out.vars[name] = v
        return out

    def snapshot(self) -> dict[int, dict[str, Term]]:
        snap: dict[int, dict[str, Term]] = {}
        for v in list(self.vars.values()) + list(self.params.values()):
            if isinstance(v, RecordVal):
                snap[v.key] = dict(v.fields)
        return snap


@dataclass
class _Local:
    params: tuple[IR.IRParam, ...]
    spec: IR.FunSpecIR


class ObligationEngine:
    def __init__(self, ctx: LogicalContext, fn: ProgramFn):
        self.ctx = ctx
        self.world = ctx.world
        self.fn = fn
        self.obligations: list[Obligation] = []
        self.binders: list[tuple[str, SrcType]] = []
        self.var_types: dict[str, SrcType] = {}
        self.subterm_of: dict[str, str] = {}
        self._fresh = itertools.count(1)
        self.handlers: list[tuple[dict, object]] = []
        self.locals: dict[str, _Local] = {}
        self.entry_snapshot: dict[int, dict[str, Term]] = {}
        self.variant_entry: Optional[Term] = None

    # -- plumbing -----------------------------------------------------------

    def fresh(self, base: str, ty: SrcType) -> TmVar:
        base = base.replace(".", "_")
        name = f"{base}'{next(self._fresh)}"
        self.binders.append((name, ty))
        self.var_types[name] = ty
        return TmVar(name)

    def declare(self, name: str, ty: SrcType) -> TmVar:
        self.binders.append((name, ty))
        self.var_types[name] = ty
        return TmVar(name)

    def emit(self, category: str, hyps: list[Term], concl: Term, loc: Loc,
             description: str) -> None:
        self.obligations.append(Obligation(
            category, tuple(self.binders), tuple(hyps), concl, loc,
            description, self.fn.qual))

    def infer_type(self, t: Term) -> SrcType:
        uni = Unifier(self.world)
        typer = TermTyper(self.world, uni)
        try:
            return uni.deep(typer.infer(t, dict(self.var_types)))
        except (TypeError_, GazelleError):
            return fresh_tvar()

    def record_type_of(self, ty: SrcType) -> Optional[str]:
        ty = self.world.resolve_alias(ty)
        if isinstance(ty, TApp) and ty.name in self.world.records:
            return ty.name
        return None

    def invariants_of(self, rv: RecordVal) -> list[Term]:
        out: list[Term] = []
        _, fields = self.world.records[rv.type_name]
        env = {fname: rv.fields[fname] for fname, _ in fields}
        for t in self.ctx.invariants.get(rv.type_name, ()):
            out.extend(conjuncts(subst(t, env)))
        return out

    def make_record(self, type_name: str, base: str, tracked: bool,
                    ty_args: Optional[dict[str, SrcType]] = None) -> RecordVal:
        params, fields = self.world.records[type_name]
        mapping = ty_args or {p: TVar(p) for p in params}
        field_terms = {}
        for fname, fty in fields:
            field_terms[fname] = self.fresh(f"{base}_{fname}",
                                            _subst_params(fty, mapping))
        return RecordVal(type_name, field_terms, tracked)

    def mk_term(self, rv: RecordVal,
                fields: Optional[dict[str, Term]] = None) -> Term:
        _, fdefs = self.world.records[rv.type_name]
        src = fields if fields is not None else rv.fields
        return TmConstruct(f"%mk:{rv.type_name}",
                           tuple(src[f] for f, _ in fdefs))

    def field_of(self, rec: Term, field: str) -> Term:
        if isinstance(rec, TmConstruct) and rec.name.startswith("%mk:"):
            tname = rec.name[4:]
            _, fdefs = self.world.records[tname]
            for i, (f, _) in enumerate(fdefs):
                if f == field:
                    return rec.args[i]
        return TmField(rec, field)

    # -- spec-term resolution ----------------------------------------------

    def resolve(self, t: Term, state: State, env: dict[str, SymVal],
                old: Optional[dict[int, dict[str, Term]]] = None,
                bound: frozenset = frozenset(),
                in_old: bool = False) -> Term:
        old_map = old if old is not None else self.entry_snapshot

        def lookup(name: str) -> Optional[SymVal]:
            if name in env:
                return env[name]
            if name in state.params:
                return state.params[name]
            if name in state.vars:
                return state.vars[name]
            return None

        def value_term(v: SymVal) -> Term:
            if isinstance(v, RecordVal):
                fields = old_map.get(v.key, v.fields) if in_old else v.fields
                return self.mk_term(v, fields)
            return v

        def go(t: Term, bound: frozenset, in_old: bool) -> Term:
            if isinstance(t, TmVar):
                if t.name in bound:
                    return t
                v = lookup(t.name)
                if v is None:
                    return t
                if isinstance(v, RecordVal):
                    fields = (old_map.get(v.key, v.fields) if in_old
                              else v.fields)
                    return self.mk_term(v, fields)
                return v
            if isinstance(t, TmField):
                if isinstance(t.record, TmVar) and t.record.name not in bound:
                    v = lookup(t.record.name)
                    if isinstance(v, RecordVal):
                        fields = (old_map.get(v.key, v.fields) if in_old
                                  else v.fields)
                        if t.field in fields:
                            return fields[t.field]
                return self.field_of(go(t.record, bound, in_old), t.field)
            if isinstance(t, TmOld):
                return go(t.arg, bound, True)
            if isinstance(t, TmQuant):
                inner = bound | {n for n, _ in t.binders}
                return TmQuant(t.quant, t.binders, go(t.body, inner, in_old))
            if isinstance(t, TmLet):
                return TmLet(t.name, go(t.bound, bound, in_old),
                             go(t.body, bound | {t.name}, in_old))
            if isinstance(t, TmMatch):
                scrut = go(t.scrutinee, bound, in_old)
                arms = tuple((p, go(b, bound | set(pattern_vars(p)), in_old))
                             for p, b in t.arms)
                return TmMatch(scrut, arms)
            if isinstance(t, (TmInt, TmBool, TmUnit)):
                return t
            if isinstance(t, TmBin):
                return TmBin(t.op, go(t.lhs, bound, in_old),
                             go(t.rhs, bound, in_old))
            if isinstance(t, TmNeg):
                return TmNeg(go(t.arg, bound, in_old))
            if isinstance(t, TmCmp):
                return TmCmp(t.op, go(t.lhs, bound, in_old),
                             go(t.rhs, bound, in_old))
            if isinstance(t, TmNot):
                return TmNot(go(t.arg, bound, in_old))
            if isinstance(t, TmConn):
                return TmConn(t.op, go(t.lhs, bound, in_old),
                              go(t.rhs, bound, in_old))
            if isinstance(t, TmIf):
                return TmIf(go(t.cond, bound, in_old),
                            go(t.then, bound, in_old),
                            go(t.orelse, bound, in_old))
            if isinstance(t, TmTuple):
                return TmTuple(tuple(go(x, bound, in_old) for x in t.items))
            if isinstance(t, TmConstruct):
                return TmConstruct(t.name, tuple(go(x, bound, in_old)
                                                 for x in t.args))
            if isinstance(t, TmApp):
                return TmApp(t.fn, tuple(go(x, bound, in_old)
                                         for x in t.args))
            return t

        return go(t, bound, in_old)

    # -- entry point ---------------------------------------------------------

    def run(self) -> list[Obligation]:
        fn = self.fn
        state = State({}, {})
        hyps: list[Term] = []
        for p, ty in zip(fn.params, fn.param_tys):
            rec = self.record_type_of(ty)
            if rec is not None:
                rv = self.make_record(rec, p.name, tracked=True,
                                      ty_args=self._record_args(ty, rec))
                state.vars[p.name] = rv
                state.params[p.name] = rv
                hyps.extend(self.invariants_of(rv))
            else:
                v = self.declare(p.name, ty)
                state.vars[p.name] = v
                state.params[p.name] = v
                self.subterm_of[p.name] = p.name
        for t in fn.spec.requires:
            hyps.append(self.resolve(t, state, {}))
        self.entry_snapshot = state.snapshot()
        if fn.spec.variants:
            self.variant_entry = self.resolve(fn.spec.variants[0], state, {})
        if fn.body is None:
            return self.obligations
        self.eval(fn.body, state, hyps, self._finish)
        return self.obligations

    def _record_args(self, ty: SrcType, rec: str) -> dict[str, SrcType]:
        ty = self.world.resolve_alias(ty)
        params, _ = self.world.records[rec]
        if isinstance(ty, TApp) and len(ty.args) == len(params):
            return dict(zip(params, ty.args))
        return {p: fresh_tvar() for p in params}

    def _finish(self, value: SymVal, state: State, hyps: list[Term]) -> None:
        fn = self.fn
        env: dict[str, SymVal] = {fn.result_name: value}
        for clause in fn.spec.ensures:
            resolved = self.resolve(clause, state, env)
            for conjunct in conjuncts(resolved):
                self.emit("postcondition", hyps, conjunct, fn.loc,
                          f"postcondition of {fn.name}")
        for idx in sorted(fn.mutates):
            p = fn.params[idx]
            rv = state.params.get(p.name)
            if isinstance(rv, RecordVal) and \
                    self.ctx.invariants.get(rv.type_name):
                self.emit("type-invariant-establish", hyps,
                          mk_and(self.invariants_of(rv)), fn.loc,
                          f"type invariant of {p.name} at exit of {fn.name}")

    # -- expression evaluation ----------------------------------------------

    def eval(self, e: IR.TgtExpr, state: State, hyps: list[Term], k) -> None:
        if isinstance(e, IR.EGhost):
            self.eval(e.expr, state, hyps, k)
            return
        if isinstance(e, IR.EVar):
            if e.name in state.vars:
                k(state.vars[e.name], state, hyps)
                return
            fn = self.ctx.resolve_program(e.name)
            if fn is not None and not fn.params:
                self._call(fn, [], e.loc, state, hyps, k)
                return
            k(TmVar(e.name), state, hyps)
            return
        if isinstance(e, IR.EConst):
            if e.value is None:
                k(TmUnit(), state, hyps)
            elif isinstance(e.value, bool):
                k(TmBool(e.value), state, hyps)
            else:
                k(TmInt(e.value), state, hyps)
            return
        if isinstance(e, IR.EIf):
            def branch(c, st, hy):
                cond = _as_term(c)
                self.eval(e.then, st.clone(), hy + [cond], k)
                self.eval(e.orelse, st.clone(), hy + [TmNot(cond)], k)
            self.eval(e.cond, state, hyps, branch)
            return
        if isinstance(e, IR.EMatch):
            self.eval(e.scrutinee, state, hyps,
                      lambda s, st, hy: self._match(_as_term(s), e, st, hy, k))
            return
        if isinstance(e, IR.ELet):
            bound = e.bound.expr if isinstance(e.bound, IR.EGhost) else e.bound
            if isinstance(bound, IR.EFun):
                self._local_fun(e.name, bound, state, hyps)
                self.eval(e.body, state, hyps, k)
                return

            def bind(v, st, hy):
                if isinstance(v, TmVar) and v.name in self.subterm_of:
                    self.subterm_of.setdefault(e.name, self.subterm_of[v.name])
                self.eval(e.body, st.bind(e.name, v), hy, k)
            self.eval(bound, state, hyps, bind)
            return
        if isinstance(e, IR.ERecGroup):
            for f in e.functions:
                body = f.body.expr if isinstance(f.body, IR.EGhost) else f.body
                self.locals[f.name] = _Local(f.params, f.spec)
                self._verify_local(f.name, f.params, f.spec, body, state, hyps)
            self.eval(e.body, state, hyps, k)
            return
        if isinstance(e, IR.EApp):
            self._app(e, state, hyps, k)
            return
        if isinstance(e, IR.ERecord):
            self._record_literal(e, state, hyps, k)
            return
        if isinstance(e, IR.EField):
            def read(v, st, hy):
                if isinstance(v, RecordVal):
                    k(v.fields[e.field_name], st, hy)
                else:
                    k(self.field_of(_as_term(v), e.field_name), st, hy)
            self.eval(e.expr, state, hyps, read)
            return
        if isinstance(e, IR.ESetField):
            def write(target, st, hy):
                if not isinstance(target, RecordVal):
                    raise GazelleError(
                        "field assignment on a non-record value", e.loc)

                def set_value(v, s2, h2):
                    target.fields[e.field_name] = _as_term(v)
                    k(TmUnit(), s2, h2)
                self.eval(e.value, st, hy, set_value)
            self.eval(e.expr, state, hyps, write)
            return
        if isinstance(e, IR.EConstruct):
            self._eval_list(list(e.args), state, hyps, lambda vs, st, hy: (
                k(TmConstruct(e.name, tuple(_as_term(v) for v in vs)),
                  st, hy)))
            return
        if isinstance(e, IR.ETuple):
            self._eval_list(list(e.items), state, hyps, lambda vs, st, hy: (
                k(TmTuple(tuple(_as_term(v) for v in vs)), st, hy)))
            return
        if isinstance(e, IR.ERaise):
            self._eval_list(list(e.args), state, hyps, lambda vs, st, hy: (
                self._raise(e.exn, st, hy, e.loc,
                            payload=[_as_term(v) for v in vs])))
            return
        if isinstance(e, IR.ETry):
            depth = len(self.handlers)

            def after_try(v, st, hy):
                saved = self.handlers
                self.handlers = saved[:depth]
                try:
                    k(v, st, hy)
                finally:
                    self.handlers = saved

            table = {exn: (args, body) for exn, args, body in e.handlers}
            self.handlers.append((table, after_try))
            try:
                self.eval(e.body, state, hyps, after_try)
            finally:
                if len(self.handlers) > depth:
                    self.handlers.pop()
            return
        if isinstance(e, IR.EWhile):
            self._while(e, state, hyps, k)
            return
        if isinstance(e, IR.EFor):
            self._for(e, state, hyps, k)
            return
        if isinstance(e, IR.EAbsurd):
            self.emit("absurd-unreachable", hyps, FALSE, e.loc,
                      "unreachable point")
            return
        if isinstance(e, IR.EArrayGet):
            def index(vs, st, hy):
                a, i = _as_term(vs[0]), _as_term(vs[1])
                self.emit("safety", hy,
                          TmConn("and", TmCmp("<=", TmInt(0), i),
                                 TmCmp("<", i, TmApp("array_length", (a,)))),
                          e.loc, "array access within bounds")
                k(TmApp("array_get", (a, i)), st, hy)
            self._eval_list([e.array, e.index], state, hyps, index)
            return
        raise GazelleError(
            f"unsupported construct in obligation generation: "
            f"{type(e).__name__}", getattr(e, "loc", UNKNOWN_LOC))

    def _eval_list(self, exprs, state, hyps, k, acc=None):
        acc = acc or []
        if not exprs:
            k(acc, state, hyps)
            return
        first, rest = exprs[0], exprs[1:]
        self.eval(first, state, hyps, lambda v, st, hy: (
            self._eval_list(rest, st, hy, k, acc + [v])))

    # -- function calls -------------------------------------------------------

    def _app(self, e: IR.EApp, state: State, hyps: list[Term], k) -> None:
        op = e.fn
        if op in ("+", "-", "*"):
            self._eval_list(list(e.args), state, hyps, lambda vs, st, hy: (
                k(TmBin(op, _as_term(vs[0]), _as_term(vs[1])), st, hy)))
            return
        if op in ("/", "mod"):
            def div(vs, st, hy):
                divisor = _as_term(vs[1])
                self.emit("safety", hy, TmCmp("<>", divisor, TmInt(0)),
                          e.loc, "divisor is non-zero")
                k(TmBin(op, _as_term(vs[0]), divisor), st, hy)
            self._eval_list(list(e.args), state, hyps, div)
            return
        if op in ("=", "<>", "<", "<=", ">", ">="):
            self._eval_list(list(e.args), state, hyps, lambda vs, st, hy: (
                k(TmCmp(op, self._whole(vs[0]), self._whole(vs[1])), st, hy)))
            return
        if op in ("&&", "||"):
            conn = "and" if op == "&&" else "or"
            self._eval_list(list(e.args), state, hyps, lambda vs, st, hy: (
                k(TmConn(conn, _as_term(vs[0]), _as_term(vs[1])), st, hy)))
            return
        if op == "not":
            self.eval(e.args[0], state, hyps, lambda v, st, hy: (
                k(TmNot(_as_term(v)), st, hy)))
            return
        if op == "@" or op in _BUILTIN_PURE:
            name = "append" if op == "@" else op
            self._eval_list(list(e.args), state, hyps, lambda vs, st, hy: (
                k(TmApp(name, tuple(_as_term(v) for v in vs)), st, hy)))
            return
        if op in self.locals and op not in state.vars:
            self._eval_list(list(e.args), state, hyps, lambda vs, st, hy: (
                self._local_call(op, vs, e.loc, st, hy, k)))
            return
        callee = self.ctx.resolve_program(op)
        if callee is not None:
            self._eval_list(list(e.args), state, hyps, lambda vs, st, hy: (
                self._call(callee, vs, e.loc, st, hy, k)))
            return
        if op in self.ctx.logicals:
            self._eval_list(list(e.args), state, hyps, lambda vs, st, hy: (
                k(TmApp(op, tuple(self._whole(v) for v in vs)), st, hy)))
            return
        raise GazelleError(f"call to unknown function '{op}'", e.loc)

    def _whole(self, v: SymVal) -> Term:
        if isinstance(v, RecordVal):
            return self.mk_term(v)
        return v

    def _call(self, callee: ProgramFn, args: list[SymVal], loc: Loc,
              state: State, hyps: list[Term], k) -> None:
        env: dict[str, SymVal] = {p.name: a
                                  for p, a in zip(callee.params, args)}
        for p, a in zip(callee.params, args):
            if isinstance(a, RecordVal) and \
                    self.ctx.invariants.get(a.type_name) and not a.tracked:
                self.emit("type-invariant-establish", hyps,
                          mk_and(self.invariants_of(a)), loc,
                          f"type invariant of argument '{p.name}' when "
                          f"calling {callee.name}")
        if callee.spec.requires:
            pre = mk_and([self.resolve(t, state, env)
                          for t in callee.spec.requires])
            self.emit("precondition-at-call", hyps, pre, loc,
                      f"precondition of {callee.name}")
        if callee.qual == self.fn.qual and self.fn.spec.variants:
            self._variant_decrease(callee, env, state, hyps, loc)
        call_snapshot = state.snapshot()
        for exn, xterm in callee.spec.raises:
            xstate = state.clone()
            xargs = [xstate.vars.get(_name_of(a), a) if isinstance(a, RecordVal)
                     else a for a in args]
            xhyps = list(hyps)
            self._havoc_args(callee, xargs, xstate, reassume=False)
            resolved = self.resolve(xterm, xstate, dict(zip(
                (p.name for p in callee.params), xargs)), old=call_snapshot)
            if resolved != TmBool(True):
                xhyps.append(resolved)
            self._raise(exn, xstate, xhyps, loc)
        if callee.kind == IR.LOGIC and callee.body is not None:
            result: SymVal = TmApp(callee.name,
                                   tuple(self._whole(a) for a in args))
        else:
            result = self._fresh_result(callee, args, loc)
        self._havoc_args(callee, args, state, reassume=True)
        post_hyps = list(hyps)
        for idx in callee.mutates:
            if idx < len(args) and isinstance(args[idx], RecordVal) and \
                    self.ctx.invariants.get(args[idx].type_name):
                post_hyps.extend(self.invariants_of(args[idx]))
        renv = dict(env)
        renv[callee.result_name] = result
        for t in callee.spec.ensures:
            post_hyps.append(self.resolve(t, state, renv, old=call_snapshot))
        if isinstance(result, RecordVal):
            post_hyps.extend(self.invariants_of(result))
        k(result, state, post_hyps)

    def _fresh_result(self, callee: ProgramFn, args: list[SymVal],
                      loc: Loc) -> SymVal:
        uni = Unifier(self.world)
        mapping: dict[str, SrcType] = {}
        for pty, a in zip(callee.param_tys, args):
            try:
                uni.unify(_freshen(pty, mapping),
                          self.infer_type(self._whole(a)), loc)
            except (TypeError_, GazelleError):
                pass
        result_ty = uni.deep(_freshen(callee.result_ty, mapping))
        rec = self.record_type_of(result_ty)
        if rec is not None:
            return self.make_record(rec, f"{callee.name}_res", tracked=True,
                                    ty_args=self._record_args(result_ty, rec))
        return self.fresh(f"{callee.name}_res", result_ty)

    def _havoc_args(self, callee: ProgramFn, args: list[SymVal],
                    state: State, reassume: bool) -> None:
        for idx in callee.mutates:
            if idx < len(args) and isinstance(args[idx], RecordVal):
                rv = args[idx]
                for fname in list(rv.fields):
                    fty = self.infer_type(rv.fields[fname])
                    rv.fields[fname] = self.fresh(f"{callee.name}_{fname}",
                                                  fty)
                rv.tracked = reassume

    def _variant_decrease(self, callee: ProgramFn, env: dict[str, SymVal],
                          state: State, hyps: list[Term], loc: Loc) -> None:
        variant = self.fn.spec.variants[0]
        vty = self.world.resolve_alias(self.infer_type(
            self.variant_entry)) if self.variant_entry is not None else T_INT
        structural = (isinstance(variant, TmVar)
                      and isinstance(vty, TApp)
                      and vty.name in self.world.variants
                      and vty.name != "list")
        if structural or (isinstance(variant, TmVar)
                          and isinstance(vty, TApp)
                          and vty.name in self.world.variants):
            arg = env.get(variant.name)
            ok = (isinstance(arg, TmVar)
                  and self.subterm_of.get(arg.name) == variant.name
                  and arg.name != variant.name)
            self.emit("variant-decrease", hyps, TRUE if ok else FALSE, loc,
                      "structural variant decreases at recursive call "
                      f"to {callee.name}")
            return
        new_v = self.resolve(variant, state, env)
        concl = TmConn("and", TmCmp("<=", TmInt(0), self.variant_entry),
                       TmCmp("<", new_v, self.variant_entry))
        self.emit("variant-decrease", hyps, concl, loc,
                  f"variant decreases at recursive call to {callee.name}")

    # -- local functions ------------------------------------------------------

    def _local_fun(self, name: str, fun: IR.EFun, state: State,
                   hyps: list[Term]) -> None:
        self.locals[name] = _Local(fun.params, fun.spec)
        body = fun.body.expr if isinstance(fun.body, IR.EGhost) else fun.body
        self._verify_local(name, fun.params, fun.spec, body, state, hyps)

    def _verify_local(self, name, params, spec, body, state, hyps) -> None:
        st = state.clone()
        st.vars = dict(st.vars)
        inner_hyps = list(hyps)
        env: dict[str, SymVal] = {}
        for p in params:
            ty = p.ty if p.ty is not None else fresh_tvar()
            v = self.fresh(p.name, ty)
            st.vars[p.name] = v
            env[p.name] = v
            self.subterm_of[v.name] = v.name
        for t in spec.requires:
            inner_hyps.append(self.resolve(t, st, env))

        def finish(value, s2, h2):
            renv = dict(env)
            renv[spec.result or "result"] = value
            for clause in spec.ensures:
                for conjunct in conjuncts(self.resolve(clause, s2, renv)):
                    self.emit("postcondition", h2, conjunct, UNKNOWN_LOC,
                              f"postcondition of local function {name}")

        self.eval(body, st, inner_hyps, finish)

    def _local_call(self, name: str, args: list[SymVal], loc: Loc,
                    state: State, hyps: list[Term], k) -> None:
        local = self.locals[name]
        env = {p.name: a for p, a in zip(local.params, args)}
        if local.spec.requires:
            pre = mk_and([self.resolve(t, state, env)
                          for t in local.spec.requires])
            self.emit("precondition-at-call", hyps, pre, loc,
                      f"precondition of {name}")
        result = self.fresh(f"{name}_res", fresh_tvar())
        post_hyps = list(hyps)
        renv = dict(env)
        renv[local.spec.result or "result"] = result
        for t in local.spec.ensures:
            post_hyps.append(self.resolve(t, state, renv))
        k(result, state, post_hyps)

    # -- records --------------------------------------------------------------

    def _record_literal(self, e: IR.ERecord, state: State, hyps: list[Term],
                        k) -> None:
        names = [n for n, _ in e.fields]
        candidates = [r for r, (_, fields) in self.world.records.items()
                      if [f for f, _ in fields] == names]
        if not candidates:
            raise GazelleError(
                f"no record type with fields {{{', '.join(names)}}}", e.loc)
        type_name = candidates[-1]

        def build(vs, st, hy):
            field_terms = {n: _as_term(v) for (n, _), v in zip(e.fields, vs)}
            rv = RecordVal(type_name, field_terms, tracked=True)
            if self.ctx.invariants.get(type_name):
                self.emit("type-invariant-establish", hy,
                          mk_and(self.invariants_of(rv)), e.loc,
                          f"type invariant of a new {type_name} value")
            k(rv, st, hy)

        self._eval_list([v for _, v in e.fields], state, hyps, build)

    # -- exceptions -----------------------------------------------------------

    def _raise(self, exn: str, state: State, hyps: list[Term],
               loc: Loc, payload: Optional[list[Term]] = None) -> None:
        for i in range(len(self.handlers) - 1, -1, -1):
            table, after_try = self.handlers[i]
            if exn in table:
                args, body = table[exn]
                st = State(dict(state.vars), state.params)
                arm_hyps = list(hyps)
                mask = self.world.exceptions.get(exn, ())
                for j, pat in enumerate(args):
                    if payload is not None and j < len(payload):
                        conds, bindings = self._pattern_conds(payload[j], pat)
                        st.vars.update(bindings)
                        arm_hyps.extend(conds)
                    elif isinstance(pat, PVar):
                        ty = mask[j] if j < len(mask) else fresh_tvar()
                        st.vars[pat.name] = self.fresh(pat.name, ty)
                saved = self.handlers
                self.handlers = saved[:i]
                try:
                    self.eval(body, st, arm_hyps, after_try)
                finally:
                    self.handlers = saved
                return
        clause = next((t for x, t in self.fn.spec.raises if x == exn), None)
        if clause is None:
            self.emit("exceptional-postcondition", hyps, FALSE, loc,
                      f"{exn} escapes but is not listed in raises")
            return
        concl = self.resolve(clause, state, {})
        self.emit("exceptional-postcondition", hyps, concl, loc,
                  f"exceptional postcondition for {exn}")

    # -- loops ----------------------------------------------------------------

    def _mutated_in(self, body: IR.TgtExpr,
                    state: State) -> list[tuple[str, RecordVal]]:
        names: set[str] = set()

        def go(e: IR.TgtExpr) -> None:
            if isinstance(e, IR.ESetField) and isinstance(e.expr, IR.EVar):
                names.add(e.expr.name)
            if isinstance(e, IR.EApp):
                callee = self.ctx.resolve_program(e.fn)
                mut = callee.mutates if callee is not None else (
                    self.fn.mutates if e.fn == self.fn.name else set())
                for i, a in enumerate(e.args):
                    if isinstance(a, IR.EVar) and i in mut:
                        names.add(a.name)
            for c in IR.expr_children(e):
                go(c)

        go(body)
        out = []
        seen = set()
        for n in sorted(names):
            v = state.vars.get(n)
            if isinstance(v, RecordVal) and v.key not in seen:
                seen.add(v.key)
                out.append((n, v))
        return out

    def _invariant_tracked(self, name: str, rv: RecordVal,
                           invariants: tuple[Term, ...]) -> bool:
        inv_terms = self.ctx.instantiate_invariants(rv.type_name, TmVar(name))
        if not inv_terms:
            return True
        pool: list[Term] = []
        for t in invariants:
            pool.extend(conjuncts(t))
        return all(t in pool for t in inv_terms)

    def _havoc_loop(self, body: IR.TgtExpr, state: State,
                    invariants: tuple[Term, ...]) -> None:
        for name, rv in self._mutated_in(body, state):
            for fname in list(rv.fields):
                fty = self.infer_type(rv.fields[fname])
                rv.fields[fname] = self.fresh(f"{name}_{fname}", fty)
            rv.tracked = bool(invariants) and \
                self._invariant_tracked(name, rv, invariants)

    def _while(self, e: IR.EWhile, state: State, hyps: list[Term], k) -> None:
        spec = e.spec
        if spec.invariants:
            init = mk_and([self.resolve(t, state, {})
                           for t in spec.invariants])
            self.emit("loop-invariant-init", hyps, init, e.loc,
                      "loop invariant holds on entry")
        self._havoc_loop(e.body, state, spec.invariants)
        boundary = list(hyps)
        if spec.invariants:
            boundary.extend(self.resolve(t, state, {})
                            for t in spec.invariants)
        variant_before = (self.resolve(spec.variants[0], state, {})
                          if spec.variants else None)

        def after_guard(g, st, hy):
            gterm = _as_term(g)

            def at_body_end(_v, s2, h2):
                if spec.invariants:
                    pres = mk_and([self.resolve(t, s2, {})
                                   for t in spec.invariants])
                    self.emit("loop-invariant-preservation", h2, pres, e.loc,
                              "loop invariant is preserved")
                if variant_before is not None:
                    new_v = self.resolve(spec.variants[0], s2, {})
                    concl = TmConn(
                        "and", TmCmp("<=", TmInt(0), variant_before),
                        TmCmp("<", new_v, variant_before))
                    self.emit("variant-decrease", h2, concl, e.loc,
                              "loop variant decreases")

            self.eval(e.body, st.clone(), hy + [gterm], at_body_end)
            k(TmUnit(), st, hy + [TmNot(gterm)])

        self.eval(e.cond, state, boundary, after_guard)

    def _for(self, e: IR.EFor, state: State, hyps: list[Term], k) -> None:
        spec = e.spec

        def with_bounds(vs, st, hy):
            lo, hi = _as_term(vs[0]), _as_term(vs[1])
            skip_state = st.clone()
            if spec.invariants:
                init = mk_and([self.resolve(t, st, {e.var: lo})
                               for t in spec.invariants])
                self.emit("loop-invariant-init", hy + [TmCmp("<=", lo, hi)],
                          init, e.loc, "loop invariant holds on entry")
            self._havoc_loop(e.body, st, spec.invariants)
            i = self.fresh(e.var, T_INT)
            body_state = st.clone().bind(e.var, i)
            body_hyps = hy + [TmCmp("<=", lo, i), TmCmp("<=", i, hi)]
            if spec.invariants:
                body_hyps.extend(self.resolve(t, body_state, {})
                                 for t in spec.invariants)

            def at_body_end(_v, s2, h2):
                if spec.invariants:
                    pres = mk_and([
                        self.resolve(t, s2, {e.var: TmBin("+", i, TmInt(1))})
                        for t in spec.invariants])
                    self.emit("loop-invariant-preservation", h2, pres, e.loc,
                              "loop invariant is preserved")

            self.eval(e.body, body_state, body_hyps, at_body_end)

            k(TmUnit(), skip_state, hy + [TmCmp("<", hi, lo)])
            exit_hyps = hy + [TmCmp("<=", lo, hi)]
            if spec.invariants:
                exit_hyps.extend(
                    self.resolve(t, st, {e.var: TmBin("+", hi, TmInt(1))})
                    for t in spec.invariants)
            k(TmUnit(), st, exit_hyps)

        self._eval_list([e.lo, e.hi], state, hyps, with_bounds)

    # -- pattern matching -----------------------------------------------------

    def _match(self, scrut: Term, e: IR.EMatch, state: State,
               hyps: list[Term], k) -> None:
        rows: list[tuple[Pattern, IR.TgtExpr]] = []
        for pat, body in e.arms:
            for alt in _expand_or(pat):
                rows.append((alt, body))
        negations: list[Term] = []
        for pat, body in rows:
            conds, bindings = self._pattern_conds(scrut, pat)
            st = state.clone()
            st.vars.update(bindings)
            self.eval(body, st, hyps + negations + conds, k)
            negations.append(_negate_match(scrut, pat))
        if not _exhaustive(self, scrut, [p for p, _ in rows]):
            self.emit("safety", hyps + negations, FALSE, e.loc,
                      "pattern matching is exhaustive")

    def _pattern_conds(self, scrut: Term, pat: Pattern,
                       root: Optional[str] = None):
        """Match conditions and bindings; tracks structural descendants."""
        if root is None and isinstance(scrut, TmVar):
            root = self.subterm_of.get(scrut.name)
        bindings: dict[str, SymVal] = {}
        conds: list[Term] = []

        if isinstance(pat, PWild):
            return [], {}
        if isinstance(pat, PVar):
            bindings[pat.name] = scrut
            if isinstance(scrut, TmVar) and scrut.name in self.subterm_of:
                self.subterm_of[pat.name] = self.subterm_of[scrut.name]
            return [], bindings
        if isinstance(pat, PAs):
            c, b = self._pattern_conds(scrut, pat.pattern, root)
            b[pat.name] = scrut
            return c, b
        if isinstance(pat, PTyped):
            return self._pattern_conds(scrut, pat.pattern, root)
        if isinstance(pat, PTuple) and isinstance(scrut, TmTuple):
            for comp_pat, comp_term in zip(pat.items, scrut.items):
                c, b = self._pattern_conds(comp_term, comp_pat)
                conds.extend(c)
                bindings.update(b)
            return conds, bindings

        scrut_ty = self.world.resolve_alias(self.infer_type(scrut))

        def term_of(p: Pattern, ty: SrcType, depth: int) -> Term:
            ty = self.world.resolve_alias(ty)
            if isinstance(p, PWild):
                return self.fresh("_w", ty)
            if isinstance(p, PVar):
                v = self.fresh(p.name, ty)
                bindings[p.name] = v
                if depth >= 1 and root is not None:
                    self.subterm_of[v.name] = root
                return v
            if isinstance(p, PTuple):
                comps = ty.items if isinstance(ty, TTuple) else \
                    tuple(fresh_tvar() for _ in p.items)
                return TmTuple(tuple(term_of(x, t, depth)
                                     for x, t in zip(p.items, comps)))
            if isinstance(p, PConstruct):
                if p.name not in self.world.constructors:
                    raise GazelleError(f"unknown constructor '{p.name}'",
                                       p.loc)
                tyname, tparams, arg_tys = self.world.constructors[p.name]
                if isinstance(ty, TApp) and ty.name == tyname:
                    mapping = dict(zip(tparams, ty.args))
                else:
                    mapping = {q: fresh_tvar() for q in tparams}
                return TmConstruct(p.name, tuple(
                    term_of(x, _subst_params(t, mapping), depth + 1)
                    for x, t in zip(p.args, arg_tys)))
            if isinstance(p, PAs):
                inner = term_of(p.pattern, ty, depth)
                bindings[p.name] = inner
                return inner
            if isinstance(p, PTyped):
                return term_of(p.pattern, p.ty, depth)
            raise GazelleError(f"unsupported pattern {type(p).__name__}",
                               getattr(p, "loc", UNKNOWN_LOC))

        patterm = term_of(pat, scrut_ty, 0)
        return [TmCmp("=", scrut, patterm)], bindings


def _name_of(v: SymVal) -> str:
    return "" if not isinstance(v, RecordVal) else str(v.key)


def _expand_or(pat: Pattern) -> list[Pattern]:
    if isinstance(pat, POr):
        return _expand_or(pat.left) + _expand_or(pat.right)
    return [pat]


def _negate_match(scrut: Term, pat: Pattern) -> Term:
    shallow = _shallow_pattern_term(pat)
    if shallow is None:
        return FALSE  # an irrefutable pattern always matches
    patterm, binders = shallow
    if not binders:
        return TmNot(TmCmp("=", scrut, patterm))
    return TmNot(TmQuant("exists", tuple(binders),
                         TmCmp("=", scrut, patterm)))


def _shallow_pattern_term(pat: Pattern):
    fresh = itertools.count(1)
    binders: list[tuple[str, Optional[SrcType]]] = []

    def go(p: Pattern):
        if isinstance(p, (PWild, PVar)):
            name = f"_p{next(fresh)}"
            binders.append((name, None))
            return TmVar(name)
        if isinstance(p, PTuple):
            return TmTuple(tuple(go(x) for x in p.items))
        if isinstance(p, PConstruct):
            return TmConstruct(p.name, tuple(go(x) for x in p.args))
        if isinstance(p, (PAs, PTyped)):
            return go(p.pattern)
        raise GazelleError(f"unsupported pattern {type(p).__name__}",
                           getattr(p, "loc", UNKNOWN_LOC))

    if isinstance(pat, (PWild, PVar)):
        return None
    if isinstance(pat, (PAs, PTyped)):
        return _shallow_pattern_term(pat.pattern)
    return go(pat), binders


def _exhaustive(engine: ObligationEngine, scrut: Term,
                patterns: list[Pattern]) -> bool:
    """Pattern-matrix completeness by constructor specialization."""
    world = engine.world

    def strip(p: Pattern) -> Pattern:
        while isinstance(p, (PAs, PTyped)):
            p = p.pattern
        return p

    def irrefutable(p: Pattern) -> bool:
        return isinstance(strip(p), (PWild, PVar))

    def expand_first(rows: list[list[Pattern]]) -> list[list[Pattern]]:
        out = []
        for r in rows:
            p0 = strip(r[0])
            if isinstance(p0, POr):
                out.append([p0.left] + r[1:])
                out.append([p0.right] + r[1:])
            else:
                out.append([p0] + r[1:])
        return out

    def go(rows: list[list[Pattern]], tys: list[SrcType]) -> bool:
        if not rows:
            return False
        if not tys:
            return True
        rows = expand_first(rows)
        if all(irrefutable(r[0]) for r in rows):
            return go([r[1:] for r in rows], tys[1:])
        ty = world.resolve_alias(tys[0])
        if isinstance(ty, TTuple):
            width = len(ty.items)
            expanded = []
            for r in rows:
                p0 = strip(r[0])
                if irrefutable(p0):
                    expanded.append([PWild()] * width + r[1:])
                elif isinstance(p0, PTuple) and len(p0.items) == width:
                    expanded.append(list(p0.items) + r[1:])
            return go(expanded, list(ty.items) + tys[1:])
        if isinstance(ty, TApp) and ty.name in world.variants:
            params, ctors = world.variants[ty.name]
            mapping = dict(zip(params, ty.args))
            for cname, arg_tys in ctors:
                inst = [_subst_params(a, mapping) for a in arg_tys]
                specialized = []
                for r in rows:
                    p0 = strip(r[0])
                    if irrefutable(p0):
                        specialized.append([PWild()] * len(inst) + r[1:])
                    elif isinstance(p0, PConstruct) and p0.name == cname \
                            and len(p0.args) == len(inst):
                        specialized.append(list(p0.args) + r[1:])
                if not go(specialized, inst + tys[1:]):
                    return False
            return True
        # non-matchable base type: only an irrefutable row covers it
        remaining = [r[1:] for r in rows if irrefutable(r[0])]
        return go(remaining, tys[1:])

    scrut_ty = engine.infer_type(scrut)
    return go([[p] for p in patterns], [scrut_ty])


def _freshen(ty: SrcType, mapping: dict[str, SrcType]) -> SrcType:
    from ..source_ast import TArrow
    if isinstance(ty, TVar):
        return mapping.setdefault(ty.name, fresh_tvar())
    if isinstance(ty, TArrow):
        return TArrow(_freshen(ty.lhs, mapping), _freshen(ty.rhs, mapping))
    if isinstance(ty, TTuple):
        return TTuple(tuple(_freshen(t, mapping) for t in ty.items))
    if isinstance(ty, TApp):
        return TApp(ty.name, tuple(_freshen(t, mapping) for t in ty.args))
    return ty


def _as_term(v: SymVal) -> Term:
    if isinstance(v, RecordVal):
        raise GazelleError("record value used where a term is expected",
                           UNKNOWN_LOC)
    return v


def generate_obligations(ctx: LogicalContext,
                         fn: ProgramFn) -> list[Obligation]:
    engine = ObligationEngine(ctx, fn)
    return engine.run()


def wp(e: IR.TgtExpr, post: Term, xposts: dict[str, Term],
       ctx: LogicalContext, result: str = "result") -> Term:
    """Weakest-precondition formula of an expression against a contract.

    The conjunction of every obligation generated by symbolically executing
    `e` with `post` as the sole postcondition and `xposts` as the exceptional
    postconditions.  Free program variables of `e` become universals.
    """
    spec = IR.FunSpecIR(ensures=(post,),
                        raises=tuple(xposts.items()), result=result)
    fn = ProgramFn(qual="<wp>", name="<wp>", kind=IR.REG, params=(),
                   param_tys=(), result_ty=fresh_tvar(), spec=spec, body=e)
    engine = ObligationEngine(ctx, fn)
    state = State({}, {})
    hyps: list[Term] = []
    for name in sorted(_free_program_vars(e)):
        v = engine.declare(name, fresh_tvar())
        state.vars[name] = v
        state.params[name] = v
    engine.entry_snapshot = state.snapshot()
    engine.eval(e, state, hyps, engine._finish)
    return mk_and([ob.formula for ob in engine.obligations])


def _free_program_vars(e: IR.TgtExpr) -> set[str]:
    out: set[str] = set()

    def go(x: IR.TgtExpr, bound: set[str]) -> None:
        if isinstance(x, IR.EVar):
            if x.name not in bound:
                out.add(x.name)
            return
        if isinstance(x, IR.ELet):
            go(x.bound, bound)
            go(x.body, bound | {x.name})
            return
        if isinstance(x, IR.EMatch):
            go(x.scrutinee, bound)
            for pat, body in x.arms:
                go(body, bound | set(pattern_vars(pat)))
            return
        if isinstance(x, IR.EFor):
            go(x.lo, bound)
            go(x.hi, bound)
            go(x.body, bound | {x.var})
            return
        for c in IR.expr_children(x):
            go(c, bound)

    go(e, set())
    return out
