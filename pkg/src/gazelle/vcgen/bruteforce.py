"""Solver-free checking of verification conditions over bounded domains.

A VC's universals are enumerated over type-directed finite domains: integers
over a configurable range, booleans, lists and datatypes up to a size bound
with elements from a small auxiliary range, and residual type variables over
that same range.  Hypotheses are checked as soon as their variables are
bound, equations with exactly one unknown side are solved instead of
enumerated (including head/tail and prefix/suffix list equations), and
conjunction, disjunction and implication short-circuit.  Partial logical
functions totalize with type defaults, which guarded contexts never observe.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Any, Optional

from ..diagnostics import GazelleError
from ..runtime import int_div, int_mod, match_value
from ..source_ast import (Pattern, PAs, PConstruct, POr, PTuple, PTyped, PVar,
                          PWild, SrcType, TApp, TTuple, TVar, pattern_vars)
from ..terms import (Term, TmApp, TmBin, TmBool, TmCmp, TmConn, TmConstruct,
                     TmField, TmIf, TmInt, TmLet, TmMatch, TmNeg, TmNot,
                     TmOld, TmQuant, TmTuple, TmUnit, TmVar, conjuncts,
                     free_vars)
from .context import ABSURD_MARKER, LogicalContext
from .vcs import VC


class Uninterpretable(GazelleError):
    """The formula uses a symbol with no definition or finite enumeration."""


class BudgetExceeded(GazelleError):
    pass


@dataclass
class Domain:
    int_lo: int = -4
    int_hi: int = 4
    depth: int = 3          # maximum list length / datatype size
    elem_lo: int = 0        # element domain for containers and type variables
    elem_hi: int = 1
    budget: int = 10_000_000

    def ints(self):
        return range(self.int_lo, self.int_hi + 1)

    def elems(self):
        return range(self.elem_lo, self.elem_hi + 1)


@dataclass
class BruteResult:
    status: str  # "valid-on-domain" | "counterexample" | error statuses
    assignment: Optional[dict[str, Any]] = None
    nodes: int = 0

    @property
    def valid(self) -> bool:
        return self.status == "valid-on-domain"


def check_vc_bruteforce(vc: VC, ctx: LogicalContext,
                        domain: Domain | None = None) -> BruteResult:
    """Search for a bounded counterexample: hyps /\\ not concl satisfiable.

    The constraint set splits into connected components over shared
    variables; components are searched independently and any unsatisfiable
    component certifies bounded validity.
    """
    domain = domain or Domain()
    checker = _Checker(ctx, domain)
    constraints: list[Term] = [c for h in vc.hyps for c in conjuncts(h)]
    constraints.append(TmNot(vc.concl))
    types = dict(vc.binders)
    try:
        components = _components(constraints)
        assignment: dict[str, Any] = {}
        for terms in components:
            used: set[str] = set()
            for t in terms:
                used |= free_vars(t)
            binders = [(n, types[n]) for n in sorted(used) if n in types]
            found = checker.search(binders, terms, TmBool(False), {})
            if found is None:
                return BruteResult("valid-on-domain", None, checker.nodes)
            assignment.update(found)
    except Uninterpretable as err:
        return BruteResult("uninterpretable", {"reason": err.message},
                           checker.nodes)
    except BudgetExceeded:
        return BruteResult("budget-exceeded", None, checker.nodes)
    return BruteResult("counterexample", assignment, checker.nodes)


def _components(constraints: list[Term]) -> list[list[Term]]:
    """Group constraints sharing variables; ground ones form one group."""
    groups: list[tuple[set[str], list[Term]]] = []
    ground: list[Term] = []
    for t in constraints:
        fv = free_vars(t)
        if not fv:
            ground.append(t)
            continue
        touching = [g for g in groups if g[0] & fv]
        merged_vars = set(fv)
        merged_terms = [t]
        for g in touching:
            merged_vars |= g[0]
            merged_terms = g[1] + merged_terms
            groups.remove(g)
        groups.append((merged_vars, merged_terms))
    out = [terms for _, terms in groups]
    if ground:
        out.append(ground)
    return out


def check_term(t: Term, ctx: LogicalContext,
               domain: Domain | None = None) -> BruteResult:
    """Check a closed boolean term directly."""
    domain = domain or Domain()
    checker = _Checker(ctx, domain)
    try:
        value = checker.eval(t, {})
    except Uninterpretable as err:
        return BruteResult("uninterpretable", {"reason": err.message},
                           checker.nodes)
    except BudgetExceeded:
        return BruteResult("budget-exceeded", None, checker.nodes)
    if value is True:
        return BruteResult("valid-on-domain", None, checker.nodes)
    return BruteResult("counterexample", {}, checker.nodes)


# ---------------------------------------------------------------------------
# Values
# ---------------------------------------------------------------------------
#
# int -> int, bool -> bool, unit -> None, list -> Python list,
# tuple -> Python tuple, datatype -> ("C", name, args tuple),
# record -> ("R", type name, field dict), array -> ("A", Python list)


def values_equal(a, b) -> bool:
    return a == b


class _Checker:
    def __init__(self, ctx: LogicalContext, domain: Domain):
        self.ctx = ctx
        self.world = ctx.world
        self.domain = domain
        self.nodes = 0
        self.memo: dict[tuple, Any] = {}

    def tick(self, n: int = 1) -> None:
        self.nodes += n
        if self.nodes > self.domain.budget:
            raise BudgetExceeded("search budget exceeded")

    # -- domains -------------------------------------------------------------

    def enumerate_type(self, ty: SrcType, depth: Optional[int] = None):
        depth = self.domain.depth if depth is None else depth
        ty = self.world.resolve_alias(ty)
        if isinstance(ty, TVar):
            yield from self.domain.elems()
            return
        if isinstance(ty, TTuple):
            for combo in itertools.product(
                    *(self.enumerate_type(t, depth) for t in ty.items)):
                yield tuple(combo)
            return
        if isinstance(ty, TApp):
            if ty.name == "int" and not ty.args:
                yield from self.domain.ints()
                return
            if ty.name == "bool":
                yield False
                yield True
                return
            if ty.name == "unit":
                yield None
                return
            if ty.name == "list":
                elem = ty.args[0] if ty.args else TVar("a")
                yield from self._enumerate_lists(elem, depth)
                return
            if ty.name == "array":
                elem = ty.args[0] if ty.args else TVar("a")
                for lst in self._enumerate_lists(elem, depth):
                    yield ("A", lst)
                return
            if ty.name in self.world.variants:
                yield from self._enumerate_variant(ty, depth)
                return
            if ty.name in self.world.records:
                yield from self._enumerate_record(ty, depth)
                return
            if ty.name in self.world.abstract:
                # abstract types range over the element domain
                yield from self.domain.elems()
                return
        raise Uninterpretable("cannot enumerate values of this type")

    def _enumerate_lists(self, elem: SrcType, depth: int):
        yield []
        if depth <= 0:
            return
        for tail in self._enumerate_lists(elem, depth - 1):
            for h in self.enumerate_type(elem, 1):
                yield [h] + tail

    def _enumerate_variant(self, ty: TApp, depth: int):
        params, ctors = self.world.variants[ty.name]
        mapping = dict(zip(params, ty.args))
        from .typing import _subst_params
        # nullary constructors first, recursive ones within the size bound
        for cname, arg_tys in ctors:
            if not arg_tys:
                yield ("C", cname, ())
        if depth <= 0:
            return
        for cname, arg_tys in ctors:
            if not arg_tys:
                continue
            gens = []
            for a in arg_tys:
                a = _subst_params(a, mapping)
                r = self.world.resolve_alias(a)
                recursive = isinstance(r, TApp) and r.name == ty.name
                if isinstance(r, TApp) and r.name == "int" and not r.args:
                    # integers inside structures range with the size bound
                    hi = max(self.domain.elem_hi, self.domain.depth)
                    gens.append(range(self.domain.elem_lo, hi + 1))
                else:
                    gens.append(self.enumerate_type(
                        a, depth - 1 if recursive else 1))
            for combo in itertools.product(*(list(g) for g in gens)):
                yield ("C", cname, tuple(combo))

    def _enumerate_record(self, ty: TApp, depth: int):
        params, fields = self.world.records[ty.name]
        mapping = dict(zip(params, ty.args))
        from .typing import _subst_params
        gens = [list(self.enumerate_type(_subst_params(fty, mapping), depth))
                for _, fty in fields]
        for combo in itertools.product(*gens):
            yield ("R", ty.name, {f: v for (f, _), v in zip(fields, combo)})

    def default_value(self, ty: SrcType):
        ty = self.world.resolve_alias(ty)
        if isinstance(ty, TApp):
            if ty.name == "int":
                return 0
            if ty.name == "bool":
                return False
            if ty.name == "unit":
                return None
            if ty.name == "list":
                return []
            if ty.name in self.world.variants:
                _, ctors = self.world.variants[ty.name]
                for cname, args in ctors:
                    if not args:
                        return ("C", cname, ())
        return 0  # residual type variables default into the element domain

    # -- evaluation ------------------------------------------------------------

    def eval(self, t: Term, env: dict[str, Any]):
        self.tick()
        if isinstance(t, TmVar):
            if t.name in env:
                return env[t.name]
            fn = self.ctx.logicals.get(t.name)
            if fn is not None and not fn.params:
                return self.apply_logical(t.name, [])
            raise Uninterpretable(f"unbound name '{t.name}'")
        if isinstance(t, TmInt):
            return t.value
        if isinstance(t, TmBool):
            return t.value
        if isinstance(t, TmUnit):
            return None
        if isinstance(t, TmNeg):
            return -self.eval(t.arg, env)
        if isinstance(t, TmBin):
            a = self.eval(t.lhs, env)
            b = self.eval(t.rhs, env)
            if t.op == "+":
                return a + b
            if t.op == "-":
                return a - b
            if t.op == "*":
                return a * b
            if t.op == "/":
                if b == 0:
                    raise Uninterpretable("division by zero in formula")
                return int_div(a, b)
            if b == 0:
                raise Uninterpretable("division by zero in formula")
            return int_mod(a, b)
        if isinstance(t, TmCmp):
            a = self.eval(t.lhs, env)
            b = self.eval(t.rhs, env)
            if t.op == "=":
                return values_equal(a, b)
            if t.op == "<>":
                return not values_equal(a, b)
            if t.op == "<":
                return a < b
            if t.op == "<=":
                return a <= b
            if t.op == ">":
                return a > b
            return a >= b
        if isinstance(t, TmNot):
            return not self.eval(t.arg, env)
        if isinstance(t, TmConn):
            if t.op == "and":
                return self.eval(t.lhs, env) and self.eval(t.rhs, env)
            if t.op == "or":
                return self.eval(t.lhs, env) or self.eval(t.rhs, env)
            if t.op == "implies":
                return (not self.eval(t.lhs, env)) or self.eval(t.rhs, env)
            return self.eval(t.lhs, env) == self.eval(t.rhs, env)
        if isinstance(t, TmIf):
            return (self.eval(t.then, env) if self.eval(t.cond, env)
                    else self.eval(t.orelse, env))
        if isinstance(t, TmLet):
            inner = dict(env)
            inner[t.name] = self.eval(t.bound, env)
            return self.eval(t.body, inner)
        if isinstance(t, TmMatch):
            scrut = self.eval(t.scrutinee, env)
            for pat, body in t.arms:
                bound = match_value(pat, scrut)
                if bound is not None:
                    inner = dict(env)
                    inner.update(bound)
                    return self.eval(body, inner)
            raise Uninterpretable("no match arm applies in formula")
        if isinstance(t, TmTuple):
            return tuple(self.eval(x, env) for x in t.items)
        if isinstance(t, TmConstruct):
            return self.construct(t.name,
                                  [self.eval(a, env) for a in t.args])
        if isinstance(t, TmQuant):
            return self.eval_quant(t, env)
        if isinstance(t, TmField):
            rec = self.eval(t.record, env)
            if isinstance(rec, tuple) and rec and rec[0] == "R":
                return rec[2][t.field]
            raise Uninterpretable(f"field access on a non-record value")
        if isinstance(t, TmApp):
            return self.apply(t.fn, [self.eval(a, env) for a in t.args])
        if isinstance(t, TmOld):
            raise Uninterpretable("old(..) left unresolved in formula")
        raise Uninterpretable(f"cannot evaluate term {type(t).__name__}")

    def construct(self, name: str, args: list):
        if name == "[]":
            return []
        if name == "::":
            return [args[0]] + args[1]
        if name.startswith("%mk:"):
            tname = name[4:]
            _, fields = self.world.records[tname]
            return ("R", tname, {f: v for (f, _), v in zip(fields, args)})
        return ("C", name, tuple(args))

    def apply(self, fn: str, args: list):
        if fn == "length":
            return len(args[0])
        if fn == "append":
            return args[0] + args[1]
        if fn == "reverse":
            return list(reversed(args[0]))
        if fn == "mem":
            return any(values_equal(args[0], x) for x in args[1])
        if fn == "min":
            return min(args[0], args[1])
        if fn == "max":
            return max(args[0], args[1])
        if fn == "array_length":
            return len(args[0][1])
        if fn == "array_get":
            arr, i = args[0][1], args[1]
            if 0 <= i < len(arr):
                return arr[i]
            return 0  # out-of-domain reads totalize to a default
        if fn == ABSURD_MARKER:
            raise _Absurd()
        return self.apply_logical(fn, args)

    def apply_logical(self, fn: str, args: list):
        target = self.ctx.logicals.get(fn)
        if target is None:
            raise Uninterpretable(f"no definition for symbol '{fn}'")
        if target.body is None:
            raise Uninterpretable(f"symbol '{fn}' is uninterpreted")
        key = (fn, _freeze(args))
        if key in self.memo:
            return self.memo[key]
        for guard in target.guards:
            genv = {p: a for (p, _), a in zip(target.params, args)}
            if self.eval(guard, genv) is not True:
                result = self._default_result(target)
                self.memo[key] = result
                return result
        env = {p: a for (p, _), a in zip(target.params, args)}
        if len(self.memo) > 300_000:
            self.memo.clear()
        self.memo[key] = self._default_result(target)  # cycle backstop
        try:
            result = self.eval(target.body, env)
        except _Absurd:
            result = self._default_result(target)
        self.memo[key] = result
        return result

    def _default_result(self, target):
        if target.result is None:
            return False
        return self.default_value(target.result)

    def eval_quant(self, t: TmQuant, env: dict[str, Any]):
        solved = _solve_exists_pattern(t) if t.quant == "exists" else None
        if solved is not None:
            scrut_term, patterm = solved
            scrut = self.eval(scrut_term, env)
            return _structural_match(patterm, scrut,
                                     {n for n, _ in t.binders}) is not None

        def go(binders, env):
            if not binders:
                body = self.eval(t.body, env)
                return body
            (name, ty), rest = binders[0], binders[1:]
            if ty is None:
                raise Uninterpretable(
                    f"quantified variable '{name}' has no type")
            if t.quant == "forall":
                for v in self.enumerate_type(ty):
                    self.tick()
                    inner = dict(env)
                    inner[name] = v
                    if go(rest, inner) is not True:
                        return False
                return True
            for v in self.enumerate_type(ty):
                self.tick()
                inner = dict(env)
                inner[name] = v
                if go(rest, inner) is True:
                    return True
            return False

        return go(list(t.binders), env)

    # -- search with propagation ----------------------------------------------

    def search(self, binders: list[tuple[str, SrcType]], hyps: list[Term],
               concl: Term, env: dict[str, Any]):
        """Find a counterexample assignment, or None if valid on the domain."""
        hyp_states: list[Optional[Term]] = list(hyps)
        hyp_fv = [frozenset(free_vars(h)) for h in hyps]
        eq_fv = [(frozenset(free_vars(h.lhs)), frozenset(free_vars(h.rhs)))
                 if isinstance(h, TmCmp) and h.op == "=" else None
                 for h in hyps]

        def all_hyps_ready(env) -> Optional[bool]:
            # evaluate and retire hypotheses whose variables are all bound
            for i, h in enumerate(hyp_states):
                if h is None:
                    continue
                if hyp_fv[i] <= env.keys():
                    if self.eval(h, env) is not True:
                        return False
                    hyp_states[i] = None
            return True

        def try_solve(env) -> list[tuple[int, str]]:
            """Bind variables determined by equations; returns undo list."""
            undo: list[tuple[int, str]] = []
            progress = True
            while progress:
                progress = False
                for i, h in enumerate(hyp_states):
                    if h is None or eq_fv[i] is None:
                        continue
                    fv_l = eq_fv[i][0] - env.keys()
                    fv_r = eq_fv[i][1] - env.keys()
                    if fv_l and not fv_r:
                        known, unknown = h.rhs, h.lhs
                        unknown_vars = fv_l
                    elif fv_r and not fv_l:
                        known, unknown = h.lhs, h.rhs
                        unknown_vars = fv_r
                    else:
                        continue
                    value = self.eval(known, env)
                    bound = self.solve_equation(unknown, value, env,
                                                unknown_vars)
                    if bound is None:
                        continue
                    if bound is False:
                        return undo + [(-1, "")]  # contradiction marker
                    for name, v in bound.items():
                        env[name] = v
                        undo.append((0, name))
                        progress = True
                    hyp_states[i] = None
                    undo.append((1, str(i)))
            return undo

        def undo_all(undo, env):
            for kind, payload in reversed(undo):
                if kind == 0:
                    env.pop(payload, None)
                elif kind == 1:
                    pass  # hypothesis retirement is restored via snapshot

        def go(pending: list[tuple[str, SrcType]], env) -> Optional[dict]:
            self.tick()
            snapshot = list(hyp_states)
            ok = all_hyps_ready(env)
            if ok is False:
                hyp_states[:] = snapshot
                return None
            undo = try_solve(env)
            if undo and undo[-1] == (-1, ""):
                undo_all(undo[:-1], env)
                hyp_states[:] = snapshot
                return None
            ok = all_hyps_ready(env)
            if ok is False:
                undo_all(undo, env)
                hyp_states[:] = snapshot
                return None
            pending = [(n, t) for n, t in pending if n not in env]
            if not pending:
                if any(h is not None for h in hyp_states):
                    leftover = [h for h in hyp_states if h is not None]
                    names = sorted(set().union(*(free_vars(h)
                                                 for h in leftover))
                                   - env.keys())
                    raise Uninterpretable(
                        f"hypothesis variables {names} are not enumerable")
                if self.eval(concl, env) is not True:
                    result = dict(env)
                    undo_all(undo, env)
                    hyp_states[:] = snapshot
                    return result
                undo_all(undo, env)
                hyp_states[:] = snapshot
                return None
            name, ty = self._pick(pending, hyp_states, hyp_fv, env)
            rest = [(n, t) for n, t in pending if n != name]
            for v in self.enumerate_type(ty):
                env[name] = v
                found = go(rest, env)
                if found is not None:
                    del env[name]
                    undo_all(undo, env)
                    hyp_states[:] = snapshot
                    return found
                del env[name]
            undo_all(undo, env)
            hyp_states[:] = snapshot
            return None

        return go(binders, dict(env))

    def _pick(self, pending, hyp_states, hyp_fv, env):
        """Prefer completing a one-variable-short hypothesis, then the
        earliest open hypothesis."""
        pending_names = {n for n, _ in pending}
        first_choice = None
        for i, h in enumerate(hyp_states):
            if h is None:
                continue
            missing = (hyp_fv[i] - env.keys()) & pending_names
            if not missing:
                continue
            if len(missing) == 1:
                name = next(iter(missing))
                return next(p for p in pending if p[0] == name)
            if first_choice is None:
                name = sorted(missing)[0]
                first_choice = next(p for p in pending if p[0] == name)
        return first_choice if first_choice is not None else pending[0]

    def solve_equation(self, unknown: Term, value, env,
                       unknown_vars: set[str]):
        """Bind variables of `unknown` so it equals `value`.

        Returns a bindings dict, False for a definite mismatch, or None when
        the shape is not solvable.
        """
        if isinstance(unknown, TmVar):
            if unknown.name in env:
                return {} if values_equal(env[unknown.name], value) else False
            return {unknown.name: value}
        if isinstance(unknown, TmConstruct):
            if unknown.name == "[]":
                return {} if value == [] else False
            if unknown.name == "::":
                if not isinstance(value, list) or not value:
                    return False
                first = self.solve_equation(unknown.args[0], value[0], env,
                                            unknown_vars)
                if first is None or first is False:
                    return first
                rest = self.solve_equation(unknown.args[1], value[1:], env,
                                           unknown_vars)
                if rest is None or rest is False:
                    return rest
                return _merge_bindings(first, rest)
            if unknown.name.startswith("%mk:"):
                if not (isinstance(value, tuple) and value
                        and value[0] == "R"):
                    return False
                _, fields = self.world.records[unknown.name[4:]]
                out = {}
                for (fname, _), sub in zip(fields, unknown.args):
                    r = self.solve_equation(sub, value[2][fname], env,
                                            unknown_vars)
                    if r is None or r is False:
                        return r
                    out = _merge_bindings(out, r)
                    if out is False:
                        return False
                return out
            if not (isinstance(value, tuple) and value and value[0] == "C"):
                return False
            if value[1] != unknown.name or len(value[2]) != len(unknown.args):
                return False
            out = {}
            for sub, v in zip(unknown.args, value[2]):
                r = self.solve_equation(sub, v, env, unknown_vars)
                if r is None or r is False:
                    return r
                out = _merge_bindings(out, r)
                if out is False:
                    return False
            return out
        if isinstance(unknown, TmTuple):
            if not isinstance(value, tuple) or len(value) != len(unknown.items):
                return False
            out = {}
            for sub, v in zip(unknown.items, value):
                r = self.solve_equation(sub, v, env, unknown_vars)
                if r is None or r is False:
                    return r
                out = _merge_bindings(out, r)
                if out is False:
                    return False
            return out
        if isinstance(unknown, TmApp) and unknown.fn == "append":
            lhs, rhs = unknown.args
            lhs_free = free_vars(lhs) - env.keys()
            rhs_free = free_vars(rhs) - env.keys()
            if not isinstance(value, list):
                return False
            if not rhs_free:
                suffix = self.eval(rhs, env)
                n = len(suffix)
                if n > len(value) or (n and value[-n:] != suffix) :
                    return False
                prefix = value[:len(value) - n]
                return self.solve_equation(lhs, prefix, env, unknown_vars)
            if not lhs_free:
                prefix = self.eval(lhs, env)
                n = len(prefix)
                if value[:n] != prefix:
                    return False
                return self.solve_equation(rhs, value[n:], env, unknown_vars)
            return None
        # ground subterm: compare directly
        if not (free_vars(unknown) - env.keys()):
            return {} if values_equal(self.eval(unknown, env), value) else False
        return None


def _merge_bindings(a, b):
    out = dict(a)
    for k, v in b.items():
        if k in out and not values_equal(out[k], v):
            return False
        out[k] = v
    return out


class _Absurd(Exception):
    pass


def _freeze(v):
    if isinstance(v, list):
        return ("L",) + tuple(_freeze(x) for x in v)
    if isinstance(v, tuple):
        if v and v[0] == "R":
            return ("R", v[1], tuple(sorted((k, _freeze(x))
                                            for k, x in v[2].items())))
        if v and v[0] == "C":
            return ("C", v[1], tuple(_freeze(x) for x in v[2]))
        if v and v[0] == "A":
            return ("A",) + tuple(_freeze(x) for x in v[1])
        return tuple(_freeze(x) for x in v)
    return v


def _solve_exists_pattern(t: TmQuant):
    """Recognize `exists vs. scrut = ctor-term(vs)` and solve structurally."""
    body = t.body
    if not (isinstance(body, TmCmp) and body.op == "="):
        return None
    names = {n for n, _ in t.binders}
    lf = free_vars(body.lhs)
    rf = free_vars(body.rhs)
    if not (lf & names) and rf <= names:
        return body.lhs, body.rhs
    if not (rf & names) and lf <= names:
        return body.rhs, body.lhs
    return None


def _structural_match(patterm: Term, value, names: set[str]):
    """Match a constructor-shaped term containing only quantified vars."""
    if isinstance(patterm, TmVar) and patterm.name in names:
        return {patterm.name: value}
    if isinstance(patterm, TmConstruct):
        if patterm.name == "[]":
            return {} if value == [] else None
        if patterm.name == "::":
            if not isinstance(value, list) or not value:
                return None
            a = _structural_match(patterm.args[0], value[0], names)
            if a is None:
                return None
            b = _structural_match(patterm.args[1], value[1:], names)
            if b is None:
                return None
            a.update(b)
            return a
        if not (isinstance(value, tuple) and value and value[0] == "C"):
            return None
        if value[1] != patterm.name or len(value[2]) != len(patterm.args):
            return None
        out: dict[str, Any] = {}
        for sub, v in zip(patterm.args, value[2]):
            r = _structural_match(sub, v, names)
            if r is None:
                return None
            out.update(r)
        return out
    if isinstance(patterm, TmTuple):
        if not isinstance(value, tuple) or len(value) != len(patterm.items):
            return None
        out = {}
        for sub, v in zip(patterm.items, value):
            r = _structural_match(sub, v, names)
            if r is None:
                return None
            out.update(r)
        return out
    if isinstance(patterm, TmInt):
        return {} if value == patterm.value else None
    if isinstance(patterm, TmBool):
        return {} if value == patterm.value else None
    return None
