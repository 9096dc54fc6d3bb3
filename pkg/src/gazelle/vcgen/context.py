"""Logical context assembly for proof-obligation generation.

Collects, per module: datatype and record declarations (with their
invariants), logical functions and predicates with defining equations, user
axioms, lemma statements, exception masks, and program function contracts
with inferred signatures and a may-mutate analysis.  Logic-kind program
functions contribute a logical symbol, defining equations guarded by their
preconditions, and a contract axiom usable in other functions' obligations.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dfield
from typing import Optional

from ..diagnostics import Diagnostic, GazelleError, Loc, UNKNOWN_LOC
from ..source_ast import (GHOST, Pattern, PConstruct, PTuple, PVar, PWild,
                          SrcType, TApp, TArrow, TTuple, TVar, T_BOOL, T_INT,
                          T_UNIT, TaggedType, pattern_vars)
from ..terms import (Term, TmApp, TmBin, TmBool, TmCmp, TmConn, TmConstruct,
                     TmField, TmIf, TmInt, TmLet, TmMatch, TmNeg, TmNot,
                     TmOld, TmQuant, TmTuple, TmUnit, TmVar, conjuncts,
                     mk_and, mk_implies, subst)
from .. import target_ir as IR
from .typing import (FnSig, TermTyper, TypeError_, TypeWorld, Unifier,
                     fresh_tvar, instantiate, t_list)

ABSURD_MARKER = "%absurd"


@dataclass
class Equation:
    """Guarded defining equation: forall binders. conds -> f(args) = value."""

    binders: tuple[tuple[str, Optional[SrcType]], ...]
    conds: tuple[Term, ...]
    args: tuple[Term, ...]
    value: Term


@dataclass
class LogicalFn:
    name: str
    params: tuple[tuple[str, SrcType], ...]
    result: Optional[SrcType]  # None for predicates
    body: Optional[Term]
    guards: tuple[Term, ...] = ()
    equations: tuple[Equation, ...] = ()

    @property
    def is_predicate(self) -> bool:
        return self.result is None


@dataclass
class ProgramFn:
    qual: str
    name: str
    kind: str
    params: tuple[IR.IRParam, ...]
    param_tys: tuple[SrcType, ...]
    result_ty: SrcType
    spec: IR.FunSpecIR
    body: Optional[IR.TgtExpr]
    recursive: bool = False
    lemma: bool = False
    mutates: set[int] = dfield(default_factory=set)
    loc: Loc = UNKNOWN_LOC

    @property
    def result_name(self) -> str:
        return self.spec.result or "result"


@dataclass
class LogicalContext:
    world: TypeWorld
    logicals: dict[str, LogicalFn] = dfield(default_factory=dict)
    axioms: list[tuple[str, Term]] = dfield(default_factory=list)
    goals: list[tuple[str, Term]] = dfield(default_factory=list)
    invariants: dict[str, tuple[Term, ...]] = dfield(default_factory=dict)
    programs: dict[str, ProgramFn] = dfield(default_factory=dict)
    order: list[ProgramFn] = dfield(default_factory=list)
    diagnostics: list[Diagnostic] = dfield(default_factory=list)

    def invariant_terms(self, type_name: str) -> tuple[Term, ...]:
        return self.invariants.get(type_name, ())

    def instantiate_invariants(self, type_name: str, value: Term) -> list[Term]:
        """Invariant conjuncts with field names replaced by value.field."""
        out: list[Term] = []
        params, fields = self.world.records.get(type_name, ((), []))
        env = {fname: TmField(value, fname) for fname, _ in fields}
        for t in self.invariants.get(type_name, ()):
            out.extend(conjuncts(subst(t, env)))
        return out

    def resolve_program(self, name: str) -> Optional[ProgramFn]:
        return self.programs.get(name)


def _register(table: dict, path: list[str], name: str, value) -> None:
    keys = [".".join(path[i:] + [name]) for i in range(len(path) + 1)]
    for k in keys:
        table[k] = value


def build_context(m: IR.TgtModule,
                  enable_lemmas: bool = False) -> LogicalContext:
    """Assemble the logical context of a well-formed module."""
    world = TypeWorld()
    ctx = LogicalContext(world)
    _walk(m.decls, [], ctx, enable_lemmas)
    _mutation_fixpoint(ctx)
    return ctx


def _walk(decls, path: list[str], ctx: LogicalContext,
          enable_lemmas: bool) -> None:
    for d in decls:
        if isinstance(d, IR.DIRScope):
            _walk(d.decls, path + [d.name], ctx, enable_lemmas)
        elif isinstance(d, IR.DIRType):
            # two phases so mutually recursive groups resolve each other
            for td in d.defs:
                canonical = ".".join(path + [td.name])
                for i in range(len(path) + 1):
                    ctx.world.canon[".".join(path[i:] + [td.name])] = canonical
            for td in d.defs:
                _register_typedef(td, path, ctx)
        elif isinstance(d, IR.DIRExn):
            tys = tuple(t.ty for t in d.mask)
            _register(ctx.world.exceptions, path, d.name, tys)
        elif isinstance(d, IR.DIRFunction):
            _logical_function(d.name, d.params, d.result, d.body, path, ctx,
                              d.loc)
        elif isinstance(d, IR.DIRPredicate):
            _logical_function(d.name, d.params, None, d.body, path, ctx, d.loc)
        elif isinstance(d, IR.DIRAxiom):
            ctx.axioms.append((".".join(path + [d.name]),
                               _close_term(d.term, ctx, d.loc)))
        elif isinstance(d, IR.DIRGoal):
            ctx.goals.append((".".join(path + [d.name]),
                              _close_term(d.term, ctx, d.loc)))
        elif isinstance(d, IR.DIRVal):
            _program_val(d, path, ctx)
        elif isinstance(d, IR.DIRLet):
            _program_fn(d.kind, d.name, d.params, d.spec, d.body, False,
                        getattr(d, "lemma", False), path, ctx, enable_lemmas,
                        d.loc)
        elif isinstance(d, IR.DIRLetRec):
            for f in d.functions:
                _program_fn(f.kind, f.name, f.params, f.spec, f.body, True,
                            getattr(f, "lemma", False), path, ctx,
                            enable_lemmas, f.loc)


def _register_typedef(td: IR.IRTypeDef, path: list[str],
                      ctx: LogicalContext) -> None:
    world = ctx.world
    canonical = ".".join(path + [td.name])
    body = td.body
    if isinstance(body, IR.TBAlias):
        body = IR.TBAlias(world.canonize(body.ty))
    elif isinstance(body, IR.TBRecord):
        body = IR.TBRecord(
            tuple(IR.IRFieldDef(f.name, f.mutable, f.ghost,
                                world.canonize(f.ty))
                  for f in body.fields),
            body.invariants)
    elif isinstance(body, IR.TBVariant):
        body = IR.TBVariant(tuple(
            (cname, tuple(world.canonize(a) for a in args))
            for cname, args in body.constructors))
    world.register_typedef(IR.IRTypeDef(canonical, td.params, body, td.loc))
    if isinstance(body, IR.TBRecord) and body.invariants:
        ctx.invariants[canonical] = body.invariants


# ---------------------------------------------------------------------------
# Logical functions
# ---------------------------------------------------------------------------


def _logical_function(name, params, result, body, path, ctx, loc) -> None:
    world = ctx.world
    uni = Unifier(world)
    typer = TermTyper(world, uni)
    param_list = [(n, world.canonize(ty) if ty is not None else fresh_tvar())
                  for n, ty in params]
    result_ty = world.canonize(result) if result is not None else T_BOOL
    sig = FnSig([ty for _, ty in param_list], result_ty)
    _register(world.functions, path, name, sig)
    if body is not None:
        env = dict(param_list)
        try:
            typer.check(body, env, result_ty, loc)
            body = annotate_binders(body, env, typer, uni)
        except (TypeError_, GazelleError) as err:
            ctx.diagnostics.append(Diagnostic("error", str(err), loc, "typing"))
            return
        if not _structurally_recursive(name, body, {n for n, _ in param_list}):
            ctx.diagnostics.append(Diagnostic(
                "error",
                f"recursive logical definition '{name}' does not decrease "
                "structurally and has no variant", loc, "logic-termination"))
    resolved = tuple((n, uni.deep(ty)) for n, ty in param_list)
    fn = LogicalFn(name=name, params=resolved,
                   result=None if result is None else result,
                   body=body)
    fn = LogicalFn(fn.name, fn.params, fn.result, fn.body,
                   equations=_equations_of(fn, loc))
    _register(ctx.logicals, path, name, fn)


def _structurally_recursive(name: str, body: Term, params: set[str]) -> bool:
    """Self-applications must take a pattern-descendant of some parameter."""
    ok = True

    def go(t: Term, tracked: dict[str, bool]) -> None:
        nonlocal ok
        if isinstance(t, TmApp) and t.fn == name:
            if not any(isinstance(a, TmVar) and tracked.get(a.name, False)
                       for a in t.args):
                ok = False
            for a in t.args:
                go(a, tracked)
            return
        if isinstance(t, TmMatch):
            go(t.scrutinee, tracked)
            scrut_tracked = (isinstance(t.scrutinee, TmVar)
                             and (t.scrutinee.name in params
                                  or tracked.get(t.scrutinee.name, False)))
            for pat, arm in t.arms:
                inner = dict(tracked)
                if scrut_tracked:
                    for v in pattern_vars(pat):
                        inner[v] = True
                go(arm, inner)
            return
        if isinstance(t, TmLet):
            go(t.bound, tracked)
            inner = dict(tracked)
            inner.pop(t.name, None)
            go(t.body, inner)
            return
        if isinstance(t, TmQuant):
            inner = dict(tracked)
            for n, _ in t.binders:
                inner.pop(n, None)
            go(t.body, inner)
            return
        from ..terms import term_children
        for child in term_children(t):
            go(child, tracked)

    recursive = _mentions(body, name)
    if not recursive:
        return True
    go(body, {})
    return ok


def _mentions(t: Term, name: str) -> bool:
    if isinstance(t, TmApp) and t.fn == name:
        return True
    from ..terms import term_children
    return any(_mentions(c, name) for c in term_children(t))


def _equations_of(fn: LogicalFn, loc: Loc) -> tuple[Equation, ...]:
    if fn.body is None:
        return ()
    args = tuple(TmVar(n) for n, _ in fn.params)
    out: list[Equation] = []

    def walk(t: Term, binders: list[tuple[str, Optional[SrcType]]],
             conds: list[Term]) -> None:
        if isinstance(t, TmIf):
            walk(t.then, binders, conds + [t.cond])
            walk(t.orelse, binders, conds + [TmNot(t.cond)])
            return
        if isinstance(t, TmMatch) and isinstance(t.scrutinee, TmVar):
            scrut = t.scrutinee
            negations: list[Term] = []
            for pat, arm in t.arms:
                patterm, patvars = _pattern_to_term(pat)
                if patterm is None:
                    # wildcard-style arm: previous mismatches only
                    walk(arm, binders, conds + list(negations))
                    continue
                cond = TmCmp("=", scrut, patterm)
                walk(arm, binders + patvars, conds + list(negations) + [cond])
                negations.append(_neg_match(scrut, patterm, patvars))
            return
        if isinstance(t, TmApp) and t.fn == ABSURD_MARKER:
            return
        out.append(Equation(tuple(binders), tuple(conds), args, t))

    walk(fn.body, [], [])
    return tuple(out)


def _pattern_to_term(pat: Pattern):
    """Pattern as a constructor term over its binders; None for wildcards."""
    fresh = [0]

    def go(p: Pattern, acc: list[tuple[str, Optional[SrcType]]]):
        if isinstance(p, PWild):
            fresh[0] += 1
            name = f"_w{fresh[0]}"
            acc.append((name, None))
            return TmVar(name)
        if isinstance(p, PVar):
            acc.append((p.name, None))
            return TmVar(p.name)
        if isinstance(p, PConstruct):
            return TmConstruct(p.name, tuple(go(a, acc) for a in p.args))
        if isinstance(p, PTuple):
            return TmTuple(tuple(go(a, acc) for a in p.items))
        from ..source_ast import PAs, PTyped
        if isinstance(p, PTyped):
            return go(p.pattern, acc)
        if isinstance(p, PAs):
            inner = go(p.pattern, acc)
            acc.append((p.name, None))
            return inner
        raise TypeError_(f"pattern not supported in logical definition: {p!r}",
                         UNKNOWN_LOC)

    acc: list[tuple[str, Optional[SrcType]]] = []
    if isinstance(pat, (PWild, PVar)):
        return None, [] if isinstance(pat, PWild) else [(pat.name, None)]
    term = go(pat, acc)
    return term, acc


def _neg_match(scrut: Term, patterm: Term,
               patvars: list[tuple[str, Optional[SrcType]]]) -> Term:
    if not patvars:
        return TmNot(TmCmp("=", scrut, patterm))
    return TmNot(TmQuant("exists", tuple(patvars),
                         TmCmp("=", scrut, patterm)))


def _close_term(t: Term, ctx: LogicalContext, loc: Loc) -> Term:
    """Annotate quantifier binder types inside a closed axiom/goal term."""
    uni = Unifier(ctx.world)
    typer = TermTyper(ctx.world, uni)
    try:
        typer.check(t, {}, T_BOOL, loc)
    except (TypeError_, GazelleError) as err:
        ctx.diagnostics.append(Diagnostic("error", str(err), loc, "typing"))
        return t
    return annotate_binders(t, {}, typer, uni)


def annotate_binders(t: Term, env: dict[str, SrcType], typer: TermTyper,
                     uni: Unifier) -> Term:
    """Fill in missing quantifier binder types after checking."""
    if isinstance(t, TmQuant):
        inner = dict(env)
        binders = []
        for name, ty in t.binders:
            if ty is None:
                ty = fresh_tvar()
            inner[name] = ty
            binders.append((name, ty))
        # run inference once more so the fresh vars unify in this scope
        try:
            typer.check(t.body, inner, T_BOOL)
        except (TypeError_, GazelleError):
            pass
        body = annotate_binders(t.body, inner, typer, uni)
        resolved = tuple((n, _canon(uni.deep(ty))) for n, ty in binders)
        return TmQuant(t.quant, resolved, body)
    from ..terms import term_children
    import dataclasses
    if not term_children(t):
        return t
    changes = {}
    if isinstance(t, TmLet):
        bound = annotate_binders(t.bound, env, typer, uni)
        inner = dict(env)
        try:
            inner[t.name] = typer.infer(bound, env)
        except (TypeError_, GazelleError):
            inner[t.name] = fresh_tvar()
        return TmLet(t.name, bound, annotate_binders(t.body, inner, typer, uni))
    if isinstance(t, TmMatch):
        scrut = annotate_binders(t.scrutinee, env, typer, uni)
        arms = []
        for pat, body in t.arms:
            inner = dict(env)
            try:
                typer.bind_pattern(pat, typer.infer(scrut, env), inner)
            except (TypeError_, GazelleError):
                for v in pattern_vars(pat):
                    inner[v] = fresh_tvar()
            arms.append((pat, annotate_binders(body, inner, typer, uni)))
        return TmMatch(scrut, tuple(arms))
    return _map_term(t, lambda c: annotate_binders(c, env, typer, uni))


def _canon(ty: SrcType) -> SrcType:
    """Rename leftover inference variables to 'a-style names."""
    mapping: dict[str, str] = {}

    def go(t: SrcType) -> SrcType:
        if isinstance(t, TVar):
            if t.name.startswith("_t"):
                if t.name not in mapping:
                    mapping[t.name] = f"z{len(mapping)}"
                return TVar(mapping[t.name])
            return t
        if isinstance(t, TArrow):
            return TArrow(go(t.lhs), go(t.rhs))
        if isinstance(t, TTuple):
            return TTuple(tuple(go(x) for x in t.items))
        if isinstance(t, TApp):
            return TApp(t.name, tuple(go(x) for x in t.args))
        return t

    return go(ty)


def _map_term(t: Term, f) -> Term:
    import dataclasses
    from ..terms import (TmBin, TmCmp, TmConn, TmNot, TmNeg, TmIf, TmTuple,
                         TmConstruct, TmApp, TmField, TmDeref, TmOld)
    if isinstance(t, TmBin):
        return TmBin(t.op, f(t.lhs), f(t.rhs))
    if isinstance(t, TmCmp):
        return TmCmp(t.op, f(t.lhs), f(t.rhs))
    if isinstance(t, TmConn):
        return TmConn(t.op, f(t.lhs), f(t.rhs))
    if isinstance(t, TmNot):
        return TmNot(f(t.arg))
    if isinstance(t, TmNeg):
        return TmNeg(f(t.arg))
    if isinstance(t, TmIf):
        return TmIf(f(t.cond), f(t.then), f(t.orelse))
    if isinstance(t, TmTuple):
        return TmTuple(tuple(f(x) for x in t.items))
    if isinstance(t, TmConstruct):
        return TmConstruct(t.name, tuple(f(x) for x in t.args))
    if isinstance(t, TmApp):
        return TmApp(t.fn, tuple(f(x) for x in t.args))
    if isinstance(t, TmField):
        return TmField(f(t.record), t.field)
    if isinstance(t, TmOld):
        return TmOld(f(t.arg))
    return t


# ---------------------------------------------------------------------------
# Program functions
# ---------------------------------------------------------------------------


def _program_val(d: IR.DIRVal, path: list[str], ctx: LogicalContext) -> None:
    world = ctx.world
    params = tuple(IR.IRParam(n, t.status == GHOST, world.canonize(t.ty))
                   for n, t in d.params)
    fn = ProgramFn(
        qual=".".join(path + [d.name]), name=d.name, kind=d.kind,
        params=params,
        param_tys=tuple(world.canonize(t.ty) for _, t in d.params),
        result_ty=world.canonize(d.result.ty), spec=d.spec, body=None,
        loc=d.loc)
    _register(ctx.programs, path, d.name, fn)
    ctx.order.append(fn)
    _register(ctx.world.functions, path, d.name,
              FnSig(list(fn.param_tys), fn.result_ty))
    if d.kind == IR.LOGIC:
        _logic_kind_symbol(fn, path, ctx)
    _contract_axiom(fn, path, ctx)


def _program_fn(kind, name, params, spec, body, recursive, lemma, path, ctx,
                enable_lemmas, loc) -> None:
    qual = ".".join(path + [name])
    inner = body.expr if isinstance(body, IR.EGhost) else body
    fn = ProgramFn(qual=qual, name=name, kind=kind, params=params,
                   param_tys=(), result_ty=T_UNIT, spec=spec, body=inner,
                   recursive=recursive, lemma=lemma, loc=loc)
    try:
        _infer_signature(fn, ctx)
    except (TypeError_, GazelleError) as err:
        ctx.diagnostics.append(Diagnostic("error", str(err), loc, "typing"))
        fn.param_tys = tuple(fresh_tvar() for _ in params)
        fn.result_ty = fresh_tvar()
    _register(ctx.programs, path, name, fn)
    ctx.order.append(fn)
    _register(ctx.world.functions, path, name,
              FnSig(list(fn.param_tys), fn.result_ty))
    if kind == IR.LOGIC:
        _logic_kind_symbol(fn, path, ctx)
        _contract_axiom(fn, path, ctx)
    if lemma and enable_lemmas:
        _lemma_axiom(fn, path, ctx)


def _infer_signature(fn: ProgramFn, ctx: LogicalContext) -> None:
    from .exprtyping import ExprTyper
    uni = Unifier(ctx.world)
    typer = ExprTyper(ctx.world, uni)
    env: dict[str, SrcType] = {}
    for p in fn.params:
        env[p.name] = (ctx.world.canonize(p.ty) if p.ty is not None
                       else fresh_tvar())
    result = fresh_tvar()
    if fn.recursive:
        sig_params = [env[p.name] for p in fn.params]
        typer.locals[fn.name] = FnSig(sig_params, result)
    if fn.body is not None:
        typer.check(fn.body, env, result, fn.loc)
    _type_spec(fn, env, result, typer.term_typer)
    tys = [uni.deep(env[p.name]) for p in fn.params] + [uni.deep(result)]
    canon = _canon_types(tys)
    fn.param_tys = tuple(canon[:-1])
    fn.result_ty = canon[-1]


def _canon_types(tys: list[SrcType]) -> list[SrcType]:
    mapping: dict[str, str] = {}

    def go(t: SrcType) -> SrcType:
        if isinstance(t, TVar):
            if t.name.startswith("_t"):
                if t.name not in mapping:
                    mapping[t.name] = f"z{len(mapping)}"
                return TVar(mapping[t.name])
            return t
        if isinstance(t, TArrow):
            return TArrow(go(t.lhs), go(t.rhs))
        if isinstance(t, TTuple):
            return TTuple(tuple(go(x) for x in t.items))
        if isinstance(t, TApp):
            return TApp(t.name, tuple(go(x) for x in t.args))
        return t

    return [go(t) for t in tys]


def _type_spec(fn: ProgramFn, env: dict[str, SrcType], result: SrcType,
               typer: TermTyper) -> None:
    for t in fn.spec.requires:
        typer.check(t, env, T_BOOL, fn.loc)
    for t in fn.spec.variants:
        try:
            typer.check(t, env, T_INT, fn.loc)
        except TypeError_:
            pass  # structural variants are datatype-valued
    post_env = dict(env)
    post_env[fn.result_name] = result
    for t in fn.spec.ensures:
        typer.check(t, post_env, T_BOOL, fn.loc)
    for _, t in fn.spec.raises:
        typer.check(t, env, T_BOOL, fn.loc)


def _logic_kind_symbol(fn: ProgramFn, path: list[str],
                       ctx: LogicalContext) -> None:
    """A logic-kind program function doubles as a logical symbol."""
    result = fn.result_ty
    is_pred = result == T_BOOL
    body_term = None
    if fn.body is not None:
        try:
            body_term = expr_to_term(fn.body, ctx)
        except GazelleError as err:
            ctx.diagnostics.append(Diagnostic(
                "error", f"logic function '{fn.name}' has a non-logical body: "
                f"{err.message}", fn.loc, "logic-body"))
    if fn.recursive and not fn.spec.variants and body_term is not None:
        ctx.diagnostics.append(Diagnostic(
            "error", f"recursive logic function '{fn.name}' needs a variant",
            fn.loc, "logic-termination"))
    params = tuple((p.name, ty) for p, ty in zip(fn.params, fn.param_tys))
    lf = LogicalFn(name=fn.name, params=params,
                   result=None if is_pred else result,
                   body=body_term, guards=fn.spec.requires)
    lf = LogicalFn(lf.name, lf.params, lf.result, lf.body, lf.guards,
                   _equations_of_guarded(lf, fn.loc))
    _register(ctx.logicals, path, fn.name, lf)


def _equations_of_guarded(fn: LogicalFn, loc: Loc) -> tuple[Equation, ...]:
    eqs = _equations_of(fn, loc) if fn.body is not None else ()
    if not fn.guards:
        return eqs
    return tuple(Equation(e.binders, tuple(fn.guards) + e.conds, e.args,
                          e.value) for e in eqs)


def _contract_axiom(fn: ProgramFn, path: list[str],
                    ctx: LogicalContext) -> None:
    """For logic-kind functions: requires /\\ invariants -> ensures[f(args)]."""
    if fn.kind != IR.LOGIC or not fn.spec.ensures:
        return
    hyps: list[Term] = list(fn.spec.requires)
    for p, ty in zip(fn.params, fn.param_tys):
        rty = ctx.world.resolve_alias(ty)
        if isinstance(rty, TApp) and rty.name in ctx.invariants:
            hyps.extend(ctx.instantiate_invariants(rty.name, TmVar(p.name)))
    call = TmApp(fn.name, tuple(TmVar(p.name) for p in fn.params))
    env = {fn.result_name: call}
    post = mk_and([_strip_old(subst(t, env)) for t in fn.spec.ensures])
    binders = tuple((p.name, ty) for p, ty in zip(fn.params, fn.param_tys))
    axiom = TmQuant("forall", binders, mk_implies(hyps, post)) \
        if binders else mk_implies(hyps, post)
    ctx.axioms.append((f"{fn.qual}'contract", axiom))


def _lemma_axiom(fn: ProgramFn, path: list[str], ctx: LogicalContext) -> None:
    """Lemma functions contribute their contract as an axiom when enabled."""
    hyps: list[Term] = list(fn.spec.requires)
    post = mk_and([_strip_old(t) for t in fn.spec.ensures])
    binders = tuple((p.name, ty) for p, ty in zip(fn.params, fn.param_tys))
    axiom = TmQuant("forall", binders, mk_implies(hyps, post)) \
        if binders else mk_implies(hyps, post)
    ctx.axioms.append((f"{fn.qual}'lemma", axiom))


def _strip_old(t: Term) -> Term:
    """old(x) = x for pure functions."""
    if isinstance(t, TmOld):
        return _strip_old(t.arg)
    return _map_term(t, _strip_old) if not isinstance(t, (TmVar, TmInt,
                                                          TmBool, TmUnit)) \
        else t


def _mutation_fixpoint(ctx: LogicalContext) -> None:
    """May-mutate analysis: which record parameters a call can modify."""
    changed = True
    while changed:
        changed = False
        for fn in ctx.order:
            if fn.body is None:
                continue
            found = _mutated_params(fn, ctx)
            if found - fn.mutates:
                fn.mutates |= found
                changed = True


def _mutated_params(fn: ProgramFn, ctx: LogicalContext) -> set[int]:
    names = {p.name: i for i, p in enumerate(fn.params)}
    out: set[int] = set()

    def go(e: IR.TgtExpr, shadowed: set[str]) -> None:
        if isinstance(e, (IR.ESetField, IR.EArraySet)):
            target = e.expr if isinstance(e, IR.ESetField) else e.array
            if isinstance(target, IR.EVar) and target.name in names \
                    and target.name not in shadowed:
                out.add(names[target.name])
        if isinstance(e, IR.EApp):
            callee = ctx.resolve_program(e.fn)
            if callee is not None:
                for i, arg in enumerate(e.args):
                    if (isinstance(arg, IR.EVar) and arg.name in names
                            and arg.name not in shadowed
                            and i in callee.mutates):
                        out.add(names[arg.name])
            elif e.fn == fn.name:
                for i, arg in enumerate(e.args):
                    if (isinstance(arg, IR.EVar) and arg.name in names
                            and arg.name not in shadowed and i in fn.mutates):
                        out.add(names[arg.name])
        if isinstance(e, IR.ELet):
            go(e.bound, shadowed)
            go(e.body, shadowed | {e.name})
            return
        if isinstance(e, IR.EMatch):
            go(e.scrutinee, shadowed)
            for pat, body in e.arms:
                go(body, shadowed | set(pattern_vars(pat)))
            return
        for child in IR.expr_children(e):
            go(child, shadowed)

    go(fn.body, set())
    return out


# ---------------------------------------------------------------------------
# Pure expression-to-term conversion (for logic-kind bodies)
# ---------------------------------------------------------------------------

_OP_BIN = {"+", "-", "*", "/", "mod"}
_OP_CMP = {"=", "<>", "<", "<=", ">", ">="}
_BUILTIN_TERMS = {"length", "append", "reverse", "mem", "min", "max",
                  "array_length", "array_get", "@"}


def expr_to_term(e: IR.TgtExpr, ctx: LogicalContext) -> Term:
    if isinstance(e, IR.EGhost):
        return expr_to_term(e.expr, ctx)
    if isinstance(e, IR.EVar):
        return TmVar(e.name, e.loc)
    if isinstance(e, IR.EConst):
        if e.value is None:
            return TmUnit()
        if isinstance(e.value, bool):
            return TmBool(e.value)
        return TmInt(e.value)
    if isinstance(e, IR.EIf):
        return TmIf(expr_to_term(e.cond, ctx), expr_to_term(e.then, ctx),
                    expr_to_term(e.orelse, ctx))
    if isinstance(e, IR.EMatch):
        arms = tuple((p, expr_to_term(b, ctx)) for p, b in e.arms)
        return TmMatch(expr_to_term(e.scrutinee, ctx), arms)
    if isinstance(e, IR.ELet):
        return TmLet(e.name, expr_to_term(e.bound, ctx),
                     expr_to_term(e.body, ctx))
    if isinstance(e, IR.EApp):
        args = tuple(expr_to_term(a, ctx) for a in e.args)
        if e.fn in _OP_BIN and len(args) == 2:
            return TmBin(e.fn, args[0], args[1])
        if e.fn in _OP_CMP and len(args) == 2:
            return TmCmp(e.fn, args[0], args[1])
        if e.fn == "&&":
            return TmConn("and", args[0], args[1])
        if e.fn == "||":
            return TmConn("or", args[0], args[1])
        if e.fn == "not":
            return TmNot(args[0])
        if e.fn == "@":
            return TmApp("append", args)
        if e.fn in _BUILTIN_TERMS:
            return TmApp(e.fn, args)
        target = ctx.logicals.get(e.fn) if ctx is not None else None
        if ctx is None or target is not None or e.fn in ctx.world.functions:
            return TmApp(e.fn, args)
        raise GazelleError(f"call to non-logical function '{e.fn}'", e.loc)
    if isinstance(e, IR.EConstruct):
        return TmConstruct(e.name, tuple(expr_to_term(a, ctx) for a in e.args))
    if isinstance(e, IR.ETuple):
        return TmTuple(tuple(expr_to_term(x, ctx) for x in e.items))
    if isinstance(e, IR.EField):
        return TmField(expr_to_term(e.expr, ctx), e.field_name)
    if isinstance(e, IR.EAbsurd):
        return TmApp(ABSURD_MARKER, ())
    if isinstance(e, IR.EArrayGet):
        return TmApp("array_get", (expr_to_term(e.array, ctx),
                                   expr_to_term(e.index, ctx)))
    raise GazelleError(
        f"effectful construct in logical position: {type(e).__name__}",
        getattr(e, "loc", UNKNOWN_LOC))
