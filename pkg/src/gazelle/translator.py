"""Purely syntactic translation from source programs to the verification IR.

Expressions map rule-for-rule: lambda chains uncurry into multi-parameter
functions, ghost-marked bindings wrap their right-hand side in ghost(..),
`assert false` becomes absurd, sub-modules become scopes, functor parameters
become a leading scope of abstract symbols, and signature vals take their
parameter names from the contract header.  `ref`/`!`/`:=` desugar to a
one-field record named `contents`.  Local exception declarations are lifted
to module top level with a freshness suffix.  The translation never consults
inferred types.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .diagnostics import Loc, SpecError, TranslationError
from .frontend.spec_parser import parse_spec
from .frontend.specs import (FunSpec, LAxiom, LFunction, LLemma, LoopSpec,
                             LPredicate, TypeInvariant)
from . import source_ast as S
from . import target_ir as IR
from .source_ast import attr_is_ghost, attr_is_lemma, attr_kind, is_functional
from .terms import (Term, TmApp, TmBin, TmCmp, TmConn, TmConstruct, TmDeref,
                    TmField, TmIf, TmLet, TmMatch, TmNeg, TmNot, TmOld,
                    TmQuant, TmTuple, TmVar, subst)


def deref_to_contents(t: Term) -> Term:
    """Rewrite `!r` into `r.contents`, matching the ref desugaring."""
    if isinstance(t, TmDeref):
        return TmField(deref_to_contents(t.ref), "contents")
    if isinstance(t, (TmVar,)) or not hasattr(t, "__dataclass_fields__"):
        return t
    if isinstance(t, TmBin):
        return TmBin(t.op, deref_to_contents(t.lhs), deref_to_contents(t.rhs))
    if isinstance(t, TmNeg):
        return TmNeg(deref_to_contents(t.arg))
    if isinstance(t, TmCmp):
        return TmCmp(t.op, deref_to_contents(t.lhs), deref_to_contents(t.rhs))
    if isinstance(t, TmNot):
        return TmNot(deref_to_contents(t.arg))
    if isinstance(t, TmConn):
        return TmConn(t.op, deref_to_contents(t.lhs), deref_to_contents(t.rhs))
    if isinstance(t, TmQuant):
        return TmQuant(t.quant, t.binders, deref_to_contents(t.body))
    if isinstance(t, TmIf):
        return TmIf(deref_to_contents(t.cond), deref_to_contents(t.then),
                    deref_to_contents(t.orelse))
    if isinstance(t, TmLet):
        return TmLet(t.name, deref_to_contents(t.bound),
                     deref_to_contents(t.body))
    if isinstance(t, TmMatch):
        return TmMatch(deref_to_contents(t.scrutinee),
                       tuple((p, deref_to_contents(b)) for p, b in t.arms))
    if isinstance(t, TmTuple):
        return TmTuple(tuple(deref_to_contents(x) for x in t.items))
    if isinstance(t, TmConstruct):
        return TmConstruct(t.name, tuple(deref_to_contents(x) for x in t.args))
    if isinstance(t, TmApp):
        return TmApp(t.fn, tuple(deref_to_contents(x) for x in t.args))
    if isinstance(t, TmField):
        return TmField(deref_to_contents(t.record), t.field)
    if isinstance(t, TmOld):
        return TmOld(deref_to_contents(t.arg))
    return t

_BUILTIN_CALLS = {
    "List.rev": "reverse",
    "List.length": "length",
    "List.mem": "mem",
    "Array.length": "array_length",
}


def translate_program(p: S.SrcProgram, strict: bool = False) -> IR.TgtModule:
    """Translate a whole program into one module named after the file stem."""
    ctx = _Ctx(strict=strict)
    decls: list[IR.TgtDecl] = []
    for d in p.decls:
        decls.extend(translate_decl(d, ctx))
    name = p.source_name[:1].upper() + p.source_name[1:]
    ctx.used_exn.clear()
    return IR.TgtModule(name, tuple(ctx.lifted + decls))


@dataclass
class _Ctx:
    strict: bool = False
    lifted: list[IR.TgtDecl] = field(default_factory=list)
    used_exn: set[str] = field(default_factory=set)

    def fresh_exn(self, base: str) -> str:
        if base not in self.used_exn:
            self.used_exn.add(base)
            return base
        i = 1
        while f"{base}_{i}" in self.used_exn:
            i += 1
        name = f"{base}_{i}"
        self.used_exn.add(name)
        return name


def uncurry(e: S.SrcExpr) -> tuple[list[IR.IRParam], S.SrcExpr]:
    """Collapse a lambda chain into a parameter list and the last body."""
    if not isinstance(e, S.Fun):
        raise TranslationError("expected an anonymous function", e.loc,
                               construct=type(e).__name__)
    params: list[IR.IRParam] = []
    while isinstance(e, S.Fun):
        params.append(IR.IRParam(e.param.name, e.param.ghost, e.param.ty))
        e = e.body
    return params, e


def curry(params: list[IR.IRParam], body: S.SrcExpr) -> S.SrcExpr:
    """Inverse of uncurry; used by round-trip tests."""
    out = body
    for p in reversed(params):
        out = S.Fun(S.EMPTY_ATTRS, S.Param(p.name, p.ghost, p.ty), out,
                    body.loc if hasattr(body, "loc") else S.UNKNOWN_LOC)
    return out


def _parse_fun_spec(attrs: S.AttrSet, binder_names: list[str],
                    loc: Loc) -> IR.FunSpecIR:
    payload = attrs.merged_payload()
    if payload is None:
        return IR.EMPTY_SPEC
    base = attrs.gospel_payloads()[0].loc
    try:
        spec = parse_spec(payload, "function", base)
    except SpecError as err:
        raise TranslationError(err.message, err.loc, construct="spec") from err
    assert isinstance(spec, FunSpec)
    renaming: dict[str, Term] = {}
    result = None
    if spec.header is not None:
        result = spec.header.result
        for header_name, binder in zip(spec.header.args, binder_names):
            if header_name != binder and header_name != "_":
                renaming[header_name] = TmVar(binder)

    def fix(t: Term) -> Term:
        t = deref_to_contents(t)
        return subst(t, renaming) if renaming else t

    return IR.FunSpecIR(
        requires=tuple(fix(t) for t in spec.requires),
        ensures=tuple(fix(t) for t in spec.ensures),
        raises=tuple((exn, fix(t)) for exn, t in spec.raises),
        variants=tuple(fix(t) for t in spec.variants),
        result=result,
    )


def _parse_loop_spec(attrs: S.AttrSet, loc: Loc) -> IR.LoopSpecIR:
    payload = attrs.merged_payload()
    if payload is None:
        return IR.LoopSpecIR()
    base = attrs.gospel_payloads()[0].loc
    try:
        spec = parse_spec(payload, "loop", base)
    except SpecError as err:
        raise TranslationError(err.message, err.loc, construct="spec") from err
    assert isinstance(spec, LoopSpec)
    return IR.LoopSpecIR(tuple(deref_to_contents(t) for t in spec.invariants),
                         tuple(deref_to_contents(t) for t in spec.variants))


def _maybe_ghost(e: IR.TgtExpr, ghost: bool) -> IR.TgtExpr:
    return IR.EGhost(e) if ghost else e


# ---------------------------------------------------------------------------
# Expressions
# ---------------------------------------------------------------------------


def translate_expr(e: S.SrcExpr, ctx: _Ctx | None = None) -> IR.TgtExpr:
    ctx = ctx or _Ctx()
    return _expr(e, ctx)


def _expr(e: S.SrcExpr, ctx: _Ctx) -> IR.TgtExpr:
    if isinstance(e, S.Var):
        return IR.EVar(e.name, e.loc)
    if isinstance(e, S.Const):
        return IR.EConst(e.value, e.loc)
    if isinstance(e, S.If):
        return IR.EIf(_expr(e.cond, ctx), _expr(e.then, ctx),
                      _expr(e.orelse, ctx), e.loc)
    if isinstance(e, S.Match):
        arms = tuple((a.pattern, _expr(a.body, ctx)) for a in e.arms)
        return IR.EMatch(_expr(e.scrutinee, ctx), arms, e.loc)
    if isinstance(e, S.Let):
        ghost = attr_is_ghost(e.attrs)
        kind = attr_kind(e.attrs)
        if is_functional(e.bound):
            params, last = uncurry(e.bound)
            spec = _parse_fun_spec(e.spec_attrs, [p.name for p in params],
                                   e.loc)
            fun = IR.EFun(tuple(params), spec,
                          _maybe_ghost(_expr(last, ctx), ghost), e.loc)
            return IR.ELet(kind, e.name, fun, _expr(e.body, ctx), e.loc)
        bound = _maybe_ghost(_expr(e.bound, ctx), ghost)
        return IR.ELet(kind, e.name, bound, _expr(e.body, ctx), e.loc)
    if isinstance(e, S.LetRec):
        functions = _rec_functions(e.attrs, e.bindings, ctx)
        return IR.ERecGroup(tuple(functions), _expr(e.body, ctx), e.loc)
    if isinstance(e, S.App):
        fn = _BUILTIN_CALLS.get(e.fn, e.fn)
        return IR.EApp(fn, tuple(_expr(a, ctx) for a in e.args), e.loc)
    if isinstance(e, S.Fun):
        params, last = uncurry(e)
        spec = _parse_fun_spec(e.attrs, [p.name for p in params], e.loc)
        return IR.EFun(tuple(params), spec, _expr(last, ctx), e.loc)
    if isinstance(e, S.Record):
        return IR.ERecord(tuple((n, _expr(v, ctx)) for n, v in e.fields), e.loc)
    if isinstance(e, S.FieldGet):
        return IR.EField(_expr(e.expr, ctx), e.field, e.loc)
    if isinstance(e, S.FieldSet):
        return IR.ESetField(_expr(e.expr, ctx), e.field,
                            _expr(e.value, ctx), e.loc)
    if isinstance(e, S.Construct):
        return IR.EConstruct(e.name, tuple(_expr(a, ctx) for a in e.args),
                             e.loc)
    if isinstance(e, S.Tuple):
        return IR.ETuple(tuple(_expr(x, ctx) for x in e.items), e.loc)
    if isinstance(e, S.Raise):
        return IR.ERaise(e.exn, tuple(_expr(a, ctx) for a in e.args), e.loc)
    if isinstance(e, S.Try):
        handlers = tuple((h.exn, h.args, _expr(h.body, ctx))
                         for h in e.handlers)
        return IR.ETry(_expr(e.body, ctx), handlers, e.loc)
    if isinstance(e, S.While):
        spec = _parse_loop_spec(e.attrs, e.loc)
        return IR.EWhile(_expr(e.cond, ctx), spec, _expr(e.body, ctx), e.loc)
    if isinstance(e, S.For):
        _reject_strict(ctx, "for loop", e.loc)
        spec = _parse_loop_spec(e.attrs, e.loc)
        return IR.EFor(e.var, _expr(e.lo, ctx), _expr(e.hi, ctx), spec,
                       _expr(e.body, ctx), e.loc)
    if isinstance(e, S.AssertFalse):
        return IR.EAbsurd(e.loc)
    if isinstance(e, S.RefMake):
        _reject_strict(ctx, "ref", e.loc)
        return IR.ERecord((("contents", _expr(e.expr, ctx)),), e.loc)
    if isinstance(e, S.Deref):
        _reject_strict(ctx, "ref", e.loc)
        return IR.EField(_expr(e.expr, ctx), "contents", e.loc)
    if isinstance(e, S.Assign):
        _reject_strict(ctx, "ref", e.loc)
        return IR.ESetField(_expr(e.ref, ctx), "contents",
                            _expr(e.value, ctx), e.loc)
    if isinstance(e, S.ArrayGet):
        _reject_strict(ctx, "array access", e.loc)
        return IR.EArrayGet(_expr(e.array, ctx), _expr(e.index, ctx), e.loc)
    if isinstance(e, S.ArraySet):
        _reject_strict(ctx, "array access", e.loc)
        return IR.EArraySet(_expr(e.array, ctx), _expr(e.index, ctx),
                            _expr(e.value, ctx), e.loc)
    if isinstance(e, S.LocalExn):
        _reject_strict(ctx, "local exception", e.loc)
        fresh = ctx.fresh_exn(e.name)
        mask = tuple(S.TaggedType(S.REG, t) for t in e.arg_types)
        ctx.lifted.append(IR.DIRExn(fresh, mask, e.loc))
        body = (_rename_exn(e.body, e.name, fresh)
                if fresh != e.name else e.body)
        return _expr(body, ctx)
    raise TranslationError(
        f"construct outside the supported fragment: {type(e).__name__}",
        getattr(e, "loc", Loc("<unknown>", 0, 0)),
        construct=type(e).__name__)


def _reject_strict(ctx: _Ctx, what: str, loc: Loc) -> None:
    if ctx.strict:
        raise TranslationError(
            f"{what} is outside the strict core fragment", loc, construct=what)


def _rec_functions(attrs: S.AttrSet, bindings, ctx: _Ctx) -> list[IR.IRRecFun]:
    ghost = attr_is_ghost(attrs)
    kind = attr_kind(attrs)
    lemma = attr_is_lemma(attrs)
    out = []
    for b in bindings:
        if is_functional(b.expr):
            params, last = uncurry(b.expr)
            body = _maybe_ghost(_expr(last, ctx), ghost)
        else:
            params, body = [], _maybe_ghost(_expr(b.expr, ctx), ghost)
        spec = _parse_fun_spec(b.spec_attrs, [p.name for p in params], b.loc)
        out.append(IR.IRRecFun(kind, b.name, tuple(params), spec, body,
                               lemma, b.loc))
    return out


def _rename_exn(e: S.SrcExpr, old: str, new: str) -> S.SrcExpr:
    """Rename raise/handler references to a lifted local exception."""

    def go(x: S.SrcExpr) -> S.SrcExpr:
        if isinstance(x, S.Raise) and x.exn == old:
            return S.Raise(new, tuple(go(a) for a in x.args), x.loc)
        if isinstance(x, S.Try):
            handlers = tuple(
                S.Handler(new if h.exn == old else h.exn, h.args, go(h.body))
                for h in x.handlers)
            return S.Try(go(x.body), handlers, x.loc)
        if isinstance(x, S.LocalExn) and x.name == old:
            return x  # shadowed by an inner declaration
        return _map_children(x, go)

    return go(e)


def _map_children(e: S.SrcExpr, f) -> S.SrcExpr:
    if isinstance(e, (S.Var, S.Const, S.AssertFalse)):
        return e
    if isinstance(e, S.If):
        return S.If(f(e.cond), f(e.then), f(e.orelse), e.loc)
    if isinstance(e, S.Match):
        return S.Match(f(e.scrutinee),
                       tuple(S.MatchArm(a.pattern, f(a.body)) for a in e.arms),
                       e.loc)
    if isinstance(e, S.Let):
        return S.Let(e.attrs, e.name, f(e.bound), e.spec_attrs, f(e.body),
                     e.loc)
    if isinstance(e, S.LetRec):
        bindings = tuple(S.RecBinding(b.name, f(b.expr), b.spec_attrs, b.loc)
                         for b in e.bindings)
        return S.LetRec(e.attrs, bindings, f(e.body), e.loc)
    if isinstance(e, S.App):
        return S.App(e.fn, tuple(f(a) for a in e.args), e.loc)
    if isinstance(e, S.Fun):
        return S.Fun(e.attrs, e.param, f(e.body), e.loc)
    if isinstance(e, S.Record):
        return S.Record(tuple((n, f(v)) for n, v in e.fields), e.loc)
    if isinstance(e, S.FieldGet):
        return S.FieldGet(f(e.expr), e.field, e.loc)
    if isinstance(e, S.FieldSet):
        return S.FieldSet(f(e.expr), e.field, f(e.value), e.loc)
    if isinstance(e, S.Construct):
        return S.Construct(e.name, tuple(f(a) for a in e.args), e.loc)
    if isinstance(e, S.Tuple):
        return S.Tuple(tuple(f(x) for x in e.items), e.loc)
    if isinstance(e, S.Raise):
        return S.Raise(e.exn, tuple(f(a) for a in e.args), e.loc)
    if isinstance(e, S.Try):
        return S.Try(f(e.body),
                     tuple(S.Handler(h.exn, h.args, f(h.body))
                           for h in e.handlers), e.loc)
    if isinstance(e, S.While):
        return S.While(f(e.cond), e.attrs, f(e.body), e.loc)
    if isinstance(e, S.For):
        return S.For(e.var, f(e.lo), f(e.hi), e.attrs, f(e.body), e.loc)
    if isinstance(e, S.RefMake):
        return S.RefMake(f(e.expr), e.loc)
    if isinstance(e, S.Deref):
        return S.Deref(f(e.expr), e.loc)
    if isinstance(e, S.Assign):
        return S.Assign(f(e.ref), f(e.value), e.loc)
    if isinstance(e, S.ArrayGet):
        return S.ArrayGet(f(e.array), f(e.index), e.loc)
    if isinstance(e, S.ArraySet):
        return S.ArraySet(f(e.array), f(e.index), f(e.value), e.loc)
    if isinstance(e, S.LocalExn):
        return S.LocalExn(e.name, e.arg_types, f(e.body), e.loc)
    raise TypeError(f"not a source expression: {e!r}")


# ---------------------------------------------------------------------------
# Declarations, type definitions, modules, signatures
# ---------------------------------------------------------------------------


def translate_decl(d: S.SrcDecl, ctx: _Ctx | None = None) -> list[IR.TgtDecl]:
    ctx = ctx or _Ctx()
    if isinstance(d, S.DExn):
        ctx.used_exn.add(d.name)
        return [IR.DIRExn(d.name, d.args, d.loc)]
    if isinstance(d, S.DType):
        return [IR.DIRType(tuple(translate_typedef(td) for td in d.defs),
                           d.loc)]
    if isinstance(d, S.DLet):
        ghost = attr_is_ghost(d.attrs)
        kind = attr_kind(d.attrs)
        if is_functional(d.expr):
            params, last = uncurry(d.expr)
            spec = _parse_fun_spec(d.spec_attrs, [p.name for p in params],
                                   d.loc)
            body = _maybe_ghost(_expr(last, ctx), ghost)
            return [IR.DIRLet(kind, d.name, tuple(params), spec, body,
                              attr_is_lemma(d.attrs), d.loc)]
        spec = _parse_fun_spec(d.spec_attrs, [], d.loc)
        body = _maybe_ghost(_expr(d.expr, ctx), ghost)
        return [IR.DIRLet(kind, d.name, (), spec, body,
                          attr_is_lemma(d.attrs), d.loc)]
    if isinstance(d, S.DLetRec):
        functions = _rec_functions(d.attrs, d.bindings, ctx)
        return [IR.DIRLetRec(tuple(functions), d.loc)]
    if isinstance(d, S.DModule):
        return [IR.DIRScope(d.name, tuple(translate_module(d.module, ctx)),
                            d.loc)]
    if isinstance(d, S.DModuleType):
        return []
    if isinstance(d, S.DFloatingSpec):
        return [_logical_decl(d.attrs, d.loc)]
    raise TranslationError(
        f"declaration outside the supported fragment: {type(d).__name__}",
        d.loc, construct=type(d).__name__)


def _logical_decl(attrs: S.AttrSet, loc: Loc) -> IR.TgtDecl:
    payload = attrs.merged_payload()
    base = attrs.gospel_payloads()[0].loc
    try:
        decl = parse_spec(payload, "standalone", base)
    except SpecError as err:
        raise TranslationError(err.message, err.loc, construct="spec") from err
    if isinstance(decl, LFunction):
        return IR.DIRFunction(decl.name, decl.params, decl.result, decl.body,
                              loc)
    if isinstance(decl, LPredicate):
        return IR.DIRPredicate(decl.name, decl.params, decl.body, loc)
    if isinstance(decl, LAxiom):
        return IR.DIRAxiom(decl.name, decl.term, loc)
    if isinstance(decl, LLemma):
        # a lemma is something to prove, hence emitted as a goal
        return IR.DIRGoal(decl.name, decl.term, loc)
    raise TranslationError("unsupported standalone specification", loc,
                           construct="spec")


def translate_typedef(td: S.SrcTypeDef) -> IR.IRTypeDef:
    body = td.body
    if isinstance(body, S.TDAbstract):
        return IR.IRTypeDef(td.name, td.params, IR.TBAbstract(), td.loc)
    if isinstance(body, S.TDAlias):
        return IR.IRTypeDef(td.name, td.params, IR.TBAlias(body.ty), td.loc)
    if isinstance(body, S.TDVariant):
        return IR.IRTypeDef(td.name, td.params,
                            IR.TBVariant(body.constructors), td.loc)
    if isinstance(body, S.TDRecord):
        fields = tuple(
            IR.IRFieldDef(f.name, f.mutable, f.tagged.status == S.GHOST,
                          f.tagged.ty)
            for f in body.fields)
        invariants: tuple[Term, ...] = ()
        payload = body.invariant_attrs.merged_payload()
        if payload is not None:
            base = body.invariant_attrs.gospel_payloads()[0].loc
            try:
                inv = parse_spec(payload, "type", base)
            except SpecError as err:
                raise TranslationError(err.message, err.loc,
                                       construct="spec") from err
            assert isinstance(inv, TypeInvariant)
            invariants = tuple(inv.terms)
        return IR.IRTypeDef(td.name, td.params, IR.TBRecord(fields, invariants),
                            td.loc)
    raise TranslationError(f"unsupported type definition for '{td.name}'",
                           td.loc, construct="typedef")


def translate_module(m: S.SrcModule, ctx: _Ctx | None = None) -> list[IR.TgtDecl]:
    ctx = ctx or _Ctx()
    if isinstance(m, S.MStruct):
        out: list[IR.TgtDecl] = []
        for d in m.decls:
            out.extend(translate_decl(d, ctx))
        return out
    if isinstance(m, S.MFunctor):
        sig_decls = translate_sig_items(m.param_sig.items)
        inner = translate_module(m.body, ctx)
        return [IR.DIRScope(m.param, tuple(sig_decls))] + inner
    raise TranslationError("unsupported module expression",
                           Loc("<unknown>", 0, 0), construct="module")


def translate_sig_items(items) -> list[IR.TgtDecl]:
    out: list[IR.TgtDecl] = []
    for item in items:
        if isinstance(item, S.SType):
            out.append(IR.DIRType(tuple(translate_typedef(td)
                                        for td in item.defs), item.loc))
        elif isinstance(item, S.SFloatingSpec):
            out.append(_logical_decl(item.attrs, item.loc))
        elif isinstance(item, S.SVal):
            out.append(translate_sig_val(item))
        else:
            raise TranslationError("unsupported signature item",
                                   item.loc, construct="sig-item")
    return out


def translate_sig_val(item: S.SVal) -> IR.DIRVal:
    kind = attr_kind(item.attrs)
    ghost = attr_is_ghost(item.attrs)
    payload = item.spec_attrs.merged_payload()
    header_args: list[str] = []
    spec = IR.EMPTY_SPEC
    if payload is not None:
        base = item.spec_attrs.gospel_payloads()[0].loc
        try:
            parsed = parse_spec(payload, "function", base)
        except SpecError as err:
            raise TranslationError(err.message, err.loc,
                                   construct="spec") from err
        assert isinstance(parsed, FunSpec)
        if parsed.header is not None:
            header_args = list(parsed.header.args)
        spec = IR.FunSpecIR(tuple(parsed.requires), tuple(parsed.ensures),
                            tuple(parsed.raises), tuple(parsed.variants),
                            parsed.header.result if parsed.header else None)
    segments: list[S.SrcType] = []
    ty = item.tagged.ty
    while isinstance(ty, S.TArrow):
        segments.append(ty.lhs)
        ty = ty.rhs
    result_ty = ty
    if header_args:
        if len(header_args) != len(segments):
            raise TranslationError(
                f"contract header for '{item.name}' binds "
                f"{len(header_args)} argument(s) but the type has "
                f"{len(segments)} arrow(s)", item.loc, construct="sig-val")
        names = header_args
    else:
        names = [f"x{i}" for i in range(len(segments))]
    params = tuple((n, S.TaggedType(S.REG, t))
                   for n, t in zip(names, segments))
    return IR.DIRVal(kind, ghost, item.name, params, spec,
                     S.TaggedType(item.tagged.status, result_ty), item.loc)
