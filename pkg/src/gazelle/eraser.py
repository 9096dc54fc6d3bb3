"""Ghost-code erasure on the source tree.

Removes everything that exists only for specification: ghost bindings and
declarations, ghost parameters together with the corresponding call-site
arguments, ghost record fields with their initializers and assignments,
every spec attribute, and freestanding logical declarations.  The output
prints back in the input grammar.  A regular computation that reads ghost
data makes erasure refuse: removing the ghost half would change meaning.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dfield

from .diagnostics import GazelleError, Loc
from . import source_ast as S
from .source_ast import attr_is_ghost, attr_kind


class GhostTaintError(GazelleError):
    """Regular code depends on a ghost value."""


@dataclass
class _Env:
    ghost_names: set[str] = dfield(default_factory=set)
    ghost_fields: set[str] = dfield(default_factory=set)
    # function name -> ghost flags of its parameters, for argument dropping
    params: dict[str, tuple[bool, ...]] = dfield(default_factory=dict)

    def child(self) -> "_Env":
        return _Env(set(self.ghost_names), set(self.ghost_fields),
                    dict(self.params))


def erase(p: S.SrcProgram) -> S.SrcProgram:
    env = _Env()
    decls = []
    for d in p.decls:
        out = _decl(d, env)
        if out is not None:
            decls.append(out)
    return S.SrcProgram(tuple(decls), p.source_name)


def _params_of(e: S.SrcExpr) -> tuple[list[S.Param], S.SrcExpr]:
    params = []
    while isinstance(e, S.Fun):
        params.append(e.param)
        e = e.body
    return params, e


def _register_fn(env: _Env, name: str, expr: S.SrcExpr) -> None:
    params, _ = _params_of(expr)
    if params:
        env.params[name] = tuple(p.ghost for p in params)


def _decl(d: S.SrcDecl, env: _Env):
    if isinstance(d, S.DFloatingSpec):
        return None
    if isinstance(d, S.DLet):
        if attr_is_ghost(d.attrs):
            env.ghost_names.add(d.name)
            return None
        _register_fn(env, d.name, d.expr)
        return S.DLet(S.EMPTY_ATTRS, d.name, _expr_fn(d.expr, env),
                      S.EMPTY_ATTRS, d.loc)
    if isinstance(d, S.DLetRec):
        if attr_is_ghost(d.attrs):
            env.ghost_names.update(b.name for b in d.bindings)
            return None
        for b in d.bindings:
            _register_fn(env, b.name, b.expr)
        bindings = tuple(
            S.RecBinding(b.name, _expr_fn(b.expr, env), S.EMPTY_ATTRS, b.loc)
            for b in d.bindings)
        return S.DLetRec(S.EMPTY_ATTRS, bindings, d.loc)
    if isinstance(d, S.DType):
        defs = []
        for td in d.defs:
            body = td.body
            if isinstance(body, S.TDRecord):
                kept = []
                for f in body.fields:
                    if f.tagged.status == S.GHOST:
                        env.ghost_fields.add(f.name)
                    else:
                        kept.append(f)
                body = S.TDRecord(tuple(kept), S.EMPTY_ATTRS)
            defs.append(S.SrcTypeDef(td.params, td.name, body, td.loc))
        return S.DType(tuple(defs), d.loc)
    if isinstance(d, S.DExn):
        return d
    if isinstance(d, S.DModuleType):
        return S.DModuleType(d.name, _sig(d.sig, env), d.loc)
    if isinstance(d, S.DModule):
        return S.DModule(d.name, _module(d.module, env), d.loc)
    raise TypeError(f"not a declaration: {d!r}")


def _module(m: S.SrcModule, env: _Env) -> S.SrcModule:
    if isinstance(m, S.MStruct):
        inner = env.child()
        decls = []
        for d in m.decls:
            out = _decl(d, inner)
            if out is not None:
                decls.append(out)
        return S.MStruct(tuple(decls))
    if isinstance(m, S.MFunctor):
        inner = env.child()
        sig = _sig(m.param_sig, inner)
        return S.MFunctor(m.param, sig, _module(m.body, inner))
    raise TypeError(f"not a module expression: {m!r}")


def _sig(sig: S.SrcModuleType, env: _Env) -> S.SrcModuleType:
    items = []
    for item in sig.items:
        if isinstance(item, S.SFloatingSpec):
            continue
        if isinstance(item, S.SVal):
            if attr_is_ghost(item.attrs):
                env.ghost_names.add(item.name)
                continue
            items.append(S.SVal(S.EMPTY_ATTRS, item.name, item.tagged,
                                S.EMPTY_ATTRS, item.loc))
        elif isinstance(item, S.SType):
            items.append(item)
    return S.SrcModuleType(tuple(items), sig.name)


def _expr_fn(e: S.SrcExpr, env: _Env) -> S.SrcExpr:
    """Erase a binding's right-hand side, dropping ghost parameters."""
    if isinstance(e, S.Fun):
        if e.param.ghost:
            inner = env.child()
            inner.ghost_names.add(e.param.name)
            return _expr_fn(e.body, inner)
        inner = env.child()
        inner.ghost_names.discard(e.param.name)
        return S.Fun(S.EMPTY_ATTRS, e.param, _expr_fn(e.body, inner), e.loc)
    return _expr(e, env)


def _is_unit(e: S.SrcExpr) -> bool:
    return isinstance(e, S.Const) and e.value is None


def _expr(e: S.SrcExpr, env: _Env) -> S.SrcExpr:
    if isinstance(e, S.Var):
        if e.name in env.ghost_names:
            raise GhostTaintError(
                f"ghost value '{e.name}' flows into regular code", e.loc)
        return e
    if isinstance(e, (S.Const, S.AssertFalse)):
        return e
    if isinstance(e, S.If):
        return S.If(_expr(e.cond, env), _expr(e.then, env),
                    _expr(e.orelse, env), e.loc)
    if isinstance(e, S.Match):
        arms = []
        for arm in e.arms:
            inner = env.child()
            inner.ghost_names -= set(S.pattern_vars(arm.pattern))
            arms.append(S.MatchArm(arm.pattern, _expr(arm.body, inner)))
        return S.Match(_expr(e.scrutinee, env), tuple(arms), e.loc)
    if isinstance(e, S.Let):
        if attr_is_ghost(e.attrs):
            inner = env.child()
            inner.ghost_names.add(e.name)
            return _expr(e.body, inner)
        bound = _expr_fn(e.bound, env)
        inner = env.child()
        inner.ghost_names.discard(e.name)
        _register_fn(inner, e.name, e.bound)
        body = _expr(e.body, inner)
        if e.name == "_" and _is_unit(bound):
            return body  # a fully erased statement
        return S.Let(S.EMPTY_ATTRS, e.name, bound, S.EMPTY_ATTRS, body, e.loc)
    if isinstance(e, S.LetRec):
        if attr_is_ghost(e.attrs):
            inner = env.child()
            inner.ghost_names.update(b.name for b in e.bindings)
            return _expr(e.body, inner)
        inner = env.child()
        for b in e.bindings:
            inner.ghost_names.discard(b.name)
            _register_fn(inner, b.name, b.expr)
        bindings = tuple(
            S.RecBinding(b.name, _expr_fn(b.expr, inner), S.EMPTY_ATTRS, b.loc)
            for b in e.bindings)
        return S.LetRec(S.EMPTY_ATTRS, bindings, _expr(e.body, inner), e.loc)
    if isinstance(e, S.App):
        if e.fn in env.ghost_names:
            raise GhostTaintError(
                f"call to ghost function '{e.fn}' in regular code", e.loc)
        flags = env.params.get(e.fn)
        args = []
        for i, a in enumerate(e.args):
            if flags is not None and i < len(flags) and flags[i]:
                continue  # argument fills a ghost parameter
            args.append(_expr(a, env))
        return S.App(e.fn, tuple(args), e.loc)
    if isinstance(e, S.Fun):
        return _expr_fn(e, env)
    if isinstance(e, S.Record):
        fields = tuple((n, _expr(v, env)) for n, v in e.fields
                       if n not in env.ghost_fields)
        return S.Record(fields, e.loc)
    if isinstance(e, S.FieldGet):
        if e.field in env.ghost_fields:
            raise GhostTaintError(
                f"ghost field '{e.field}' is read by regular code", e.loc)
        return S.FieldGet(_expr(e.expr, env), e.field, e.loc)
    if isinstance(e, S.FieldSet):
        if e.field in env.ghost_fields:
            return S.Const(None, e.loc)
        return S.FieldSet(_expr(e.expr, env), e.field, _expr(e.value, env),
                          e.loc)
    if isinstance(e, S.Construct):
        return S.Construct(e.name, tuple(_expr(a, env) for a in e.args),
                           e.loc)
    if isinstance(e, S.Tuple):
        return S.Tuple(tuple(_expr(x, env) for x in e.items), e.loc)
    if isinstance(e, S.Raise):
        return S.Raise(e.exn, tuple(_expr(a, env) for a in e.args), e.loc)
    if isinstance(e, S.Try):
        handlers = []
        for h in e.handlers:
            inner = env.child()
            for pat in h.args:
                inner.ghost_names -= set(S.pattern_vars(pat))
            handlers.append(S.Handler(h.exn, h.args, _expr(h.body, inner)))
        return S.Try(_expr(e.body, env), tuple(handlers), e.loc)
    if isinstance(e, S.While):
        return S.While(_expr(e.cond, env), S.EMPTY_ATTRS,
                       _expr(e.body, env), e.loc)
    if isinstance(e, S.For):
        inner = env.child()
        inner.ghost_names.discard(e.var)
        return S.For(e.var, _expr(e.lo, env), _expr(e.hi, env),
                     S.EMPTY_ATTRS, _expr(e.body, inner), e.loc)
    if isinstance(e, S.RefMake):
        return S.RefMake(_expr(e.expr, env), e.loc)
    if isinstance(e, S.Deref):
        return S.Deref(_expr(e.expr, env), e.loc)
    if isinstance(e, S.Assign):
        if isinstance(e.ref, S.Var) and e.ref.name in env.ghost_names:
            return S.Const(None, e.loc)  # write to a ghost reference
        return S.Assign(_expr(e.ref, env), _expr(e.value, env), e.loc)
    if isinstance(e, S.ArrayGet):
        return S.ArrayGet(_expr(e.array, env), _expr(e.index, env), e.loc)
    if isinstance(e, S.ArraySet):
        return S.ArraySet(_expr(e.array, env), _expr(e.index, env),
                          _expr(e.value, env), e.loc)
    if isinstance(e, S.LocalExn):
        return S.LocalExn(e.name, e.arg_types, _expr(e.body, env), e.loc)
    raise TypeError(f"not an expression: {e!r}")


def ghost_free(p: S.SrcProgram) -> bool:
    """No ghost attributes, parameters or fields anywhere in the program."""

    def attrs_clean(attrs: S.AttrSet) -> bool:
        return not any(a.name in ("ghost", "gospel", "logic", "lemma")
                       for a in attrs)

    def expr_clean(e: S.SrcExpr) -> bool:
        if isinstance(e, S.Fun) and (e.param.ghost or not attrs_clean(e.attrs)):
            return False
        if isinstance(e, S.Let) and not (attrs_clean(e.attrs)
                                         and attrs_clean(e.spec_attrs)):
            return False
        if isinstance(e, S.LetRec):
            if not attrs_clean(e.attrs):
                return False
            if not all(attrs_clean(b.spec_attrs) for b in e.bindings):
                return False
        if isinstance(e, (S.While, S.For)) and not attrs_clean(e.attrs):
            return False
        return all(expr_clean(c) for c in S.expr_children(e))

    def decl_clean(d: S.SrcDecl) -> bool:
        if isinstance(d, S.DFloatingSpec):
            return False
        if isinstance(d, S.DLet):
            return (attrs_clean(d.attrs) and attrs_clean(d.spec_attrs)
                    and expr_clean(d.expr))
        if isinstance(d, S.DLetRec):
            return (attrs_clean(d.attrs)
                    and all(attrs_clean(b.spec_attrs) and expr_clean(b.expr)
                            for b in d.bindings))
        if isinstance(d, S.DType):
            for td in d.defs:
                if isinstance(td.body, S.TDRecord):
                    if td.body.invariant_attrs:
                        return False
                    if any(f.tagged.status == S.GHOST for f in td.body.fields):
                        return False
            return True
        if isinstance(d, S.DModule):
            return module_clean(d.module)
        return True

    def module_clean(m: S.SrcModule) -> bool:
        if isinstance(m, S.MStruct):
            return all(decl_clean(d) for d in m.decls)
        if isinstance(m, S.MFunctor):
            for item in m.param_sig.items:
                if isinstance(item, S.SFloatingSpec):
                    return False
                if isinstance(item, S.SVal) and not (
                        attrs_clean(item.attrs)
                        and attrs_clean(item.spec_attrs)):
                    return False
            return module_clean(m.body)
        return True

    return all(decl_clean(d) for d in p.decls)
