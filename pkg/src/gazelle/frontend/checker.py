"""Lightweight well-formedness pass over parsed programs and their specs.

Checks that every spec payload parses in its context, references only
in-scope names with consistent arity, that raises clauses name declared
exceptions, that contract headers match the function they annotate, and that
`old` appears only in postconditions, exceptional postconditions and loop
invariants.  Returns diagnostics instead of raising.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..diagnostics import Diagnostic, Loc, SpecError
from ..source_ast import (DExn, DFloatingSpec, DLet, DLetRec, DModule,
                          DModuleType, DType, Fun, MFunctor, MStruct,
                          SFloatingSpec, SType, SVal, SrcExpr, SrcProgram,
                          TArrow, TDRecord, TDVariant, Let, LetRec, For,
                          Match, Try, While, expr_children, is_functional,
                          pattern_vars)
from ..terms import (BUILTIN_FUNCTIONS, Term, TmApp, TmConstruct, TmField,
                     TmLet, TmMatch, TmOld, TmQuant, TmVar, term_children)
from .spec_parser import parse_spec
from .specs import (FunSpec, LAxiom, LFunction, LLemma, LoopSpec, LPredicate,
                    TypeInvariant)

BUILTIN_EXCEPTIONS = {"Not_found": 0, "Division_by_zero": 0}


@dataclass
class _Scope:
    values: dict[str, int] = field(default_factory=dict)  # name -> arity
    logicals: dict[str, int] = field(default_factory=dict)
    constructors: dict[str, int] = field(default_factory=dict)
    exceptions: dict[str, int] = field(default_factory=dict)
    fields: set[str] = field(default_factory=set)

    def child(self) -> "_Scope":
        return _Scope(dict(self.values), dict(self.logicals),
                      dict(self.constructors), dict(self.exceptions),
                      set(self.fields))

    def known_symbol(self, name: str) -> bool:
        return (name in self.values or name in self.logicals
                or name in BUILTIN_FUNCTIONS)

    def arity_of(self, name: str) -> int | None:
        if name in self.logicals:
            return self.logicals[name]
        if name in self.values:
            return self.values[name]
        if name in BUILTIN_FUNCTIONS:
            return BUILTIN_FUNCTIONS[name]
        return None


def uncurried_params(e: SrcExpr) -> list[str]:
    names = []
    while isinstance(e, Fun):
        names.append(e.param.name)
        e = e.body
    return names


def local_binders(e: SrcExpr) -> set[str]:
    """All names bound anywhere inside an expression (loop-spec scoping)."""
    out: set[str] = set()

    def go(x: SrcExpr) -> None:
        if isinstance(x, Let):
            out.add(x.name)
        elif isinstance(x, LetRec):
            out.update(b.name for b in x.bindings)
        elif isinstance(x, Fun):
            out.add(x.param.name)
        elif isinstance(x, For):
            out.add(x.var)
        elif isinstance(x, Match):
            for arm in x.arms:
                out.update(pattern_vars(arm.pattern))
        elif isinstance(x, Try):
            for h in x.handlers:
                for p in h.args:
                    out.update(pattern_vars(p))
        for child in expr_children(x):
            go(child)

    go(e)
    return out


def check_spec(program: SrcProgram) -> list[Diagnostic]:
    checker = _Checker()
    scope = _Scope(exceptions=dict(BUILTIN_EXCEPTIONS))
    checker.check_decls(program.decls, scope, prefix="")
    return checker.diags


class _Checker:
    def __init__(self) -> None:
        self.diags: list[Diagnostic] = []

    def error(self, message: str, loc: Loc, rule: str = "spec") -> None:
        self.diags.append(Diagnostic("error", message, loc, rule))

    # -- declarations -------------------------------------------------------

    def check_decls(self, decls, scope: _Scope, prefix: str) -> None:
        for d in decls:
            if isinstance(d, DExn):
                scope.exceptions[prefix + d.name] = len(d.args)
                if prefix:
                    scope.exceptions[d.name] = len(d.args)
            elif isinstance(d, DType):
                self.register_typedefs(d.defs, scope)
                for td in d.defs:
                    if isinstance(td.body, TDRecord) and td.body.invariant_attrs:
                        payload = td.body.invariant_attrs.merged_payload()
                        inv = self.parse(payload, "type",
                                         td.body.invariant_attrs.entries[0].loc)
                        if inv is None:
                            continue
                        fields = {f.name for f in td.body.fields}
                        for t in inv.terms:
                            self.check_term(t, fields, scope,
                                            td.loc, allow_old=False)
            elif isinstance(d, DLet):
                self.check_binding(d.name, d.expr, d.spec_attrs, scope, d.loc)
                scope.values[d.name] = max(len(uncurried_params(d.expr)), 0)
                self.check_expr_specs(d.expr, d.name, scope)
            elif isinstance(d, DLetRec):
                for b in d.bindings:
                    scope.values[b.name] = len(uncurried_params(b.expr))
                for b in d.bindings:
                    self.check_binding(b.name, b.expr, b.spec_attrs, scope, b.loc)
                    self.check_expr_specs(b.expr, b.name, scope)
            elif isinstance(d, DFloatingSpec):
                payload = d.attrs.merged_payload()
                decl = self.parse(payload, "standalone", d.loc)
                if decl is not None:
                    self.register_logical(decl, scope, prefix)
            elif isinstance(d, DModule):
                self.check_module(d.name, d.module, scope, prefix)
            elif isinstance(d, DModuleType):
                pass

    def check_module(self, name: str, module, scope: _Scope, prefix: str) -> None:
        if isinstance(module, MStruct):
            inner = scope.child()
            self.check_decls(module.decls, inner, prefix)
            # re-export visible symbols under the module path
            for k, v in inner.values.items():
                scope.values.setdefault(f"{name}.{k}", v)
            for k, v in inner.logicals.items():
                scope.logicals.setdefault(f"{name}.{k}", v)
        elif isinstance(module, MFunctor):
            inner = scope.child()
            for item in module.param_sig.items:
                if isinstance(item, SVal):
                    arity = _arrow_arity(item.tagged.ty)
                    inner.values[f"{module.param}.{item.name}"] = arity
                    self.check_sig_val(item, inner)
                elif isinstance(item, SType):
                    self.register_typedefs(item.defs, inner)
                elif isinstance(item, SFloatingSpec):
                    decl = self.parse(item.attrs.merged_payload(),
                                      "standalone", item.loc)
                    if decl is not None:
                        self.register_logical(decl, inner, "")
                        self.register_logical(decl, inner, module.param + ".")
            self.check_module(name, module.body, inner, prefix)

    def register_typedefs(self, defs, scope: _Scope) -> None:
        for td in defs:
            if isinstance(td.body, TDRecord):
                scope.fields.update(f.name for f in td.body.fields)
            elif isinstance(td.body, TDVariant):
                for cname, args in td.body.constructors:
                    scope.constructors[cname] = len(args)

    def register_logical(self, decl, scope: _Scope, prefix: str) -> None:
        if isinstance(decl, LFunction):
            scope.logicals[prefix + decl.name] = len(decl.params)
            if decl.body is not None:
                bound = {n for n, _ in decl.params} | {decl.name}
                self.check_term(decl.body, bound, scope, decl.loc,
                                allow_old=False)
        elif isinstance(decl, LPredicate):
            scope.logicals[prefix + decl.name] = len(decl.params)
            if decl.body is not None:
                bound = {n for n, _ in decl.params} | {decl.name}
                self.check_term(decl.body, bound, scope, decl.loc,
                                allow_old=False)
        elif isinstance(decl, (LAxiom, LLemma)):
            self.check_term(decl.term, set(), scope, decl.loc, allow_old=False)

    def check_sig_val(self, item: SVal, scope: _Scope) -> None:
        payload = item.spec_attrs.merged_payload()
        if payload is None:
            return
        spec = self.parse(payload, "function", item.spec_attrs.entries[0].loc)
        if spec is None or not isinstance(spec, FunSpec):
            return
        arrows = _arrow_arity(item.tagged.ty)
        if spec.header is not None:
            if spec.header.name != item.name:
                self.error(f"contract header names '{spec.header.name}' but "
                           f"annotates '{item.name}'", item.loc)
            if len(spec.header.args) != arrows:
                self.error(
                    f"header for '{item.name}' binds {len(spec.header.args)} "
                    f"argument(s) but the type has {arrows}", item.loc)
        base = set(spec.header.args) if spec.header else set()
        if spec.header and spec.header.result:
            base.add(spec.header.result)
        self.check_funspec_terms(spec, base, scope, item.loc)

    # -- bindings -----------------------------------------------------------

    def check_binding(self, name: str, expr: SrcExpr, spec_attrs, scope,
                      loc: Loc) -> None:
        payload = spec_attrs.merged_payload() if spec_attrs else None
        if payload is None:
            return
        spec = self.parse(payload, "function", spec_attrs.entries[0].loc)
        if spec is None or not isinstance(spec, FunSpec):
            return
        params = uncurried_params(expr)
        if spec.header is not None:
            if spec.header.name != name:
                self.error(f"contract header names '{spec.header.name}' but "
                           f"annotates '{name}'", spec.header.loc)
            if not is_functional(expr):
                if spec.header.args:
                    self.error(f"'{name}' is not a function but its contract "
                               "header binds arguments", loc)
            elif len(spec.header.args) != len(params):
                self.error(
                    f"header for '{name}' binds {len(spec.header.args)} "
                    f"argument(s) but the function has {len(params)}",
                    spec.header.loc)
        arg_names = set(spec.header.args) if spec.header else set(params)
        if spec.header and spec.header.result:
            arg_names = arg_names | {spec.header.result}
        elif spec.header is None:
            arg_names = arg_names | {"result"}
        self.check_funspec_terms(spec, arg_names, scope, loc, fn_name=name)

    def check_funspec_terms(self, spec: FunSpec, base: set[str], scope,
                            loc: Loc, fn_name: str | None = None) -> None:
        bound = set(base)
        if fn_name:
            bound.add(fn_name)
        for t in spec.requires:
            self.check_term(t, bound, scope, loc, allow_old=False)
        for t in spec.variants:
            self.check_term(t, bound, scope, loc, allow_old=False)
        for t in spec.ensures:
            self.check_term(t, bound, scope, loc, allow_old=True)
        for exn, t in spec.raises:
            if exn not in scope.exceptions:
                self.error(f"raises clause names undeclared exception '{exn}'",
                           loc)
            self.check_term(t, bound, scope, loc, allow_old=True)

    def check_expr_specs(self, expr: SrcExpr, fn_name: str, scope) -> None:
        """Parse and scope-check loop annotations and nested contracts."""
        binders = local_binders(expr) | set(uncurried_params(expr)) | {fn_name}

        def go(e: SrcExpr) -> None:
            if isinstance(e, (While, For)) and e.attrs:
                payload = e.attrs.merged_payload()
                spec = self.parse(payload, "loop", e.attrs.entries[0].loc)
                if isinstance(spec, LoopSpec):
                    for t in spec.invariants:
                        self.check_term(t, binders, scope, e.loc,
                                        allow_old=True)
                    for t in spec.variants:
                        self.check_term(t, binders, scope, e.loc,
                                        allow_old=False)
            if isinstance(e, Let) and e.spec_attrs:
                spec = self.parse(e.spec_attrs.merged_payload(), "function",
                                  e.spec_attrs.entries[0].loc)
                if isinstance(spec, FunSpec) and spec.header:
                    params = uncurried_params(e.bound)
                    if spec.header.name != e.name:
                        self.error(
                            f"contract header names '{spec.header.name}' but "
                            f"annotates '{e.name}'", spec.header.loc)
                    elif len(spec.header.args) != len(params):
                        self.error(
                            f"header for '{e.name}' binds "
                            f"{len(spec.header.args)} argument(s) but the "
                            f"function has {len(params)}", spec.header.loc)
            if isinstance(e, LetRec):
                for b in e.bindings:
                    if b.spec_attrs:
                        spec = self.parse(b.spec_attrs.merged_payload(),
                                          "function",
                                          b.spec_attrs.entries[0].loc)
                        if isinstance(spec, FunSpec) and spec.header:
                            params = uncurried_params(b.expr)
                            if spec.header.name != b.name:
                                self.error(
                                    f"contract header names "
                                    f"'{spec.header.name}' but annotates "
                                    f"'{b.name}'", spec.header.loc)
                            elif len(spec.header.args) != len(params):
                                self.error(
                                    f"header for '{b.name}' binds "
                                    f"{len(spec.header.args)} argument(s) but "
                                    f"the function has {len(params)}",
                                    spec.header.loc)
            for child in expr_children(e):
                go(child)

        go(expr)

    # -- terms --------------------------------------------------------------

    def parse(self, payload, context: str, loc: Loc):
        if payload is None:
            return None
        try:
            return parse_spec(payload, context, loc)
        except SpecError as err:
            self.error(err.message, err.loc)
            return None

    def check_term(self, t: Term, bound: set[str], scope: _Scope, loc: Loc,
                   allow_old: bool) -> None:
        if isinstance(t, TmVar):
            if t.name in bound or scope.known_symbol(t.name):
                return
            if t.name in scope.fields:
                return  # implicit self field inside a type invariant
            self.error(f"unknown name '{t.name}' in specification",
                       t.loc if t.loc.line else loc)
            return
        if isinstance(t, TmOld) and not allow_old:
            self.error("old(..) is only allowed in postconditions, "
                       "exceptional postconditions and loop invariants", loc)
        if isinstance(t, TmApp):
            arity = scope.arity_of(t.fn)
            if t.fn in bound:
                pass
            elif arity is None:
                if "." in t.fn:
                    self.error(f"unknown qualified name '{t.fn}'", loc)
                else:
                    self.error(f"unknown function '{t.fn}' in specification",
                               loc)
            elif arity != len(t.args):
                self.error(f"'{t.fn}' expects {arity} argument(s), "
                           f"got {len(t.args)}", loc)
            for a in t.args:
                self.check_term(a, bound, scope, loc, allow_old)
            return
        if isinstance(t, TmConstruct):
            if t.name not in ("[]", "::") and t.name not in scope.constructors:
                self.error(f"unknown constructor '{t.name}'", loc)
            elif t.name in scope.constructors and t.args and \
                    scope.constructors[t.name] != len(t.args):
                self.error(f"constructor '{t.name}' expects "
                           f"{scope.constructors[t.name]} argument(s), "
                           f"got {len(t.args)}", loc)
            for a in t.args:
                self.check_term(a, bound, scope, loc, allow_old)
            return
        if isinstance(t, TmQuant):
            inner = bound | {n for n, _ in t.binders}
            self.check_term(t.body, inner, scope, loc, allow_old)
            return
        if isinstance(t, TmLet):
            self.check_term(t.bound, bound, scope, loc, allow_old)
            self.check_term(t.body, bound | {t.name}, scope, loc, allow_old)
            return
        if isinstance(t, TmMatch):
            self.check_term(t.scrutinee, bound, scope, loc, allow_old)
            for pat, body in t.arms:
                self.check_term(body, bound | set(pattern_vars(pat)), scope,
                                loc, allow_old)
            return
        if isinstance(t, TmField):
            self.check_term(t.record, bound, scope, loc, allow_old)
            return
        for child in term_children(t):
            self.check_term(child, bound, scope, loc, allow_old)


def _arrow_arity(ty) -> int:
    n = 0
    while isinstance(ty, TArrow):
        n += 1
        ty = ty.rhs
    return n
