"""Type synthesis for IR expressions, built on the term typer."""

from __future__ import annotations

from ..diagnostics import GazelleError, Loc
from ..source_ast import SrcType, TApp, TArrow, TTuple, TVar, T_BOOL, T_INT, T_UNIT
from .. import target_ir as IR
from .typing import (FnSig, TermTyper, TypeError_, TypeWorld, Unifier,
                     fresh_tvar, t_array, t_list, t_ref)

_OP_BIN = {"+", "-", "*", "/", "mod"}
_OP_CMP_POLY = {"=", "<>"}
_OP_CMP_INT = {"<", "<=", ">", ">="}


class ExprTyper:
    def __init__(self, world: TypeWorld, uni: Unifier):
        self.world = world
        self.uni = uni
        self.term_typer = TermTyper(world, uni)
        self.locals: dict[str, FnSig] = {}

    def check(self, e: IR.TgtExpr, env: dict[str, SrcType],
              expected: SrcType, loc: Loc) -> None:
        self.uni.unify(self.infer(e, env), expected, loc)

    def infer(self, e: IR.TgtExpr, env: dict[str, SrcType]) -> SrcType:
        if isinstance(e, IR.EGhost):
            return self.infer(e.expr, env)
        if isinstance(e, IR.EVar):
            if e.name in env:
                return env[e.name]
            sig = self._signature(e.name, env)
            if sig is not None:
                if not sig.params:
                    return sig.result
                out = sig.result
                for p in reversed(sig.params):
                    out = TArrow(p, out)
                return out
            raise TypeError_(f"unknown name '{e.name}'", e.loc)
        if isinstance(e, IR.EConst):
            if e.value is None:
                return T_UNIT
            return T_BOOL if isinstance(e.value, bool) else T_INT
        if isinstance(e, IR.EIf):
            self.check(e.cond, env, T_BOOL, e.loc)
            ty = self.infer(e.then, env)
            self.check(e.orelse, env, ty, e.loc)
            return ty
        if isinstance(e, IR.EMatch):
            sty = self.infer(e.scrutinee, env)
            result = fresh_tvar()
            for pat, body in e.arms:
                inner = dict(env)
                self.term_typer.bind_pattern(pat, sty, inner)
                self.check(body, inner, result, e.loc)
            return result
        if isinstance(e, IR.ELet):
            bound = e.bound.expr if isinstance(e.bound, IR.EGhost) else e.bound
            if isinstance(bound, IR.EFun):
                sig = self._fun_sig(bound, env)
                inner = dict(env)
                arrow = sig.result
                for p in reversed(sig.params):
                    arrow = TArrow(p, arrow)
                inner[e.name] = arrow
                self.locals[e.name] = sig
                return self.infer(e.body, inner)
            ty = self.infer(bound, env)
            inner = dict(env)
            inner[e.name] = ty
            return self.infer(e.body, inner)
        if isinstance(e, IR.ERecGroup):
            inner = dict(env)
            sigs = []
            for f in e.functions:
                params = [p.ty if p.ty is not None else fresh_tvar()
                          for p in f.params]
                sig = FnSig(params, fresh_tvar())
                sigs.append(sig)
                self.locals[f.name] = sig
                arrow = sig.result
                for p in reversed(sig.params):
                    arrow = TArrow(p, arrow)
                inner[f.name] = arrow
            for f, sig in zip(e.functions, sigs):
                fenv = dict(inner)
                for p, ty in zip(f.params, sig.params):
                    fenv[p.name] = ty
                body = f.body.expr if isinstance(f.body, IR.EGhost) else f.body
                self.check(body, fenv, sig.result, f.loc)
                self._check_spec(f.spec, fenv, sig.result, f.loc)
            return self.infer(e.body, inner)
        if isinstance(e, IR.EApp):
            return self._app(e, env)
        if isinstance(e, IR.EFun):
            sig = self._fun_sig(e, env)
            out = sig.result
            for p in reversed(sig.params):
                out = TArrow(p, out)
            return out
        if isinstance(e, IR.ERecord):
            return self._record(e, env)
        if isinstance(e, IR.EField):
            from ..terms import TmField, TmVar
            rty = self.uni.resolve(self.infer(e.expr, env))
            rty = self.world.resolve_alias(rty)
            rty = self.uni.resolve(rty)
            if isinstance(rty, TApp) and rty.name in self.world.records:
                params, fields = self.world.records[rty.name]
                mapping = dict(zip(params, rty.args))
                for fname, fty in fields:
                    if fname == e.field_name:
                        from .typing import _subst_params
                        return _subst_params(fty, mapping)
                raise TypeError_(f"record '{rty.name}' has no field "
                                 f"'{e.field_name}'", e.loc)
            if e.field_name in self.world.field_types:
                rec_name, fty = self.world.field_types[e.field_name]
                params, _ = self.world.records[rec_name]
                from .typing import _subst_params
                mapping = {p: fresh_tvar() for p in params}
                self.uni.unify(rty, TApp(rec_name,
                                         tuple(mapping[p] for p in params)),
                               e.loc)
                return _subst_params(fty, mapping)
            raise TypeError_(f"unknown field '{e.field_name}'", e.loc)
        if isinstance(e, IR.ESetField):
            fty = self.infer(IR.EField(e.expr, e.field_name, e.loc), env)
            self.check(e.value, env, fty, e.loc)
            return T_UNIT
        if isinstance(e, IR.EConstruct):
            if e.name not in self.world.constructors:
                raise TypeError_(f"unknown constructor '{e.name}'", e.loc)
            arg_tys, ty = self.world.constructor_instance(e.name)
            if len(arg_tys) != len(e.args):
                raise TypeError_(f"constructor '{e.name}' arity mismatch",
                                 e.loc)
            for a, ety in zip(e.args, arg_tys):
                self.check(a, env, ety, e.loc)
            return ty
        if isinstance(e, IR.ETuple):
            return TTuple(tuple(self.infer(x, env) for x in e.items))
        if isinstance(e, IR.ERaise):
            tys = self.world.exceptions.get(e.exn)
            if tys is not None and len(tys) == len(e.args):
                for a, ety in zip(e.args, tys):
                    self.check(a, env, ety, e.loc)
            return fresh_tvar()
        if isinstance(e, IR.ETry):
            ty = self.infer(e.body, env)
            for exn, args, body in e.handlers:
                inner = dict(env)
                tys = self.world.exceptions.get(exn, ())
                for pat, pty in zip(args, tys):
                    self.term_typer.bind_pattern(pat, pty, inner)
                self.check(body, inner, ty, e.loc)
            return ty
        if isinstance(e, IR.EWhile):
            self.check(e.cond, env, T_BOOL, e.loc)
            self._check_loop_spec(e.spec, env, e.loc)
            self.infer(e.body, env)
            return T_UNIT
        if isinstance(e, IR.EFor):
            self.check(e.lo, env, T_INT, e.loc)
            self.check(e.hi, env, T_INT, e.loc)
            inner = dict(env)
            inner[e.var] = T_INT
            self._check_loop_spec(e.spec, inner, e.loc)
            self.infer(e.body, inner)
            return T_UNIT
        if isinstance(e, IR.EAbsurd):
            return fresh_tvar()
        if isinstance(e, IR.EArrayGet):
            elem = fresh_tvar()
            self.check(e.array, env, t_array(elem), e.loc)
            self.check(e.index, env, T_INT, e.loc)
            return elem
        if isinstance(e, IR.EArraySet):
            elem = fresh_tvar()
            self.check(e.array, env, t_array(elem), e.loc)
            self.check(e.index, env, T_INT, e.loc)
            self.check(e.value, env, elem, e.loc)
            return T_UNIT
        raise TypeError_(f"cannot type IR node {type(e).__name__}",
                         getattr(e, "loc", Loc("<ir>", 0, 0)))

    def _signature(self, name: str, env: dict[str, SrcType]) -> FnSig | None:
        if name in self.locals:
            return self.locals[name].instantiated()
        if name in self.world.functions:
            return self.world.functions[name].instantiated()
        return None

    def _app(self, e: IR.EApp, env: dict[str, SrcType]) -> SrcType:
        args = e.args
        if e.fn in _OP_BIN and len(args) == 2:
            self.check(args[0], env, T_INT, e.loc)
            self.check(args[1], env, T_INT, e.loc)
            return T_INT
        if e.fn in _OP_CMP_INT and len(args) == 2:
            self.check(args[0], env, T_INT, e.loc)
            self.check(args[1], env, T_INT, e.loc)
            return T_BOOL
        if e.fn in _OP_CMP_POLY and len(args) == 2:
            ty = self.infer(args[0], env)
            self.check(args[1], env, ty, e.loc)
            return T_BOOL
        if e.fn in ("&&", "||") and len(args) == 2:
            self.check(args[0], env, T_BOOL, e.loc)
            self.check(args[1], env, T_BOOL, e.loc)
            return T_BOOL
        if e.fn in env:
            # call through a local variable holding a function value
            ty = env[e.fn]
            for a in args:
                ty = self.uni.resolve(ty)
                if not isinstance(ty, TArrow):
                    fresh = TArrow(fresh_tvar(), fresh_tvar())
                    self.uni.unify(ty, fresh, e.loc)
                    ty = fresh
                self.check(a, env, ty.lhs, e.loc)
                ty = ty.rhs
            return ty
        sig = self._signature(e.fn, env)
        if sig is None:
            raise TypeError_(f"unknown function '{e.fn}'", e.loc)
        if len(sig.params) != len(args):
            raise TypeError_(f"'{e.fn}' expects {len(sig.params)} "
                             f"argument(s), got {len(args)}", e.loc)
        for a, ety in zip(args, sig.params):
            self.check(a, env, ety, e.loc)
        return sig.result

    def _fun_sig(self, e: IR.EFun, env: dict[str, SrcType]) -> FnSig:
        params = [p.ty if p.ty is not None else fresh_tvar() for p in e.params]
        inner = dict(env)
        for p, ty in zip(e.params, params):
            inner[p.name] = ty
        body = e.body.expr if isinstance(e.body, IR.EGhost) else e.body
        result = self.infer(body, inner)
        self._check_spec(e.spec, inner, result, e.loc)
        return FnSig(params, result)

    def _check_spec(self, spec: IR.FunSpecIR, env: dict[str, SrcType],
                    result: SrcType, loc: Loc) -> None:
        for t in spec.requires:
            self.term_typer.check(t, env, T_BOOL, loc)
        for t in spec.variants:
            try:
                self.term_typer.check(t, env, T_INT, loc)
            except TypeError_:
                pass
        post_env = dict(env)
        post_env[spec.result or "result"] = result
        for t in spec.ensures:
            self.term_typer.check(t, post_env, T_BOOL, loc)
        for _, t in spec.raises:
            self.term_typer.check(t, env, T_BOOL, loc)

    def _check_loop_spec(self, spec: IR.LoopSpecIR, env: dict[str, SrcType],
                         loc: Loc) -> None:
        for t in spec.invariants:
            self.term_typer.check(t, env, T_BOOL, loc)
        for t in spec.variants:
            self.term_typer.check(t, env, T_INT, loc)

    def _record(self, e: IR.ERecord, env: dict[str, SrcType]) -> SrcType:
        names = [n for n, _ in e.fields]
        candidates = [rname for rname, (_, fields) in self.world.records.items()
                      if [f for f, _ in fields] == names]
        if not candidates:
            raise TypeError_(
                f"no record type with fields {{{', '.join(names)}}}", e.loc)
        rname = candidates[-1]
        ty, inst_fields = self.world.record_instance(rname)
        for fname, value in e.fields:
            self.check(value, env, inst_fields[fname], e.loc)
        return ty
