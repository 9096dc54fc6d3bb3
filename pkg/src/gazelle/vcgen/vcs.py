"""Named verification conditions for a module."""

from __future__ import annotations

from dataclasses import dataclass

from ..diagnostics import GazelleError, Loc
from ..source_ast import SrcType, T_BOOL
from ..terms import Term, free_vars, term_to_text
from .. import target_ir as IR
from .context import LogicalContext, annotate_binders, build_context
from .typing import TermTyper, TypeError_, Unifier
from .wp import Obligation, ObligationEngine

_SHORT = {
    "precondition-at-call": "precondition",
    "postcondition": "postcondition",
    "exceptional-postcondition": "exceptional",
    "variant-decrease": "variant",
    "loop-invariant-init": "loop_init",
    "loop-invariant-preservation": "loop_preservation",
    "type-invariant-establish": "type_invariant",
    "absurd-unreachable": "absurd",
    "safety": "safety",
}


@dataclass
class VC:
    id: str
    category: str
    binders: tuple[tuple[str, SrcType], ...]
    hyps: tuple[Term, ...]
    concl: Term
    function: str
    loc: Loc
    description: str

    @property
    def formula(self) -> Term:
        from ..terms import TmQuant, mk_implies
        body = mk_implies(list(self.hyps), self.concl)
        used = free_vars(body)
        binders = tuple((n, t) for n, t in self.binders if n in used)
        return TmQuant("forall", binders, body) if binders else body

    def render(self) -> str:
        return term_to_text(self.formula)


def vcs_for_module(m: IR.TgtModule,
                   ctx: LogicalContext | None = None,
                   enable_lemmas: bool = False) -> list[VC]:
    """One VC per split obligation, in deterministic order."""
    if ctx is None:
        ctx = build_context(m, enable_lemmas=enable_lemmas)
    out: list[VC] = []
    for fn in ctx.order:
        if fn.body is None:
            continue
        engine = ObligationEngine(ctx, fn)
        obligations = engine.run()
        counters: dict[str, int] = {}
        for ob in obligations:
            short = _SHORT[ob.category]
            counters[short] = counters.get(short, 0) + 1
            vc_id = f"{m.name}.{fn.qual}.{short}.{counters[short]}"
            binders = _annotate(ob, ctx)
            env = {n: t for n, t in binders}
            uni = Unifier(ctx.world)
            typer = TermTyper(ctx.world, uni)
            hyps = tuple(annotate_binders(h, dict(env), typer, uni)
                         for h in ob.hyps)
            concl = annotate_binders(ob.concl, dict(env), typer, uni)
            out.append(VC(vc_id, ob.category, binders, hyps, concl,
                          fn.qual, ob.loc, ob.description))
    return out


def _annotate(ob: Obligation, ctx: LogicalContext):
    """Canonical binder types: residual inference variables rename to a
    deterministic per-VC scheme."""
    from ..source_ast import TApp, TArrow, TTuple, TVar
    mapping: dict[str, str] = {}

    def rename(ty):
        if isinstance(ty, TVar):
            if ty.name.startswith("_t"):
                if ty.name not in mapping:
                    mapping[ty.name] = f"r{len(mapping)}"
                return TVar(mapping[ty.name])
            return ty
        if isinstance(ty, TArrow):
            return TArrow(rename(ty.lhs), rename(ty.rhs))
        if isinstance(ty, TTuple):
            return TTuple(tuple(rename(t) for t in ty.items))
        if isinstance(ty, TApp):
            return TApp(ty.name, tuple(rename(t) for t in ty.args))
        return ty

    binders = []
    for name, ty in ob.binders:
        ty = ctx.world.canonize(ty) if ty is not None else ty
        binders.append((name, rename(ty) if ty is not None else ty))
    return tuple(binders)


def closed(vc: VC) -> bool:
    """Free-variable check: the formula must be closed under its context."""
    return not free_vars(vc.formula) - _symbol_names(vc)


def _symbol_names(vc: VC) -> set[str]:
    return set()
