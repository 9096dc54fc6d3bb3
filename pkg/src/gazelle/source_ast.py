"""Abstract syntax for the mini-ML source language.

Expressions, patterns, types, declarations and modules, with attribute
placeholders at the points where specification comments attach.  For-loops,
`ref`/`!`/`:=` and local exceptions are first-class nodes; they desugar later
in the pipeline.  All nodes carry a source location and are immutable after
construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Optional, Union

from .diagnostics import Loc, UNKNOWN_LOC

REG = "reg"
GHOST = "ghost"
LOGIC = "logic"


# ---------------------------------------------------------------------------
# Attributes
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Attr:
    """A single attribute: [@ghost], [@logic], [@lemma] or a spec payload."""

    name: str  # "ghost" | "logic" | "lemma" | "gospel"
    payload: Optional[str] = None
    loc: Loc = field(default=UNKNOWN_LOC, compare=False)


@dataclass(frozen=True)
class AttrSet:
    entries: tuple[Attr, ...] = ()

    def __iter__(self) -> Iterator[Attr]:
        return iter(self.entries)

    def __bool__(self) -> bool:
        return bool(self.entries)

    @staticmethod
    def of(*attrs: Attr) -> "AttrSet":
        return AttrSet(tuple(attrs))

    def gospel_payloads(self) -> list[Attr]:
        return [a for a in self.entries if a.name == "gospel"]

    def merged_payload(self) -> Optional[str]:
        """All spec payloads joined in order, or None when there are none."""
        parts = [a.payload or "" for a in self.gospel_payloads()]
        return "\n".join(parts) if parts else None


EMPTY_ATTRS = AttrSet()


def attr_is_ghost(attrs: AttrSet) -> bool:
    """True iff a ghost attribute is present."""
    return any(a.name == "ghost" for a in attrs)


def attr_is_lemma(attrs: AttrSet) -> bool:
    return any(a.name == "lemma" for a in attrs)


def attr_kind(attrs: AttrSet) -> str:
    """The function kind carried by the attributes: logic if marked, else reg."""
    return LOGIC if any(a.name == "logic" for a in attrs) else REG


# ---------------------------------------------------------------------------
# Types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TVar:
    name: str  # without the leading quote


@dataclass(frozen=True)
class TArrow:
    lhs: "SrcType"
    rhs: "SrcType"


@dataclass(frozen=True)
class TTuple:
    items: tuple["SrcType", ...]


@dataclass(frozen=True)
class TApp:
    """Applied type constructor; `int` is TApp("int", ())."""

    name: str
    args: tuple["SrcType", ...] = ()


SrcType = Union[TVar, TArrow, TTuple, TApp]

T_INT = TApp("int")
T_BOOL = TApp("bool")
T_UNIT = TApp("unit")


@dataclass(frozen=True)
class TaggedType:
    status: str  # REG | GHOST
    ty: SrcType


# ---------------------------------------------------------------------------
# Patterns
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PWild:
    loc: Loc = field(default=UNKNOWN_LOC, compare=False)


@dataclass(frozen=True)
class PVar:
    name: str
    loc: Loc = field(default=UNKNOWN_LOC, compare=False)


@dataclass(frozen=True)
class PTuple:
    items: tuple["Pattern", ...]
    loc: Loc = field(default=UNKNOWN_LOC, compare=False)


@dataclass(frozen=True)
class PConstruct:
    name: str  # includes "[]" and "::" for lists
    args: tuple["Pattern", ...]
    loc: Loc = field(default=UNKNOWN_LOC, compare=False)


@dataclass(frozen=True)
class POr:
    left: "Pattern"
    right: "Pattern"
    loc: Loc = field(default=UNKNOWN_LOC, compare=False)


@dataclass(frozen=True)
class PAs:
    pattern: "Pattern"
    name: str
    loc: Loc = field(default=UNKNOWN_LOC, compare=False)


@dataclass(frozen=True)
class PTyped:
    pattern: "Pattern"
    ty: SrcType
    loc: Loc = field(default=UNKNOWN_LOC, compare=False)


@dataclass(frozen=True)
class PException:
    pattern: "Pattern"
    loc: Loc = field(default=UNKNOWN_LOC, compare=False)


Pattern = Union[PWild, PVar, PTuple, PConstruct, POr, PAs, PTyped, PException]


def pattern_vars(p: Pattern) -> list[str]:
    """Variables bound by a pattern, in left-to-right order."""
    out: list[str] = []

    def go(q: Pattern) -> None:
        if isinstance(q, PVar):
            out.append(q.name)
        elif isinstance(q, PTuple):
            for item in q.items:
                go(item)
        elif isinstance(q, PConstruct):
            for item in q.args:
                go(item)
        elif isinstance(q, POr):
            go(q.left)  # both sides bind the same names
        elif isinstance(q, PAs):
            go(q.pattern)
            out.append(q.name)
        elif isinstance(q, (PTyped, PException)):
            go(q.pattern)

    go(p)
    return out


# ---------------------------------------------------------------------------
# Expressions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Param:
    """Lambda binder with its ghost status and optional type annotation."""

    name: str
    ghost: bool = False
    ty: Optional[SrcType] = None


@dataclass(frozen=True)
class Var:
    name: str
    loc: Loc = field(default=UNKNOWN_LOC, compare=False)


@dataclass(frozen=True)
class Const:
    """Integer, boolean or unit (None) literal."""

    value: Union[int, bool, None]
    loc: Loc = field(default=UNKNOWN_LOC, compare=False)


@dataclass(frozen=True)
class If:
    cond: "SrcExpr"
    then: "SrcExpr"
    orelse: "SrcExpr"
    loc: Loc = field(default=UNKNOWN_LOC, compare=False)


@dataclass(frozen=True)
class MatchArm:
    pattern: Pattern
    body: "SrcExpr"


@dataclass(frozen=True)
class Match:
    scrutinee: "SrcExpr"
    arms: tuple[MatchArm, ...]
    loc: Loc = field(default=UNKNOWN_LOC, compare=False)


@dataclass(frozen=True)
class Let:
    attrs: AttrSet
    name: str
    bound: "SrcExpr"
    spec_attrs: AttrSet
    body: "SrcExpr"
    loc: Loc = field(default=UNKNOWN_LOC, compare=False)


@dataclass(frozen=True)
class RecBinding:
    name: str
    expr: "SrcExpr"
    spec_attrs: AttrSet
    loc: Loc = field(default=UNKNOWN_LOC, compare=False)


@dataclass(frozen=True)
class LetRec:
    attrs: AttrSet
    bindings: tuple[RecBinding, ...]
    body: "SrcExpr"
    loc: Loc = field(default=UNKNOWN_LOC, compare=False)


@dataclass(frozen=True)
class App:
    """Application of a function name to arguments."""

    fn: str
    args: tuple["SrcExpr", ...]
    loc: Loc = field(default=UNKNOWN_LOC, compare=False)


@dataclass(frozen=True)
class Fun:
    attrs: AttrSet
    param: Param
    body: "SrcExpr"
    loc: Loc = field(default=UNKNOWN_LOC, compare=False)


@dataclass(frozen=True)
class Record:
    fields: tuple[tuple[str, "SrcExpr"], ...]
    loc: Loc = field(default=UNKNOWN_LOC, compare=False)


@dataclass(frozen=True)
class FieldGet:
    expr: "SrcExpr"
    field: str
    loc: Loc = field(default=UNKNOWN_LOC, compare=False)


@dataclass(frozen=True)
class FieldSet:
    expr: "SrcExpr"
    field: str
    value: "SrcExpr"
    loc: Loc = field(default=UNKNOWN_LOC, compare=False)


@dataclass(frozen=True)
class Construct:
    """Datatype constructor application; "[]" and "::" cover lists."""

    name: str
    args: tuple["SrcExpr", ...]
    loc: Loc = field(default=UNKNOWN_LOC, compare=False)


@dataclass(frozen=True)
class Tuple:
    items: tuple["SrcExpr", ...]
    loc: Loc = field(default=UNKNOWN_LOC, compare=False)


@dataclass(frozen=True)
class Raise:
    exn: str
    args: tuple["SrcExpr", ...]
    loc: Loc = field(default=UNKNOWN_LOC, compare=False)


@dataclass(frozen=True)
class Handler:
    exn: str
    args: tuple[Pattern, ...]
    body: "SrcExpr"


@dataclass(frozen=True)
class Try:
    body: "SrcExpr"
    handlers: tuple[Handler, ...]
    loc: Loc = field(default=UNKNOWN_LOC, compare=False)


@dataclass(frozen=True)
class While:
    cond: "SrcExpr"
    attrs: AttrSet
    body: "SrcExpr"
    loc: Loc = field(default=UNKNOWN_LOC, compare=False)


@dataclass(frozen=True)
class For:
    var: str
    lo: "SrcExpr"
    hi: "SrcExpr"
    attrs: AttrSet
    body: "SrcExpr"
    loc: Loc = field(default=UNKNOWN_LOC, compare=False)


@dataclass(frozen=True)
class AssertFalse:
    loc: Loc = field(default=UNKNOWN_LOC, compare=False)


@dataclass(frozen=True)
class RefMake:
    expr: "SrcExpr"
    loc: Loc = field(default=UNKNOWN_LOC, compare=False)


@dataclass(frozen=True)
class Deref:
    expr: "SrcExpr"
    loc: Loc = field(default=UNKNOWN_LOC, compare=False)


@dataclass(frozen=True)
class Assign:
    ref: "SrcExpr"
    value: "SrcExpr"
    loc: Loc = field(default=UNKNOWN_LOC, compare=False)


@dataclass(frozen=True)
class ArrayGet:
    array: "SrcExpr"
    index: "SrcExpr"
    loc: Loc = field(default=UNKNOWN_LOC, compare=False)


@dataclass(frozen=True)
class ArraySet:
    array: "SrcExpr"
    index: "SrcExpr"
    value: "SrcExpr"
    loc: Loc = field(default=UNKNOWN_LOC, compare=False)


@dataclass(frozen=True)
class LocalExn:
    """`let exception E of ty in e`; lifted to top level by the translator."""

    name: str
    arg_types: tuple[SrcType, ...]
    body: "SrcExpr"
    loc: Loc = field(default=UNKNOWN_LOC, compare=False)


SrcExpr = Union[
    Var, Const, If, Match, Let, LetRec, App, Fun, Record, FieldGet, FieldSet,
    Construct, Tuple, Raise, Try, While, For, AssertFalse, RefMake, Deref,
    Assign, ArrayGet, ArraySet, LocalExn,
]


# ---------------------------------------------------------------------------
# Type definitions and declarations
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FieldDef:
    name: str
    mutable: bool
    tagged: TaggedType


@dataclass(frozen=True)
class TDAbstract:
    pass


@dataclass(frozen=True)
class TDAlias:
    ty: SrcType


@dataclass(frozen=True)
class TDRecord:
    fields: tuple[FieldDef, ...]
    invariant_attrs: AttrSet = EMPTY_ATTRS


@dataclass(frozen=True)
class TDVariant:
    constructors: tuple[tuple[str, tuple[SrcType, ...]], ...]


TypeDefBody = Union[TDAbstract, TDAlias, TDRecord, TDVariant]


@dataclass(frozen=True)
class SrcTypeDef:
    params: tuple[str, ...]
    name: str
    body: TypeDefBody
    loc: Loc = field(default=UNKNOWN_LOC, compare=False)


@dataclass(frozen=True)
class DExn:
    name: str
    args: tuple[TaggedType, ...]
    loc: Loc = field(default=UNKNOWN_LOC, compare=False)


@dataclass(frozen=True)
class DType:
    defs: tuple[SrcTypeDef, ...]
    loc: Loc = field(default=UNKNOWN_LOC, compare=False)


@dataclass(frozen=True)
class DLet:
    attrs: AttrSet
    name: str
    expr: "SrcExpr"
    spec_attrs: AttrSet
    loc: Loc = field(default=UNKNOWN_LOC, compare=False)


@dataclass(frozen=True)
class DLetRec:
    attrs: AttrSet
    bindings: tuple[RecBinding, ...]
    loc: Loc = field(default=UNKNOWN_LOC, compare=False)


@dataclass(frozen=True)
class DModule:
    name: str
    module: "SrcModule"
    loc: Loc = field(default=UNKNOWN_LOC, compare=False)


@dataclass(frozen=True)
class DModuleType:
    name: str
    sig: "SrcModuleType"
    loc: Loc = field(default=UNKNOWN_LOC, compare=False)


@dataclass(frozen=True)
class DFloatingSpec:
    """A freestanding spec comment; becomes a standalone logical declaration."""

    attrs: AttrSet
    loc: Loc = field(default=UNKNOWN_LOC, compare=False)


SrcDecl = Union[DExn, DType, DLet, DLetRec, DModule, DModuleType, DFloatingSpec]


@dataclass(frozen=True)
class SVal:
    attrs: AttrSet
    name: str
    tagged: TaggedType
    spec_attrs: AttrSet
    loc: Loc = field(default=UNKNOWN_LOC, compare=False)


@dataclass(frozen=True)
class SType:
    defs: tuple[SrcTypeDef, ...]
    loc: Loc = field(default=UNKNOWN_LOC, compare=False)


@dataclass(frozen=True)
class SFloatingSpec:
    attrs: AttrSet
    loc: Loc = field(default=UNKNOWN_LOC, compare=False)


SrcSigItem = Union[SVal, SType, SFloatingSpec]


@dataclass(frozen=True)
class SrcModuleType:
    items: tuple[SrcSigItem, ...]
    name: Optional[str] = None  # set when bound by `module type N = sig .. end`


@dataclass(frozen=True)
class MStruct:
    decls: tuple[SrcDecl, ...]


@dataclass(frozen=True)
class MFunctor:
    param: str
    param_sig: SrcModuleType
    body: "SrcModule"


SrcModule = Union[MStruct, MFunctor]


@dataclass(frozen=True)
class SrcProgram:
    decls: tuple[SrcDecl, ...]
    source_name: str = "program"


# ---------------------------------------------------------------------------
# Shape predicates and traversal
# ---------------------------------------------------------------------------


def is_functional(e: SrcExpr) -> bool:
    """True iff the expression is an anonymous-function node."""
    return isinstance(e, Fun)


def expr_children(e: SrcExpr) -> list[SrcExpr]:
    """Direct sub-expressions of a node, in syntactic order."""
    if isinstance(e, (Var, Const, AssertFalse)):
        return []
    if isinstance(e, If):
        return [e.cond, e.then, e.orelse]
    if isinstance(e, Match):
        return [e.scrutinee] + [a.body for a in e.arms]
    if isinstance(e, Let):
        return [e.bound, e.body]
    if isinstance(e, LetRec):
        return [b.expr for b in e.bindings] + [e.body]
    if isinstance(e, App):
        return list(e.args)
    if isinstance(e, Fun):
        return [e.body]
    if isinstance(e, Record):
        return [v for _, v in e.fields]
    if isinstance(e, FieldGet):
        return [e.expr]
    if isinstance(e, FieldSet):
        return [e.expr, e.value]
    if isinstance(e, (Construct, Tuple)):
        return list(e.args) if isinstance(e, Construct) else list(e.items)
    if isinstance(e, Raise):
        return list(e.args)
    if isinstance(e, Try):
        return [e.body] + [h.body for h in e.handlers]
    if isinstance(e, While):
        return [e.cond, e.body]
    if isinstance(e, For):
        return [e.lo, e.hi, e.body]
    if isinstance(e, RefMake):
        return [e.expr]
    if isinstance(e, Deref):
        return [e.expr]
    if isinstance(e, Assign):
        return [e.ref, e.value]
    if isinstance(e, ArrayGet):
        return [e.array, e.index]
    if isinstance(e, ArraySet):
        return [e.array, e.index, e.value]
    if isinstance(e, LocalExn):
        return [e.body]
    raise TypeError(f"not a source expression: {e!r}")


def count_nodes(e: SrcExpr) -> int:
    """Number of expression nodes, via an explicit worklist."""
    total = 0
    todo = [e]
    while todo:
        node = todo.pop()
        total += 1
        todo.extend(expr_children(node))
    return total


def fold_expr(e: SrcExpr, f, acc):
    """Pre-order structural fold; visits every node exactly once."""
    acc = f(acc, e)
    for child in expr_children(e):
        acc = fold_expr(child, f, acc)
    return acc


# ---------------------------------------------------------------------------
# Alpha equivalence
# ---------------------------------------------------------------------------


def alpha_equal(a: SrcExpr, b: SrcExpr) -> bool:
    """Structural equality up to consistent renaming of bound variables.

    Free variables compare by name; locations and attribute payloads are
    compared only where they change meaning (spec payloads on bindings).
    """
    return _alpha(a, b, {}, {})


def _spec_key(attrs: AttrSet) -> tuple:
    return tuple((x.name, x.payload) for x in attrs)


def _pattern_alpha(p: Pattern, q: Pattern, env_a: dict, env_b: dict,
                   fresh: list[int]) -> bool:
    """Match two patterns, extending both environments in lockstep."""
    if type(p) is not type(q):
        return False
    if isinstance(p, PWild):
        return True
    if isinstance(p, PVar):
        fresh[0] += 1
        env_a[p.name] = fresh[0]
        env_b[q.name] = fresh[0]
        return True
    if isinstance(p, PTuple):
        return len(p.items) == len(q.items) and all(
            _pattern_alpha(x, y, env_a, env_b, fresh)
            for x, y in zip(p.items, q.items))
    if isinstance(p, PConstruct):
        return p.name == q.name and len(p.args) == len(q.args) and all(
            _pattern_alpha(x, y, env_a, env_b, fresh)
            for x, y in zip(p.args, q.args))
    if isinstance(p, POr):
        return (_pattern_alpha(p.left, q.left, env_a, env_b, fresh)
                and _pattern_alpha(p.right, q.right, env_a, env_b, fresh))
    if isinstance(p, PAs):
        if not _pattern_alpha(p.pattern, q.pattern, env_a, env_b, fresh):
            return False
        fresh[0] += 1
        env_a[p.name] = fresh[0]
        env_b[q.name] = fresh[0]
        return True
    if isinstance(p, PTyped):
        return p.ty == q.ty and _pattern_alpha(p.pattern, q.pattern, env_a,
                                               env_b, fresh)
    if isinstance(p, PException):
        return _pattern_alpha(p.pattern, q.pattern, env_a, env_b, fresh)
    return False


_FRESH = [0]


def _bind(name_a: str, name_b: str, env_a: dict, env_b: dict) -> tuple[dict, dict]:
    _FRESH[0] += 1
    ea = dict(env_a)
    eb = dict(env_b)
    ea[name_a] = _FRESH[0]
    eb[name_b] = _FRESH[0]
    return ea, eb


def _alpha(a: SrcExpr, b: SrcExpr, env_a: dict, env_b: dict) -> bool:
    if type(a) is not type(b):
        return False
    if isinstance(a, Var):
        ra = env_a.get(a.name, ("free", a.name))
        rb = env_b.get(b.name, ("free", b.name))
        return ra == rb
    if isinstance(a, Const):
        return a.value == b.value and type(a.value) is type(b.value)
    if isinstance(a, If):
        return (_alpha(a.cond, b.cond, env_a, env_b)
                and _alpha(a.then, b.then, env_a, env_b)
                and _alpha(a.orelse, b.orelse, env_a, env_b))
    if isinstance(a, Match):
        if len(a.arms) != len(b.arms):
            return False
        if not _alpha(a.scrutinee, b.scrutinee, env_a, env_b):
            return False
        for arm_a, arm_b in zip(a.arms, b.arms):
            ea, eb = dict(env_a), dict(env_b)
            if not _pattern_alpha(arm_a.pattern, arm_b.pattern, ea, eb, _FRESH):
                return False
            if not _alpha(arm_a.body, arm_b.body, ea, eb):
                return False
        return True
    if isinstance(a, Let):
        if _spec_key(a.attrs) != _spec_key(b.attrs):
            return False
        if not _alpha(a.bound, b.bound, env_a, env_b):
            return False
        ea, eb = _bind(a.name, b.name, env_a, env_b)
        return _alpha(a.body, b.body, ea, eb)
    if isinstance(a, LetRec):
        if len(a.bindings) != len(b.bindings):
            return False
        if _spec_key(a.attrs) != _spec_key(b.attrs):
            return False
        ea, eb = dict(env_a), dict(env_b)
        for ba, bb in zip(a.bindings, b.bindings):
            ea, eb = _bind(ba.name, bb.name, ea, eb)
        for ba, bb in zip(a.bindings, b.bindings):
            if _spec_key(ba.spec_attrs) != _spec_key(bb.spec_attrs):
                return False
            if not _alpha(ba.expr, bb.expr, ea, eb):
                return False
        return _alpha(a.body, b.body, ea, eb)
    if isinstance(a, App):
        ra = env_a.get(a.fn, ("free", a.fn))
        rb = env_b.get(b.fn, ("free", b.fn))
        return (ra == rb and len(a.args) == len(b.args)
                and all(_alpha(x, y, env_a, env_b)
                        for x, y in zip(a.args, b.args)))
    if isinstance(a, Fun):
        if a.param.ghost != b.param.ghost:
            return False
        ea, eb = _bind(a.param.name, b.param.name, env_a, env_b)
        return _alpha(a.body, b.body, ea, eb)
    if isinstance(a, Record):
        return (tuple(n for n, _ in a.fields) == tuple(n for n, _ in b.fields)
                and all(_alpha(x, y, env_a, env_b)
                        for (_, x), (_, y) in zip(a.fields, b.fields)))
    if isinstance(a, FieldGet):
        return a.field == b.field and _alpha(a.expr, b.expr, env_a, env_b)
    if isinstance(a, FieldSet):
        return (a.field == b.field and _alpha(a.expr, b.expr, env_a, env_b)
                and _alpha(a.value, b.value, env_a, env_b))
    if isinstance(a, Construct):
        return (a.name == b.name and len(a.args) == len(b.args)
                and all(_alpha(x, y, env_a, env_b)
                        for x, y in zip(a.args, b.args)))
    if isinstance(a, Tuple):
        return len(a.items) == len(b.items) and all(
            _alpha(x, y, env_a, env_b) for x, y in zip(a.items, b.items))
    if isinstance(a, Raise):
        return (a.exn == b.exn and len(a.args) == len(b.args)
                and all(_alpha(x, y, env_a, env_b)
                        for x, y in zip(a.args, b.args)))
    if isinstance(a, Try):
        if len(a.handlers) != len(b.handlers):
            return False
        if not _alpha(a.body, b.body, env_a, env_b):
            return False
        for ha, hb in zip(a.handlers, b.handlers):
            if ha.exn != hb.exn or len(ha.args) != len(hb.args):
                return False
            ea, eb = dict(env_a), dict(env_b)
            for pa, pb in zip(ha.args, hb.args):
                if not _pattern_alpha(pa, pb, ea, eb, _FRESH):
                    return False
            if not _alpha(ha.body, hb.body, ea, eb):
                return False
        return True
    if isinstance(a, While):
        return (_spec_key(a.attrs) == _spec_key(b.attrs)
                and _alpha(a.cond, b.cond, env_a, env_b)
                and _alpha(a.body, b.body, env_a, env_b))
    if isinstance(a, For):
        if _spec_key(a.attrs) != _spec_key(b.attrs):
            return False
        if not (_alpha(a.lo, b.lo, env_a, env_b)
                and _alpha(a.hi, b.hi, env_a, env_b)):
            return False
        ea, eb = _bind(a.var, b.var, env_a, env_b)
        return _alpha(a.body, b.body, ea, eb)
    if isinstance(a, AssertFalse):
        return True
    if isinstance(a, (RefMake, Deref)):
        return _alpha(a.expr, b.expr, env_a, env_b)
    if isinstance(a, Assign):
        return (_alpha(a.ref, b.ref, env_a, env_b)
                and _alpha(a.value, b.value, env_a, env_b))
    if isinstance(a, ArrayGet):
        return (_alpha(a.array, b.array, env_a, env_b)
                and _alpha(a.index, b.index, env_a, env_b))
    if isinstance(a, ArraySet):
        return (_alpha(a.array, b.array, env_a, env_b)
                and _alpha(a.index, b.index, env_a, env_b)
                and _alpha(a.value, b.value, env_a, env_b))
    if isinstance(a, LocalExn):
        return (a.name == b.name and a.arg_types == b.arg_types
                and _alpha(a.body, b.body, env_a, env_b))
    raise TypeError(f"not a source expression: {a!r}")
