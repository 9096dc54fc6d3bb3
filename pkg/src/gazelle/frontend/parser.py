"""Recursive-descent parser for mini-ML source files.

Spec comments become attributes on the item they follow, chosen by the
payload's leading keyword: contract clauses (or a header) attach to the
preceding binding, `invariant` attaches to the preceding type definition,
and function/predicate/axiom/lemma payloads become freestanding items.
Loop annotations are read right after `do`.  Multiple consecutive spec
comments at one attachment point merge into a single payload.

Parser-level desugarings: parameters after a binding name curry into nested
lambdas, `function` becomes `fun param -> match param`, `e1; e2` becomes a
wildcard let, `begin e end` is grouping, and pattern lets become matches.
"""

from __future__ import annotations

from pathlib import Path

from ..diagnostics import Loc, ParseError
from ..source_ast import (EMPTY_ATTRS, GHOST, REG, App, AssertFalse, Assign,
                          Attr, AttrSet, ArrayGet, ArraySet, Const, Construct,
                          DExn, DFloatingSpec, DLet, DLetRec, DModule,
                          DModuleType, DType, Deref, FieldDef, FieldGet,
                          FieldSet, For, Fun, Handler, If, Let, LetRec,
                          LocalExn, Match, MatchArm, MFunctor, MStruct, Param,
                          PConstruct, POr, PTuple, PTyped, PVar, PWild,
                          Pattern, Raise, RecBinding, Record, RefMake, SFloatingSpec,
                          SType, SVal, SrcDecl, SrcExpr, SrcModule,
                          SrcModuleType, SrcProgram, SrcType, SrcTypeDef,
                          TApp, TArrow, TDAbstract, TDAlias, TDRecord,
                          TDVariant, TTuple, TVar, TaggedType, Try, Tuple,
                          Var, While)
from .lexer import Token, TokenStream, tokenize
from .spec_parser import is_qualified_value

_KEYWORDS = {
    "let", "rec", "and", "in", "if", "then", "else", "match", "with", "fun",
    "function", "type", "of", "mutable", "exception", "module", "struct",
    "end", "sig", "val", "functor", "while", "do", "done", "for", "to",
    "begin", "try", "raise", "assert", "true", "false", "mod", "as",
}

_FUN_CLAUSES = {"requires", "ensures", "raises", "variant"}
_FLOATING = {"function", "predicate", "axiom", "lemma"}


def classify_payload(payload: str) -> str:
    """Attachment class of a payload: 'fun', 'type', 'floating' or 'loop'."""
    word = ""
    for ch in payload.lstrip():
        if ch.isalnum() or ch == "_":
            word += ch
        else:
            break
    if word in _FLOATING:
        return "floating"
    if word == "invariant":
        return "type"  # also valid on loops; loops read specs positionally
    if word == "variant":
        return "loop_or_fun"
    if word in _FUN_CLAUSES:
        return "fun"
    return "fun"  # header-shaped


def parse_file(path: str | Path) -> SrcProgram:
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    return parse_string(text, filename=str(path), source_name=path.stem)


def parse_string(text: str, filename: str = "<input>",
                 source_name: str = "program") -> SrcProgram:
    ts = TokenStream(tokenize(text, filename))
    parser = _Parser(ts)
    decls = parser.program()
    return SrcProgram(tuple(decls), source_name)


def parse_type_from(ts: TokenStream) -> SrcType:
    """Type-expression entry point shared with the spec parser."""
    return _Parser(ts).type_expr()


class _Parser:
    def __init__(self, ts: TokenStream):
        self.ts = ts
        self.module_types: dict[str, SrcModuleType] = {}

    # ------------------------------------------------------------------
    # programs and declarations
    # ------------------------------------------------------------------

    def program(self) -> list[SrcDecl]:
        decls = self.decls(top=True)
        if not self.ts.at("EOF"):
            raise ParseError(f"unexpected {self.ts.current.text!r}",
                             self.ts.current.loc)
        return decls

    def decls(self, top: bool) -> list[SrcDecl]:
        out: list[SrcDecl] = []
        while True:
            tok = self.ts.current
            if tok.kind == "EOF" or self.ts.at_word("end"):
                return out
            if tok.kind == "SPEC":
                if classify_payload(tok.text) == "floating":
                    self.ts.next()
                    attr = Attr("gospel", tok.text, tok.loc)
                    out.append(DFloatingSpec(AttrSet.of(attr), tok.loc))
                    continue
                raise ParseError(
                    "specification comment is not attached to any item",
                    tok.loc)
            if self.ts.at_word("let"):
                out.append(self.let_decl())
            elif self.ts.at_word("type"):
                out.append(self.type_decl())
            elif self.ts.at_word("exception"):
                out.append(self.exception_decl())
            elif self.ts.at_word("module"):
                out.append(self.module_decl())
            else:
                raise ParseError(f"unexpected {tok.text!r} at top level",
                                 tok.loc)

    def collect_spec_attrs(self, *classes: str) -> AttrSet:
        attrs = []
        while self.ts.at("SPEC"):
            cls = classify_payload(self.ts.current.text)
            if cls not in classes and not (cls == "loop_or_fun"
                                           and "fun" in classes):
                break
            tok = self.ts.next()
            attrs.append(Attr("gospel", tok.text, tok.loc))
        if not attrs:
            return EMPTY_ATTRS
        if len(attrs) == 1:
            return AttrSet.of(attrs[0])
        merged = "\n".join(a.payload or "" for a in attrs)
        return AttrSet.of(Attr("gospel", merged, attrs[0].loc))

    def attributes(self) -> AttrSet:
        entries = []
        while self.ts.at("[@"):
            loc = self.ts.next().loc
            name = self.ts.expect("IDENT", "attribute name").text
            if name not in ("ghost", "logic", "lemma", "gospel"):
                raise ParseError(f"unknown attribute [@{name}]", loc)
            self.ts.expect("]")
            entries.append(Attr(name, None, loc))
        return AttrSet(tuple(entries)) if entries else EMPTY_ATTRS

    def let_decl(self) -> SrcDecl:
        loc = self.ts.expect_word("let").loc
        attrs = self.attributes()
        if self.ts.at_word("rec"):
            self.ts.next()
            bindings = self.rec_bindings()
            return DLetRec(attrs, tuple(bindings), loc)
        name, expr = self.binding()
        spec = self.collect_spec_attrs("fun")
        return DLet(attrs, name, expr, spec, loc)

    def rec_bindings(self) -> list[RecBinding]:
        bindings = []
        while True:
            loc = self.ts.current.loc
            name, expr = self.binding()
            spec = self.collect_spec_attrs("fun")
            bindings.append(RecBinding(name, expr, spec, loc))
            if self.ts.at_word("and"):
                self.ts.next()
                continue
            return bindings

    def binding(self) -> tuple[str, SrcExpr]:
        """`name params [: ty] = expr` with parameters curried into lambdas."""
        name = self.ts.expect("IDENT", "binding name").text
        params = []
        while not self.ts.at("=") and not self.ts.at(":"):
            params.append(self.param())
        if self.ts.at(":"):
            self.ts.next()
            self.type_expr()  # result annotation kept out of the tree
        self.ts.expect("=")
        body = self.expr()
        for p in reversed(params):
            body = Fun(EMPTY_ATTRS, p, body, body.loc)
        return name, body

    def param(self) -> Param:
        tok = self.ts.current
        if tok.kind == "IDENT" and tok.text not in _KEYWORDS:
            self.ts.next()
            return Param(tok.text)
        if tok.kind == "_":
            self.ts.next()
            return Param("_")
        if tok.kind == "(":
            self.ts.next()
            if self.ts.at(")"):
                self.ts.next()
                return Param("_", ty=TApp("unit"))
            name = self.ts.expect("IDENT", "parameter name").text
            attrs = self.attributes()
            ty = None
            if self.ts.at(":"):
                self.ts.next()
                ty = self.type_expr()
            if not attrs:
                attrs = self.attributes()
            self.ts.expect(")")
            from ..source_ast import attr_is_ghost
            return Param(name, ghost=attr_is_ghost(attrs), ty=ty)
        raise ParseError(f"expected a parameter, found {tok.text!r}", tok.loc)

    def type_decl(self) -> SrcDecl:
        loc = self.ts.expect_word("type").loc
        defs = [self.type_def()]
        while self.ts.at_word("and"):
            self.ts.next()
            defs.append(self.type_def())
        flat: list[SrcTypeDef] = []
        for d in defs:
            flat.extend(d)
        return DType(tuple(flat), loc)

    def type_def(self) -> list[SrcTypeDef]:
        """One definition; inline constructor records split into companions."""
        loc = self.ts.current.loc
        params = self.type_params()
        name = self.ts.expect("IDENT", "type name").text
        if not self.ts.at("="):
            return [SrcTypeDef(tuple(params), name, TDAbstract(), loc)]
        self.ts.next()
        if self.ts.at("{"):
            fields = self.record_fields()
            inv = self.collect_spec_attrs("type")
            return [SrcTypeDef(tuple(params), name, TDRecord(tuple(fields), inv), loc)]
        if self.ts.at("|") or (self.ts.current.kind == "UIDENT"
                               and not is_qualified_value(self.ts.current.text)):
            companions: list[SrcTypeDef] = []
            ctors = []
            if self.ts.at("|"):
                self.ts.next()
            while True:
                cname = self.ts.expect("UIDENT", "constructor name").text
                args: list[SrcType] = []
                if self.ts.at_word("of"):
                    self.ts.next()
                    if self.ts.at("{"):
                        fields = self.record_fields()
                        companion = f"{name}_{cname}"
                        companions.append(SrcTypeDef(
                            tuple(params), companion,
                            TDRecord(tuple(fields), EMPTY_ATTRS), loc))
                        args = [TApp(companion, tuple(TVar(p) for p in params))]
                    else:
                        args = [self.type_app()]
                        while self.ts.at("*"):
                            self.ts.next()
                            args.append(self.type_app())
                ctors.append((cname, tuple(args)))
                if self.ts.at("|"):
                    self.ts.next()
                    continue
                break
            main = SrcTypeDef(tuple(params), name, TDVariant(tuple(ctors)), loc)
            return [main] + companions
        ty = self.type_expr()
        return [SrcTypeDef(tuple(params), name, TDAlias(ty), loc)]

    def type_params(self) -> list[str]:
        params = []
        if self.ts.at("'"):
            self.ts.next()
            params.append(self.ts.expect("IDENT", "type variable").text)
        elif self.ts.at("(") and self.ts.peek().kind == "'":
            self.ts.next()
            while True:
                self.ts.expect("'")
                params.append(self.ts.expect("IDENT", "type variable").text)
                if self.ts.at(","):
                    self.ts.next()
                    continue
                break
            self.ts.expect(")")
        return params

    def record_fields(self) -> list[FieldDef]:
        self.ts.expect("{")
        fields = []
        while not self.ts.at("}"):
            mutable = False
            if self.ts.at_word("mutable"):
                self.ts.next()
                mutable = True
            fname = self.ts.expect("IDENT", "field name").text
            self.ts.expect(":")
            fty = self.type_expr()
            attrs = self.attributes()
            from ..source_ast import attr_is_ghost
            status = GHOST if attr_is_ghost(attrs) else REG
            fields.append(FieldDef(fname, mutable, TaggedType(status, fty)))
            if self.ts.at(";"):
                self.ts.next()
        self.ts.expect("}")
        return fields

    def exception_decl(self) -> SrcDecl:
        loc = self.ts.expect_word("exception").loc
        name = self.ts.expect("UIDENT", "exception name").text
        args: list[TaggedType] = []
        if self.ts.at_word("of"):
            self.ts.next()
            args.append(self.tagged_type())
            while self.ts.at("*"):
                self.ts.next()
                args.append(self.tagged_type())
        return DExn(name, tuple(args), loc)

    def tagged_type(self) -> TaggedType:
        ty = self.type_app()
        attrs = self.attributes()
        from ..source_ast import attr_is_ghost
        return TaggedType(GHOST if attr_is_ghost(attrs) else REG, ty)

    def module_decl(self) -> SrcDecl:
        loc = self.ts.expect_word("module").loc
        if self.ts.at_word("type"):
            self.ts.next()
            name = self.ts.expect("UIDENT", "module type name").text
            self.ts.expect("=")
            sig = self.module_type()
            sig = SrcModuleType(sig.items, name)
            self.module_types[name] = sig
            return DModuleType(name, sig, loc)
        name = self.ts.expect("UIDENT", "module name").text
        if self.ts.at("("):
            self.ts.next()
            param = self.ts.expect("UIDENT", "functor parameter").text
            self.ts.expect(":")
            sig = self.module_type()
            self.ts.expect(")")
            self.ts.expect("=")
            body = self.module_expr()
            return DModule(name, MFunctor(param, sig, body), loc)
        self.ts.expect("=")
        return DModule(name, self.module_expr(), loc)

    def module_expr(self) -> SrcModule:
        if self.ts.at_word("struct"):
            self.ts.next()
            decls = self.decls(top=False)
            self.ts.expect_word("end")
            return MStruct(tuple(decls))
        if self.ts.at_word("functor"):
            self.ts.next()
            self.ts.expect("(")
            param = self.ts.expect("UIDENT", "functor parameter").text
            self.ts.expect(":")
            sig = self.module_type()
            self.ts.expect(")")
            self.ts.expect("->")
            return MFunctor(param, sig, self.module_expr())
        raise ParseError(f"expected a module expression, found "
                         f"{self.ts.current.text!r}", self.ts.current.loc)

    def module_type(self) -> SrcModuleType:
        if self.ts.at_word("sig"):
            self.ts.next()
            items = []
            while not self.ts.at_word("end"):
                tok = self.ts.current
                if tok.kind == "SPEC":
                    self.ts.next()
                    items.append(SFloatingSpec(
                        AttrSet.of(Attr("gospel", tok.text, tok.loc)), tok.loc))
                elif self.ts.at_word("val"):
                    loc = self.ts.next().loc
                    attrs = self.attributes()
                    name = self.ts.expect("IDENT", "val name").text
                    self.ts.expect(":")
                    tagged = self.tagged_val_type()
                    spec = self.collect_spec_attrs("fun")
                    items.append(SVal(attrs, name, tagged, spec, loc))
                elif self.ts.at_word("type"):
                    decl = self.type_decl()
                    items.append(SType(decl.defs, decl.loc))
                else:
                    raise ParseError(
                        f"unexpected {tok.text!r} in signature", tok.loc)
            self.ts.expect_word("end")
            return SrcModuleType(tuple(items))
        tok = self.ts.expect("UIDENT", "module type")
        if tok.text not in self.module_types:
            raise ParseError(f"unknown module type {tok.text}", tok.loc)
        return self.module_types[tok.text]

    def tagged_val_type(self) -> TaggedType:
        ty = self.type_expr()
        attrs = self.attributes()
        from ..source_ast import attr_is_ghost
        return TaggedType(GHOST if attr_is_ghost(attrs) else REG, ty)

    # ------------------------------------------------------------------
    # type expressions
    # ------------------------------------------------------------------

    def type_expr(self) -> SrcType:
        ty = self.type_tuple()
        if self.ts.at("->"):
            self.ts.next()
            return TArrow(ty, self.type_expr())
        return ty

    def type_tuple(self) -> SrcType:
        items = [self.type_app()]
        while self.ts.at("*"):
            self.ts.next()
            items.append(self.type_app())
        if len(items) == 1:
            return items[0]
        return TTuple(tuple(items))

    def type_app(self) -> SrcType:
        ty = self.type_atom()
        while (self.ts.current.kind == "IDENT"
               and self.ts.current.text not in _KEYWORDS) or (
                   self.ts.current.kind == "UIDENT"
                   and is_qualified_value(self.ts.current.text)):
            name = self.ts.next().text
            ty = TApp(self._norm_type_name(name), (ty,))
        return ty

    def type_atom(self) -> SrcType:
        tok = self.ts.current
        if tok.kind == "'":
            self.ts.next()
            return TVar(self.ts.expect("IDENT", "type variable").text)
        if tok.kind == "IDENT" and tok.text not in _KEYWORDS:
            self.ts.next()
            return TApp(self._norm_type_name(tok.text))
        if tok.kind == "UIDENT" and is_qualified_value(tok.text):
            self.ts.next()
            return TApp(tok.text)
        if tok.kind == "(":
            self.ts.next()
            items = [self.type_expr()]
            while self.ts.at(","):
                self.ts.next()
                items.append(self.type_expr())
            self.ts.expect(")")
            if len(items) > 1:
                # multi-argument constructor application follows
                name = self.ts.expect("IDENT", "type constructor").text
                return TApp(self._norm_type_name(name), tuple(items))
            return items[0]
        raise ParseError(f"expected a type, found {tok.text or tok.kind!r}",
                         tok.loc)

    @staticmethod
    def _norm_type_name(name: str) -> str:
        return "int" if name == "integer" else name

    # ------------------------------------------------------------------
    # expressions
    # ------------------------------------------------------------------

    def expr(self) -> SrcExpr:
        e = self.control_expr()
        if self.ts.at(";"):
            loc = self.ts.next().loc
            rest = self.expr()
            return Let(EMPTY_ATTRS, "_", e, EMPTY_ATTRS, rest, loc)
        return e

    def control_expr(self) -> SrcExpr:
        tok = self.ts.current
        if self.ts.at_word("let"):
            return self.let_expr()
        if self.ts.at_word("if"):
            self.ts.next()
            cond = self.expr_no_seq()
            self.ts.expect_word("then")
            then = self.control_expr()
            if self.ts.at_word("else"):
                self.ts.next()
                orelse = self.control_expr()
            else:
                orelse = Const(None, tok.loc)
            return If(cond, then, orelse, tok.loc)
        if self.ts.at_word("match"):
            self.ts.next()
            scrutinee = [self.expr_no_seq()]
            while self.ts.at(","):
                self.ts.next()
                scrutinee.append(self.expr_no_seq())
            scrut = (scrutinee[0] if len(scrutinee) == 1
                     else Tuple(tuple(scrutinee), tok.loc))
            self.ts.expect_word("with")
            arms = self.match_arms()
            return Match(scrut, tuple(arms), tok.loc)
        if self.ts.at_word("fun"):
            self.ts.next()
            attrs = self.attributes()
            params = [self.param()]
            while not self.ts.at("->"):
                params.append(self.param())
            self.ts.expect("->")
            body = self.control_expr()
            for p in reversed(params):
                body = Fun(attrs, p, body, tok.loc)
                attrs = EMPTY_ATTRS
            return body
        if self.ts.at_word("function"):
            self.ts.next()
            arms = self.match_arms()
            return Fun(EMPTY_ATTRS, Param("param"),
                       Match(Var("param", tok.loc), tuple(arms), tok.loc),
                       tok.loc)
        if self.ts.at_word("try"):
            self.ts.next()
            body = self.expr()
            self.ts.expect_word("with")
            handlers = self.handlers()
            return Try(body, tuple(handlers), tok.loc)
        if self.ts.at_word("while"):
            self.ts.next()
            cond = self.expr_no_seq()
            self.ts.expect_word("do")
            attrs = self.collect_loop_specs()
            body = self.expr()
            self.ts.expect_word("done")
            return While(cond, attrs, body, tok.loc)
        if self.ts.at_word("for"):
            self.ts.next()
            var = self.ts.expect("IDENT", "loop index").text
            self.ts.expect("=")
            lo = self.expr_no_seq()
            self.ts.expect_word("to")
            hi = self.expr_no_seq()
            self.ts.expect_word("do")
            attrs = self.collect_loop_specs()
            body = self.expr()
            self.ts.expect_word("done")
            return For(var, lo, hi, attrs, body, tok.loc)
        if self.ts.at_word("raise"):
            self.ts.next()
            target = self.atom_expr()
            if isinstance(target, Construct):
                return Raise(target.name, target.args, tok.loc)
            raise ParseError("raise expects an exception constructor", tok.loc)
        if self.ts.at_word("assert"):
            self.ts.next()
            if self.ts.at_word("false"):
                self.ts.next()
                return AssertFalse(tok.loc)
            raise ParseError("only `assert false` is supported", tok.loc)
        return self.assign_expr()

    def collect_loop_specs(self) -> AttrSet:
        attrs = []
        while self.ts.at("SPEC"):
            tok = self.ts.next()
            attrs.append(Attr("gospel", tok.text, tok.loc))
        if not attrs:
            return EMPTY_ATTRS
        if len(attrs) == 1:
            return AttrSet.of(attrs[0])
        merged = "\n".join(a.payload or "" for a in attrs)
        return AttrSet.of(Attr("gospel", merged, attrs[0].loc))

    def expr_no_seq(self) -> SrcExpr:
        return self.control_expr()

    def let_expr(self) -> SrcExpr:
        loc = self.ts.expect_word("let").loc
        if self.ts.at_word("exception"):
            self.ts.next()
            name = self.ts.expect("UIDENT", "exception name").text
            arg_types: list[SrcType] = []
            if self.ts.at_word("of"):
                self.ts.next()
                arg_types.append(self.type_app())
                while self.ts.at("*"):
                    self.ts.next()
                    arg_types.append(self.type_app())
            self.ts.expect_word("in")
            return LocalExn(name, tuple(arg_types), self.expr(), loc)
        attrs = self.attributes()
        if self.ts.at_word("rec"):
            self.ts.next()
            bindings = self.rec_bindings()
            self.ts.expect_word("in")
            return LetRec(attrs, tuple(bindings), self.expr(), loc)
        if self.ts.at("("):
            # pattern binding desugars to a single-arm match
            pat = self.pattern()
            self.ts.expect("=")
            bound = self.expr_no_seq()
            self.ts.expect_word("in")
            return Match(bound, (MatchArm(pat, self.expr()),), loc)
        name, bound = self.binding()
        spec = self.collect_spec_attrs("fun")
        self.ts.expect_word("in")
        return Let(attrs, name, bound, spec, self.expr(), loc)

    def match_arms(self) -> list[MatchArm]:
        if self.ts.at("|"):
            self.ts.next()
        arms = [self.match_arm()]
        while self.ts.at("|"):
            self.ts.next()
            arms.append(self.match_arm())
        return arms

    def match_arm(self) -> MatchArm:
        pat = self.pattern()
        self.ts.expect("->")
        return MatchArm(pat, self.expr())

    def handlers(self) -> list[Handler]:
        if self.ts.at("|"):
            self.ts.next()
        out = [self.handler()]
        while self.ts.at("|"):
            self.ts.next()
            out.append(self.handler())
        return out

    def handler(self) -> Handler:
        name = self.ts.expect("UIDENT", "exception name").text
        args: list[Pattern] = []
        while not self.ts.at("->"):
            args.append(self.pattern_atom())
        self.ts.expect("->")
        return Handler(name, tuple(args), self.expr())

    def assign_expr(self) -> SrcExpr:
        e = self.tuple_expr()
        if self.ts.at(":="):
            loc = self.ts.next().loc
            return Assign(e, self.tuple_expr(), loc)
        if self.ts.at("<-"):
            loc = self.ts.next().loc
            value = self.tuple_expr()
            if isinstance(e, FieldGet):
                return FieldSet(e.expr, e.field, value, loc)
            if isinstance(e, ArrayGet):
                return ArraySet(e.array, e.index, value, loc)
            raise ParseError("assignment target must be a field or an "
                             "array cell", loc)
        return e

    def tuple_expr(self) -> SrcExpr:
        loc = self.ts.current.loc
        items = [self.or_expr()]
        while self.ts.at(","):
            self.ts.next()
            items.append(self.or_expr())
        if len(items) == 1:
            return items[0]
        return Tuple(tuple(items), loc)

    def or_expr(self) -> SrcExpr:
        e = self.and_expr()
        while self.ts.at("||"):
            loc = self.ts.next().loc
            e = App("||", (e, self.and_expr()), loc)
        return e

    def and_expr(self) -> SrcExpr:
        e = self.cmp_expr()
        while self.ts.at("&&"):
            loc = self.ts.next().loc
            e = App("&&", (e, self.cmp_expr()), loc)
        return e

    def cmp_expr(self) -> SrcExpr:
        e = self.cons_expr()
        if self.ts.current.kind in ("=", "<>", "<", "<=", ">", ">="):
            op = self.ts.current.kind
            loc = self.ts.next().loc
            return App(op, (e, self.cons_expr()), loc)
        return e

    def cons_expr(self) -> SrcExpr:
        e = self.add_expr()
        if self.ts.at("::"):
            loc = self.ts.next().loc
            return Construct("::", (e, self.cons_expr()), loc)
        if self.ts.at("@") or self.ts.at("++"):
            loc = self.ts.next().loc
            return App("@", (e, self.cons_expr()), loc)
        return e

    def add_expr(self) -> SrcExpr:
        e = self.mul_expr()
        while self.ts.at("+") or self.ts.at("-"):
            op = self.ts.current.kind
            loc = self.ts.next().loc
            e = App(op, (e, self.mul_expr()), loc)
        return e

    def mul_expr(self) -> SrcExpr:
        e = self.unary_expr()
        while (self.ts.at("*") or self.ts.at("/") or self.ts.at_word("mod")):
            op = "mod" if self.ts.at_word("mod") else self.ts.current.kind
            loc = self.ts.next().loc
            e = App(op, (e, self.unary_expr()), loc)
        return e

    def unary_expr(self) -> SrcExpr:
        if self.ts.at("-"):
            loc = self.ts.next().loc
            arg = self.unary_expr()
            if isinstance(arg, Const) and isinstance(arg.value, int):
                return Const(-arg.value, loc)
            return App("-", (Const(0, loc), arg), loc)
        return self.app_expr()

    def _starts_atom(self) -> bool:
        tok = self.ts.current
        if tok.kind in ("INT", "(", "[", "{", "!"):
            return True
        if tok.kind == "UIDENT":
            return True
        if tok.kind == "IDENT":
            return tok.text not in _KEYWORDS or tok.text in ("true", "false")
        if tok.kind == "_":
            return False
        return False

    def app_expr(self) -> SrcExpr:
        tok = self.ts.current
        if tok.kind == "UIDENT" and not is_qualified_value(tok.text):
            self.ts.next()
            args: list[SrcExpr] = []
            if self._starts_atom():
                arg = self.atom_postfix()
                if isinstance(arg, Tuple):
                    args = list(arg.items)
                else:
                    args = [arg]
            return Construct(tok.text, tuple(args), tok.loc)
        head = self.atom_postfix()
        if isinstance(head, Var):
            args = []
            while self._starts_atom():
                args.append(self.atom_postfix())
            if args:
                if head.name == "ref" and len(args) == 1:
                    return RefMake(args[0], head.loc)
                return App(head.name, tuple(args), head.loc)
        return head

    def atom_postfix(self) -> SrcExpr:
        e = self.atom_expr()
        while True:
            if self.ts.at(".") and self.ts.peek().kind == "IDENT":
                loc = self.ts.next().loc
                field = self.ts.next().text
                e = FieldGet(e, field, loc)
            elif self.ts.at(".("):
                loc = self.ts.next().loc
                idx = self.expr_no_seq()
                self.ts.expect(")")
                e = ArrayGet(e, idx, loc)
            else:
                return e

    def atom_expr(self) -> SrcExpr:
        tok = self.ts.current
        if tok.kind == "INT":
            self.ts.next()
            return Const(int(tok.text), tok.loc)
        if self.ts.at_word("true"):
            self.ts.next()
            return Const(True, tok.loc)
        if self.ts.at_word("false"):
            self.ts.next()
            return Const(False, tok.loc)
        if tok.kind == "IDENT" and tok.text not in _KEYWORDS:
            self.ts.next()
            return Var(tok.text, tok.loc)
        if tok.kind == "UIDENT":
            self.ts.next()
            if is_qualified_value(tok.text):
                return Var(tok.text, tok.loc)
            return Construct(tok.text, (), tok.loc)
        if tok.kind == "!":
            self.ts.next()
            return Deref(self.atom_postfix(), tok.loc)
        if tok.kind == "(":
            self.ts.next()
            if self.ts.at(")"):
                self.ts.next()
                return Const(None, tok.loc)
            e = self.expr()
            if self.ts.at(":"):
                self.ts.next()
                self.type_expr()  # annotation kept out of the tree
            self.ts.expect(")")
            return e
        if self.ts.at_word("begin"):
            self.ts.next()
            e = self.expr()
            self.ts.expect_word("end")
            return e
        if tok.kind == "[":
            self.ts.next()
            items = []
            if not self.ts.at("]"):
                items.append(self.tuple_expr())
                while self.ts.at(";"):
                    self.ts.next()
                    items.append(self.tuple_expr())
            self.ts.expect("]")
            out: SrcExpr = Construct("[]", (), tok.loc)
            for item in reversed(items):
                out = Construct("::", (item, out), tok.loc)
            return out
        if tok.kind == "{":
            self.ts.next()
            fields = []
            while not self.ts.at("}"):
                fname = self.ts.expect("IDENT", "field name").text
                self.ts.expect("=")
                fields.append((fname, self.tuple_expr()))
                if self.ts.at(";"):
                    self.ts.next()
            self.ts.expect("}")
            return Record(tuple(fields), tok.loc)
        raise ParseError(f"unexpected {tok.text or tok.kind!r} in expression",
                         tok.loc)

    # ------------------------------------------------------------------
    # patterns
    # ------------------------------------------------------------------

    def pattern(self) -> Pattern:
        p = self.pattern_tuple()
        while self.ts.at("|"):
            loc = self.ts.next().loc
            p = POr(p, self.pattern_tuple(), loc)
        return p

    def pattern_tuple(self) -> Pattern:
        loc = self.ts.current.loc
        items = [self.pattern_as()]
        while self.ts.at(","):
            self.ts.next()
            items.append(self.pattern_as())
        if len(items) == 1:
            return items[0]
        return PTuple(tuple(items), loc)

    def pattern_as(self) -> Pattern:
        p = self.pattern_cons()
        while self.ts.at_word("as"):
            loc = self.ts.next().loc
            name = self.ts.expect("IDENT", "alias name").text
            p = PAs(p, name, loc)
        return p

    def pattern_cons(self) -> Pattern:
        p = self.pattern_app()
        if self.ts.at("::"):
            loc = self.ts.next().loc
            return PConstruct("::", (p, self.pattern_cons()), loc)
        return p

    def pattern_app(self) -> Pattern:
        tok = self.ts.current
        if self.ts.at_word("exception"):
            self.ts.next()
            from ..source_ast import PException
            return PException(self.pattern_app(), tok.loc)
        if tok.kind == "UIDENT" and not is_qualified_value(tok.text):
            self.ts.next()
            args: list[Pattern] = []
            if (self.ts.current.kind in ("UIDENT", "IDENT", "_", "(", "[")
                    and not self.ts.at_word("as")):
                arg = self.pattern_atom()
                if isinstance(arg, PTuple):
                    args = list(arg.items)
                else:
                    args = [arg]
            return PConstruct(tok.text, tuple(args), tok.loc)
        return self.pattern_atom()

    def pattern_atom(self) -> Pattern:
        tok = self.ts.current
        if tok.kind == "_":
            self.ts.next()
            return PWild(tok.loc)
        if tok.kind == "IDENT" and tok.text not in _KEYWORDS:
            self.ts.next()
            return PVar(tok.text, tok.loc)
        if tok.kind == "UIDENT" and not is_qualified_value(tok.text):
            self.ts.next()
            return PConstruct(tok.text, (), tok.loc)
        if tok.kind == "[":
            self.ts.next()
            items = []
            if not self.ts.at("]"):
                items.append(self.pattern())
                while self.ts.at(";"):
                    self.ts.next()
                    items.append(self.pattern())
            self.ts.expect("]")
            out: Pattern = PConstruct("[]", (), tok.loc)
            for item in reversed(items):
                out = PConstruct("::", (item, out), tok.loc)
            return out
        if tok.kind == "(":
            self.ts.next()
            p = self.pattern()
            if self.ts.at(":"):
                self.ts.next()
                p = PTyped(p, self.type_expr(), tok.loc)
            self.ts.expect(")")
            return p
        raise ParseError(f"unexpected {tok.text or tok.kind!r} in pattern",
                         tok.loc)
