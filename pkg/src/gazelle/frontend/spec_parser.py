"""Parser for specification payloads carried by spec attributes.

A payload is parsed against its attachment context: a function contract
(header, requires/ensures/raises/variant), a loop annotation
(invariant/variant), a record type invariant, or a standalone logical
declaration (function/predicate/axiom/lemma).  Terms follow the source
language's expression precedence; `->` between boolean terms is implication,
comparisons chain into conjunctions, and `@`/`++` both denote list append.
"""

from __future__ import annotations

from typing import Optional

from ..diagnostics import Loc, SpecError
from ..source_ast import (PConstruct, PTuple, PTyped, PVar, PWild, Pattern,
                          SrcType, TApp, pattern_vars)
from ..terms import (TmApp, TmBin, TmBool, TmCmp, TmConn, TmConstruct,
                     TmDeref, TmField, TmIf, TmInt, TmLet, TmMatch, TmNeg,
                     TmNot, TmOld, TmQuant, TmTuple, TmUnit, TmVar, Term,
                     mk_and)
from .lexer import Token, TokenStream, tokenize
from .specs import (FunSpec, LAxiom, LFunction, LLemma, LoopSpec, LPredicate,
                    ParsedSpec, SpecHeader, TypeInvariant)

CLAUSE_KEYWORDS = {
    "requires", "ensures", "raises", "variant", "invariant",
    "function", "predicate", "axiom", "lemma",
}

TERM_KEYWORDS = {
    "forall", "exists", "old", "not", "if", "then", "else", "let", "in",
    "match", "with", "end", "true", "false", "mod", "as",
}

# stdlib names recognized in spec terms
_BUILTIN_MAP = {
    "List.rev": "reverse",
    "List.length": "length",
    "List.mem": "mem",
    "Array.length": "array_length",
    "min": "min",
    "max": "max",
}

CONTEXTS = ("function", "loop", "type", "standalone")


def is_qualified_value(name: str) -> bool:
    """True for dotted paths whose final segment is lowercase (E.le, E.t)."""
    return "." in name and name.rsplit(".", 1)[1][:1].islower()


def parse_spec(payload: str, context: str, loc: Loc | None = None) -> ParsedSpec:
    """Parse a payload in the given attachment context."""
    if context not in CONTEXTS:
        raise ValueError(f"unknown spec context: {context}")
    base = loc or Loc("<spec>", 1, 0)
    tokens = _payload_tokens(payload, base)
    ts = TokenStream(tokens)
    parser = _SpecParser(ts)
    if context == "function":
        spec = parser.function_spec()
    elif context == "loop":
        spec = parser.loop_spec()
    elif context == "type":
        spec = parser.type_invariant()
    else:
        spec = parser.standalone()
    if not ts.at("EOF"):
        raise SpecError(
            f"unexpected {ts.current.text!r} in specification",
            ts.current.loc)
    return spec


def parse_term(text: str, loc: Loc | None = None) -> Term:
    """Parse a single term; used by tests and the report renderer."""
    base = loc or Loc("<term>", 1, 0)
    ts = TokenStream(_payload_tokens(text, base))
    parser = _SpecParser(ts)
    t = parser.term()
    if not ts.at("EOF"):
        raise SpecError(f"unexpected {ts.current.text!r} after term",
                        ts.current.loc)
    return t


def _payload_tokens(payload: str, base: Loc) -> list[Token]:
    raw = tokenize(payload, base.file)
    out = []
    for tok in raw:
        line = base.line + tok.loc.line - 1
        col = tok.loc.col + (base.col + 3 if tok.loc.line == 1 else 0)
        out.append(Token(tok.kind, tok.text, Loc(base.file, line, col)))
    return out


class _SpecParser:
    def __init__(self, ts: TokenStream):
        self.ts = ts

    # -- contexts ----------------------------------------------------------

    def function_spec(self) -> FunSpec:
        spec = FunSpec()
        spec.header = self._try_header()
        while not self.ts.at("EOF"):
            tok = self.ts.current
            if tok.kind != "IDENT" or tok.text not in CLAUSE_KEYWORDS:
                raise SpecError(f"expected a contract clause, found {tok.text!r}",
                                tok.loc)
            if tok.text == "requires":
                self.ts.next()
                spec.requires.append(self.term())
            elif tok.text == "ensures":
                self.ts.next()
                spec.ensures.append(self.term())
            elif tok.text == "variant":
                self.ts.next()
                spec.variants.append(self.term())
            elif tok.text == "raises":
                self.ts.next()
                exn = self.ts.expect("UIDENT", "exception name").text
                if self.ts.at("->"):
                    self.ts.next()
                    spec.raises.append((exn, self.term()))
                else:
                    spec.raises.append((exn, TmBool(True)))
            else:
                raise SpecError(
                    f"clause '{tok.text}' not allowed in a function contract",
                    tok.loc)
        return spec

    def loop_spec(self) -> LoopSpec:
        spec = LoopSpec()
        while not self.ts.at("EOF"):
            tok = self.ts.current
            if tok.kind == "IDENT" and tok.text == "invariant":
                self.ts.next()
                spec.invariants.append(self.term())
            elif tok.kind == "IDENT" and tok.text == "variant":
                self.ts.next()
                spec.variants.append(self.term())
            else:
                raise SpecError(
                    f"clause {tok.text!r} not allowed in a loop annotation",
                    tok.loc)
        if not spec.invariants and not spec.variants:
            raise SpecError("empty loop annotation", self.ts.current.loc)
        return spec

    def type_invariant(self) -> TypeInvariant:
        inv = TypeInvariant()
        while not self.ts.at("EOF"):
            self.ts.expect_word("invariant")
            inv.terms.append(self.term())
        if not inv.terms:
            raise SpecError("empty type invariant", self.ts.current.loc)
        return inv

    def standalone(self):
        tok = self.ts.current
        if tok.kind != "IDENT" or tok.text not in ("function", "predicate",
                                                   "axiom", "lemma"):
            raise SpecError(
                f"expected function/predicate/axiom/lemma, found {tok.text!r}",
                tok.loc)
        self.ts.next()
        if tok.text in ("axiom", "lemma"):
            name = self.ts.expect("IDENT", "name").text
            self.ts.expect(":")
            body = self.term()
            cls = LAxiom if tok.text == "axiom" else LLemma
            return cls(name, body, tok.loc)
        name = self.ts.expect("IDENT", "name").text
        params = self._params()
        result: Optional[SrcType] = None
        if self.ts.at(":"):
            self.ts.next()
            result = self._type()
        body: Optional[Term] = None
        if self.ts.at("="):
            self.ts.next()
            body = self.term()
        if tok.text == "predicate":
            if result is not None:
                raise SpecError("predicates have no result type", tok.loc)
            return LPredicate(name, params, body, tok.loc)
        if result is None:
            raise SpecError("logical function needs a result type", tok.loc)
        # `function f : t -> u` declares parameters through the arrow type
        if not params and body is None:
            from ..source_ast import TArrow
            tys = []
            ty = result
            while isinstance(ty, TArrow):
                tys.append(ty.lhs)
                ty = ty.rhs
            if tys:
                params = tuple((f"x{i}", t) for i, t in enumerate(tys))
                result = ty
        return LFunction(name, params, result, body, tok.loc)

    def _try_header(self) -> Optional[SpecHeader]:
        tok = self.ts.current
        if tok.kind != "IDENT" or tok.text in CLAUSE_KEYWORDS:
            return None
        start = self.ts.pos
        first = self.ts.next().text
        result = None
        if self.ts.at("="):
            self.ts.next()
            result = first
            name_tok = self.ts.current
            if name_tok.kind != "IDENT":
                self.ts.pos = start
                return None
            name = self.ts.next().text
        else:
            name = first
        args = []
        while True:
            if (self.ts.current.kind == "IDENT"
                    and self.ts.current.text not in CLAUSE_KEYWORDS):
                args.append(self.ts.next().text)
            elif self.ts.at("(") and self.ts.peek().kind == ")":
                self.ts.next()
                self.ts.next()
                args.append("_")  # unit placeholder argument
            else:
                break
        names = ([result] if result else []) + [name] + args
        if len(set(args)) != len(args):
            raise SpecError("duplicate argument name in header", tok.loc)
        if result in args or result == name or name in args:
            raise SpecError("header names must be distinct", tok.loc)
        return SpecHeader(result, name, tuple(args), tok.loc)

    def _params(self) -> tuple[tuple[str, Optional[SrcType]], ...]:
        params: list[tuple[str, Optional[SrcType]]] = []
        while self.ts.at("("):
            if self.ts.peek().kind != "IDENT":
                break
            self.ts.next()
            names = [self.ts.expect("IDENT", "parameter name").text]
            while self.ts.current.kind == "IDENT":
                names.append(self.ts.next().text)
            ty = None
            if self.ts.at(":"):
                self.ts.next()
                ty = self._type()
            self.ts.expect(")")
            params.extend((n, ty) for n in names)
        return tuple(params)

    # -- types -------------------------------------------------------------

    def _type(self) -> SrcType:
        from .parser import parse_type_from
        return parse_type_from(self.ts)

    # -- terms -------------------------------------------------------------

    def term(self) -> Term:
        return self._quantified()

    def _at_keyword(self, *words: str) -> bool:
        tok = self.ts.current
        return tok.kind == "IDENT" and tok.text in words

    def _stop(self) -> bool:
        """True when the current token cannot continue a term."""
        tok = self.ts.current
        if tok.kind == "EOF":
            return True
        return tok.kind == "IDENT" and tok.text in CLAUSE_KEYWORDS

    def _quantified(self) -> Term:
        if self._at_keyword("forall", "exists"):
            quant = self.ts.next().text
            binders: list[tuple[str, Optional[SrcType]]] = []
            while True:
                group = [self.ts.expect("IDENT", "binder").text]
                while self.ts.current.kind == "IDENT":
                    group.append(self.ts.next().text)
                ty = None
                if self.ts.at(":"):
                    self.ts.next()
                    ty = self._type()
                binders.extend((n, ty) for n in group)
                if self.ts.at(","):
                    self.ts.next()
                    continue
                break
            self.ts.expect(".")
            return TmQuant(quant, tuple(binders), self._quantified())
        return self._iff()

    def _iff(self) -> Term:
        t = self._implies()
        while self.ts.at("<->"):
            self.ts.next()
            t = TmConn("iff", t, self._implies())
        return t

    def _implies(self) -> Term:
        t = self._or()
        if self.ts.at("->"):
            self.ts.next()
            return TmConn("implies", t, self._implies())
        return t

    def _or(self) -> Term:
        t = self._and()
        while self.ts.at("||") or self.ts.at("\\/"):
            self.ts.next()
            t = TmConn("or", t, self._and())
        return t

    def _and(self) -> Term:
        t = self._not()
        while self.ts.at("&&") or self.ts.at("/\\"):
            self.ts.next()
            t = TmConn("and", t, self._not())
        return t

    def _not(self) -> Term:
        if self._at_keyword("not"):
            self.ts.next()
            return TmNot(self._not())
        if self._at_keyword("forall", "exists"):
            return self._quantified()
        return self._cmp()

    def _cmp(self) -> Term:
        t = self._cons()
        parts: list[Term] = []
        while self.ts.current.kind in ("=", "<>", "<", "<=", ">", ">="):
            op = self.ts.next().kind
            rhs = self._cons()
            parts.append(TmCmp(op, t, rhs))
            t = rhs
        if not parts:
            return t
        return mk_and(parts)

    def _cons(self) -> Term:
        t = self._add()
        if self.ts.at("::"):
            self.ts.next()
            return TmConstruct("::", (t, self._cons()))
        if self.ts.at("@") or self.ts.at("++"):
            self.ts.next()
            return TmApp("append", (t, self._cons()))
        return t

    def _add(self) -> Term:
        t = self._mul()
        while self.ts.at("+") or self.ts.at("-"):
            op = self.ts.next().kind
            t = TmBin(op, t, self._mul())
        return t

    def _mul(self) -> Term:
        t = self._neg()
        while (self.ts.at("*") or self.ts.at("/")
               or self._at_keyword("mod")):
            op = "mod" if self._at_keyword("mod") else self.ts.current.kind
            self.ts.next()
            t = TmBin(op, t, self._neg())
        return t

    def _neg(self) -> Term:
        if self.ts.at("-"):
            self.ts.next()
            return TmNeg(self._neg())
        return self._app()

    def _starts_atom(self) -> bool:
        tok = self.ts.current
        if tok.kind in ("INT", "(", "[", "!"):
            return True
        if tok.kind == "UIDENT":
            return True
        if tok.kind == "IDENT":
            return tok.text not in CLAUSE_KEYWORDS and tok.text not in (
                "then", "else", "in", "with", "end", "mod", "as", "to", "do",
                "done", "and", "forall", "exists")
        return False

    def _app(self) -> Term:
        if self._at_keyword("old"):
            self.ts.next()
            return TmOld(self._postfix(self._atom()))
        tok = self.ts.current
        if (tok.kind == "UIDENT" and tok.text not in _BUILTIN_MAP
                and not is_qualified_value(tok.text)):
            # constructor application, curried style
            self.ts.next()
            args: list[Term] = []
            while self._starts_atom():
                args.append(self._postfix(self._atom()))
            # one parenthesized tuple argument is the OCaml style
            if len(args) == 1 and isinstance(args[0], TmTuple):
                args = list(args[0].items)
            return TmConstruct(tok.text, tuple(args))
        head = self._postfix(self._atom())
        if isinstance(head, TmVar):
            args = []
            while self._starts_atom():
                args.append(self._postfix(self._atom()))
            if args:
                name = _BUILTIN_MAP.get(head.name, head.name)
                return TmApp(name, tuple(args))
        return head

    def _postfix(self, t: Term) -> Term:
        while True:
            if self.ts.at(".") and self.ts.peek().kind == "IDENT":
                self.ts.next()
                field = self.ts.next().text
                t = TmField(t, field)
            elif self.ts.at(".("):
                self.ts.next()
                idx = self.term()
                self.ts.expect(")")
                t = TmApp("array_get", (t, idx))
            else:
                return t

    def _atom(self) -> Term:
        tok = self.ts.current
        if tok.kind == "INT":
            self.ts.next()
            return TmInt(int(tok.text))
        if tok.kind == "IDENT":
            if tok.text == "true":
                self.ts.next()
                return TmBool(True)
            if tok.text == "false":
                self.ts.next()
                return TmBool(False)
            if tok.text == "if":
                self.ts.next()
                cond = self.term()
                self.ts.expect_word("then")
                then = self.term()
                self.ts.expect_word("else")
                return TmIf(cond, then, self.term())
            if tok.text == "let":
                self.ts.next()
                if self.ts.at("("):
                    pat = self._pattern()
                    self.ts.expect("=")
                    bound = self.term()
                    self.ts.expect_word("in")
                    return TmMatch(bound, ((pat, self.term()),))
                name = self.ts.expect("IDENT", "binder").text
                self.ts.expect("=")
                bound = self.term()
                self.ts.expect_word("in")
                return TmLet(name, bound, self.term())
            if tok.text == "match":
                return self._match()
            if tok.text == "old":
                self.ts.next()
                return TmOld(self._postfix(self._atom()))
            if tok.text in CLAUSE_KEYWORDS or tok.text in (
                    "then", "else", "in", "with", "end"):
                raise SpecError(f"unexpected {tok.text!r} in term", tok.loc)
            self.ts.next()
            name = _BUILTIN_MAP.get(tok.text, tok.text)
            return TmVar(name, tok.loc)
        if tok.kind == "UIDENT":
            self.ts.next()
            if tok.text in _BUILTIN_MAP:
                return TmVar(_BUILTIN_MAP[tok.text], tok.loc)
            if is_qualified_value(tok.text):
                return TmVar(tok.text, tok.loc)
            return TmConstruct(tok.text, ())
        if tok.kind == "!":
            self.ts.next()
            return TmDeref(self._postfix(self._atom()))
        if tok.kind == "(":
            self.ts.next()
            if self.ts.at(")"):
                self.ts.next()
                return TmUnit()
            items = [self.term()]
            while self.ts.at(","):
                self.ts.next()
                items.append(self.term())
            self.ts.expect(")")
            if len(items) == 1:
                return items[0]
            return TmTuple(tuple(items))
        if tok.kind == "[":
            self.ts.next()
            items = []
            if not self.ts.at("]"):
                items.append(self.term())
                while self.ts.at(";"):
                    self.ts.next()
                    items.append(self.term())
            self.ts.expect("]")
            out: Term = TmConstruct("[]")
            for item in reversed(items):
                out = TmConstruct("::", (item, out))
            return out
        raise SpecError(f"unexpected {tok.text or tok.kind!r} in term", tok.loc)

    def _match(self) -> Term:
        self.ts.expect_word("match")
        scrutinee = [self.term()]
        while self.ts.at(","):
            self.ts.next()
            scrutinee.append(self.term())
        self.ts.expect_word("with")
        arms: list[tuple[Pattern, Term]] = []
        if self.ts.at("|"):
            self.ts.next()
        while True:
            pat = self._pattern()
            self.ts.expect("->")
            body = self.term()
            arms.append((pat, body))
            if self.ts.at("|"):
                self.ts.next()
                continue
            break
        if self._at_keyword("end"):
            self.ts.next()
        scrut = scrutinee[0] if len(scrutinee) == 1 else TmTuple(tuple(scrutinee))
        return TmMatch(scrut, tuple(arms))

    # -- term patterns (both curried and tuple constructor styles) ---------

    def _pattern(self) -> Pattern:
        pats = [self._pattern_cons()]
        while self.ts.at(","):
            self.ts.next()
            pats.append(self._pattern_cons())
        if len(pats) == 1:
            return pats[0]
        return PTuple(tuple(pats))

    def _pattern_cons(self) -> Pattern:
        p = self._pattern_app()
        if self.ts.at("::"):
            self.ts.next()
            return PConstruct("::", (p, self._pattern_cons()))
        return p

    def _pattern_app(self) -> Pattern:
        tok = self.ts.current
        if tok.kind == "UIDENT":
            self.ts.next()
            args: list[Pattern] = []
            while (self.ts.current.kind in ("UIDENT", "IDENT", "_", "(")
                   and not self._at_keyword("as")):
                args.append(self._pattern_atom())
            if len(args) == 1 and isinstance(args[0], PTuple):
                args = list(args[0].items)
            return PConstruct(tok.text, tuple(args), tok.loc)
        return self._pattern_atom()

    def _pattern_atom(self) -> Pattern:
        tok = self.ts.current
        if tok.kind == "_":
            self.ts.next()
            return PWild(tok.loc)
        if tok.kind == "IDENT":
            self.ts.next()
            return PVar(tok.text, tok.loc)
        if tok.kind == "UIDENT":
            self.ts.next()
            return PConstruct(tok.text, (), tok.loc)
        if tok.kind == "[":
            self.ts.next()
            items = []
            if not self.ts.at("]"):
                items.append(self._pattern())
                while self.ts.at(";"):
                    self.ts.next()
                    items.append(self._pattern())
            self.ts.expect("]")
            out: Pattern = PConstruct("[]", (), tok.loc)
            for item in reversed(items):
                out = PConstruct("::", (item, out), tok.loc)
            return out
        if tok.kind == "(":
            self.ts.next()
            p = self._pattern()
            if self.ts.at(":"):
                self.ts.next()
                p = PTyped(p, self._type(), tok.loc)
            self.ts.expect(")")
            return p
        raise SpecError(f"unexpected {tok.text or tok.kind!r} in pattern",
                        tok.loc)
