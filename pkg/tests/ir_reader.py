"""Test-only re-reader for the canonical IR emission.

Parses text produced by emit_text back into a TgtModule so round-trip
properties can compare against the original structurally.
"""

from __future__ import annotations

from gazelle.diagnostics import ParseError
from gazelle.frontend.lexer import TokenStream, tokenize
from gazelle.frontend.spec_parser import _SpecParser
from gazelle.source_ast import GHOST, REG, TaggedType, TApp, TVar
from gazelle import target_ir as IR
from gazelle import terms as T

_TYPE_STOP = {"axiom", "goal", "function", "predicate", "let", "val", "type",
              "scope", "end", "with", "exception", "invariant", "requires",
              "ensures", "variant", "raises", "returns", "mutable", "ghost",
              "reg", "logic", "in", "then", "else", "do", "done", "to"}


def parse_type_from(ts: TokenStream):
    """Right-of-name type applications, as the emitter prints them."""
    ty = _ty_app(ts)
    if ts.at("->"):
        ts.next()
        from gazelle.source_ast import TArrow
        return TArrow(ty, parse_type_from(ts))
    return ty


def _ty_app(ts: TokenStream):
    from gazelle.source_ast import TTuple
    items = [_ty_head(ts)]
    while ts.at("*"):
        ts.next()
        items.append(_ty_head(ts))
    if len(items) > 1:
        return TTuple(tuple(items))
    return items[0]


def _ty_head(ts: TokenStream):
    head = _ty_atom(ts)
    if isinstance(head, TApp) and not head.args:
        args = []
        while _ty_starts_atom(ts):
            args.append(_ty_atom(ts))
        if args:
            return TApp(head.name, tuple(args))
    return head


def _ty_starts_atom(ts: TokenStream) -> bool:
    tok = ts.current
    if tok.kind in ("'", "("):
        return True
    if tok.kind == "IDENT":
        return tok.text not in _TYPE_STOP
    if tok.kind == "UIDENT":
        return "." in tok.text
    return False


def _ty_atom(ts: TokenStream):
    tok = ts.current
    if tok.kind == "'":
        ts.next()
        return TVar(ts.expect("IDENT").text)
    if tok.kind == "IDENT" or (tok.kind == "UIDENT" and "." in tok.text):
        ts.next()
        return TApp(tok.text)
    if tok.kind == "(":
        ts.next()
        ty = parse_type_from(ts)
        ts.expect(")")
        return ty
    raise ParseError(f"expected a type, found {tok.text!r}", tok.loc)


class _IRTermParser(_SpecParser):
    def _type(self):
        return parse_type_from(self.ts)

_DECL_WORDS = {"scope", "exception", "type", "let", "val", "function",
               "predicate", "axiom", "goal", "end", "with"}
_SPEC_WORDS = {"returns", "requires", "variant", "ensures", "raises",
               "invariant"}


def read_module(text: str) -> IR.TgtModule:
    ts = TokenStream(tokenize(text, "<mlw>"))
    ts.expect_word("module")
    name = ts.expect("UIDENT").text
    decls = _decls(ts)
    ts.expect_word("end")
    return IR.TgtModule(name, tuple(decls))


def _normalize(t: T.Term) -> T.Term:
    """Emission spellings back to canonical term forms."""
    if isinstance(t, T.TmConstruct):
        args = tuple(_normalize(a) for a in t.args)
        if t.name == "Nil" and not args:
            return T.TmConstruct("[]")
        if t.name == "Cons" and len(args) == 2:
            return T.TmConstruct("::", args)
        return T.TmConstruct(t.name, args)
    if isinstance(t, T.TmNeg):
        inner = _normalize(t.arg)
        if isinstance(inner, T.TmInt):
            return T.TmInt(-inner.value)
        return T.TmNeg(inner)
    if isinstance(t, T.TmApp):
        return T.TmApp(t.fn, tuple(_normalize(a) for a in t.args))
    if isinstance(t, T.TmQuant):
        return T.TmQuant(t.quant, t.binders, _normalize(t.body))
    if isinstance(t, T.TmConn):
        return T.TmConn(t.op, _normalize(t.lhs), _normalize(t.rhs))
    if isinstance(t, T.TmCmp):
        return T.TmCmp(t.op, _normalize(t.lhs), _normalize(t.rhs))
    if isinstance(t, T.TmBin):
        return T.TmBin(t.op, _normalize(t.lhs), _normalize(t.rhs))
    if isinstance(t, T.TmNot):
        return T.TmNot(_normalize(t.arg))
    if isinstance(t, T.TmIf):
        return T.TmIf(_normalize(t.cond), _normalize(t.then),
                      _normalize(t.orelse))
    if isinstance(t, T.TmLet):
        return T.TmLet(t.name, _normalize(t.bound), _normalize(t.body))
    if isinstance(t, T.TmMatch):
        return T.TmMatch(_normalize(t.scrutinee),
                         tuple((_norm_pat(p), _normalize(b))
                               for p, b in t.arms))
    if isinstance(t, T.TmTuple):
        return T.TmTuple(tuple(_normalize(x) for x in t.items))
    if isinstance(t, T.TmField):
        return T.TmField(_normalize(t.record), t.field)
    if isinstance(t, T.TmOld):
        return T.TmOld(_normalize(t.arg))
    return t


def _norm_pat(p):
    from gazelle.source_ast import PConstruct
    if isinstance(p, PConstruct):
        args = tuple(_norm_pat(a) for a in p.args)
        if p.name == "Nil" and not args:
            return PConstruct("[]", ())
        if p.name == "Cons" and len(args) == 2:
            return PConstruct("::", args)
        return PConstruct(p.name, args)
    from gazelle.source_ast import PTuple, PAs, PTyped, POr
    if isinstance(p, PTuple):
        return PTuple(tuple(_norm_pat(x) for x in p.items))
    if isinstance(p, POr):
        return POr(_norm_pat(p.left), _norm_pat(p.right))
    if isinstance(p, PAs):
        return PAs(_norm_pat(p.pattern), p.name)
    if isinstance(p, PTyped):
        return PTyped(_norm_pat(p.pattern), p.ty)
    return p


def _term_in_braces(ts: TokenStream) -> T.Term:
    ts.expect("{")
    sub = _IRTermParser(ts)
    term = sub.term()
    ts.expect("}")
    return _normalize(term)


def _spec(ts: TokenStream) -> IR.FunSpecIR:
    requires, ensures, raises, variants = [], [], [], []
    result = None
    while ts.current.kind == "IDENT" and ts.current.text in _SPEC_WORDS:
        word = ts.next().text
        if word == "returns":
            result = ts.expect("IDENT").text
        elif word == "requires":
            requires.append(_term_in_braces(ts))
        elif word == "variant":
            variants.append(_term_in_braces(ts))
        elif word == "ensures":
            ensures.append(_term_in_braces(ts))
        elif word == "raises":
            ts.expect("{")
            exn = ts.expect("UIDENT").text
            ts.expect("->")
            sub = _IRTermParser(ts)
            raises.append((exn, _normalize(sub.term())))
            ts.expect("}")
        else:
            raise ParseError(f"unexpected spec word {word}", ts.current.loc)
    return IR.FunSpecIR(tuple(requires), tuple(ensures), tuple(raises),
                        tuple(variants), result)


def _loop_spec(ts: TokenStream) -> IR.LoopSpecIR:
    invariants, variants = [], []
    while ts.current.kind == "IDENT" and ts.current.text in ("invariant",
                                                             "variant"):
        word = ts.next().text
        if word == "invariant":
            invariants.append(_term_in_braces(ts))
        else:
            variants.append(_term_in_braces(ts))
    return IR.LoopSpecIR(tuple(invariants), tuple(variants))


def _params(ts: TokenStream) -> tuple[IR.IRParam, ...]:
    params = []
    while ts.at("("):
        ts.next()
        ghost = False
        if ts.at_word("ghost"):
            ts.next()
            ghost = True
        name = ts.expect("IDENT").text if ts.current.kind == "IDENT" \
            else ts.expect("_").text
        ty = None
        if ts.at(":"):
            ts.next()
            ty = parse_type_from(ts)
        ts.expect(")")
        params.append(IR.IRParam(name, ghost, ty))
    return tuple(params)


def _decls(ts: TokenStream) -> list[IR.TgtDecl]:
    out: list[IR.TgtDecl] = []
    while True:
        tok = ts.current
        if tok.kind == "EOF" or ts.at_word("end"):
            return out
        if ts.at_word("scope"):
            ts.next()
            name = ts.expect("UIDENT").text
            inner = _decls(ts)
            ts.expect_word("end")
            out.append(IR.DIRScope(name, tuple(inner)))
        elif ts.at_word("exception"):
            ts.next()
            name = ts.expect("UIDENT").text
            mask = []
            if ts.at(":"):
                ts.next()
                ts.expect("[")
                while not ts.at("]"):
                    status = ts.next().text  # reg | ghost
                    ty = parse_type_from(ts)
                    mask.append(TaggedType(GHOST if status == "ghost"
                                           else REG, ty))
                    if ts.at(","):
                        ts.next()
                ts.expect("]")
            out.append(IR.DIRExn(name, tuple(mask)))
        elif ts.at_word("type"):
            defs = [_typedef(ts)]
            while ts.at_word("with") and _peek_typedef(ts):
                ts.next()
                defs.append(_typedef(ts))
            out.append(IR.DIRType(tuple(defs)))
        elif ts.at_word("let"):
            out.append(_let_decl(ts))
        elif ts.at_word("val"):
            out.append(_val_decl(ts))
        elif ts.at_word("function") or ts.at_word("predicate"):
            out.append(_logical_decl(ts))
        elif ts.at_word("axiom") or ts.at_word("goal"):
            kind = ts.next().text
            name = ts.expect("IDENT").text
            ts.expect(":")
            sub = _IRTermParser(ts)
            term = _normalize(sub.term())
            out.append(IR.DIRAxiom(name, term) if kind == "axiom"
                       else IR.DIRGoal(name, term))
        else:
            raise ParseError(f"unexpected {tok.text!r} in declarations",
                             tok.loc)


def _peek_typedef(ts: TokenStream) -> bool:
    return ts.peek().kind == "IDENT"


def _typedef(ts: TokenStream) -> IR.IRTypeDef:
    ts.next()  # type | with
    name = ts.expect("IDENT").text
    params = []
    while ts.at("'"):
        ts.next()
        params.append(ts.expect("IDENT").text)
    if not ts.at("="):
        body: IR.IRTypeBody = IR.TBAbstract()
        invs = []
        while ts.at_word("invariant"):
            ts.next()
            invs.append(_term_in_braces(ts))
        return IR.IRTypeDef(name, tuple(params), body)
    ts.next()
    if ts.at("{"):
        ts.next()
        fields = []
        while not ts.at("}"):
            mutable = False
            if ts.at_word("mutable"):
                ts.next()
                mutable = True
            fname = ts.expect("IDENT").text
            ts.expect(":")
            ghost = False
            if ts.at_word("ghost"):
                ts.next()
                ghost = True
            fty = parse_type_from(ts)
            fields.append(IR.IRFieldDef(fname, mutable, ghost, fty))
            if ts.at(";"):
                ts.next()
        ts.expect("}")
        invs = []
        while ts.at_word("invariant"):
            ts.next()
            invs.append(_term_in_braces(ts))
        return IR.IRTypeDef(name, tuple(params),
                            IR.TBRecord(tuple(fields), tuple(invs)))
    if ts.current.kind == "UIDENT":
        ctors = []
        while True:
            cname = ts.expect("UIDENT").text
            args = []
            while _ty_starts_atom(ts):
                args.append(_atomic_type(ts))
            ctors.append((cname, tuple(args)))
            if ts.at("|"):
                ts.next()
                continue
            break
        return IR.IRTypeDef(name, tuple(params), IR.TBVariant(tuple(ctors)))
    ty = parse_type_from(ts)
    return IR.IRTypeDef(name, tuple(params), IR.TBAlias(ty))


def _atomic_type(ts: TokenStream):
    return _ty_atom(ts)


def _let_decl(ts: TokenStream):
    ts.expect_word("let")
    if ts.at_word("rec"):
        ts.next()
        functions = [_rec_fun(ts)]
        while ts.at_word("with") and not _peek_typedef(ts):
            functions.append(_rec_fun(ts, lead="with"))
        return IR.DIRLetRec(tuple(functions))
    kind = ts.next().text
    name = ts.expect("IDENT").text
    params = _params(ts)
    spec = _spec(ts)
    ts.expect("=")
    body = _expr(ts)
    return IR.DIRLet(kind, name, params, spec, body)


def _rec_fun(ts: TokenStream, lead: str | None = None) -> IR.IRRecFun:
    if lead:
        ts.expect_word(lead)
    kind = ts.next().text
    name = ts.expect("IDENT").text
    params = _params(ts)
    spec = _spec(ts)
    ts.expect("=")
    body = _expr(ts)
    return IR.IRRecFun(kind, name, params, spec, body)


def _val_decl(ts: TokenStream) -> IR.DIRVal:
    ts.expect_word("val")
    kind = ts.next().text
    ghost = False
    if ts.at_word("ghost"):
        ts.next()
        ghost = True
    name = ts.expect("IDENT").text
    params = []
    while ts.at("("):
        ts.next()
        pname = ts.expect("IDENT").text
        ts.expect(":")
        status = REG
        if ts.at_word("ghost"):
            ts.next()
            status = GHOST
        ty = parse_type_from(ts)
        ts.expect(")")
        params.append((pname, TaggedType(status, ty)))
    ts.expect(":")
    status = REG
    if ts.at_word("ghost"):
        ts.next()
        status = GHOST
    result = TaggedType(status, parse_type_from(ts))
    spec = _spec(ts)
    return IR.DIRVal(kind, ghost, name, tuple(params), spec, result)


def _logical_decl(ts: TokenStream):
    kind = ts.next().text
    name = ts.expect("IDENT").text
    params = []
    while ts.at("("):
        ts.next()
        pname = ts.expect("IDENT").text
        ty = None
        if ts.at(":"):
            ts.next()
            ty = parse_type_from(ts)
        ts.expect(")")
        params.append((pname, ty))
    result = None
    if ts.at(":"):
        ts.next()
        result = parse_type_from(ts)
    body = None
    if ts.at("="):
        ts.next()
        sub = _IRTermParser(ts)
        body = _normalize(sub.term())
    if kind == "function":
        return IR.DIRFunction(name, tuple(params), result, body)
    return IR.DIRPredicate(name, tuple(params), body)


# -- expressions --------------------------------------------------------------

_STOP = {"end", "done", "with", "in", "else", "then", "to", "do", "done"}


def _expr(ts: TokenStream) -> IR.TgtExpr:
    return _seq(ts)


def _seq(ts: TokenStream) -> IR.TgtExpr:
    if ts.at_word("let"):
        saved = ts.pos
        ts.next()
        if ts.at_word("rec"):
            ts.next()
            functions = [_rec_fun_expr(ts)]
            while ts.at_word("with"):
                ts.next()
                functions.append(_rec_fun_expr(ts))
            ts.expect_word("in")
            return IR.ERecGroup(tuple(functions), _seq(ts))
        kind = ts.next().text
        ghost = False
        if ts.at_word("ghost"):
            ts.next()
            ghost = True
        name = ts.next().text  # IDENT or _
        ts.expect("=")
        bound = _seq_until_in(ts)
        if not ts.at_word("in"):
            ts.pos = saved
            raise ParseError("not a let-in", ts.current.loc)
        ts.next()
        if ghost:
            bound = IR.EGhost(bound) if not isinstance(bound, IR.EGhost) \
                else bound
        return IR.ELet(kind, name, bound, _seq(ts))
    return _control(ts)


def _rec_fun_expr(ts: TokenStream) -> IR.IRRecFun:
    kind = ts.next().text
    name = ts.expect("IDENT").text
    params = _params(ts)
    spec = _spec(ts)
    ts.expect("=")
    body = _seq_until(ts, ("with", "in"))
    return IR.IRRecFun(kind, name, params, spec, body)


def _seq_until_in(ts: TokenStream) -> IR.TgtExpr:
    return _control(ts)


def _seq_until(ts: TokenStream, words) -> IR.TgtExpr:
    return _control(ts)


def _control(ts: TokenStream) -> IR.TgtExpr:
    if ts.at_word("if"):
        ts.next()
        cond = _control(ts)
        ts.expect_word("then")
        then = _seq(ts)
        orelse: IR.TgtExpr = IR.EConst(None)
        if ts.at_word("else"):
            ts.next()
            orelse = _seq(ts)
        return IR.EIf(cond, then, orelse)
    if ts.at_word("match"):
        ts.next()
        scrutinee = _control(ts)
        ts.expect_word("with")
        arms = []
        if ts.at("|"):
            ts.next()
        while True:
            sub = _IRTermParser(ts)
            pat = _norm_pat(sub._pattern())
            ts.expect("->")
            body = _seq(ts)
            arms.append((pat, body))
            if ts.at("|"):
                ts.next()
                continue
            break
        ts.expect_word("end")
        return IR.EMatch(scrutinee, tuple(arms))
    if ts.at_word("try"):
        ts.next()
        body = _seq(ts)
        ts.expect_word("with")
        handlers = []
        if ts.at("|"):
            ts.next()
        while True:
            exn = ts.expect("UIDENT").text
            pats = []
            while not ts.at("->"):
                sub = _IRTermParser(ts)
                pats.append(_norm_pat(sub._pattern_atom()))
            ts.expect("->")
            hbody = _seq(ts)
            handlers.append((exn, tuple(pats), hbody))
            if ts.at("|"):
                ts.next()
                continue
            break
        ts.expect_word("end")
        return IR.ETry(body, tuple(handlers))
    if ts.at_word("while"):
        ts.next()
        cond = _control(ts)
        ts.expect_word("do")
        spec = _loop_spec(ts)
        body = _seq(ts)
        ts.expect_word("done")
        return IR.EWhile(cond, spec, body)
    if ts.at_word("for"):
        ts.next()
        var = ts.expect("IDENT").text
        ts.expect("=")
        lo = _control(ts)
        ts.expect_word("to")
        hi = _control(ts)
        ts.expect_word("do")
        spec = _loop_spec(ts)
        body = _seq(ts)
        ts.expect_word("done")
        return IR.EFor(var, lo, hi, spec, body)
    if ts.at_word("fun"):
        ts.next()
        params = _params(ts)
        spec = _spec(ts)
        ts.expect("->")
        return IR.EFun(params, spec, _seq(ts))
    if ts.at_word("raise"):
        ts.next()
        if ts.at("("):
            ts.next()
            exn = ts.expect("UIDENT").text
            args = []
            while not ts.at(")"):
                args.append(_atom(ts))
            ts.expect(")")
            return IR.ERaise(exn, tuple(args))
        exn = ts.expect("UIDENT").text
        return IR.ERaise(exn, ())
    if ts.at_word("ghost"):
        ts.next()
        return IR.EGhost(_atom_postfix(ts))
    return _assign(ts)


def _assign(ts: TokenStream) -> IR.TgtExpr:
    e = _binop(ts, 0)
    if ts.at("<-"):
        ts.next()
        value = _binop(ts, 0)
        if isinstance(e, IR.EField):
            return IR.ESetField(e.expr, e.field_name, value)
        if isinstance(e, IR.EArrayGet):
            return IR.EArraySet(e.array, e.index, value)
        raise ParseError("bad assignment target", ts.current.loc)
    return e


_LEVELS = [["||"], ["&&"], ["=", "<>", "<", "<=", ">", ">="], ["++"],
           ["+", "-"], ["*", "/", "mod"]]


def _binop(ts: TokenStream, level: int) -> IR.TgtExpr:
    if level >= len(_LEVELS):
        return _app(ts)
    ops = _LEVELS[level]
    e = _binop(ts, level + 1)
    while (ts.current.kind in ops
           or (ts.current.kind == "IDENT" and ts.current.text in ops)):
        op = ts.next().text
        rhs = _binop(ts, level + 1)
        name = "@" if op == "++" else op
        e = IR.EApp(name, (e, rhs))
    return e


def _app(ts: TokenStream) -> IR.TgtExpr:
    if ts.at_word("not"):
        ts.next()
        return IR.EApp("not", (_app(ts),))
    if ts.current.kind == "UIDENT":
        name = ts.next().text
        args = []
        while _starts_atom(ts):
            args.append(_atom_postfix(ts))
        cname = {"Nil": "[]", "Cons": "::"}.get(name, name)
        return IR.EConstruct(cname, tuple(args))
    head = _atom_postfix(ts)
    if isinstance(head, IR.EVar):
        args = []
        while _starts_atom(ts):
            args.append(_atom_postfix(ts))
        if args:
            name = {"reverse": "reverse", "length": "length"}.get(
                head.name, head.name)
            return IR.EApp(name, tuple(args))
    return head


def _starts_atom(ts: TokenStream) -> bool:
    tok = ts.current
    if tok.kind in ("INT", "(", "{", "UIDENT"):
        return True
    if tok.kind == "IDENT":
        return tok.text not in _STOP and tok.text not in _DECL_WORDS \
            and tok.text not in _SPEC_WORDS and tok.text not in (
                "if", "match", "try", "while", "for", "fun", "raise",
                "ghost", "absurd", "not", "mod", "true", "false")
    return False


def _atom_postfix(ts: TokenStream) -> IR.TgtExpr:
    e = _atom(ts)
    while True:
        if ts.at(".") and ts.peek().kind == "IDENT":
            ts.next()
            e = IR.EField(e, ts.next().text)
        elif ts.at(".("):
            ts.next()
            idx = _binop(ts, 0)
            ts.expect(")")
            e = IR.EArrayGet(e, idx)
        else:
            return e


def _atom(ts: TokenStream) -> IR.TgtExpr:
    tok = ts.current
    if tok.kind == "INT":
        ts.next()
        return IR.EConst(int(tok.text))
    if ts.at_word("true"):
        ts.next()
        return IR.EConst(True)
    if ts.at_word("false"):
        ts.next()
        return IR.EConst(False)
    if ts.at_word("absurd"):
        ts.next()
        return IR.EAbsurd()
    if tok.kind == "IDENT":
        ts.next()
        return IR.EVar(tok.text)
    if tok.kind == "UIDENT":
        ts.next()
        cname = {"Nil": "[]", "Cons": "::"}.get(tok.text, tok.text)
        return IR.EConstruct(cname, ())
    if tok.kind == "-":
        ts.next()
        inner = _atom(ts)
        if isinstance(inner, IR.EConst) and isinstance(inner.value, int):
            return IR.EConst(-inner.value)
        return IR.EApp("-", (IR.EConst(0), inner))
    if ts.at("("):
        ts.next()
        if ts.at(")"):
            ts.next()
            return IR.EConst(None)
        items = [_seq(ts)]
        while ts.at(","):
            ts.next()
            items.append(_seq(ts))
        ts.expect(")")
        if len(items) == 1:
            return items[0]
        return IR.ETuple(tuple(items))
    if ts.at("{"):
        ts.next()
        fields = []
        while not ts.at("}"):
            fname = ts.expect("IDENT").text
            ts.expect("=")
            fields.append((fname, _binop(ts, 0)))
            if ts.at(";"):
                ts.next()
        ts.expect("}")
        return IR.ERecord(tuple(fields))
    raise ParseError(f"unexpected {tok.text or tok.kind!r} in IR expression",
                     tok.loc)
