"""Tokenizer for mini-ML source text and specification payloads.

Special comments `(*@ ... *)` become SPEC tokens carrying their payload
verbatim (surrounding whitespace trimmed); ordinary `(* ... *)` comments are
skipped and may nest.  Qualified names with capitalized prefixes (List.rev,
E.t) lex as single identifiers; `x.field` lexes as three tokens so the parser
can build field accesses.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..diagnostics import Loc, ParseError

# multi-character symbols, longest first
_SYMBOLS = [
    "[@", ":=", "<-", "->", "<->", "<=", ">=", "<>", "::", "++", "&&",
    "||", "/\\", "\\/", ".(", "(", ")", "[", "]", "{", "}", ";", ":", ",",
    ".", "=", "<", ">", "+", "-", "*", "/", "@", "|", "!", "_", "'",
]
_SYMBOLS.sort(key=len, reverse=True)


@dataclass(frozen=True)
class Token:
    kind: str  # IDENT, UIDENT, INT, SPEC, symbol text, or EOF
    text: str
    loc: Loc


def tokenize(source: str, filename: str = "<input>") -> list[Token]:
    tokens: list[Token] = []
    i = 0
    line = 1
    col = 0
    n = len(source)

    def loc() -> Loc:
        return Loc(filename, line, col)

    def advance(k: int) -> None:
        nonlocal i, line, col
        for _ in range(k):
            if i < n and source[i] == "\n":
                line += 1
                col = 0
            else:
                col += 1
            i += 1

    while i < n:
        c = source[i]
        if c in " \t\r\n":
            advance(1)
            continue
        if source.startswith("(*@", i):
            start = loc()
            advance(3)
            depth = 1
            body_start = i
            while i < n and depth > 0:
                if source.startswith("*)", i):
                    depth -= 1
                    if depth == 0:
                        break
                    advance(2)
                elif source.startswith("(*", i):
                    raise ParseError("ordinary comment nested in a spec comment",
                                     loc())
                else:
                    advance(1)
            if depth != 0:
                raise ParseError("unterminated spec comment", start)
            payload = source[body_start:i].strip()
            advance(2)
            tokens.append(Token("SPEC", payload, start))
            continue
        if source.startswith("(*", i):
            start = loc()
            advance(2)
            depth = 1
            while i < n and depth > 0:
                if source.startswith("*)", i):
                    depth -= 1
                    advance(2)
                elif source.startswith("(*", i):
                    depth += 1
                    advance(2)
                else:
                    advance(1)
            if depth != 0:
                raise ParseError("unterminated comment", start)
            continue
        if c.isdigit():
            start = loc()
            j = i
            while j < n and source[j].isdigit():
                j += 1
            tokens.append(Token("INT", source[i:j], start))
            advance(j - i)
            continue
        if c.isalpha():
            start = loc()
            j = i
            while j < n and (source[j].isalnum() or source[j] in "_'"):
                j += 1
            word = source[i:j]
            # qualified path: capitalized prefix segments joined by dots
            while (word[0].isupper() and j < n and source[j] == "."
                   and j + 1 < n and source[j + 1].isalpha()):
                k = j + 1
                while k < n and (source[k].isalnum() or source[k] in "_'"):
                    k += 1
                word = word + "." + source[j + 1:k]
                j = k
            kind = "UIDENT" if word[0].isupper() else "IDENT"
            tokens.append(Token(kind, word, start))
            advance(j - i)
            continue
        if c == "_" and i + 1 < n and (source[i + 1].isalnum() or source[i + 1] == "_"):
            start = loc()
            j = i
            while j < n and (source[j].isalnum() or source[j] in "_'"):
                j += 1
            tokens.append(Token("IDENT", source[i:j], start))
            advance(j - i)
            continue
        for sym in _SYMBOLS:
            if source.startswith(sym, i):
                tokens.append(Token(sym, sym, loc()))
                advance(len(sym))
                break
        else:
            raise ParseError(f"unexpected character {c!r}", loc())
    tokens.append(Token("EOF", "", loc()))
    return tokens


class TokenStream:
    """Cursor over a token list with one-token operations."""

    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.pos = 0

    @property
    def current(self) -> Token:
        return self.tokens[self.pos]

    def peek(self, offset: int = 1) -> Token:
        j = min(self.pos + offset, len(self.tokens) - 1)
        return self.tokens[j]

    def at(self, kind: str, text: str | None = None) -> bool:
        tok = self.current
        return tok.kind == kind and (text is None or tok.text == text)

    def at_word(self, word: str) -> bool:
        return self.current.kind in ("IDENT", "UIDENT") and self.current.text == word

    def next(self) -> Token:
        tok = self.current
        if tok.kind != "EOF":
            self.pos += 1
        return tok

    def expect(self, kind: str, what: str | None = None) -> Token:
        if not self.at(kind):
            expected = what or kind
            raise ParseError(
                f"expected {expected}, found {self.current.text or self.current.kind!r}",
                self.current.loc)
        return self.next()

    def expect_word(self, word: str) -> Token:
        if not self.at_word(word):
            raise ParseError(
                f"expected '{word}', found {self.current.text or self.current.kind!r}",
                self.current.loc)
        return self.next()
