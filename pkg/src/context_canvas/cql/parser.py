"""Hand-written recursive-descent parser for the query subset.

Grammar (keywords case-insensitive, identifiers case-sensitive)::

    query      := clause+ RETURN return_item ("," return_item)*
    clause     := ["OPTIONAL"] "MATCH" pattern
    pattern    := node [ "-[" rel_body "]->" node | "<-[" rel_body "]-" node ]
    node       := "(" [ident] [":" ident] [props] ")"
    rel_body   := [ident] [":" ident]
    props      := "{" ident ":" literal ("," ident ":" literal)* "}"
    literal    := string | number | "true" | "false"
    return_item:= ident | "collect" "(" ident ")"

Parse errors carry the byte offset, the expected-token set and the found
token. Anything outside the subset (WHERE, multi-hop paths, comma-separated
patterns, CREATE, ...) is a ParseError: callers fall back to the fixed
retrieval template when an LLM emits a query we cannot run.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from ..errors import DataError
from .ast import Literal, NodePattern, PatternClause, QueryAst, RelPattern, ReturnItem

_KEYWORDS = {"match", "optional", "return", "collect", "true", "false"}


class ParseError(DataError):
    def __init__(self, message: str, offset: int, expected: tuple[str, ...], found: str):
        self.offset = offset
        self.expected = expected
        self.found = found
        super().__init__(f"{message} at offset {offset}: expected {' or '.join(expected)}, found {found}")


@dataclass(frozen=True)
class _Token:
    kind: str  # punctuation kinds, or IDENT / STRING / NUMBER / KEYWORD / EOF
    text: str
    value: object
    offset: int  # byte offset into the UTF-8 encoding of the query


def _byte_offset(text: str, pos: int) -> int:
    return len(text[:pos].encode("utf-8"))


def _tokenize(text: str) -> list[_Token]:
    tokens: list[_Token] = []
    i, n = 0, len(text)
    while i < n:
        char = text[i]
        if char.isspace():
            i += 1
            continue
        offset = _byte_offset(text, i)
        if char == "-" and text[i : i + 2] == "->":
            tokens.append(_Token("->", "->", None, offset))
            i += 2
        elif char == "<" and text[i : i + 2] == "<-":
            tokens.append(_Token("<-", "<-", None, offset))
            i += 2
        elif char in "()[]{}:,-":
            tokens.append(_Token(char, char, None, offset))
            i += 1
        elif char in "'\"":
            quote = char
            i += 1
            chunks: list[str] = []
            while i < n and text[i] != quote:
                if text[i] == "\\" and i + 1 < n:
                    escape = text[i + 1]
                    chunks.append({"n": "\n", "t": "\t", "\\": "\\", "'": "'", '"': '"'}.get(escape, escape))
                    i += 2
                else:
                    chunks.append(text[i])
                    i += 1
            if i >= n:
                raise ParseError("unterminated string", offset, ("closing quote",), "end of input")
            i += 1
            tokens.append(_Token("STRING", quote + "".join(chunks) + quote, "".join(chunks), offset))
        elif char.isdigit() or (char == "+" and i + 1 < n and text[i + 1].isdigit()):
            start = i
            if char == "+":
                i += 1
            while i < n and (text[i].isdigit() or text[i] in ".eE" or (text[i] in "+-" and text[i - 1] in "eE")):
                i += 1
            raw = text[start:i]
            try:
                value: Literal = int(raw)
            except ValueError:
                try:
                    value = float(raw)
                except ValueError:
                    raise ParseError("malformed number", offset, ("number",), raw) from None
            tokens.append(_Token("NUMBER", raw, value, offset))
        elif char.isalpha() or char == "_":
            start = i
            while i < n and (text[i].isalnum() or text[i] == "_"):
                i += 1
            word = text[start:i]
            if word.lower() in _KEYWORDS:
                tokens.append(_Token("KEYWORD", word.lower(), word.lower(), offset))
            else:
                tokens.append(_Token("IDENT", word, word, offset))
        else:
            raise ParseError("unexpected character", offset, ("token",), repr(char))
    tokens.append(_Token("EOF", "", None, _byte_offset(text, n)))
    return tokens


class _Parser:
    def __init__(self, tokens: list[_Token]):
        self.tokens = tokens
        self.pos = 0

    @property
    def current(self) -> _Token:
        return self.tokens[self.pos]

    def _fail(self, expected: tuple[str, ...]) -> ParseError:
        token = self.current
        found = token.text if token.kind != "EOF" else "end of input"
        return ParseError("parse error", token.offset, expected, found)

    def _advance(self) -> _Token:
        token = self.current
        self.pos += 1
        return token

    def _expect(self, kind: str, expected_name: Optional[str] = None) -> _Token:
        if self.current.kind != kind:
            raise self._fail((expected_name or kind,))
        return self._advance()

    def _keyword(self) -> Optional[str]:
        return self.current.value if self.current.kind == "KEYWORD" else None

    def _expect_keyword(self, word: str) -> None:
        if self._keyword() != word:
            raise self._fail((word.upper(),))
        self._advance()

    # ------------------------------------------------------------------

    def parse_query(self) -> QueryAst:
        clauses: list[PatternClause] = []
        while True:
            keyword = self._keyword()
            if keyword in ("match", "optional"):
                clauses.append(self._clause())
            elif keyword == "return":
                break
            else:
                raise self._fail(("MATCH", "OPTIONAL MATCH", "RETURN") if clauses else ("MATCH", "OPTIONAL MATCH"))
        if not clauses:
            raise self._fail(("MATCH", "OPTIONAL MATCH"))
        self._expect_keyword("return")
        items = [self._return_item()]
        while self.current.kind == ",":
            self._advance()
            items.append(self._return_item())
        if self.current.kind != "EOF":
            raise self._fail(("',' or end of query",))
        ast = QueryAst(tuple(clauses), tuple(items))
        self._check_semantics(ast)
        return ast

    def _clause(self) -> PatternClause:
        optional = False
        if self._keyword() == "optional":
            self._advance()
            optional = True
        self._expect_keyword("match")
        source = self._node_pattern()
        relationship = None
        target = None
        if self.current.kind == "-":
            self._advance()
            relationship = self._rel_body()
            self._expect("->", "'->'")
            target = self._node_pattern()
            relationship = RelPattern(relationship.variable, relationship.rel_type, "out")
        elif self.current.kind == "<-":
            self._advance()
            relationship = self._rel_body()
            self._expect("-", "'-'")
            target = self._node_pattern()
            relationship = RelPattern(relationship.variable, relationship.rel_type, "in")
        return PatternClause(source, relationship, target, optional)

    def _node_pattern(self) -> NodePattern:
        self._expect("(", "'('")
        variable = None
        label = None
        properties: tuple[tuple[str, Literal], ...] = ()
        if self.current.kind == "IDENT":
            variable = self._advance().text
        if self.current.kind == ":":
            self._advance()
            label = self._expect("IDENT", "label").text
        if self.current.kind == "{":
            properties = self._property_map()
        if self.current.kind != ")":
            raise self._fail((")", ":", "{") if variable or label else (")", "variable", ":", "{"))
        self._advance()
        return NodePattern(variable, label, properties)

    def _rel_body(self) -> RelPattern:
        self._expect("[", "'['")
        variable = None
        rel_type = None
        if self.current.kind == "IDENT":
            variable = self._advance().text
        if self.current.kind == ":":
            self._advance()
            rel_type = self._expect("IDENT", "relationship type").text
        self._expect("]", "']'")
        return RelPattern(variable, rel_type)

    def _property_map(self) -> tuple[tuple[str, Literal], ...]:
        self._expect("{", "'{'")
        pairs: list[tuple[str, Literal]] = []
        while True:
            key = self._expect("IDENT", "property key").text
            self._expect(":", "':'")
            pairs.append((key, self._literal()))
            if self.current.kind == ",":
                self._advance()
                continue
            break
        self._expect("}", "'}'")
        seen = set()
        for key, _ in pairs:
            if key in seen:
                raise ParseError("parse error", self.current.offset, ("unique property keys",), key)
            seen.add(key)
        return tuple(pairs)

    def _literal(self) -> Literal:
        token = self.current
        if token.kind == "STRING":
            self._advance()
            return token.value  # type: ignore[return-value]
        if token.kind == "NUMBER":
            self._advance()
            return token.value  # type: ignore[return-value]
        if token.kind == "KEYWORD" and token.value in ("true", "false"):
            self._advance()
            return token.value == "true"
        raise self._fail(("string", "number", "true", "false"))

    def _return_item(self) -> ReturnItem:
        if self._keyword() == "collect":
            self._advance()
            self._expect("(", "'('")
            variable = self._expect("IDENT", "variable").text
            self._expect(")", "')'")
            return ReturnItem(variable, collect=True)
        if self.current.kind == "IDENT":
            return ReturnItem(self._advance().text)
        raise self._fail(("variable", "collect("))

    def _check_semantics(self, ast: QueryAst) -> None:
        bound: set[str] = set()
        for clause in ast.clauses:
            names = clause.variables()
            if len(set(names)) != len(names):
                raise ParseError(
                    "parse error", self.tokens[-1].offset, ("distinct variables within one pattern",), str(names)
                )
            bound.update(names)
        for item in ast.return_items:
            if item.variable not in bound:
                raise ParseError(
                    "parse error", self.tokens[-1].offset, ("a bound variable",), item.variable
                )


def parse(query_text: str) -> QueryAst:
    """Parse query text into a :class:`QueryAst`, or raise :class:`ParseError`."""
    return _Parser(_tokenize(query_text)).parse_query()
