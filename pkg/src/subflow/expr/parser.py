"""Tokenizer and Pratt parser for the expression grammar.

Grammar (EBNF)::

    expr    = term , { ("+" | "-") , term } ;
    term    = unary , { ("*" | "/") , unary } ;
    unary   = "-" , unary | power ;
    power   = primary , [ "^" , unary ] ;          (* right-associative *)
    primary = number | variable | call | "(" , expr , ")" ;
    call    = name , "(" , expr , ")"
            | "diff" , "(" , expr , "," , variable , ")" ;
    name    = "sin" | "cos" | "exp" | "log" | "sqrt" | "tanh" ;
    variable = "x" , digit , [ digit ] ;            (* x1 .. x99 *)
    number  = digits , [ "." , [ digits ] ] , [ exponent ]
            | "." , digits , [ exponent ] ;

The exponent of ``^`` must not reference any variable.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from ..errors import ArityError, ParseError
from .nodes import FUNCTIONS, Bin, Call, Diff, Lit, Neg, Node, Pow, Var, is_constant

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<var>x\d+)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^(),])
    """,
    re.VERBOSE,
)

MAX_VARIABLE = 99


@dataclass(frozen=True)
class Token:
    kind: str  # "num", "var", "name", "op", "end"
    text: str
    pos: int


def tokenize(source: str) -> list[Token]:
    tokens = []
    pos = 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            raise ParseError(f"unexpected character {source[pos]!r}", pos, source)
        kind = m.lastgroup
        if kind != "ws":
            tokens.append(Token(kind, m.group(), pos))
        pos = m.end()
    tokens.append(Token("end", "", len(source)))
    return tokens


# left binding powers of infix operators
_INFIX_BP = {"+": 10, "-": 10, "*": 20, "/": 20, "^": 40}
_PREFIX_BP = 30


class _Parser:
    def __init__(self, source: str, arity: int):
        self.source = source
        self.arity = arity
        self.tokens = tokenize(source)
        self.i = 0

    def peek(self) -> Token:
        return self.tokens[self.i]

    def advance(self) -> Token:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, text: str) -> Token:
        tok = self.advance()
        if tok.kind != "op" or tok.text != text:
            what = "end of input" if tok.kind == "end" else repr(tok.text)
            raise ParseError(f"expected {text!r}, found {what}", tok.pos, self.source)
        return tok

    def variable(self, tok: Token) -> Var:
        index = int(tok.text[1:])
        if not 1 <= index <= MAX_VARIABLE or tok.text[1] == "0":
            raise ParseError(f"invalid variable name {tok.text!r}", tok.pos, self.source)
        if index > self.arity:
            raise ArityError(
                f"variable {tok.text} at offset {tok.pos} exceeds arity {self.arity}"
            )
        return Var(index)

    def expression(self, rbp: int = 0) -> Node:
        left = self.prefix(self.advance())
        while True:
            tok = self.peek()
            lbp = _INFIX_BP.get(tok.text, 0) if tok.kind == "op" else 0
            if lbp <= rbp:
                return left
            self.advance()
            if tok.text == "^":
                exponent = self.expression(lbp - 1)
                if not is_constant(exponent):
                    raise ParseError("power exponent must be constant", tok.pos, self.source)
                left = Pow(left, exponent)
            else:
                left = Bin(tok.text, left, self.expression(lbp))

    def prefix(self, tok: Token) -> Node:
        if tok.kind == "num":
            return Lit(float(tok.text))
        if tok.kind == "var":
            return self.variable(tok)
        if tok.kind == "name":
            return self.call(tok)
        if tok.kind == "op" and tok.text == "-":
            return Neg(self.expression(_PREFIX_BP))
        if tok.kind == "op" and tok.text == "(":
            inner = self.expression()
            self.expect(")")
            return inner
        if tok.kind == "end":
            raise ParseError("unexpected end of input", tok.pos, self.source)
        raise ParseError(f"unexpected token {tok.text!r}", tok.pos, self.source)

    def call(self, tok: Token) -> Node:
        name = tok.text
        if name == "diff":
            self.expect("(")
            arg = self.expression()
            self.expect(",")
            var_tok = self.advance()
            if var_tok.kind != "var":
                raise ParseError("diff() needs a variable as second argument", var_tok.pos, self.source)
            var = self.variable(var_tok)
            self.expect(")")
            return Diff(arg, var.index)
        if name not in FUNCTIONS:
            raise ParseError(f"unknown function {name!r}", tok.pos, self.source)
        self.expect("(")
        arg = self.expression()
        self.expect(")")
        return Call(name, arg)


def parse_node(source: str, arity: int) -> Node:
    if arity < 1:
        raise ArityError(f"arity must be positive, got {arity}")
    p = _Parser(source, arity)
    node = p.expression()
    tok = p.peek()
    if tok.kind != "end":
        raise ParseError(f"unexpected token {tok.text!r}", tok.pos, source)
    return node
