"""Concrete syntax: lexer, recursive-descent parser and pretty-printer.

Grammar (EBNF, lowest precedence first)::

    model    ::= decl* ["init" pred ";"] program [";"]
    decl     ::= "var" IDENT ":" INT ".." INT ["wrap"] ";"
    program  ::= choice (";" choice)*             -- right-nested Seq
    choice   ::= prob ("[]" choice)?              -- demonic, right-nested
    prob     ::= atom ("[" rational "]" prob)?    -- probabilistic, right-nested
    atom     ::= "skip" | "abort" | IDENT ":=" arith | "(" program ")"
               | "if" pred "then" program ["else" program] "fi"
               | "do" pred "->" program "od"

    pred     ::= conj ("or" conj)*      (also "||", "|")
    conj     ::= neg ("and" neg)*       (also "&&", "&")
    neg      ::= ("not" | "!") neg | "true" | "false" | '"' label '"'
               | "(" pred ")" | arith CMP arith
    arith    ::= term (("+" | "-") term)*
    term     ::= unary (("*" | "/" | "%") unary)*
    unary    ::= "-" unary | INT | IDENT | "(" arith ")"

    expect   ::= eterm (("+" | "-") eterm)*    -- "-" truncates at zero
    eterm    ::= efactor (("*" | "/") efactor)*
    efactor  ::= NUMBER | "[" pred "]" | "(" expect ")"
               | ("max" | "min") "(" expect "," expect ")"

    query    ::= ("Pmin" | "Pmax") "=?" "[" "true" "U" "<=" INT pred "]"
               | ("Rmin" | "Rmax") "=?" "[" "F" pred "]"

``//`` and ``#`` start comments that run to the end of the line.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional

from pgclabs.ast import (
    Abort,
    And,
    Assign,
    BinOp,
    BoolLit,
    BoundedUntil,
    Cmp,
    DemonicChoice,
    EBin,
    EConst,
    ExpectedReward,
    If,
    Indicator,
    Label,
    Loop,
    Model,
    Neg,
    Not,
    Num,
    Or,
    ProbChoice,
    Seq,
    Skip,
    Var,
    VarDecl,
)

KEYWORDS = {
    "var", "wrap", "init", "skip", "abort", "if", "then", "else", "fi",
    "do", "od", "true", "false", "not", "and", "or", "max", "min",
}

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+|//[^\n]*|\#[^\n]*)
  | (?P<num>\d+(?:\.\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<label>"[^"\n]*")
  | (?P<sym>:=|\.\.|->|=\?|==|!=|<=|>=|&&|\|\||[:;()\[\],+\-*/%=<>!&|])
    """,
    re.VERBOSE,
)

_SYMBOL_ALIASES = {"==": "=", "&&": "and", "&": "and", "||": "or", "|": "or", "!": "not"}


@dataclass(frozen=True)
class Diagnostic:
    line: int
    col: int
    severity: str
    message: str

    def __str__(self) -> str:
        return f"{self.line}:{self.col}: {self.severity}: {self.message}"


class ParseError(ValueError):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {message}")
        self.diagnostic = Diagnostic(line, col, "error", message)


@dataclass(frozen=True)
class Token:
    kind: str  # num | ident | kw | label | sym | eof
    text: str
    line: int
    col: int


def tokenize(text: str) -> List[Token]:
    tokens = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        value = m.group()
        col = pos - line_start + 1
        if kind == "ws":
            newlines = value.count("\n")
            if newlines:
                line += newlines
                line_start = pos + value.rindex("\n") + 1
        elif kind == "ident" and value in KEYWORDS:
            tokens.append(Token("kw", value, line, col))
        elif kind == "sym":
            alias = _SYMBOL_ALIASES.get(value)
            if alias in ("and", "or", "not"):
                tokens.append(Token("kw", alias, line, col))
            else:
                tokens.append(Token("sym", alias or value, line, col))
        else:
            tokens.append(Token(kind, value, line, col))
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.toks = tokenize(text)
        self.i = 0

    # -- token helpers --------------------------------------------------------

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def peek(self, offset: int = 1) -> Token:
        return self.toks[min(self.i + offset, len(self.toks) - 1)]

    def at(self, text: str, kind: Optional[str] = None) -> bool:
        t = self.tok
        return t.text == text and (kind is None or t.kind == kind) and t.kind != "label"

    def advance(self) -> Token:
        t = self.tok
        self.i += 1
        return t

    def expect(self, text: str) -> Token:
        if not self.at(text):
            self.fail(f"expected {text!r}")
        return self.advance()

    def fail(self, message: str, tok: Optional[Token] = None):
        t = tok or self.tok
        found = "end of input" if t.kind == "eof" else repr(t.text)
        raise ParseError(f"{message}, found {found}", t.line, t.col)

    def loc(self, tok: Optional[Token] = None):
        t = tok or self.tok
        return (t.line, t.col)

    def expect_end(self):
        if self.tok.kind != "eof":
            self.fail("expected end of input")

    # -- declarations ---------------------------------------------------------

    def model(self) -> Model:
        decls = []
        seen = {}
        while self.at("var", "kw"):
            d = self.decl()
            if d.name in seen:
                raise ParseError(f"duplicate declaration of {d.name!r}", *d.loc)
            seen[d.name] = d
            decls.append(d)
        init = None
        if self.at("init", "kw"):
            self.advance()
            init = self.pred()
            self.expect(";")
        if self.tok.kind == "eof":
            self.fail("expected a program")
        prog = self.program()
        self.expect_end()
        return Model(tuple(decls), prog, init)

    def decl(self) -> VarDecl:
        start = self.expect("var")
        name = self.ident()
        self.expect(":")
        lo = self.signed_int()
        self.expect("..")
        hi = self.signed_int()
        wrap = False
        if self.at("wrap", "kw"):
            self.advance()
            wrap = True
        self.expect(";")
        return VarDecl(name, lo, hi, wrap, loc=self.loc(start))

    def ident(self) -> str:
        if self.tok.kind != "ident":
            self.fail("expected an identifier")
        return self.advance().text

    def signed_int(self) -> int:
        sign = 1
        if self.at("-", "sym"):
            self.advance()
            sign = -1
        if self.tok.kind != "num" or "." in self.tok.text:
            self.fail("expected an integer")
        return sign * int(self.advance().text)

    # -- programs -------------------------------------------------------------

    def program(self):
        first = self.choice()
        if self.at(";"):
            if self._ends_program(self.peek()):
                self.advance()
                return first
            start = self.advance()
            return Seq(first, self.program(), loc=self.loc(start))
        return first

    @staticmethod
    def _ends_program(tok: Token) -> bool:
        return tok.kind == "eof" or (tok.kind in ("kw", "sym") and tok.text in ("od", "fi", "else", ")"))

    def choice(self):
        left = self.prob()
        if self.at("[") and self.peek().text == "]" and self.peek().kind == "sym":
            start = self.advance()
            self.advance()
            return DemonicChoice(left, self.choice(), loc=self.loc(start))
        return left

    def prob(self):
        left = self.atom()
        if self.at("[") and not (self.peek().text == "]" and self.peek().kind == "sym"):
            start = self.advance()
            p = self.rational()
            self.expect("]")
            return ProbChoice(p, left, self.prob(), loc=self.loc(start))
        return left

    def rational(self) -> Fraction:
        if self.tok.kind != "num":
            self.fail("expected a rational probability")
        value = Fraction(self.advance().text)
        if self.at("/"):
            self.advance()
            if self.tok.kind != "num":
                self.fail("expected a denominator")
            den = Fraction(self.advance().text)
            if den == 0:
                self.fail("zero denominator")
            value /= den
        return value

    def atom(self):
        t = self.tok
        if self.at("skip", "kw"):
            self.advance()
            return Skip(loc=self.loc(t))
        if self.at("abort", "kw"):
            self.advance()
            return Abort(loc=self.loc(t))
        if t.kind == "ident":
            name = self.advance().text
            self.expect(":=")
            return Assign(name, self.arith(), loc=self.loc(t))
        if self.at("("):
            self.advance()
            p = self.program()
            self.expect(")")
            return p
        if self.at("if", "kw"):
            self.advance()
            guard = self.pred()
            self.expect("then")
            then = self.program()
            orelse = Skip()
            if self.at("else", "kw"):
                self.advance()
                orelse = self.program()
            self.expect("fi")
            return If(guard, then, orelse, loc=self.loc(t))
        if self.at("do", "kw"):
            self.advance()
            guard = self.pred()
            self.expect("->")
            body = self.program()
            self.expect("od")
            return Loop(guard, body, loc=self.loc(t))
        self.fail("expected a command")

    # -- predicates -----------------------------------------------------------

    def pred(self):
        left = self.conj()
        while self.at("or", "kw"):
            t = self.advance()
            left = Or(left, self.conj(), loc=self.loc(t))
        return left

    def conj(self):
        left = self.neg()
        while self.at("and", "kw"):
            t = self.advance()
            left = And(left, self.neg(), loc=self.loc(t))
        return left

    def neg(self):
        t = self.tok
        if self.at("not", "kw"):
            self.advance()
            return Not(self.neg(), loc=self.loc(t))
        if self.at("true", "kw") or self.at("false", "kw"):
            self.advance()
            return BoolLit(t.text == "true", loc=self.loc(t))
        if t.kind == "label":
            self.advance()
            return Label(t.text[1:-1], loc=self.loc(t))
        if self.at("("):
            # "(" may open a predicate or an arithmetic operand of a comparison
            save = self.i
            self.advance()
            try:
                inner = self.pred()
                self.expect(")")
                if not (self.tok.kind == "sym" and self.tok.text in _CMP_OPS):
                    return inner
            except ParseError:
                pass
            self.i = save
        left = self.arith()
        op = self.tok
        if not (op.kind == "sym" and op.text in _CMP_OPS):
            self.fail("expected a comparison operator")
        self.advance()
        return Cmp(op.text, left, self.arith(), loc=self.loc(op))

    # -- arithmetic -----------------------------------------------------------

    def arith(self):
        left = self.term()
        while self.tok.kind == "sym" and self.tok.text in ("+", "-"):
            t = self.advance()
            left = BinOp(t.text, left, self.term(), loc=self.loc(t))
        return left

    def term(self):
        left = self.unary()
        while self.tok.kind == "sym" and self.tok.text in ("*", "/", "%"):
            t = self.advance()
            left = BinOp(t.text, left, self.unary(), loc=self.loc(t))
        return left

    def unary(self):
        t = self.tok
        if self.at("-", "sym"):
            self.advance()
            return Neg(self.unary(), loc=self.loc(t))
        if t.kind == "num":
            if "." in t.text:
                self.fail("expected an integer")
            self.advance()
            return Num(int(t.text), loc=self.loc(t))
        if t.kind == "ident":
            self.advance()
            return Var(t.text, loc=self.loc(t))
        if self.at("("):
            self.advance()
            e = self.arith()
            self.expect(")")
            return e
        self.fail("expected an arithmetic expression")

    # -- expectations ---------------------------------------------------------

    def expectation(self):
        left = self.eterm()
        while self.tok.kind == "sym" and self.tok.text in ("+", "-"):
            t = self.advance()
            left = _fold(t.text, left, self.eterm(), self.loc(t))
        return left

    def eterm(self):
        left = self.efactor()
        while self.tok.kind == "sym" and self.tok.text in ("*", "/"):
            t = self.advance()
            right = self.efactor()
            if t.text == "/" and isinstance(right, EConst) and right.value == 0:
                self.fail("division by zero", t)
            left = _fold(t.text, left, right, self.loc(t))
        return left

    def efactor(self):
        t = self.tok
        if t.kind == "num":
            self.advance()
            return EConst(Fraction(t.text), loc=self.loc(t))
        if self.at("["):
            self.advance()
            p = self.pred()
            self.expect("]")
            return Indicator(p, loc=self.loc(t))
        if self.at("("):
            self.advance()
            e = self.expectation()
            self.expect(")")
            return e
        if self.at("max", "kw") or self.at("min", "kw"):
            self.advance()
            self.expect("(")
            a = self.expectation()
            self.expect(",")
            b = self.expectation()
            self.expect(")")
            return EBin(t.text, a, b, loc=self.loc(t))
        self.fail("expected an expectation")

    # -- queries --------------------------------------------------------------

    def query(self):
        t = self.tok
        if t.kind != "ident" or t.text not in ("Pmin", "Pmax", "Rmin", "Rmax"):
            self.fail("expected Pmin, Pmax, Rmin or Rmax")
        self.advance()
        mode = t.text[1:]
        self.expect("=?")
        self.expect("[")
        if t.text[0] == "P":
            self.expect("true")
            if not (self.tok.kind == "ident" and self.tok.text == "U"):
                self.fail("expected 'U'")
            self.advance()
            self.expect("<=")
            h = self.tok
            if self.at("-", "sym"):
                raise ParseError("horizon must be a non-negative integer", h.line, h.col)
            if h.kind != "num" or "." in h.text:
                self.fail("expected an integer horizon")
            self.advance()
            target = self.pred()
            self.expect("]")
            self.expect_end()
            return BoundedUntil(target, int(h.text), mode)
        if not (self.tok.kind == "ident" and self.tok.text == "F"):
            self.fail("expected 'F'")
        self.advance()
        target = self.pred()
        self.expect("]")
        self.expect_end()
        return ExpectedReward(target, mode)


_CMP_OPS = ("=", "!=", "<", "<=", ">", ">=")


def _fold(op, left, right, loc):
    if isinstance(left, EConst) and isinstance(right, EConst) and op in ("*", "/"):
        value = left.value * right.value if op == "*" else left.value / right.value
        return EConst(value, loc=left.loc)
    return EBin(op, left, right, loc=loc)


# -- public entry points ------------------------------------------------------


def parse_model(text: str) -> Model:
    """Parse a complete model: declarations, optional ``init`` and a program."""
    return _Parser(text).model()


def parse_program(text: str):
    p = _Parser(text)
    if p.tok.kind == "eof":
        p.fail("expected a program")
    prog = p.program()
    p.expect_end()
    return prog


def parse_predicate(text: str):
    p = _Parser(text)
    out = p.pred()
    p.expect_end()
    return out


def parse_arith(text: str):
    p = _Parser(text)
    out = p.arith()
    p.expect_end()
    return out


def parse_expectation(text: str):
    p = _Parser(text)
    out = p.expectation()
    p.expect_end()
    return out


def parse_query(text: str):
    """Parse ``Pmin=? [true U<=T pred]`` or ``Rmax=? [F pred]`` style queries."""
    return _Parser(text).query()


def parse_predicate_file(text: str) -> list:
    """One predicate per non-blank line; ``#`` and ``//`` start comments."""
    preds = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = re.split(r"#|//", raw, maxsplit=1)[0].strip()
        if not line:
            continue
        try:
            preds.append(parse_predicate(line))
        except ParseError as exc:
            d = exc.diagnostic
            raise ParseError(d.message, lineno, d.col) from None
    return preds


# -- printing -----------------------------------------------------------------

_ARITH_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "%": 2}


def _arith(e, ctx: int = 0) -> str:
    if isinstance(e, Num):
        s = str(e.value)
        return f"({s})" if e.value < 0 else s
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Neg):
        return "-" + _arith(e.operand, 3)
    prec = _ARITH_PREC[e.op]
    s = f"{_arith(e.left, prec)} {e.op} {_arith(e.right, prec + 1)}"
    return f"({s})" if prec < ctx else s


def _pred(p, ctx: int = 0) -> str:
    if isinstance(p, BoolLit):
        return "true" if p.value else "false"
    if isinstance(p, Label):
        return f'"{p.name}"'
    if isinstance(p, Cmp):
        s = f"{_arith(p.left)} {p.op} {_arith(p.right)}"
        return f"({s})" if ctx >= 3 else s
    if isinstance(p, Not):
        return "not " + _pred(p.operand, 3)
    if isinstance(p, And):
        s = f"{_pred(p.left, 2)} and {_pred(p.right, 3)}"
        return f"({s})" if ctx > 2 else s
    s = f"{_pred(p.left, 1)} or {_pred(p.right, 2)}"
    return f"({s})" if ctx > 1 else s


def _prog(p, ctx: int = 0) -> str:
    if isinstance(p, Skip):
        return "skip"
    if isinstance(p, Abort):
        return "abort"
    if isinstance(p, Assign):
        return f"{p.var} := {_arith(p.expr)}"
    if isinstance(p, If):
        s = f"if {_pred(p.guard)} then {_prog(p.then)}"
        if not isinstance(p.orelse, Skip):
            s += f" else {_prog(p.orelse)}"
        return s + " fi"
    if isinstance(p, Loop):
        return f"do {_pred(p.guard)} -> {_prog(p.body)} od"
    if isinstance(p, Seq):
        prec, s = 1, f"{_prog(p.first, 2)}; {_prog(p.second, 1)}"
    elif isinstance(p, DemonicChoice):
        prec, s = 2, f"{_prog(p.left, 3)} [] {_prog(p.right, 2)}"
    else:
        prec, s = 3, f"{_prog(p.left, 4)} [{p.prob}] {_prog(p.right, 3)}"
    return f"({s})" if prec < ctx else s


_EXP_PREC = {"+": 1, "-": 1, "*": 2, "/": 2}


def _expect(e, ctx: int = 0) -> str:
    if isinstance(e, EConst):
        s = str(e.value)
        return f"({s})" if "/" in s and ctx >= 2 else s
    if isinstance(e, Indicator):
        return f"[{_pred(e.pred)}]"
    if e.op in ("max", "min"):
        return f"{e.op}({_expect(e.left)}, {_expect(e.right)})"
    prec = _EXP_PREC[e.op]
    s = f"{_expect(e.left, prec)} {e.op} {_expect(e.right, prec + 1)}"
    return f"({s})" if prec < ctx else s


def to_source(node) -> str:
    """Render any AST node (or a whole model) back to concrete syntax."""
    if isinstance(node, Model):
        lines = [
            f"var {d.name}: {d.lo}..{d.hi}{' wrap' if d.wrap else ''};" for d in node.decls
        ]
        if node.init is not None:
            lines.append(f"init {_pred(node.init)};")
        lines.append(_prog(node.program))
        return "\n".join(lines) + "\n"
    if isinstance(node, VarDecl):
        return f"var {node.name}: {node.lo}..{node.hi}{' wrap' if node.wrap else ''};"
    if isinstance(node, BoundedUntil):
        return f"P{node.mode}=? [true U<={node.horizon} {_pred(node.target)}]"
    if isinstance(node, ExpectedReward):
        return f"R{node.mode}=? [F {_pred(node.target)}]"
    if isinstance(node, (Num, Var, Neg, BinOp)):
        return _arith(node)
    if isinstance(node, (BoolLit, Cmp, Not, And, Or, Label)):
        return _pred(node)
    if isinstance(node, (EConst, Indicator, EBin)):
        return _expect(node)
    return _prog(node)
