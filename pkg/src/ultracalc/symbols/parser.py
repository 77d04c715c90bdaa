"""Parser and printer for the symbol expression language.

Grammar: numbers; identifiers x, xi, y (x1, xi2, ... when d > 1; the constant
i); operators + - * / ^ with integer exponents; functions exp(...) and
angle(...) for the Japanese bracket; parentheses.  print -> parse is the
identity up to whitespace.

Symbol files are UTF-8 text with one definition per line, ``name = <expr>``;
blank lines and lines starting with '#' are ignored.
"""

from __future__ import annotations

import re
from fractions import Fraction

from . import expr as ex

__all__ = ["ParseError", "parse", "to_text", "load_symbol_file"]


class ParseError(ValueError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{message} (line {line}, column {column})")
        self.line = line
        self.column = column


_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>\d+(?:\.\d+)?(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^()]))"
)

_VAR_RE = re.compile(r"^(x|xi|y)(\d*)$")


class _Tokenizer:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0
        self.tokens = []
        self._scan()
        self.i = 0

    def _line_col(self, pos):
        line = self.text.count("\n", 0, pos) + 1
        col = pos - (self.text.rfind("\n", 0, pos) + 1) + 1
        return line, col

    def _scan(self):
        pos = 0
        while pos < len(self.text):
            m = _TOKEN_RE.match(self.text, pos)
            if m is None or m.end() == pos:
                rest = self.text[pos:].lstrip()
                if not rest:
                    break
                line, col = self._line_col(pos + (len(self.text[pos:]) - len(rest)))
                raise ParseError(f"unexpected character {rest[0]!r}", line, col)
            if m.lastgroup == "num":
                kind, val = "num", m.group("num")
            elif m.lastgroup == "name":
                kind, val = "name", m.group("name")
            else:
                kind, val = "op", m.group("op")
            self.tokens.append((kind, val, m.start() + len(m.group(0)) - len(m.group(m.lastgroup))))
            pos = m.end()

    def peek(self):
        if self.i < len(self.tokens):
            return self.tokens[self.i]
        return ("eof", "", len(self.text))

    def next(self):
        tok = self.peek()
        self.i += 1
        return tok

    def error(self, message, tok=None):
        tok = tok or self.peek()
        line, col = self._line_col(tok[2])
        raise ParseError(message, line, col)


def parse(text: str) -> ex.Expr:
    """Parse an expression in the symbol grammar."""
    tz = _Tokenizer(text)
    node = _parse_sum(tz)
    if tz.peek()[0] != "eof":
        tz.error(f"unexpected token {tz.peek()[1]!r}")
    return node


def _parse_sum(tz):
    node = _parse_term(tz)
    while tz.peek()[:2] in (("op", "+"), ("op", "-")):
        op = tz.next()[1]
        rhs = _parse_term(tz)
        node = node + rhs if op == "+" else node - rhs
    return node


def _parse_term(tz):
    node = _parse_unary(tz)
    while tz.peek()[:2] in (("op", "*"), ("op", "/")):
        op = tz.next()[1]
        rhs = _parse_unary(tz)
        node = node * rhs if op == "*" else ex.div(node, rhs)
    return node


def _parse_unary(tz):
    if tz.peek()[:2] == ("op", "-"):
        tz.next()
        return ex.neg(_parse_unary(tz))
    if tz.peek()[:2] == ("op", "+"):
        tz.next()
        return _parse_unary(tz)
    return _parse_power(tz)


def _parse_power(tz):
    base = _parse_atom(tz)
    if tz.peek()[:2] == ("op", "^"):
        tz.next()
        n = _parse_exponent(tz)
        return ex.pow_(base, n)
    return base


def _parse_exponent(tz):
    sign = 1
    if tz.peek()[:2] == ("op", "-"):
        tz.next()
        sign = -1
    tok = tz.peek()
    if tok[:2] == ("op", "("):
        tz.next()
        n = _parse_exponent(tz)
        if tz.peek()[:2] != ("op", ")"):
            tz.error("expected ')' after exponent")
        tz.next()
        return sign * n
    if tok[0] != "num":
        tz.error("expected integer exponent")
    tz.next()
    if "." in tok[1] or "e" in tok[1] or "E" in tok[1]:
        tz.error("exponent must be an integer", tok)
    return sign * int(tok[1])


def _parse_atom(tz):
    tok = tz.next()
    kind, val, _ = tok
    if kind == "num":
        if "." in val or "e" in val or "E" in val:
            return ex.Const(ex.ExactC(Fraction(float(val)), 0))
        return ex.Const(ex.ExactC(Fraction(int(val)), 0))
    if kind == "name":
        if val in ("exp", "angle"):
            if tz.peek()[:2] != ("op", "("):
                tz.error(f"expected '(' after {val}")
            tz.next()
            if val == "angle":
                inner = tz.next()
                m = _VAR_RE.match(inner[1]) if inner[0] == "name" else None
                if m is None:
                    tz.error("angle(...) takes a variable block", inner)
                if tz.peek()[:2] != ("op", ")"):
                    tz.error("expected ')'")
                tz.next()
                node = ex.angle(m.group(1))
            else:
                arg = _parse_sum(tz)
                if tz.peek()[:2] != ("op", ")"):
                    tz.error("expected ')'")
                tz.next()
                node = ex.exp(arg)
            return node
        if val == "i":
            return ex.Const(ex.I_UNIT)
        m = _VAR_RE.match(val)
        if m is None:
            tz.error(f"unknown identifier {val!r}", tok)
        block, idx = m.group(1), m.group(2)
        index = int(idx) - 1 if idx else 0
        if idx and int(idx) < 1:
            tz.error("variable indices start at 1", tok)
        return ex.Var(block, index)
    if (kind, val) == ("op", "("):
        node = _parse_sum(tz)
        if tz.peek()[:2] != ("op", ")"):
            tz.error("expected ')'")
        tz.next()
        return node
    tz.error(f"unexpected token {val!r}", tok)


# ---------------------------------------------------------------------------
# printing
# ---------------------------------------------------------------------------

def _frac_text(q: Fraction) -> str:
    if q.denominator == 1:
        return str(q.numerator)
    f = float(q)
    if Fraction(f) == q:
        return repr(f)
    return f"{q.numerator}/{q.denominator}"


def _const_text(c: ex.ExactC) -> str:
    if c.im == 0:
        if c.re < 0:
            return f"(-{_frac_text(-c.re)})" if "/" not in _frac_text(-c.re) else f"(-({_frac_text(-c.re)}))"
        return _frac_text(c.re)
    re_part = None if c.re == 0 else _frac_text(c.re) if c.re > 0 else f"-{_frac_text(-c.re)}"
    if c.im == 1:
        im_part = "i"
    elif c.im == -1:
        im_part = "-i"
    elif c.im > 0:
        im_part = f"{_frac_text(c.im)}*i"
    else:
        im_part = f"-{_frac_text(-c.im)}*i"
    if re_part is None:
        return f"({im_part})" if im_part.startswith("-") else im_part
    joined = f"{re_part} + {im_part[0:]}" if not im_part.startswith("-") else f"{re_part} - {im_part[1:]}"
    return f"({joined})"


def _var_text(v: ex.Var) -> str:
    return v.block if v.index == 0 else f"{v.block}{v.index + 1}"


_PREC = {"sum": 1, "prod": 2, "unary": 3, "pow": 4, "atom": 5}


def _text(e: ex.Expr) -> tuple[str, int]:
    if isinstance(e, ex.Const):
        s = _const_text(e.value)
        return s, _PREC["atom"] if not s.startswith("(") else _PREC["atom"]
    if isinstance(e, ex.Var):
        return _var_text(e), _PREC["atom"]
    if isinstance(e, ex.Angle):
        return f"angle({e.block})", _PREC["atom"]
    if isinstance(e, ex.Exp):
        return f"exp({_text(e.arg)[0]})", _PREC["atom"]
    if isinstance(e, ex.Sum):
        parts = [_wrap(t, _PREC["sum"]) for t in e.terms]
        return " + ".join(parts), _PREC["sum"]
    if isinstance(e, ex.Prod):
        parts = [_wrap(f, _PREC["prod"] + 1) if isinstance(f, ex.Sum) else _wrap(f, _PREC["prod"]) for f in e.factors]
        return "*".join(parts), _PREC["prod"]
    if isinstance(e, ex.Quot):
        return f"{_wrap(e.num, _PREC['prod'] + 1)}/{_wrap(e.den, _PREC['prod'] + 1)}", _PREC["prod"]
    if isinstance(e, ex.Pow):
        n = f"({e.n})" if e.n < 0 else str(e.n)
        return f"{_wrap(e.base, _PREC['pow'] + 1)}^{n}", _PREC["pow"]
    raise TypeError(type(e))


def _wrap(e: ex.Expr, min_prec: int) -> str:
    s, prec = _text(e)
    if prec < min_prec:
        return f"({s})"
    return s


def to_text(e: ex.Expr) -> str:
    """Render in the symbol grammar (reparses to a structurally equal tree)."""
    return _text(e)[0]


def load_symbol_file(path) -> dict:
    """Read ``name = expr`` lines into an ordered dict of parsed trees."""
    out: dict[str, ex.Expr] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for ln, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ParseError("expected 'name = expression'", ln, 1)
            name, text = line.split("=", 1)
            name = name.strip()
            if not re.match(r"^[A-Za-z_][A-Za-z_0-9-]*$", name):
                raise ParseError(f"bad symbol name {name!r}", ln, 1)
            try:
                out[name] = parse(text)
            except ParseError as err:
                raise ParseError(f"in {name}: {err}", ln, getattr(err, "column", 1)) from err
    return out
