"""Exact rational jet-space expressions, the ODE grammar, and total derivatives.

Expressions are rational functions in t and the jet coordinates u^a_k with
exact rational coefficients, held canonically as cancelled sympy quotients.
The text grammar is:

    expr   :=  term  (('+'|'-') term)*
    term   :=  unary (('*'|'/') unary)*
    unary  :=  '-' unary | power
    power  :=  atom ['^' <positive int>]
    atom   :=  <integer> | 't' | u-var | '(' expr ')'
    u-var  :=  'u' '[' <order> ']' '^' <component>

A power directly after a u-var is rejected as ambiguous: write (u[1]^1)^2.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction

import sympy as sp

__all__ = [
    "JetExpr", "ParseError", "parse_expression", "parse_ode",
    "ODESystem", "t_symbol", "jet_symbol", "total_derivative",
    "unrestricted_total_derivative",
]

_T = sp.Symbol("t")
_JET_RE = re.compile(r"^u(\d+)_(\d+)$")


def t_symbol():
    return _T


def jet_symbol(a, k):
    """The coordinate u^a_k (component a, derivative order k)."""
    if a < 1 or k < 0:
        raise ValueError("bad jet indices (a=%d, k=%d)" % (a, k))
    return sp.Symbol("u%d_%d" % (a, k))


def _split_symbol(s):
    if s == _T:
        return ("t", None, None)
    mo = _JET_RE.match(s.name)
    if not mo:
        raise ValueError("foreign symbol %s in jet expression" % s)
    return ("u", int(mo.group(1)), int(mo.group(2)))


class ParseError(ValueError):
    def __init__(self, message, pos):
        super().__init__("%s (at position %d)" % (message, pos))
        self.pos = pos


class JetExpr:
    """A rational function of t and u^a_k, kept in cancelled canonical form."""

    __slots__ = ("expr",)

    def __init__(self, expr):
        if isinstance(expr, JetExpr):
            expr = expr.expr
        expr = sp.sympify(expr, rational=True)
        self.expr = sp.cancel(sp.together(expr))

    # -- constructors ----------------------------------------------------------

    @staticmethod
    def zero():
        return JetExpr(0)

    @staticmethod
    def number(p, q=1):
        return JetExpr(sp.Rational(p, q))

    @staticmethod
    def var_t():
        return JetExpr(_T)

    @staticmethod
    def jet(a, k):
        return JetExpr(jet_symbol(a, k))

    # -- arithmetic -------------------------------------------------------------

    def __add__(self, other):
        return JetExpr(self.expr + JetExpr(other).expr)

    __radd__ = __add__

    def __sub__(self, other):
        return JetExpr(self.expr - JetExpr(other).expr)

    def __rsub__(self, other):
        return JetExpr(JetExpr(other).expr - self.expr)

    def __mul__(self, other):
        return JetExpr(self.expr * JetExpr(other).expr)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = JetExpr(other)
        if other.is_zero:
            raise ZeroDivisionError("division by an identically zero expression")
        return JetExpr(self.expr / other.expr)

    def __rtruediv__(self, other):
        if self.is_zero:
            raise ZeroDivisionError("division by an identically zero expression")
        return JetExpr(JetExpr(other).expr / self.expr)

    def __pow__(self, k):
        if not isinstance(k, int) or k < 0:
            raise ValueError("only nonnegative integer powers")
        return JetExpr(self.expr ** k)

    def __neg__(self):
        return JetExpr(-self.expr)

    @property
    def is_zero(self):
        return self.expr == 0

    def __eq__(self, other):
        if not isinstance(other, (JetExpr, int)):
            return NotImplemented
        return (self - other).is_zero

    def __hash__(self):
        raise TypeError("JetExpr is not hashable")

    # -- calculus -----------------------------------------------------------------

    def diff_t(self):
        return JetExpr(sp.diff(self.expr, _T))

    def diff_jet(self, a, k):
        return JetExpr(sp.diff(self.expr, jet_symbol(a, k)))

    def subs_jets(self, mapping):
        """Substitute jet coordinates; mapping keys (a, k) or 't'."""
        smap = {}
        for key, val in mapping.items():
            sym = _T if key == "t" else jet_symbol(*key)
            smap[sym] = JetExpr(val).expr
        return JetExpr(self.expr.subs(smap, simultaneous=True))

    # -- introspection ---------------------------------------------------------------

    def jet_variables(self):
        """Sorted (a, k) pairs appearing in the expression."""
        out = set()
        for s in self.expr.free_symbols:
            kind, a, k = _split_symbol(s)
            if kind == "u":
                out.add((a, k))
        return sorted(out)

    def max_order(self):
        """Largest derivative order present, or -1 if no jet coordinate appears."""
        orders = [k for _a, k in self.jet_variables()]
        return max(orders) if orders else -1

    def depends_only_on_zero_jet(self):
        return self.max_order() <= 0

    # -- printing ----------------------------------------------------------------------

    def to_text(self):
        num, den = sp.fraction(self.expr)
        if den == 1:
            return _poly_text(num)
        return "(%s)/(%s)" % (_poly_text(num), _poly_text(den))

    def __repr__(self):
        return self.to_text()


def _gens_of(expr):
    syms = sorted(expr.free_symbols, key=_gen_key)
    return syms


def _gen_key(s):
    kind, a, k = _split_symbol(s)
    if kind == "t":
        return (0, 0, 0)
    return (1, k, a)


def _poly_text(p):
    p = sp.expand(p)
    if p.is_Rational:
        return _rat_text(sp.Rational(p))
    gens = _gens_of(p)
    poly = sp.Poly(p, *gens)
    terms = sorted(poly.terms(), key=lambda tc: (sum(tc[0]), tc[0]), reverse=True)
    parts = []
    for exps, coeff in terms:
        factors = []
        for s, e in zip(gens, exps):
            if e == 0:
                continue
            kind, a, k = _split_symbol(s)
            base = "t" if kind == "t" else "u[%d]^%d" % (k, a)
            if e == 1:
                factors.append(base)
            elif kind == "t":
                factors.append("t^%d" % e)
            else:
                factors.append("(%s)^%d" % (base, e))
        coeff = sp.Rational(coeff)
        body = "*".join(factors)
        if not factors:
            frag = _rat_text(abs(coeff))
        elif abs(coeff) == 1:
            frag = body
        else:
            frag = "%s*%s" % (_rat_text(abs(coeff)), body)
        parts.append(("-" if coeff < 0 else "+", frag))
    if not parts:
        return "0"
    sign, frag = parts[0]
    text = ("-" if sign == "-" else "") + frag
    for sign, frag in parts[1:]:
        text += " %s %s" % (sign, frag)
    return text


def _rat_text(r):
    return str(r.p) if r.q == 1 else "%d/%d" % (r.p, r.q)


# -- tokenizer / parser ----------------------------------------------------------------------


_TOKEN_RE = re.compile(r"\s*(?:(\d+)|([tu])|(\[|\]|\^|\+|-|\*|/|\(|\)))")


def _tokenize(text):
    tokens = []
    pos = 0
    while pos < len(text):
        mo = _TOKEN_RE.match(text, pos)
        if not mo:
            if text[pos:].strip() == "":
                break
            raise ParseError("unexpected character %r" % text[pos:pos + 1], pos)
        if mo.group(1):
            tokens.append(("int", int(mo.group(1)), mo.start(1)))
        elif mo.group(2):
            tokens.append(("name", mo.group(2), mo.start(2)))
        else:
            tokens.append(("op", mo.group(3), mo.start(3)))
        pos = mo.end()
    tokens.append(("eof", None, len(text)))
    return tokens


class _Parser:
    def __init__(self, text, m=None, max_order=None):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0
        self.m = m
        self.max_order = max_order

    def peek(self):
        return self.tokens[self.i]

    def next(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, kind, value=None):
        tok = self.next()
        if tok[0] != kind or (value is not None and tok[1] != value):
            raise ParseError("expected %s" % (value or kind), tok[2])
        return tok

    def parse(self):
        e = self.expr()
        tok = self.peek()
        if tok[0] != "eof":
            raise ParseError("unexpected trailing input", tok[2])
        return e

    def expr(self):
        e = self.term()
        while True:
            tok = self.peek()
            if tok[0] == "op" and tok[1] in "+-":
                self.next()
                rhs = self.term()
                e = e + rhs if tok[1] == "+" else e - rhs
            else:
                return e

    def term(self):
        e = self.unary()
        while True:
            tok = self.peek()
            if tok[0] == "op" and tok[1] in "*/":
                self.next()
                rhs = self.unary()
                if tok[1] == "*":
                    e = e * rhs
                else:
                    if rhs.is_zero:
                        raise ParseError("division by an identically zero expression", tok[2])
                    e = e / rhs
            else:
                return e

    def unary(self):
        tok = self.peek()
        if tok[0] == "op" and tok[1] == "-":
            self.next()
            return -self.unary()
        return self.power()

    def power(self):
        base, is_uvar = self.atom()
        tok = self.peek()
        if tok[0] == "op" and tok[1] == "^":
            if is_uvar:
                raise ParseError("ambiguous power after a jet variable; use parentheses", tok[2])
            self.next()
            etok = self.next()
            if etok[0] != "int" or etok[1] < 1:
                raise ParseError("exponent must be a positive integer", etok[2])
            return base ** etok[1]
        return base

    def atom(self):
        tok = self.next()
        if tok[0] == "int":
            return JetExpr.number(tok[1]), False
        if tok[0] == "name" and tok[1] == "t":
            return JetExpr.var_t(), False
        if tok[0] == "name" and tok[1] == "u":
            self.expect("op", "[")
            ktok = self.next()
            if ktok[0] != "int":
                raise ParseError("expected derivative order", ktok[2])
            self.expect("op", "]")
            self.expect("op", "^")
            atok = self.next()
            if atok[0] != "int" or atok[1] < 1:
                raise ParseError("expected component index >= 1", atok[2])
            k, a = ktok[1], atok[1]
            if self.max_order is not None and k > self.max_order:
                raise ParseError("derivative order %d exceeds bound %d" % (k, self.max_order), ktok[2])
            if self.m is not None and a > self.m:
                raise ParseError("component index %d exceeds m = %d" % (a, self.m), atok[2])
            return JetExpr.jet(a, k), True
        if tok[0] == "op" and tok[1] == "(":
            e = self.expr()
            self.expect("op", ")")
            return e, False
        raise ParseError("unexpected token", tok[2])


def parse_expression(text, m=None, max_order=None) -> JetExpr:
    return _Parser(text, m=m, max_order=max_order).parse()


@dataclass
class ODESystem:
    """u^a_{n+1} = rhs[a-1](t, u, ..., u_n) for a = 1..m."""

    n: int
    m: int
    rhs: list

    def __post_init__(self):
        if self.m < 2:
            raise ValueError("vector equations need m >= 2")
        if self.n < 1:
            raise ValueError("order must be at least 2 (n >= 1)")
        if len(self.rhs) != self.m:
            raise ValueError("need exactly m right-hand sides")
        for f in self.rhs:
            for (a, k) in f.jet_variables():
                if a > self.m:
                    raise ValueError("component u^%d exceeds m" % a)
                if k > self.n:
                    raise ValueError("right-hand side depends on order %d > n" % k)

    def to_text(self):
        lines = ["n=%d m=%d" % (self.n, self.m)]
        for a, f in enumerate(self.rhs, start=1):
            lines.append("u[%d]^%d = %s" % (self.n + 1, a, f.to_text()))
        return "\n".join(lines) + "\n"

    def __repr__(self):
        return "ODESystem(n=%d, m=%d)" % (self.n, self.m)


_HEADER_RE = re.compile(r"^\s*n\s*=\s*(\d+)\s+m\s*=\s*(\d+)\s*$")
_LHS_RE = re.compile(r"^\s*u\s*\[\s*(\d+)\s*\]\s*\^\s*(\d+)\s*$")


def parse_ode(text) -> ODESystem:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ValueError("empty system")
    mo = _HEADER_RE.match(lines[0])
    if not mo:
        raise ValueError("first line must be 'n=<int> m=<int>'")
    n, m = int(mo.group(1)), int(mo.group(2))
    rhs = [None] * m
    for ln in lines[1:]:
        if "=" not in ln:
            raise ValueError("expected 'u[%d]^<a> = <expr>', got %r" % (n + 1, ln))
        lhs, expr_text = ln.split("=", 1)
        mo = _LHS_RE.match(lhs)
        if not mo:
            raise ValueError("bad left-hand side %r" % lhs.strip())
        order, a = int(mo.group(1)), int(mo.group(2))
        if order != n + 1:
            raise ValueError("left-hand side order must be n+1 = %d" % (n + 1))
        if not (1 <= a <= m):
            raise ValueError("component %d out of range" % a)
        if rhs[a - 1] is not None:
            raise ValueError("duplicate equation for component %d" % a)
        rhs[a - 1] = parse_expression(expr_text, m=m, max_order=n)
    missing = [a + 1 for a, f in enumerate(rhs) if f is None]
    if missing:
        raise ValueError("missing equations for components %s" % missing)
    return ODESystem(n, m, rhs)


def total_derivative(ode: ODESystem, e: JetExpr) -> JetExpr:
    """Total derivative along solutions: d/dt = @_t + u_{k+1} @_{u_k} + f @_{u_n}."""
    if e.max_order() > ode.n:
        raise ValueError("expression order exceeds the equation order bound")
    out = e.diff_t()
    for (a, k) in e.jet_variables():
        d = e.diff_jet(a, k)
        if k < ode.n:
            out = out + JetExpr.jet(a, k + 1) * d
        else:
            out = out + ode.rhs[a - 1] * d
    return out


def unrestricted_total_derivative(e: JetExpr) -> JetExpr:
    """Formal total derivative on jet space (raises the order by one)."""
    out = e.diff_t()
    for (a, k) in e.jet_variables():
        out = out + JetExpr.jet(a, k + 1) * e.diff_jet(a, k)
    return out
