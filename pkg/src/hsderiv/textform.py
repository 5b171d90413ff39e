"""Canonical text form for field elements and polynomials, plus the parser.

Syntax: terms joined by + or -, factors joined by *, powers with ^, parentheses
allowed, g is the extension field generator. Printing always emits the canonical
ascending term order and round-trips through the parser.
"""

from __future__ import annotations

import re

from .errors import UnknownVariable
from .gf import FqContext, FqScalar
from .poly import FqDomain, MultiPoly, RatFuncDomain, RationalFunc, sorted_terms

_TOKEN = re.compile(r"\s*(?:(\d+)|([A-Za-z][A-Za-z0-9_]*)|([()^*+/-]))")


def format_scalar(s: FqScalar) -> str:
    """Standalone form: a digit for d=1, a descending polynomial in g otherwise."""
    if s.ctx.d == 1:
        return str(s.digits[0])
    parts = []
    for k in range(s.ctx.d - 1, -1, -1):
        dig = s.digits[k]
        if not dig:
            continue
        if k == 0:
            parts.append(str(dig))
        else:
            gp = "g" if k == 1 else f"g^{k}"
            parts.append(gp if dig == 1 else f"{dig}*{gp}")
    return " + ".join(parts) if parts else "0"


def _scalar_factor(s: FqScalar) -> str:
    """Factor form: parenthesized unless a single g-power term."""
    text = format_scalar(s)
    return f"({text})" if " + " in text else text


def _monomial_str(vars, exps) -> str:
    parts = []
    for v, e in zip(vars, exps):
        if e == 1:
            parts.append(v)
        elif e > 1:
            parts.append(f"{v}^{e}")
    return "*".join(parts)


def _format_terms(vars, terms, dom) -> str:
    if not terms:
        return "0"
    one = dom.one
    chunks = []
    for exps, c in sorted_terms(terms):
        mono = _monomial_str(vars, exps)
        if not mono:
            chunks.append(_coeff_standalone(c, dom))
        elif c == one:
            chunks.append(mono)
        else:
            chunks.append(f"{_coeff_factor(c, dom)}*{mono}")
    return " + ".join(chunks)


def _coeff_standalone(c, dom) -> str:
    if isinstance(dom, FqDomain):
        return format_scalar(c)
    return format_ratfunc(c)


def _coeff_factor(c, dom) -> str:
    if isinstance(dom, FqDomain):
        return _scalar_factor(c)
    if isinstance(c, RationalFunc) and len(c.num.terms) == 1 and c.den == 1:
        (exps, sc), = c.num.terms.items()
        mono = _monomial_str(c.num.vars, exps)
        if not mono:
            return _scalar_factor(sc)
        if sc == c.num.ctx.one:
            return mono
        return f"{_scalar_factor(sc)}*{mono}"
    return f"({format_ratfunc(c)})"


def format_poly(f: MultiPoly) -> str:
    return _format_terms(f.vars, f.terms, FqDomain(f.ctx))


def format_trunc(f) -> str:
    return _format_terms(f.ring.vars, f.terms, f.ring.dom)


def format_ratfunc(f: RationalFunc) -> str:
    num = format_poly(f.num)
    if f.den == 1:
        return num
    return f"({num}) / ({format_poly(f.den)})"


class _Parser:
    def __init__(self, ctx: FqContext, vars: tuple[str, ...], text: str):
        self.ctx = ctx
        self.vars = tuple(vars)
        self.tokens: list[str] = []
        pos = 0
        while pos < len(text):
            m = _TOKEN.match(text, pos)
            if not m or m.end() == pos:
                rest = text[pos:].strip()
                if not rest:
                    break
                raise ValueError(f"cannot tokenize near {rest[:20]!r}")
            self.tokens.append(m.group(0).strip())
            pos = m.end()
        self.tokens = [t for t in self.tokens if t]
        self.i = 0

    def peek(self):
        return self.tokens[self.i] if self.i < len(self.tokens) else None

    def take(self):
        t = self.peek()
        self.i += 1
        return t

    def expect(self, t):
        got = self.take()
        if got != t:
            raise ValueError(f"expected {t!r}, got {got!r}")

    def parse(self) -> MultiPoly:
        out = self.expression()
        if self.peek() is not None:
            raise ValueError(f"trailing input at {self.peek()!r}")
        return out

    def expression(self) -> MultiPoly:
        neg = False
        if self.peek() in ("+", "-"):
            neg = self.take() == "-"
        out = self.term()
        if neg:
            out = -out
        while self.peek() in ("+", "-"):
            op = self.take()
            t = self.term()
            out = out - t if op == "-" else out + t
        return out

    def term(self) -> MultiPoly:
        out = self.factor()
        while self.peek() == "*":
            self.take()
            out = out * self.factor()
        return out

    def factor(self) -> MultiPoly:
        base = self.primary()
        if self.peek() == "^":
            self.take()
            e = self.take()
            if e is None or not e.isdigit():
                raise ValueError("exponent must be a nonnegative integer")
            base = base ** int(e)
        return base

    def primary(self) -> MultiPoly:
        t = self.take()
        if t is None:
            raise ValueError("unexpected end of input")
        if t.isdigit():
            return MultiPoly.const(self.ctx, self.vars, self.ctx.scalar(int(t)))
        if t == "(":
            inner = self.expression()
            self.expect(")")
            return inner
        if t == "g":
            if self.ctx.d == 1:
                raise UnknownVariable("g is not available over a prime field")
            return MultiPoly.const(self.ctx, self.vars, self.ctx.gen)
        if re.fullmatch(r"[A-Za-z][A-Za-z0-9_]*", t):
            if t not in self.vars:
                raise UnknownVariable(f"unknown variable {t!r}")
            return MultiPoly.var(self.ctx, self.vars, t)
        raise ValueError(f"unexpected token {t!r}")


def parse_poly(ctx: FqContext, vars, text: str) -> MultiPoly:
    return _Parser(ctx, tuple(vars), text).parse()


def parse_scalar(ctx: FqContext, text) -> FqScalar:
    if isinstance(text, int):
        return ctx.scalar(text)
    f = parse_poly(ctx, (), str(text))
    return f.coeff(())


def parse_trunc(ring, text: str):
    """Parse into a truncated ring with field coefficients."""
    from .truncated import TruncatedPoly

    if not isinstance(ring.dom, FqDomain):
        raise ValueError("parse_trunc needs a field coefficient domain")
    f = parse_poly(ring.ctx, ring.vars, text)
    return TruncatedPoly(ring, dict(f.terms))


def _split_top_slash(text: str):
    depth = 0
    for i, ch in enumerate(text):
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        elif ch == "/" and depth == 0:
            return text[:i], text[i + 1 :]
    return text, None


def parse_ratfunc(ctx: FqContext, vars, text: str) -> RationalFunc:
    num_t, den_t = _split_top_slash(text)
    num = parse_poly(ctx, vars, num_t)
    if den_t is None:
        return RationalFunc.from_poly(num)
    return RationalFunc(num, parse_poly(ctx, vars, den_t))


def parse_field_coeff_trunc(ring, text: str):
    """Parse into a truncated ring whose coefficients are rational functions.

    The input may use both the coefficient variables and the ring variables;
    a top-level / separates numerator and denominator, and the denominator must
    not involve the ring's bound variables.
    """
    from .truncated import TruncatedPoly

    dom = ring.dom
    if not isinstance(dom, RatFuncDomain):
        raise ValueError("ring does not have rational function coefficients")
    allvars = dom.vars + ring.vars
    num_t, den_t = _split_top_slash(text)
    num = parse_poly(ring.ctx, allvars, num_t)
    nc = len(dom.vars)
    den = None
    if den_t is not None:
        dpoly = parse_poly(ring.ctx, allvars, den_t)
        if any(any(e[nc:]) for e in dpoly.terms):
            raise ValueError("denominator may not involve bound ring variables")
        den = MultiPoly(
            ring.ctx, dom.vars, {e[:nc]: c for e, c in dpoly.terms.items()}
        )
    out: dict = {}
    for e, c in num.terms.items():
        ring_e = e[nc:]
        coeff_mono = MultiPoly(ring.ctx, dom.vars, {e[:nc]: c})
        rf = RationalFunc.from_poly(coeff_mono)
        s = out.get(ring_e)
        out[ring_e] = rf if s is None else s + rf
    if den is not None:
        dinv = RationalFunc(MultiPoly.one(ring.ctx, dom.vars), den)
        out = {e: c * dinv for e, c in out.items()}
    return TruncatedPoly(ring, out)
