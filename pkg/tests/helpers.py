"""Shared builders, strategies and corpora for the test suite."""
from __future__ import annotations

import random
from fractions import Fraction

import sympy
from hypothesis import strategies as st

from wavesym.expr import U, Symbol, coord, deriv, num, sym
from wavesym.parser import parse


def P(text: str, n: int = 3):
    return parse(text, n)


def to_sympy(e):
    """Independent reading of an Expr through its printed form."""
    names = {"ln": sympy.log}
    for s in e.free_symbols:
        names[s.name] = sympy.Symbol(s.name)
    return sympy.sympify(str(e).replace("^", "**"), locals=names)


VARS = [Symbol("x", 0), Symbol("x", 1), Symbol("x", 2), U, Symbol("p", 0)]


@st.composite
def polynomials(draw, max_terms: int = 4, max_deg: int = 3):
    """Random polynomial Exprs in x0, x1, x2, u, u_0 with small rational coefficients."""
    nterms = draw(st.integers(1, max_terms))
    total = num(0)
    for _ in range(nterms):
        c = Fraction(draw(st.integers(-5, 5)), draw(st.integers(1, 4)))
        t = num(c)
        for v in VARS:
            k = draw(st.integers(0, max_deg))
            if k:
                t = t * sym(v) ** k
        total = total + t
    return total


@st.composite
def rationals(draw):
    a = draw(polynomials(max_terms=3, max_deg=2))
    b = draw(polynomials(max_terms=2, max_deg=2))
    if b.is_zero_structural():
        b = num(1)
    return a / b


variables = st.sampled_from(VARS)


def random_expression_text(rng: random.Random, n: int = 3, depth: int = 3) -> str:
    """A grammar-valid expression string built from the public syntax."""
    def atom():
        r = rng.random()
        if r < 0.25:
            return f"x{rng.randint(0, n)}"
        if r < 0.4:
            return "u"
        if r < 0.55:
            return f"u_{rng.randint(0, n)}"
        if r < 0.7:
            return rng.choice(["F0", "m", "k", "rho", "a1"])
        if r < 0.85:
            return str(rng.randint(0, 9))
        return f"{rng.randint(1, 9)}.{rng.randint(0, 9)}"

    def gen(d):
        if d == 0:
            return atom()
        r = rng.random()
        if r < 0.3:
            return f"{gen(d - 1)} {rng.choice('+-')} {gen(d - 1)}"
        if r < 0.5:
            return f"{gen(d - 1)}*{gen(d - 1)}"
        if r < 0.6:
            return f"({gen(d - 1)})/({gen(d - 1)} + {rng.randint(1, 5)}*x0^2 + 1)"
        if r < 0.7:
            e = rng.choice(["2", "3", "(1/2)", "(7/3)", "k", "(k - 1)", "-1"])
            base = rng.choice(["u", "x1", "(x0 + 1)", "(u + x2^2 + 1)"])
            return f"{base}^{e}"
        if r < 0.8:
            return f"{rng.choice(['sin', 'cos', 'exp'])}({gen(d - 1)})"
        if r < 0.85:
            return f"ln({gen(d - 1)}^2 + 1)"
        if r < 0.9:
            return f"-({gen(d - 1)})"
        return f"({gen(d - 1)})"

    return gen(depth)


def parser_corpus(size: int = 200, seed: int = 20261015) -> list[str]:
    rng = random.Random(seed)
    return [random_expression_text(rng, 3, rng.randint(1, 4)) for _ in range(size)]


def symmetry_corpus() -> list[tuple]:
    """(label, n, F text, class, generator, eta text) over a mix of symmetric and non-symmetric cases."""
    from wavesym.liefields import conformal_basis, killing_check

    out = []
    for n in (2, 3):
        k = Fraction(n + 3, n - 1)
        kt = f"({k})" if k.denominator != 1 else str(k)
        names = [X.name for X in conformal_basis(n)]
        reduced = [
            f"F0*u^{kt}",
            "F0*u^2",
            "-m^2*u",
            "0",
            "-rho/(x0^2 - x1^2 - x2^2)*u",
            "sin(u)",
            "x0*u^3",
        ]
        for F in reduced:
            for name in ("P0", "P1", names[n + 1], "D", "K0", f"K{n}"):
                out.append((f"n{n}-{F}-{name}-conf", n, F, "reduced", name, "conformal"))
            out.append((f"n{n}-{F}-S", n, F, "reduced", None, "u"))
        general = ["u_0^2", "u_0*u_1 + u^2", "exp(u)*u_1", "x1*u_0", "(u_0^2 - u_1^2)/u"]
        for F in general:
            for name in ("P0", "P1", names[n + 1], "D"):
                out.append((f"n{n}-{F}-{name}", n, F, "general", name, "0"))
            out.append((f"n{n}-{F}-D-u", n, F, "general", "D", "u"))
        out.append((f"n{n}-sl2-e", n, "u_0^2 - u_1^2", "general", None, "-u^2"))
        out.append((f"n{n}-zero-b", n, "0", "reduced", None, "x0*x1"))
        out.append((f"n{n}-zero-b-massive", n, "-m^2*u", "reduced", None, "sin(x1)"))
    return out


def corpus_case(case):
    """Build (Nonlinearity, VectorField) for a corpus entry."""
    from wavesym.expr import ZERO
    from wavesym.liefields import VectorField, conformal_basis, killing_check
    from wavesym.symmetry import Nonlinearity

    label, n, F, cls, name, eta = case
    body = parse(F, n)
    Fn = Nonlinearity.general(body) if cls == "general" else Nonlinearity.reduced(body)
    if name is None:
        X = VectorField(tuple(ZERO for _ in range(n + 1)), ZERO, "Q")
    else:
        X = {Y.name: Y for Y in conformal_basis(n)}[name]
    if eta == "conformal":
        e = Fraction(1 - n, 4) * killing_check(X) * sym(U)
    else:
        e = parse(eta, n)
    return Fn, X.with_eta(e)
