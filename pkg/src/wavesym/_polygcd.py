"""Multivariate polynomial gcd over the rationals.

Polynomials are plain dicts mapping exponent tuples to Fractions; all
tuples of one polynomial have the same length.  Exact division is done
here; the gcd itself is delegated to sympy's sparse polynomial rings.
"""
from __future__ import annotations

from fractions import Fraction
from functools import lru_cache

from sympy.polys.domains import QQ
from sympy.polys.rings import ring

Poly = dict  # tuple[int, ...] -> Fraction


def divexact(a: Poly, b: Poly) -> Poly:
    """Quotient ``a / b``; raises ValueError when ``b`` does not divide ``a``."""
    if not b:
        raise ZeroDivisionError("polynomial division by zero")
    q: Poly = {}
    r = dict(a)
    lb = max(b)
    cb = b[lb]
    while r:
        lr = max(r)
        shift = tuple(x - y for x, y in zip(lr, lb))
        if min(shift, default=0) < 0:
            raise ValueError("inexact polynomial division")
        c = r[lr] / cb
        q[shift] = c
        for m, v in b.items():
            mm = tuple(x + y for x, y in zip(m, shift))
            nv = r.get(mm, 0) - c * v
            if nv:
                r[mm] = nv
            else:
                r.pop(mm, None)
    return q


def is_constant(p: Poly) -> bool:
    return len(p) == 1 and not any(next(iter(p)))


@lru_cache(maxsize=None)
def _ring(nv: int):
    return ring(",".join(f"v{i}" for i in range(nv)) + ",", QQ)[0]


def _to_ring(R, p: Poly):
    return R.from_dict({m: QQ(c.numerator, c.denominator) for m, c in p.items()})


def _from_ring(p) -> Poly:
    return {m: Fraction(int(c.numerator), int(c.denominator)) for m, c in p.items()}


def cofactors(a: Poly, b: Poly) -> tuple[Poly, Poly, Poly]:
    """(g, a/g, b/g) with g a gcd of a and b."""
    nv = len(next(iter(a or b)))
    R = _ring(nv)
    g, ca, cb = _to_ring(R, a).cofactors(_to_ring(R, b))
    return _from_ring(g), _from_ring(ca), _from_ring(cb)


def gcd(a: Poly, b: Poly) -> Poly:
    """A gcd of two polynomials, normalized so the lex-leading coefficient is 1."""
    if not a and not b:
        return {}
    g = cofactors(a, b)[0]
    lc = g[max(g)]
    return {m: c / lc for m, c in g.items()}
