"""Exact symbolic expressions over x^0..x^n, u, u_0..u_n and named constants.

An :class:`Expr` is always stored in normal form: a numerator and a
denominator polynomial with Fraction coefficients, gcd-cancelled, with a
monic denominator.  Polynomial "variables" are atoms:

* :class:`Symbol` -- coordinates ``x<i>``, the dependent variable ``u``,
  first derivatives ``u_<i>``, named constants, and two internal kinds
  (second derivatives and tilde derivatives) used by the prolongation and
  equivalence code;
* :class:`Func` -- ``sin``, ``cos``, ``exp`` and ``ln`` of an expression;
* :class:`Root` -- a non-integer power of a compound base.

Exponents are ints, Fractions, or constant-only Exprs (``u^k``).  Since
every value is normalized on construction, structural equality ``==`` is
the canonical-form comparison.
"""
from __future__ import annotations

import math
import random
from enum import Enum
from fractions import Fraction
from typing import Iterable, Mapping

from . import _polygcd

__all__ = [
    "Expr",
    "Symbol",
    "Func",
    "Root",
    "ONE",
    "ZERO",
    "FUNCTIONS",
    "const",
    "coord",
    "deriv",
    "num",
    "sym",
    "as_expr",
    "diff",
    "total_derivative",
    "substitute",
    "normalize",
    "U",
    "Verdict",
    "PoleError",
    "DomainError",
    "UnboundSymbolError",
    "evaluate",
    "is_zero",
    "power",
    "apply_function",
]

FUNCTIONS = ("sin", "cos", "exp", "ln")

_KIND_ORDER = {"c": 0, "x": 1, "u": 2, "p": 3, "q": 4, "t": 5}


class Symbol:
    """An interned polynomial variable.

    ``kind`` is one of ``c`` (named constant), ``x`` (coordinate),
    ``u`` (dependent variable), ``p`` (first derivative u_i),
    ``q`` (second derivative u_ij, internal) or ``t`` (transformed first
    derivative, internal).
    """

    __slots__ = ("kind", "index", "key", "free", "__weakref__")
    _cache: dict = {}

    def __new__(cls, kind: str, index=None):
        k = (kind, index)
        s = cls._cache.get(k)
        if s is None:
            if kind not in _KIND_ORDER:
                raise ValueError(f"unknown symbol kind {kind!r}")
            s = object.__new__(cls)
            s.kind = kind
            s.index = index
            if index is None:
                s.key = (_KIND_ORDER[kind],)
            elif isinstance(index, tuple):
                s.key = (_KIND_ORDER[kind],) + index
            else:
                s.key = (_KIND_ORDER[kind], index)
            s.free = frozenset((s,))
            cls._cache[k] = s
        return s

    def __reduce__(self):
        return (Symbol, (self.kind, self.index))

    @property
    def name(self) -> str:
        k, i = self.kind, self.index
        if k == "c":
            return i
        if k == "x":
            return f"x{i}"
        if k == "u":
            return "u"
        if k == "p":
            return f"u_{i}"
        if k == "q":
            return f"u_{i[0]}_{i[1]}"
        return f"ut_{i}"

    def __repr__(self):
        return f"Symbol({self.name})"

    def value_derivative(self, s: "Symbol") -> "Expr":
        return ONE if s is self else ZERO


class Func:
    """An elementary function applied to an expression."""

    __slots__ = ("name", "arg", "key", "free", "__weakref__")
    _cache: dict = {}

    def __new__(cls, name: str, arg: "Expr"):
        k = (name, arg)
        f = cls._cache.get(k)
        if f is None:
            if name not in FUNCTIONS:
                raise ValueError(f"unknown function {name!r}")
            f = object.__new__(cls)
            f.name = name
            f.arg = arg
            f.key = (6, name, arg.sort_key())
            f.free = arg.free_symbols
            cls._cache[k] = f
        return f

    def __reduce__(self):
        return (Func, (self.name, self.arg))

    def __repr__(self):
        return f"{self.name}({self.arg})"

    def value_derivative(self, s: Symbol) -> "Expr":
        da = diff(self.arg, s)
        if da.is_zero_structural():
            return ZERO
        if self.name == "sin":
            return apply_function("cos", self.arg) * da
        if self.name == "cos":
            return -apply_function("sin", self.arg) * da
        if self.name == "exp":
            return _atom_power(self, 1) * da
        return da / self.arg


class Root:
    """A compound base raised to a non-integer power (the exponent lives in the monomial)."""

    __slots__ = ("base", "key", "free", "__weakref__")
    _cache: dict = {}

    def __new__(cls, base: "Expr"):
        r = cls._cache.get(base)
        if r is None:
            r = object.__new__(cls)
            r.base = base
            r.key = (7, base.sort_key())
            r.free = base.free_symbols
            cls._cache[base] = r
        return r

    def __reduce__(self):
        return (Root, (self.base,))

    def __repr__(self):
        return f"Root({self.base})"

    def value_derivative(self, s: Symbol) -> "Expr":
        return diff(self.base, s)


Atom = Symbol | Func | Root


# -- exponents ---------------------------------------------------------------

def _num_norm(q):
    if isinstance(q, Fraction) and q.denominator == 1:
        return int(q)
    return q


def _exp_norm(e):
    if isinstance(e, Expr):
        q = e.as_number()
        if q is not None:
            return _num_norm(q)
        return e
    return _num_norm(e)


def _exp_add(a, b):
    if isinstance(a, Expr) or isinstance(b, Expr):
        return _exp_norm(as_expr(a) + as_expr(b))
    return _num_norm(a + b)


def _exp_mul(a, b):
    if isinstance(a, Expr) or isinstance(b, Expr):
        return _exp_norm(as_expr(a) * as_expr(b))
    return _num_norm(a * b)


def _exp_key(e):
    if isinstance(e, Expr):
        return (1, e.sort_key())
    return (0, Fraction(e))


def _is_zero_exp(e) -> bool:
    return not isinstance(e, Expr) and e == 0


# -- monomials ---------------------------------------------------------------
# A monomial is a tuple of (atom, exponent) pairs sorted by atom.key.

def _mono_sort(items) -> tuple:
    return tuple(sorted(items, key=lambda t: t[0].key))


def _mono_mul(m1: tuple, m2: tuple) -> tuple:
    if not m1:
        return m2
    if not m2:
        return m1
    d = dict(m1)
    for a, e in m2:
        if a in d:
            ne = _exp_add(d[a], e)
            if _is_zero_exp(ne):
                del d[a]
            else:
                d[a] = ne
        else:
            d[a] = e
    return _mono_sort(d.items())


def _mono_inv(m: tuple) -> tuple:
    return tuple((a, _exp_mul(e, -1)) for a, e in m)


def _mono_key(m: tuple) -> tuple:
    return tuple((a.key, _exp_key(e)) for a, e in m)


def _mono_degree(m: tuple):
    d = Fraction(0)
    for _, e in m:
        d += 1 if isinstance(e, Expr) else e
    return d


def _term_order(item):
    m = item[0]
    return (-_mono_degree(m), _mono_key(m))


# -- polynomial helpers --------------------------------------------------------

_ONE_POLY = {(): Fraction(1)}


def _padd(a: dict, b: dict, scale=1) -> dict:
    r = dict(a)
    for m, c in b.items():
        v = r.get(m, 0) + scale * c
        if v:
            r[m] = v
        else:
            r.pop(m, None)
    return r


def _pmul(a: dict, b: dict) -> dict:
    if len(a) == 1 and () in a:
        c = a[()]
        return {m: c * v for m, v in b.items()} if c != 1 else dict(b)
    if len(b) == 1 and () in b:
        c = b[()]
        return {m: c * v for m, v in a.items()} if c != 1 else dict(a)
    r: dict = {}
    for m1, c1 in a.items():
        for m2, c2 in b.items():
            m = _mono_mul(m1, m2)
            v = r.get(m, 0) + c1 * c2
            if v:
                r[m] = v
            else:
                r.pop(m, None)
    return r


def _pscale_mono(p: dict, mono: tuple, c=1) -> dict:
    r: dict = {}
    for m, v in p.items():
        mm = _mono_mul(m, mono)
        nv = r.get(mm, 0) + v * c
        if nv:
            r[mm] = nv
        else:
            r.pop(mm, None)
    return r


def _root_out_of_range(e) -> bool:
    return not isinstance(e, Expr) and not (0 < e < 1)


def _num_issues(p: dict) -> bool:
    for m in p:
        for a, e in m:
            if type(a) is Root:
                if _root_out_of_range(e):
                    return True
            elif type(e) is int and e < 0:
                return True
    return False


def _root_issues(p: dict) -> bool:
    for m in p:
        for a, e in m:
            if type(a) is Root and _root_out_of_range(e):
                return True
    return False


def _expand_roots(p: dict) -> "Expr":
    """Rewrite Root factors so their numeric exponents lie in (0, 1)."""
    total = ZERO
    for m, c in p.items():
        keep = []
        extra = ONE
        for a, e in m:
            if type(a) is Root and _root_out_of_range(e):
                q = Fraction(e)
                fl = math.floor(q)
                fr = q - fl
                if fr:
                    keep.append((a, _num_norm(fr)))
                extra = extra * _int_power(a.base, fl)
            else:
                keep.append((a, e))
        total = total + _canon({tuple(keep): c}, _ONE_POLY) * extra
    return total


def _laurent_shift(p: dict) -> dict:
    """Atoms (Symbols/Funcs) with negative integer exponents and the power needed to clear them."""
    need: dict = {}
    for m in p:
        for a, e in m:
            if type(e) is int and e < 0 and type(a) is not Root:
                if -e > need.get(a, 0):
                    need[a] = -e
    return need


def _canon(num: dict, den: dict) -> "Expr":
    """Normalize the quotient of two polynomials into an Expr."""
    if not den:
        raise ZeroDivisionError("division by zero")
    if not num:
        return ZERO
    if len(den) == 1:
        (m, c), = den.items()
        if m:
            inv = _mono_inv(m)
            num = _pscale_mono(num, inv, 1 / c)
        elif c != 1:
            num = {k: v / c for k, v in num.items()}
        if _root_issues(num):
            return _expand_roots(num)
        need = _laurent_shift(num)
        if need:
            mono = _mono_sort(need.items())
            return Expr._raw(_pscale_mono(num, mono), {mono: Fraction(1)})
        return Expr._raw(num, _ONE_POLY)
    if _root_issues(num) or _root_issues(den):
        return _expand_roots(num) / _expand_roots(den)
    need = _laurent_shift(num)
    for a, k in _laurent_shift(den).items():
        if k > need.get(a, 0):
            need[a] = k
    if need:
        mono = _mono_sort(need.items())
        num = _pscale_mono(num, mono)
        den = _pscale_mono(den, mono)
        if len(den) == 1:
            return _canon(num, den)
    num, den = _cancel_content(num, den)
    if len(den) == 1:
        return _canon(num, den)
    num, den = _cancel_gcd(num, den)
    if len(den) == 1:
        return _canon(num, den)
    lead = min(den.items(), key=_term_order)[1]
    if lead != 1:
        num = {k: v / lead for k, v in num.items()}
        den = {k: v / lead for k, v in den.items()}
    return Expr._raw(num, den)


def _cancel_content(num: dict, den: dict):
    """Cancel Symbol powers common to every term, including symbolic exponents in the numerator."""
    content = None
    for m in den:
        d = {a: e for a, e in m if type(e) is int and e > 0 and type(a) is Symbol}
        if content is None:
            content = d
        else:
            content = {a: min(e, d[a]) for a, e in content.items() if a in d}
        if not content:
            return num, den
    shift = {}
    for a, k in content.items():
        best = k
        for m in num:
            e = dict(m).get(a)
            if e is None:
                best = 0
                break
            if type(e) is int:
                best = min(best, e)
        if best > 0:
            shift[a] = -best
    if not shift:
        return num, den
    mono = _mono_sort(shift.items())
    return _pscale_mono(num, mono), _pscale_mono(den, mono)


def _cancel_gcd(num: dict, den: dict):
    index: dict = {}

    def keyof(a, e):
        if type(e) is int and e > 0:
            return a, e
        return (a, e), 1

    for p in (num, den):
        for m in p:
            for a, e in m:
                v, _ = keyof(a, e)
                if v not in index:
                    index[v] = len(index)
    nv = len(index)
    if nv == 0:
        return num, den

    def to_dense(p):
        out = {}
        for m, c in p.items():
            exps = [0] * nv
            for a, e in m:
                v, k = keyof(a, e)
                exps[index[v]] = k
            out[tuple(exps)] = c
        return out

    rev = [None] * nv
    for v, i in index.items():
        rev[i] = v

    def from_dense(p):
        out = {}
        for exps, c in p.items():
            items = []
            for i, k in enumerate(exps):
                if k:
                    v = rev[i]
                    if isinstance(v, tuple):
                        items.append(v)
                    else:
                        items.append((v, k))
            out[_mono_sort(items)] = c
        return out

    dn, dd = to_dense(num), to_dense(den)
    try:
        q = _polygcd.divexact(dn, dd)
        return from_dense(q), dict(_ONE_POLY)
    except ValueError:
        pass
    g, qn, qd = _polygcd.cofactors(dn, dd)
    if _polygcd.is_constant(g):
        return num, den
    return from_dense(qn), from_dense(qd)


# -- the expression type -----------------------------------------------------------

class Expr:
    """Immutable normalized rational expression.  Build via the helpers, not directly."""

    __slots__ = ("num", "den", "_hash", "_key", "_free", "_dcache", "__weakref__")

    @classmethod
    def _raw(cls, num: dict, den: dict) -> "Expr":
        e = object.__new__(cls)
        e.num = num
        e.den = den
        e._hash = None
        e._key = None
        e._free = None
        e._dcache = None
        return e

    # structure -------------------------------------------------------------------
    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            q = self.as_number()
            return q is not None and q == other
        if not isinstance(other, Expr):
            return NotImplemented
        return self is other or (self.num == other.num and self.den == other.den)

    def __hash__(self):
        if self._hash is None:
            q = self.as_number()
            if q is not None:
                self._hash = hash(q)
            else:
                self._hash = hash((frozenset(self.num.items()), frozenset(self.den.items())))
        return self._hash

    def __reduce__(self):
        return (Expr._raw, (self.num, self.den))

    def sort_key(self) -> tuple:
        if self._key is None:
            nk = tuple((_mono_key(m), c) for m, c in sorted(self.num.items(), key=_term_order))
            dk = tuple((_mono_key(m), c) for m, c in sorted(self.den.items(), key=_term_order))
            self._key = (nk, dk)
        return self._key

    @property
    def free_symbols(self) -> frozenset:
        if self._free is None:
            s: set = set()
            for p in (self.num, self.den):
                for m in p:
                    for a, e in m:
                        s |= a.free
                        if isinstance(e, Expr):
                            s |= e.free_symbols
            self._free = frozenset(s)
        return self._free

    def atoms(self) -> set:
        out = set()
        for p in (self.num, self.den):
            for m in p:
                for a, _ in m:
                    out.add(a)
        return out

    def depends_on(self, s: Symbol) -> bool:
        return s in self.free_symbols

    def is_zero_structural(self) -> bool:
        return not self.num

    def as_number(self):
        """The rational value if the expression is a constant number, else None."""
        if not self.num:
            return Fraction(0)
        if len(self.num) == 1 and () in self.num and len(self.den) == 1 and () in self.den:
            return self.num[()] / self.den[()]
        return None

    def is_polynomial(self) -> bool:
        return len(self.den) == 1 and () in self.den

    @property
    def numerator(self) -> "Expr":
        return Expr._raw(self.num, dict(_ONE_POLY))

    @property
    def denominator(self) -> "Expr":
        return Expr._raw(self.den, dict(_ONE_POLY))

    def terms(self) -> list:
        """Numerator terms (as Exprs over the common denominator) in print order."""
        return [_canon({m: c}, self.den) for m, c in sorted(self.num.items(), key=_term_order)]

    def coefficients(self) -> dict:
        """Map monomial -> Fraction for a polynomial expression."""
        if not self.is_polynomial():
            raise ValueError(f"not a polynomial: {self}")
        return dict(self.num)

    # arithmetic ------------------------------------------------------------------
    def __add__(self, other):
        other = as_expr(other)
        if not other.num:
            return self
        if not self.num:
            return other
        if self.den == other.den:
            if len(self.den) == 1 and () in self.den:
                r = _padd(self.num, other.num)
                return Expr._raw(r, self.den) if r else ZERO
            return _canon(_padd(self.num, other.num), self.den)
        n = _padd(_pmul(self.num, other.den), _pmul(other.num, self.den))
        return _canon(n, _pmul(self.den, other.den))

    __radd__ = __add__

    def __neg__(self):
        return Expr._raw({m: -c for m, c in self.num.items()}, self.den)

    def __sub__(self, other):
        return self + (-as_expr(other))

    def __rsub__(self, other):
        return as_expr(other) + (-self)

    def __mul__(self, other):
        other = as_expr(other)
        if not self.num or not other.num:
            return ZERO
        return _canon(_pmul(self.num, other.num), _pmul(self.den, other.den))

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = as_expr(other)
        if not other.num:
            raise ZeroDivisionError("division by zero")
        if not self.num:
            return ZERO
        return _canon(_pmul(self.num, other.den), _pmul(self.den, other.num))

    def __rtruediv__(self, other):
        return as_expr(other) / self

    def __pow__(self, e):
        return power(self, e)

    # calculus shortcuts -------------------------------------------------------------
    def diff(self, s) -> "Expr":
        return diff(self, s)

    def subs(self, binding: Mapping) -> "Expr":
        return substitute(self, binding)

    # printing ------------------------------------------------------------------------
    def __str__(self):
        return _format(self)

    def __repr__(self):
        return f"Expr({_format(self)!r})"


ZERO = Expr._raw({}, dict(_ONE_POLY))
ONE = Expr._raw(dict(_ONE_POLY), dict(_ONE_POLY))


def num(q) -> Expr:
    """A rational constant."""
    q = Fraction(q)
    if q == 0:
        return ZERO
    return Expr._raw({(): q}, dict(_ONE_POLY))


def _atom_power(a: Atom, e) -> Expr:
    if _is_zero_exp(e):
        return ONE
    return _canon({((a, e),): Fraction(1)}, _ONE_POLY)


def sym(s: Symbol) -> Expr:
    return _atom_power(s, 1)


def const(name: str) -> Expr:
    return sym(Symbol("c", name))


def coord(i: int) -> Expr:
    return sym(Symbol("x", i))


def deriv(i: int) -> Expr:
    return sym(Symbol("p", i))


U = Symbol("u")


def as_expr(v) -> Expr:
    if isinstance(v, Expr):
        return v
    if isinstance(v, Symbol):
        return sym(v)
    if isinstance(v, (int, Fraction)):
        return num(v)
    raise TypeError(f"cannot convert {type(v).__name__} to Expr")


def as_symbol(v) -> Symbol:
    """Accept a Symbol or a single-symbol Expr."""
    if isinstance(v, Symbol):
        return v
    if isinstance(v, Expr) and v.is_polynomial() and len(v.num) == 1:
        (m, c), = v.num.items()
        if c == 1 and len(m) == 1 and m[0][1] == 1 and isinstance(m[0][0], Symbol):
            return m[0][0]
    raise TypeError(f"not a variable: {v!r}")


def apply_function(name: str, arg) -> Expr:
    arg = as_expr(arg)
    q = arg.as_number()
    if q is not None:
        if name in ("sin",) and q == 0:
            return ZERO
        if name in ("cos", "exp") and q == 0:
            return ONE
        if name == "ln" and q == 1:
            return ZERO
    inner = _lone_func(arg)
    if inner is not None and {name, inner.name} == {"exp", "ln"}:
        return inner.arg
    return _atom_power(Func(name, arg), 1)


def _lone_func(e: Expr):
    """The Func atom when e is exactly f(y), else None."""
    if e.den != _ONE_POLY or len(e.num) != 1:
        return None
    (mono, c), = e.num.items()
    if c != 1 or len(mono) != 1 or mono[0][1] != 1 or not isinstance(mono[0][0], Func):
        return None
    return mono[0][0]


# -- powers -------------------------------------------------------------------------

def _int_power(b: Expr, k: int) -> Expr:
    if k == 0:
        return ONE
    if k < 0:
        return ONE / _int_power(b, -k)
    result = ONE
    base = b
    while k:
        if k & 1:
            result = result * base
        k >>= 1
        if k:
            base = base * base
    return result


def _iroot(n: int, k: int):
    if n < 0:
        if k % 2 == 0:
            return None
        r = _iroot(-n, k)
        return None if r is None else -r
    r = round(n ** (1.0 / k)) if n else 0
    for cand in (r - 1, r, r + 1):
        if cand >= 0 and cand ** k == n:
            return cand
    return None


def _rational_power(c: Fraction, e):
    """c**e as an Expr when e is non-integer; exact when c is a perfect power."""
    if c == 1:
        return ONE
    if not isinstance(e, Expr):
        e = Fraction(e)
        p = _iroot(c.numerator, e.denominator)
        q = _iroot(c.denominator, e.denominator)
        if p is not None and q is not None:
            return _int_power(num(Fraction(p, q)), e.numerator)
    return _atom_power(Root(num(c)), e)


def _poly_power(poly: dict, e) -> Expr:
    if len(poly) == 1:
        (m, c), = poly.items()
        result = _rational_power(Fraction(c), e)
        items = [(a, _exp_mul(ex, e)) for a, ex in m]
        items = [(a, ex) for a, ex in items if not _is_zero_exp(ex)]
        if items:
            result = result * _canon({_mono_sort(items): Fraction(1)}, _ONE_POLY)
        return result
    lead = abs(min(poly.items(), key=_term_order)[1])
    if lead != 1:
        poly = {m: c / lead for m, c in poly.items()}
        return _rational_power(lead, e) * _atom_power(Root(Expr._raw(poly, dict(_ONE_POLY))), e)
    return _atom_power(Root(Expr._raw(poly, dict(_ONE_POLY))), e)


def power(b, e) -> Expr:
    """``b**e`` for integer, rational or constant-symbolic exponent ``e``."""
    b = as_expr(b)
    e = _exp_norm(e)
    if isinstance(e, Expr):
        bad = [s for s in e.free_symbols if s.kind != "c"]
        if bad:
            raise ValueError(f"exponent must be constant, got {e}")
    if type(e) is int:
        return _int_power(b, e)
    if not b.num:
        if isinstance(e, Expr) or e < 0:
            raise ZeroDivisionError("zero to a non-positive power")
        return ZERO
    result = _poly_power(b.num, e)
    if b.den != _ONE_POLY:
        result = result / _poly_power(b.den, e)
    return result


# -- calculus -----------------------------------------------------------------------

def _dpoly(poly: dict, s: Symbol) -> Expr:
    acc: dict = {}
    extra = []
    for m, c in poly.items():
        for i, (a, e) in enumerate(m):
            if s not in a.free:
                continue
            rest = m[:i] + m[i + 1:]
            if a is s and not isinstance(e, Expr):
                ne = _num_norm(e - 1)
                coeff = c * e
                newm = rest if ne == 0 else _mono_sort(rest + ((a, ne),))
                if type(ne) is int and ne < 0:
                    extra.append(_canon({newm: coeff}, _ONE_POLY))
                else:
                    v = acc.get(newm, 0) + coeff
                    if v:
                        acc[newm] = v
                    else:
                        acc.pop(newm, None)
                continue
            da = a.value_derivative(s)
            if not da.num:
                continue
            t = _canon({rest: c}, _ONE_POLY) * _atom_power(a, _exp_add(e, -1)) * as_expr(e) * da
            extra.append(t)
    total = _canon(acc, _ONE_POLY) if acc else ZERO
    for t in extra:
        total = total + t
    return total


def diff(e: Expr, v) -> Expr:
    """Exact partial derivative; x^i, u, u_i and constants are independent symbols."""
    e = as_expr(e)
    s = as_symbol(v)
    if s not in e.free_symbols:
        return ZERO
    cache = e._dcache
    if cache is None:
        cache = e._dcache = {}
    r = cache.get(s)
    if r is None:
        if e.is_polynomial():
            r = _dpoly(e.num, s)
        else:
            n = Expr._raw(e.num, dict(_ONE_POLY))
            d = Expr._raw(e.den, dict(_ONE_POLY))
            r = (_dpoly(e.num, s) * d - n * _dpoly(e.den, s)) / (d * d)
        cache[s] = r
    return r


def total_derivative(e: Expr, mu: int) -> Expr:
    """Truncated total derivative D_mu = d/dx^mu + u_mu d/du."""
    e = as_expr(e)
    return diff(e, Symbol("x", mu)) + deriv(mu) * diff(e, U)


# -- substitution ---------------------------------------------------------------------

def _binding(b: Mapping) -> dict:
    out = {}
    for k, v in b.items():
        s = as_symbol(k)
        if s in out:
            raise ValueError(f"duplicate binding for {s.name}")
        out[s] = as_expr(v)
    return out


def substitute(e: Expr, binding: Mapping) -> Expr:
    """Simultaneous substitution of symbols by expressions, then normalization."""
    e = as_expr(e)
    b = _binding(binding)
    if not b or not (e.free_symbols & b.keys()):
        return e
    return _subs(e, b, {})


def _subs_atom_power(a, ex, b, memo):
    if isinstance(ex, Expr) and ex.free_symbols & b.keys():
        ex = _exp_norm(_subs(ex, b, memo))
    if type(a) is Symbol:
        if a in b:
            return power(b[a], ex)
        return _atom_power(a, ex)
    if not (a.free & b.keys()):
        return _atom_power(a, ex)
    if type(a) is Func:
        return power(apply_function(a.name, _subs(a.arg, b, memo)), ex)
    return power(_subs(a.base, b, memo), ex)


def _subs_poly(p: dict, b, memo) -> Expr:
    total = ZERO
    plain: dict = {}
    for m, c in p.items():
        touched = False
        for a, ex in m:
            if a.free & b.keys() or (isinstance(ex, Expr) and ex.free_symbols & b.keys()):
                touched = True
                break
        if not touched:
            plain[m] = c
            continue
        t = num(c)
        for a, ex in m:
            key = (a, ex)
            f = memo.get(key)
            if f is None:
                f = memo[key] = _subs_atom_power(a, ex, b, memo)
            t = t * f
        total = total + t
    if plain:
        total = total + Expr._raw(plain, dict(_ONE_POLY))
    return total


def _subs(e: Expr, b: dict, memo: dict) -> Expr:
    if not (e.free_symbols & b.keys()):
        return e
    n = _subs_poly(e.num, b, memo)
    if e.den == _ONE_POLY:
        return n
    return n / _subs_poly(e.den, b, memo)


def normalize(e) -> Expr:
    """Canonical form.  Exprs are normalized on construction, so this is a re-canonicalization."""
    e = as_expr(e)
    return _canon(dict(e.num), dict(e.den))


# -- printing -------------------------------------------------------------------------

def _fmt_exp(e) -> str:
    if isinstance(e, Expr):
        s = _format(e)
        if len(e.num) == 1 and e.is_polynomial():
            (m, c), = e.num.items()
            if c == 1 and len(m) == 1 and m[0][1] == 1 and type(m[0][0]) is Symbol:
                return s
        return f"({s})"
    if type(e) is int and e > 0:
        return str(e)
    return f"({e})"


def _fmt_factor(a, e) -> str:
    if type(a) is Symbol:
        base = a.name
    elif type(a) is Func:
        base = f"{a.name}({_format(a.arg)})"
    else:
        q = a.base.as_number()
        base = str(q) if q is not None and q > 0 and q.denominator == 1 else f"({_format(a.base)})"
    if not isinstance(e, Expr) and e == 1:
        return base
    return f"{base}^{_fmt_exp(e)}"


def _fmt_poly(p: dict) -> tuple[str, int, int]:
    """Returns (text, number of terms, number of factors of a single term)."""
    if not p:
        return "0", 1, 0
    parts = []
    nfactors = 0
    for idx, (m, c) in enumerate(sorted(p.items(), key=_term_order)):
        factors = [_fmt_factor(a, e) for a, e in m]
        nfactors = len(factors) + (1 if abs(c) != 1 else 0)
        mag = abs(c)
        if factors:
            body = "*".join(factors)
            if mag != 1:
                body = f"{mag}*{body}"
        else:
            body = str(mag)
        sign = "-" if c < 0 else "+"
        if idx == 0:
            parts.append(("-" if c < 0 else "") + body)
        else:
            parts.append(f" {sign} {body}")
    return "".join(parts), len(p), nfactors


def _format(e: Expr) -> str:
    ntext, nterms, _ = _fmt_poly(e.num)
    if e.den == _ONE_POLY:
        return ntext
    dtext, dterms, dfactors = _fmt_poly(e.den)
    if nterms > 1:
        ntext = f"({ntext})"
    if dterms > 1 or dfactors > 1 or "/" in dtext:
        dtext = f"({dtext})"
    return f"{ntext}/{dtext}"


# -- evaluation ------------------------------------------------------------------------

class PoleError(ZeroDivisionError):
    """Evaluation hit a zero denominator."""


class DomainError(ValueError):
    """Evaluation left the real domain (ln of a non-positive number, even root of a negative)."""


class UnboundSymbolError(KeyError):
    """A free symbol has no value in the evaluation point."""


def _to_float(v) -> float:
    return float(v)


def _num_pow(base, e):
    if isinstance(base, Fraction):
        if isinstance(e, int) or (isinstance(e, Fraction) and e.denominator == 1):
            e = int(e)
            if e < 0 and base == 0:
                raise PoleError("zero to a negative power")
            return base ** e
        e = Fraction(e)
        if base == 0:
            if e < 0:
                raise PoleError("zero to a negative power")
            return Fraction(0)
        p = _iroot(base.numerator, e.denominator)
        q = _iroot(base.denominator, e.denominator)
        if p is not None and q is not None:
            return Fraction(p, q) ** e.numerator
        if base < 0:
            raise DomainError("fractional power of a negative number")
        return float(base) ** float(e)
    if base == 0 and e < 0:
        raise PoleError("zero to a negative power")
    if base < 0 and not float(e).is_integer():
        raise DomainError("fractional power of a negative number")
    return base ** float(e)


class _Evaluator:
    def __init__(self, point: dict):
        self.point = point
        self.atoms: dict = {}

    def symbol(self, s: Symbol):
        try:
            return self.point[s]
        except KeyError:
            raise UnboundSymbolError(s.name) from None

    def atom(self, a):
        v = self.atoms.get(a)
        if v is None:
            if type(a) is Symbol:
                v = self.symbol(a)
            elif type(a) is Func:
                x = self.expr(a.arg)
                if a.name == "sin":
                    v = Fraction(0) if x == 0 else math.sin(x)
                elif a.name == "cos":
                    v = Fraction(1) if x == 0 else math.cos(x)
                elif a.name == "exp":
                    v = Fraction(1) if x == 0 else math.exp(x)
                else:
                    if x <= 0:
                        raise DomainError("ln of a non-positive number")
                    v = Fraction(0) if x == 1 else math.log(x)
            else:
                v = self.expr(a.base)
            self.atoms[a] = v
        return v

    def exponent(self, e):
        if isinstance(e, Expr):
            v = self.expr(e)
            return v
        return e

    def term(self, m, c):
        t = c
        for a, e in m:
            t = t * _num_pow(self.atom(a), self.exponent(e))
        return t

    def poly_terms(self, p: dict) -> list:
        return [self.term(m, c) for m, c in p.items()]

    def expr(self, e: Expr):
        n = sum(self.poly_terms(e.num), Fraction(0))
        if e.den == _ONE_POLY:
            return n
        d = sum(self.poly_terms(e.den), Fraction(0))
        if d == 0:
            raise PoleError(f"denominator {_fmt_poly(e.den)[0]} vanishes")
        return n / d


def _point(point: Mapping) -> dict:
    out = {}
    for k, v in point.items():
        s = as_symbol(k) if not isinstance(k, str) else _symbol_from_name(k)
        out[s] = v if isinstance(v, float) else Fraction(v)
    return out


def _symbol_from_name(name: str) -> Symbol:
    if name == "u":
        return U
    if name[:1] == "x" and name[1:].isdigit():
        return Symbol("x", int(name[1:]))
    if name[:2] == "u_" and name[2:].isdigit():
        return Symbol("p", int(name[2:]))
    return Symbol("c", name)


def evaluate(e, point: Mapping):
    """Numeric value of ``e``; exact Fraction when possible, float otherwise.

    Keys of ``point`` may be Symbols, single-variable Exprs or names such as
    ``"x0"``, ``"u_1"`` or ``"F0"``.
    """
    e = as_expr(e)
    return _Evaluator(_point(point)).expr(e)


# -- zero testing ----------------------------------------------------------------------

class Verdict(str, Enum):
    ZERO = "zero"
    NONZERO = "nonzero"
    UNDETERMINED = "undetermined"

    def __str__(self):
        return self.value


DEFAULT_SEED = 0xC0FFEE
DEFAULT_TOL = 1e-9
SAMPLES = 32


def sample_point(symbols: Iterable[Symbol], rng) -> dict:
    """Positive rationals with small denominators, one per symbol (sorted for determinism)."""
    out = {}
    for s in sorted(symbols, key=lambda s: s.key):
        d = rng.randint(2, 12)
        out[s] = Fraction(rng.randint(1, 3 * d), d)
    return out


def _all_symbols(e: Expr) -> frozenset:
    return e.free_symbols


def is_zero(e, seed: int = DEFAULT_SEED, tol: float = DEFAULT_TOL) -> Verdict:
    """Zero test: exact for rational expressions, randomized evaluation otherwise.

    Float evaluations are compared relative to the magnitude of the
    individual numerator terms, so cancellation among large terms is not
    mistaken for a nonzero value.
    """
    e = as_expr(e)
    if not e.num:
        return Verdict.ZERO
    if all(type(a) is Symbol for a in e.atoms()) and all(
        not isinstance(x, Expr) for p in (e.num,) for m in p for _, x in m
    ):
        # a nonzero canonical polynomial numerator with integer exponents is nonzero
        return Verdict.NONZERO
    rng = random.Random(seed)
    syms = _all_symbols(e)
    hits = 0
    for _ in range(SAMPLES):
        ev = _Evaluator(sample_point(syms, rng))
        try:
            if e.den != _ONE_POLY:
                d = sum(ev.poly_terms(e.den), Fraction(0))
                if d == 0 or (isinstance(d, float) and abs(d) < 1e-300):
                    continue
            terms = ev.poly_terms(e.num)
        except (ZeroDivisionError, DomainError, OverflowError):
            continue
        hits += 1
        total = sum(terms, Fraction(0))
        if isinstance(total, Fraction):
            if total != 0:
                return Verdict.NONZERO
        else:
            scale = max(1.0, sum(abs(float(t)) for t in terms))
            if not math.isfinite(total) or abs(total) > tol * scale:
                return Verdict.NONZERO
    return Verdict.ZERO if hits else Verdict.UNDETERMINED
