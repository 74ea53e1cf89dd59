"""Vector fields on (x, u)-space, conformal Killing fields and structure constants."""
from __future__ import annotations

import itertools
import random
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .expr import (
    DEFAULT_SEED,
    ONE,
    U,
    ZERO,
    Expr,
    Symbol,
    Verdict,
    as_expr,
    coord,
    diff,
    is_zero,
    num,
)
from .minkowski import DimensionError, Metric, coords, lower_index, scalar_product, x_squared

__all__ = [
    "VectorField",
    "ConformalParams",
    "StructureTable",
    "KillingError",
    "NotGeometricError",
    "lie_bracket",
    "killing_check",
    "killing_solution",
    "conformal_basis",
    "generator_names",
    "generator_params",
    "structure_table",
    "expand_in_basis",
    "wedge",
    "is_rank_one",
]


class KillingError(ValueError):
    """The conformal Killing equation fails at component (alpha, beta)."""

    def __init__(self, alpha: int, beta: int, residual: Expr):
        self.alpha = alpha
        self.beta = beta
        self.residual = residual
        super().__init__(f"Killing equation fails at ({alpha},{beta}): residual {residual}")


class NotGeometricError(ValueError):
    """The x-components of a field depend on u or its derivatives."""


@dataclass(frozen=True)
class VectorField:
    """xi^mu d_mu + eta d_u.  Components are Exprs in x (and u for eta)."""

    xi: tuple
    eta: Expr = ZERO
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "xi", tuple(as_expr(c) for c in self.xi))
        object.__setattr__(self, "eta", as_expr(self.eta))

    @property
    def n(self) -> int:
        return len(self.xi) - 1

    @property
    def components(self) -> tuple:
        return self.xi + (self.eta,)

    @property
    def is_geometric(self) -> bool:
        return not any(
            s.kind in ("u", "p", "q", "t") for c in self.xi for s in c.free_symbols
        )

    def __call__(self, f) -> Expr:
        f = as_expr(f)
        total = ZERO
        for mu, c in enumerate(self.xi):
            if not c.is_zero_structural():
                total = total + c * diff(f, Symbol("x", mu))
        if not self.eta.is_zero_structural():
            total = total + self.eta * diff(f, U)
        return total

    def __add__(self, other: "VectorField") -> "VectorField":
        _same_dim(self, other)
        return VectorField(
            tuple(a + b for a, b in zip(self.xi, other.xi)), self.eta + other.eta
        )

    def __sub__(self, other: "VectorField") -> "VectorField":
        return self + other.scale(-1)

    def scale(self, s) -> "VectorField":
        s = as_expr(s)
        return VectorField(tuple(s * c for c in self.xi), s * self.eta, self.name)

    def with_eta(self, eta, name: str | None = None) -> "VectorField":
        return VectorField(self.xi, as_expr(eta), self.name if name is None else name)

    def geometric(self) -> "VectorField":
        return VectorField(self.xi, ZERO, self.name)

    def is_zero(self) -> bool:
        return all(c.is_zero_structural() for c in self.components)

    def __str__(self):
        parts = []
        for mu, c in enumerate(self.xi):
            if not c.is_zero_structural():
                parts.append(f"({c})*d{mu}")
        if not self.eta.is_zero_structural():
            parts.append(f"({self.eta})*du")
        return " + ".join(parts) if parts else "0"

    def to_json(self) -> dict:
        return {"name": self.name, "xi": [str(c) for c in self.xi], "eta": str(self.eta)}


def _same_dim(X: VectorField, Y: VectorField):
    if X.n != Y.n:
        raise DimensionError(f"dimension mismatch: n={X.n} and n={Y.n}")


def lie_bracket(X: VectorField, Y: VectorField) -> VectorField:
    """[X, Y] with components X(Y^a) - Y(X^a), the u-component included."""
    _same_dim(X, Y)
    comps = [X(b) - Y(a) for a, b in zip(X.components, Y.components)]
    return VectorField(tuple(comps[:-1]), comps[-1])


def killing_check(X: VectorField, g: Metric | int | None = None, seed: int = DEFAULT_SEED) -> Expr:
    """Conformal factor kappa of X, or KillingError for the first failing (alpha, beta)."""
    g = Metric(X.n) if g is None else (g if isinstance(g, Metric) else Metric(g))
    if g.n != X.n:
        raise DimensionError(f"field has n={X.n}, metric has n={g.n}")
    if not X.is_geometric:
        raise NotGeometricError("xi depends on u; the Killing equation needs xi = xi(x)")
    xs = [Symbol("x", m) for m in range(g.size)]
    div = ZERO
    for mu in range(g.size):
        div = div + diff(X.xi[mu], xs[mu])
    kappa = div * Fraction(2, g.size)
    for a in range(g.size):
        for b in range(a, g.size):
            r = g.sign(a) * diff(X.xi[a], xs[b]) + g.sign(b) * diff(X.xi[b], xs[a])
            if a == b:
                r = r - kappa * g.sign(a)
            if is_zero(r, seed) is not Verdict.ZERO:
                raise KillingError(a, b, r)
    return kappa


def _frac(v) -> Fraction:
    return Fraction(v)


@dataclass(frozen=True)
class ConformalParams:
    """Integration constants of the general conformal Killing field.

    ``b`` has lowered indices and must be antisymmetric; ``a`` and ``c``
    are contravariant vectors.
    """

    a: tuple
    b: tuple
    d: Fraction
    c: tuple

    def __post_init__(self):
        a = tuple(_frac(v) for v in self.a)
        c = tuple(_frac(v) for v in self.c)
        b = tuple(tuple(_frac(v) for v in row) for row in self.b)
        size = len(a)
        if size < 3 or len(c) != size or len(b) != size or any(len(r) != size for r in b):
            raise DimensionError("inconsistent parameter dimensions")
        for i in range(size):
            for j in range(size):
                if b[i][j] != -b[j][i]:
                    raise ValueError(f"b is not antisymmetric at ({i},{j})")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "d", _frac(self.d))

    @property
    def n(self) -> int:
        return len(self.a) - 1

    @classmethod
    def zero(cls, n: int) -> "ConformalParams":
        z = (0,) * (n + 1)
        return cls(z, tuple(z for _ in range(n + 1)), 0, z)

    def replace(self, **kw) -> "ConformalParams":
        vals = {"a": self.a, "b": self.b, "d": self.d, "c": self.c}
        vals.update(kw)
        return ConformalParams(**vals)

    @classmethod
    def random(cls, n: int, rng: random.Random, bound: int = 5) -> "ConformalParams":
        def r():
            return Fraction(rng.randint(-bound, bound), rng.randint(1, bound))

        size = n + 1
        b = [[Fraction(0)] * size for _ in range(size)]
        for i in range(size):
            for j in range(i + 1, size):
                v = r()
                b[i][j] = v
                b[j][i] = -v
        return cls(
            tuple(r() for _ in range(size)),
            tuple(tuple(row) for row in b),
            r(),
            tuple(r() for _ in range(size)),
        )

    def c_dot_x(self) -> Expr:
        return scalar_product([num(v) for v in self.c], coords(self.n), self.n)

    def kappa(self) -> Expr:
        """Expected conformal factor 2(2 c.x + d)."""
        return 2 * (2 * self.c_dot_x() + self.d)


def killing_solution(p: ConformalParams) -> VectorField:
    """xi^a = 2(c.x)x^a - c^a x^2 + b^{ab}x_b + d x^a + a^a."""
    n = p.n
    x = coords(n)
    x2 = x_squared(n)
    cx = p.c_dot_x()
    g = Metric(n)
    xi = []
    for al in range(n + 1):
        comp = 2 * cx * x[al] - p.c[al] * x2 + p.d * x[al] + p.a[al]
        for be in range(n + 1):
            if p.b[al][be]:
                comp = comp + g.sign(al) * p.b[al][be] * x[be]
        xi.append(comp)
    return VectorField(tuple(xi), ZERO)


def _jname(m: int, k: int) -> str:
    return f"J{m}{k}" if m < 10 and k < 10 else f"J{m}_{k}"


def generator_names(n: int) -> list[str]:
    if n < 2:
        raise DimensionError(f"dimension n must be >= 2, got {n}")
    names = [f"P{m}" for m in range(n + 1)]
    names += [_jname(m, k) for m, k in itertools.combinations(range(n + 1), 2)]
    names.append("D")
    names += [f"K{m}" for m in range(n + 1)]
    return names


_NAME = re.compile(r"P(\d+)|J(\d)(\d)|J(\d+)_(\d+)|D|K(\d+)")


def generator_params(name: str, n: int) -> ConformalParams:
    """Parameters whose Killing solution is the named basis generator."""
    m = _NAME.fullmatch(name)
    if m is None:
        raise ValueError(f"unknown generator {name!r}")
    size = n + 1
    p = ConformalParams.zero(n)
    g = Metric(n)

    def unit(i):
        if i > n:
            raise ValueError(f"generator {name!r} out of range for n={n}")
        return tuple(1 if j == i else 0 for j in range(size))

    if m.group(1) is not None:
        return p.replace(a=unit(int(m.group(1))))
    if name == "D":
        return p.replace(d=1)
    if m.group(6) is not None:
        return p.replace(c=unit(int(m.group(6))))
    mu, nu = (int(m.group(2)), int(m.group(3))) if m.group(2) else (int(m.group(4)), int(m.group(5)))
    if not mu < nu <= n:
        raise ValueError(f"generator {name!r} needs indices mu < nu <= n")
    b = [[0] * size for _ in range(size)]
    s = g.sign(mu) * g.sign(nu)
    b[mu][nu] = -s
    b[nu][mu] = s
    return p.replace(b=tuple(tuple(r) for r in b))


def conformal_basis(n: int) -> list[VectorField]:
    """P_mu, J_{mu nu} (mu < nu), D, K_mu in that order."""
    names = generator_names(n)
    x = coords(n)
    xl = lower_index(x)
    x2 = x_squared(n)
    size = n + 1
    out = []
    for name in names:
        if name[0] == "P":
            mu = int(name[1:])
            xi = [ONE if s == mu else ZERO for s in range(size)]
        elif name[0] == "J":
            mu, nu = (int(name[1]), int(name[2])) if "_" not in name else map(int, name[1:].split("_"))
            xi = [ZERO] * size
            xi[nu] = xl[mu]
            xi[mu] = -xl[nu]
        elif name == "D":
            xi = list(x)
        else:
            mu = int(name[1:])
            xi = [2 * xl[mu] * x[s] - (x2 if s == mu else ZERO) for s in range(size)]
        out.append(VectorField(tuple(xi), ZERO, name))
    return out


# -- structure constants ------------------------------------------------------------

def _vector(X: VectorField) -> dict:
    out = {}
    for i, c in enumerate(X.components):
        if not c.is_polynomial():
            raise ValueError(f"component {c} of {X.name or X} is not polynomial")
        for m, v in c.num.items():
            out[(i, m)] = v
    return out


class _Span:
    """Echelon form of a list of fields for expanding elements in their span."""

    def __init__(self, basis: Sequence[VectorField]):
        # each row: (pivot key, vector, combination of basis elements giving it)
        self.rows: list = []
        for i, X in enumerate(basis):
            vec, mult = self._reduce(_vector(X))
            if not vec:
                raise ValueError(f"basis element {i} ({X.name}) is linearly dependent")
            combo = _combine(mult, self.rows, {i: Fraction(1)}, -1)
            pivot = min(vec, key=_pivot_key)
            self.rows.append((pivot, vec, combo))

    def _reduce(self, vec: dict):
        vec = dict(vec)
        mult = []
        for r, (pivot, rvec, _) in enumerate(self.rows):
            f = vec.get(pivot)
            if not f:
                continue
            f = f / rvec[pivot]
            mult.append((r, f))
            for k, v in rvec.items():
                nv = vec.get(k, 0) - f * v
                if nv:
                    vec[k] = nv
                else:
                    vec.pop(k, None)
        return vec, mult

    def expand(self, X: VectorField):
        """Coefficients {k: c_k} with X = sum c_k basis_k, or None if X is outside the span."""
        rest, mult = self._reduce(_vector(X))
        if rest:
            return None
        return _combine(mult, self.rows, {}, 1)


def _pivot_key(k):
    return (k[0], [(a.key, str(e)) for a, e in k[1]])


def _combine(mult, rows, start: dict, sign: int) -> dict:
    combo = dict(start)
    for r, f in mult:
        for k, v in rows[r][2].items():
            nv = combo.get(k, 0) + sign * f * v
            if nv:
                combo[k] = nv
            else:
                combo.pop(k, None)
    return combo


def expand_in_basis(X: VectorField, basis: Sequence[VectorField]):
    return _Span(basis).expand(X)


@dataclass
class StructureTable:
    """Bracket coefficients [X_i, X_j] = sum_k c^k_ij X_k over an ordered basis."""

    n: int
    names: list
    brackets: dict = field(default_factory=dict)
    failures: list = field(default_factory=list)

    @property
    def closed(self) -> bool:
        return not self.failures

    def coeffs(self, i, j) -> dict:
        i = self.index(i)
        j = self.index(j)
        return self.brackets.get((i, j), {})

    def index(self, k) -> int:
        return self.names.index(k) if isinstance(k, str) else k

    def array(self) -> np.ndarray:
        d = len(self.names)
        arr = np.zeros((d, d, d))
        for (i, j), cs in self.brackets.items():
            for k, v in cs.items():
                arr[i, j, k] = float(v)
        return arr

    def is_antisymmetric(self) -> bool:
        d = len(self.names)
        return all(
            self.coeffs(i, j) == {k: -v for k, v in self.coeffs(j, i).items()}
            for i in range(d)
            for j in range(i, d)
        )

    def jacobi_residual(self) -> float:
        """Max |sum over cyclic (i,j,k) of c^m_ij c^l_mk| over the table."""
        c = self.array()
        t = np.einsum("ijm,mkl->ijkl", c, c)
        jac = t + np.transpose(t, (1, 2, 0, 3)) + np.transpose(t, (2, 0, 1, 3))
        return float(np.max(np.abs(jac))) if jac.size else 0.0

    def satisfies_jacobi(self, tol: float = 1e-9) -> bool:
        return self.jacobi_residual() <= tol

    def to_json(self) -> dict:
        d = len(self.names)
        rows = []
        for i in range(d):
            for j in range(d):
                if (i, j) in self.brackets:
                    cs = self.brackets[(i, j)]
                    rows.append([i, j, [[k, _json_number(v)] for k, v in sorted(cs.items())]])
        return {"dim": self.n, "basis": list(self.names), "brackets": rows, "closed": self.closed}


def _json_number(v: Fraction):
    return int(v) if v.denominator == 1 else str(v)


def structure_table(basis: Sequence[VectorField], names: Sequence[str] | None = None) -> StructureTable:
    """Expand every ordered bracket in the basis; pairs outside the span are recorded as failures."""
    if not basis:
        raise ValueError("empty basis")
    n = basis[0].n
    names = list(names) if names is not None else [X.name or f"X{i}" for i, X in enumerate(basis)]
    span = _Span(basis)
    table = StructureTable(n, names)
    for i, X in enumerate(basis):
        for j, Y in enumerate(basis):
            if i == j:
                table.brackets[(i, j)] = {}
                continue
            cs = span.expand(lie_bracket(X, Y))
            if cs is None:
                table.failures.append((i, j))
            else:
                table.brackets[(i, j)] = cs
    return table


# -- rank-one ---------------------------------------------------------------------------

def wedge(X: VectorField, Y: VectorField) -> list[list[Expr]]:
    """Antisymmetric matrix X^a Y^b - X^b Y^a over all components."""
    _same_dim(X, Y)
    a, b = X.components, Y.components
    return [[a[i] * b[j] - a[j] * b[i] for j in range(len(a))] for i in range(len(a))]


def is_rank_one(fields: Sequence[VectorField], seed: int = DEFAULT_SEED) -> bool:
    for X, Y in itertools.combinations(fields, 2):
        w = wedge(X, Y)
        for i in range(len(w)):
            for j in range(i + 1, len(w)):
                if is_zero(w[i][j], seed) is not Verdict.ZERO:
                    return False
    return True
