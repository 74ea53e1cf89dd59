"""Equivalence transformations of box u = F and their action on F.

A transformation maps (x, u) to (X(x), U(x, u)) with X conformal.  After
the transformation, new variables are written with the ordinary names
x0..xn, u and u_0..u_n.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import NamedTuple, Sequence

from .expr import (
    DEFAULT_SEED,
    ONE,
    U,
    ZERO,
    Expr,
    PoleError,
    Symbol,
    Verdict,
    as_expr,
    coord,
    deriv,
    diff,
    evaluate,
    is_zero,
    num,
    power,
    sample_point,
    substitute,
    sym,
)
from .minkowski import DimensionError, Metric, coords, partial_box, scalar_product, x_squared
from .symmetry import ClassError, Nonlinearity, _as_nonlinearity, _has_gradient
from .liefields import VectorField

__all__ = [
    "PointTransform",
    "ReducedTransform",
    "TransformResult",
    "SpecialConformal",
    "ConformalConditionError",
    "ChartError",
    "InverseError",
    "conformal_condition",
    "transform_general",
    "transform_reduced",
    "special_conformal",
    "pushforward",
    "sample_points",
]

LAMBDA_SAMPLES = 8


class ConformalConditionError(ValueError):
    """X is not conformal (offending index pair) or lambda is not positive (offending point)."""

    def __init__(self, message: str, pair: tuple | None = None, point: dict | None = None):
        self.pair = pair
        self.point = point
        super().__init__(message)


class ChartError(ValueError):
    """A sample point lies outside the domain of the transformation."""


class InverseError(ValueError):
    """No inverse map was supplied and none can be synthesized."""


def _x_only(e: Expr) -> bool:
    return not any(s.kind in ("u", "p", "q", "t") for s in e.free_symbols)


@dataclass(frozen=True)
class PointTransform:
    """x~ = X(x), u~ = U(x, u).

    ``X_inv`` gives x in terms of x~ (written with x names); ``U_inv``
    gives u in terms of the original x and u~ (written as u).
    """

    X: tuple
    U: Expr
    X_inv: tuple | None = None
    U_inv: Expr | None = None

    def __post_init__(self):
        object.__setattr__(self, "X", tuple(as_expr(c) for c in self.X))
        object.__setattr__(self, "U", as_expr(self.U))
        if self.X_inv is not None:
            object.__setattr__(self, "X_inv", tuple(as_expr(c) for c in self.X_inv))
        if self.U_inv is not None:
            object.__setattr__(self, "U_inv", as_expr(self.U_inv))
        if len(self.X) < 3:
            raise DimensionError("need n >= 2")
        for c in self.X:
            if not _x_only(c):
                raise ValueError(f"X must depend on x only: {c}")
        if _has_gradient(self.U):
            raise ValueError(f"U must depend on x and u only: {self.U}")
        if diff(self.U, U).is_zero_structural():
            raise ValueError("U must depend on u")

    @property
    def n(self) -> int:
        return len(self.X) - 1

    def inverse_x(self) -> tuple:
        if self.X_inv is not None:
            return self.X_inv
        inv = _affine_inverse(self.X)
        if inv is None:
            raise InverseError("X is not affine; supply X_inv")
        return inv

    def inverse_u(self) -> Expr:
        if self.U_inv is not None:
            return self.U_inv
        A = diff(self.U, U)
        if A.depends_on(U):
            raise InverseError("U is not linear in u; supply U_inv")
        B = self.U - A * sym(U)
        return (sym(U) - B) / A


@dataclass(frozen=True)
class ReducedTransform:
    """x~ = X(x), u~ = A(x) u + B(x)."""

    X: tuple
    A: Expr
    B: Expr = ZERO
    X_inv: tuple | None = None

    def __post_init__(self):
        object.__setattr__(self, "X", tuple(as_expr(c) for c in self.X))
        object.__setattr__(self, "A", as_expr(self.A))
        object.__setattr__(self, "B", as_expr(self.B))
        if self.X_inv is not None:
            object.__setattr__(self, "X_inv", tuple(as_expr(c) for c in self.X_inv))
        if self.A.is_zero_structural():
            raise ValueError("A must be nonzero")
        for c in self.X + (self.A, self.B):
            if not _x_only(c):
                raise ValueError(f"X, A and B must depend on x only: {c}")

    @property
    def n(self) -> int:
        return len(self.X) - 1

    @property
    def U(self) -> Expr:
        return self.A * sym(U) + self.B

    def as_point_transform(self) -> PointTransform:
        return PointTransform(self.X, self.U, self.X_inv)

    def inverse_x(self) -> tuple:
        return self.as_point_transform().inverse_x()


def _solve(M: list[list[Fraction]], rhs: list[Expr]) -> list[Expr] | None:
    size = len(M)
    A = [list(row) + [r] for row, r in zip(M, rhs)]
    for col in range(size):
        piv = next((r for r in range(col, size) if A[r][col] != 0), None)
        if piv is None:
            return None
        A[col], A[piv] = A[piv], A[col]
        pv = A[col][col]
        A[col] = [v / pv for v in A[col]]
        for r in range(size):
            if r != col and A[r][col] != 0:
                f = A[r][col]
                A[r] = [a - f * b for a, b in zip(A[r], A[col])]
    return [row[-1] for row in A]


def _affine_inverse(X: Sequence[Expr]) -> tuple | None:
    size = len(X)
    xs = [Symbol("x", m) for m in range(size)]
    M = []
    for c in X:
        row = []
        for x in xs:
            d = diff(c, x).as_number()
            if d is None:
                return None
            row.append(d)
        M.append(row)
    zero = {x: 0 for x in xs}
    shift = [substitute(c, zero) for c in X]
    for c in shift:
        if not _x_only(c) or c.free_symbols & set(xs):
            return None
    rhs = [coord(m) - shift[m] for m in range(size)]
    sol = _solve(M, rhs)
    return None if sol is None else tuple(sol)


def sample_points(n: int, seed: int = DEFAULT_SEED, count: int = LAMBDA_SAMPLES,
                  extra: frozenset = frozenset()) -> list[dict]:
    rng = random.Random(seed)
    syms = [Symbol("x", m) for m in range(n + 1)] + sorted(extra, key=lambda s: s.key)
    return [sample_point(syms, rng) for _ in range(count)]


def _g(T) -> Metric:
    return Metric(T.n)


def conformal_condition(T, g: Metric | int | None = None, seed: int = DEFAULT_SEED) -> Expr:
    """lambda(x) with g^{mu nu} X^a_mu X^b_nu = lambda g^{ab}, checked and sampled for positivity."""
    g = _g(T) if g is None else (g if isinstance(g, Metric) else Metric(g))
    if g.n != T.n:
        raise DimensionError(f"transform has n={T.n}, metric has n={g.n}")
    size = g.size
    xs = [Symbol("x", m) for m in range(size)]
    J = [[diff(T.X[a], xs[m]) for m in range(size)] for a in range(size)]

    def M(a, b):
        t = ZERO
        for m in range(size):
            t = t + g.sign(m) * J[a][m] * J[b][m]
        return t

    lam = M(0, 0)
    for a in range(size):
        for b in range(a, size):
            if a == b == 0:
                continue
            r = M(a, b) - (lam * g.sign(a) if a == b else ZERO)
            if is_zero(r, seed) is not Verdict.ZERO:
                raise ConformalConditionError(
                    f"conformal condition fails at index pair ({a},{b})", pair=(a, b)
                )
    extra = frozenset(s for s in lam.free_symbols if s.kind == "c")
    for pt in sample_points(g.n, seed, extra=extra):
        try:
            v = evaluate(lam, pt)
        except ZeroDivisionError:
            raise ChartError(f"lambda has a pole at {_fmt_point(pt)}") from None
        if v <= 0:
            raise ConformalConditionError(
                f"lambda = {v} is not positive at {_fmt_point(pt)}", point=pt
            )
    return lam


def _fmt_point(pt: dict) -> str:
    return "{" + ", ".join(f"{s.name}={v}" for s, v in pt.items()) + "}"


class TransformResult(NamedTuple):
    nonlinearity: Nonlinearity
    lam: Expr
    constraint_ok: bool


def _tilde(mu: int) -> Symbol:
    return Symbol("t", mu)


def _to_new_variables(E: Expr, W: Expr, X_inv: Sequence[Expr]) -> Expr:
    E = substitute(E, {U: W})
    size = len(X_inv)
    E = substitute(E, {Symbol("x", m): X_inv[m] for m in range(size)})
    return substitute(E, {_tilde(m): deriv(m) for m in range(size)})


def transform_general(F, T: PointTransform, g: Metric | int | None = None,
                      seed: int = DEFAULT_SEED) -> TransformResult:
    """The transformed nonlinearity F~(x~, u~, grad u~) for box u = F."""
    F = _as_nonlinearity(F)
    g = _g(T) if g is None else (g if isinstance(g, Metric) else Metric(g))
    lam = conformal_condition(T, g, seed)
    size = g.size
    xs = [Symbol("x", m) for m in range(size)]
    X_inv = T.inverse_x()
    W = T.inverse_u()
    Uu = diff(T.U, U)
    Uuu = diff(Uu, U)
    t = [sym(_tilde(m)) for m in range(size)]
    grads = []
    for mu in range(size):
        s = ZERO
        for sg in range(size):
            s = s + t[sg] * diff(T.X[sg], xs[mu])
        grads.append((s - diff(T.U, xs[mu])) / Uu)
    f = substitute(F.body, {Symbol("p", m): grads[m] for m in range(size)})
    E = Uu * f + partial_box(T.U, g)
    for mu in range(size):
        E = E + g.sign(mu) * (2 * grads[mu] * diff(Uu, xs[mu]) + grads[mu] * grads[mu] * Uuu)
    for sg in range(size):
        E = E - t[sg] * partial_box(T.X[sg], g)
    E = _to_new_variables(E / lam, W, X_inv)
    kind = "general" if _has_gradient(E) else "reduced"
    return TransformResult(Nonlinearity(kind, E), _to_new_variables(lam, ZERO, X_inv), True)


def transform_reduced(F, T: ReducedTransform, g: Metric | int | None = None,
                      seed: int = DEFAULT_SEED) -> TransformResult:
    """F~(x~, u~) for u~ = A u + B, with the report of the coupling constraint on X and A."""
    F = _as_nonlinearity(F)
    if not F.is_reduced:
        raise ClassError(f"the reduced class needs F = F(x, u), got {F.body}")
    g = _g(T) if g is None else (g if isinstance(g, Metric) else Metric(g))
    lam = conformal_condition(T, g, seed)
    size = g.size
    xs = [Symbol("x", m) for m in range(size)]
    A, B = T.A, T.B
    u = sym(U)
    E = A * F.body + partial_box(A, g) * u + partial_box(B, g)
    for mu in range(size):
        Am = diff(A, xs[mu])
        if not Am.is_zero_structural():
            E = E - 2 * g.sign(mu) * Am / A * (Am * u + diff(B, xs[mu]))
    ok = True
    for sg in range(size):
        c = partial_box(T.X[sg], g)
        for mu in range(size):
            c = c - 2 * g.sign(mu) * diff(T.X[sg], xs[mu]) * diff(A, xs[mu]) / A
        if is_zero(c, seed) is not Verdict.ZERO:
            ok = False
            break
    X_inv = T.inverse_x()
    W = (u - B) / A
    Ft = _to_new_variables(E / lam, W, X_inv)
    return TransformResult(Nonlinearity("reduced", Ft), _to_new_variables(lam, ZERO, X_inv), ok)


# -- special conformal maps ---------------------------------------------------------------

@dataclass
class SpecialConformal:
    transform: ReducedTransform
    lam: Expr
    sigma: Expr
    variant: str
    rejected: dict = field(default_factory=dict)


def _sc_maps(eps: Sequence, n: int, variant: str):
    x = coords(n)
    e = [num(v) for v in eps]
    ex = scalar_product(e, x, n)
    x2 = x_squared(n)
    if variant == "printed":
        sigma = 1 - 2 * ex + ex * ex
    else:
        sigma = 1 - 2 * ex + scalar_product(e, e, n) * x2
    X = tuple((x[m] - x2 * e[m]) / sigma for m in range(n + 1))
    return sigma, X


def special_conformal(eps: Sequence, n: int, seed: int = DEFAULT_SEED) -> SpecialConformal:
    """x~ = (x - x^2 eps)/sigma, u~ = sigma^((n-1)/2) u.

    Two denominators are tried: ``printed`` sigma = 1 - 2 eps.x + (eps.x)^2
    and ``standard`` sigma = 1 - 2 eps.x + (eps.eps)(x.x).  The first that
    passes the conformal condition is returned.
    """
    if n < 2:
        raise DimensionError(f"dimension n must be >= 2, got {n}")
    eps = [Fraction(v) for v in eps]
    if len(eps) != n + 1:
        raise DimensionError(f"eps needs {n + 1} components")
    g = Metric(n)
    pts = sample_points(n, seed)
    rejected = {}
    for variant in ("printed", "standard"):
        sigma, X = _sc_maps(eps, n, variant)
        for pt in pts:
            if evaluate(sigma, pt) == 0:
                raise ChartError(f"sigma vanishes at {_fmt_point(pt)}")
        _, X_inv = _sc_maps([-v for v in eps], n, variant)
        A = power(sigma, Fraction(n - 1, 2))
        T = ReducedTransform(X, A, ZERO, X_inv)
        try:
            lam = conformal_condition(T, g, seed)
        except ConformalConditionError as err:
            rejected[variant] = str(err)
            continue
        if not _inverse_ok(X, X_inv, pts):
            rejected[variant] = "parameter-negated map is not an inverse"
            continue
        return SpecialConformal(T, lam, sigma, variant, rejected)
    raise ConformalConditionError(f"no denominator variant is conformal: {rejected}")


def _inverse_ok(X, X_inv, pts, tol: float = 1e-9) -> bool:
    size = len(X)
    for pt in pts:
        try:
            img = {Symbol("x", m): evaluate(X[m], pt) for m in range(size)}
            back = [evaluate(X_inv[m], img) for m in range(size)]
        except ZeroDivisionError:
            raise ChartError(f"inverse map leaves the chart at {_fmt_point(pt)}") from None
        for m in range(size):
            if abs(back[m] - pt[Symbol("x", m)]) > tol:
                return False
    return True


# -- pushforward ------------------------------------------------------------------------------

def pushforward(Q: VectorField, T: PointTransform) -> VectorField:
    """The image of Q under an affine point transform, written in the new variables."""
    size = T.n + 1
    xs = [Symbol("x", m) for m in range(size)]
    X_inv = T.inverse_x()
    W = T.inverse_u()
    comps = []
    for m in range(size):
        c = ZERO
        for k in range(size):
            c = c + Q.xi[k] * diff(T.X[m], xs[k])
        comps.append(c)
    ceta = Q(T.U)
    return VectorField(
        tuple(_to_new_variables(c, W, X_inv) for c in comps),
        _to_new_variables(ceta, W, X_inv),
        Q.name,
    )
