"""Minkowski metric diag(1, -1, ..., -1) on (n+1)-dimensional space-time."""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Sequence

from .expr import ZERO, Expr, Symbol, as_expr, coord, diff

__all__ = [
    "Metric",
    "CausalClass",
    "DimensionError",
    "scalar_product",
    "causal_class",
    "lower_index",
    "raise_index",
    "dalembertian",
    "partial_box",
    "coords",
    "x_squared",
]


class DimensionError(ValueError):
    """A vector or dimension does not match the configured n."""


@dataclass(frozen=True)
class Metric:
    """The flat metric of signature (+, -, ..., -) for coordinates x0..xn."""

    n: int

    def __post_init__(self):
        if not isinstance(self.n, int) or self.n < 2:
            raise DimensionError(f"dimension n must be an integer >= 2, got {self.n!r}")

    @property
    def size(self) -> int:
        return self.n + 1

    def sign(self, mu: int) -> int:
        """Diagonal entry g_{mu mu} (equal to g^{mu mu})."""
        return 1 if mu == 0 else -1

    def matrix(self) -> list[list[int]]:
        return [[self.sign(i) if i == j else 0 for j in range(self.size)] for i in range(self.size)]

    def check(self, v: Sequence) -> None:
        if len(v) != self.size:
            raise DimensionError(f"expected a vector of length {self.size}, got {len(v)}")


class CausalClass(str, Enum):
    TIME_LIKE = "time-like"
    LIGHT_LIKE = "light-like"
    SPACE_LIKE = "space-like"

    def __str__(self):
        return self.value


def _as_metric(g) -> Metric:
    return g if isinstance(g, Metric) else Metric(g)


def scalar_product(x: Sequence, y: Sequence, g: Metric | int) -> Expr:
    g = _as_metric(g)
    g.check(x)
    g.check(y)
    total = ZERO
    for mu in range(g.size):
        total = total + g.sign(mu) * as_expr(x[mu]) * as_expr(y[mu])
    return total


def causal_class(x: Sequence, g: Metric | int | None = None) -> CausalClass:
    """Sign of x.x; the zero vector counts as space-like."""
    if g is not None:
        _as_metric(g).check(x)
    vals = [v if isinstance(v, float) else Fraction(v) for v in x]
    if all(v == 0 for v in vals):
        return CausalClass.SPACE_LIKE
    s = vals[0] * vals[0] - sum(v * v for v in vals[1:])
    if s > 0:
        return CausalClass.TIME_LIKE
    if s == 0:
        return CausalClass.LIGHT_LIKE
    return CausalClass.SPACE_LIKE


def lower_index(v: Sequence, g: Metric | int | None = None) -> list[Expr]:
    if g is not None:
        _as_metric(g).check(v)
    return [as_expr(c) if i == 0 else -as_expr(c) for i, c in enumerate(v)]


def raise_index(v: Sequence, g: Metric | int | None = None) -> list[Expr]:
    # the metric is its own inverse
    return lower_index(v, g)


def coords(n: int) -> list[Expr]:
    return [coord(i) for i in range(n + 1)]


def x_squared(n: int) -> Expr:
    x = coords(n)
    return scalar_product(x, x, n)


def partial_box(e: Expr, g: Metric | int) -> Expr:
    """sum_mu g^{mu mu} d_mu d_mu e, treating u and u_mu as independent symbols."""
    g = _as_metric(g)
    e = as_expr(e)
    total = ZERO
    for mu in range(g.size):
        x = Symbol("x", mu)
        total = total + g.sign(mu) * diff(diff(e, x), x)
    return total


def dalembertian(e: Expr, g: Metric | int) -> Expr:
    """The wave operator on a function of x alone."""
    e = as_expr(e)
    if any(s.kind in ("u", "p", "q", "t") for s in e.free_symbols):
        raise ValueError(f"dalembertian expects a function of x only, got {e}")
    return partial_box(e, g)
