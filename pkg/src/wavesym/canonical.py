"""Canonical realizations of the conformal algebra and rank-one obstructions."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

from .expr import DEFAULT_SEED, U, ZERO, Expr, Verdict, as_expr, diff, is_zero, sym
from .liefields import (
    StructureTable,
    VectorField,
    conformal_basis,
    lie_bracket,
    structure_table,
)
from .minkowski import DimensionError, Metric, coords, lower_index
from .symmetry import formal_residual, jet_symbols

__all__ = [
    "Realization",
    "RealizationReport",
    "RankOneReport",
    "realization_thm1",
    "realization_thm2",
    "realization",
    "verify_realization",
    "rank_one_check",
    "geometric_table",
    "REALIZATIONS",
]

REALIZATIONS = ("conformal", "thm1-eps0", "thm1-eps1", "thm2")


@dataclass(frozen=True)
class Realization:
    name: str
    n: int
    basis: tuple
    epsilon: int | None = None

    @property
    def names(self) -> list[str]:
        return [X.name for X in self.basis]

    def generator(self, name: str) -> VectorField:
        for X in self.basis:
            if X.name == name:
                return X
        raise KeyError(name)

    def replace(self, name: str, field_: VectorField, label: str | None = None) -> "Realization":
        """A copy with one generator swapped (used for fault injection)."""
        basis = tuple(field_ if X.name == name else X for X in self.basis)
        return Realization(label or self.name, self.n, basis, self.epsilon)

    def to_json(self, table: StructureTable | None = None) -> dict:
        table = table or structure_table(list(self.basis))
        out = table.to_json()
        out["realization"] = self.name
        out["eta"] = [str(X.eta) for X in self.basis]
        return out


def _extend(n: int, d_weight, k_weight) -> list[VectorField]:
    u = sym(U)
    xl = lower_index(coords(n))
    out = []
    for X in conformal_basis(n):
        if X.name == "D":
            X = X.with_eta(d_weight * u)
        elif X.name[0] == "K":
            X = X.with_eta(k_weight * xl[int(X.name[1:])] * u)
        out.append(X)
    return out


def realization_thm1(n: int, epsilon: int) -> Realization:
    """D = x.d + eps u du and K_mu = 2 x_mu D - x^2 d_mu, so K_mu gains 2 eps x_mu u du."""
    if n < 2:
        raise DimensionError(f"dimension n must be >= 2, got {n}")
    if epsilon not in (0, 1):
        raise ValueError(f"epsilon must be 0 or 1, got {epsilon!r}")
    return Realization(f"thm1-eps{epsilon}", n, tuple(_extend(n, epsilon, 2 * epsilon)), epsilon)


def realization_thm2(n: int) -> Realization:
    """D = x.d + ((1-n)/2) u du and K_mu with u-component (1-n) x_mu u."""
    if n < 2:
        raise DimensionError(f"dimension n must be >= 2, got {n}")
    return Realization("thm2", n, tuple(_extend(n, Fraction(1 - n, 2), 1 - n)))


def realization(name: str, n: int) -> Realization:
    if name == "conformal":
        if n < 2:
            raise DimensionError(f"dimension n must be >= 2, got {n}")
        return Realization("conformal", n, tuple(conformal_basis(n)))
    if name == "thm1-eps0":
        return realization_thm1(n, 0)
    if name == "thm1-eps1":
        return realization_thm1(n, 1)
    if name == "thm2":
        return realization_thm2(n)
    raise ValueError(f"unknown realization {name!r}; choose from {', '.join(REALIZATIONS)}")


@lru_cache(maxsize=None)
def geometric_table(n: int) -> StructureTable:
    return structure_table(conformal_basis(n))


@dataclass
class RealizationReport:
    name: str
    n: int
    checked: int
    mismatches: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.mismatches

    def to_json(self) -> dict:
        return {
            "realization": self.name,
            "n": self.n,
            "checked": self.checked,
            "passed": self.passed,
            "mismatches": [
                {"pair": [a, b], "residual": [str(c) for c in r.components]}
                for a, b, r in self.mismatches
            ],
        }


def verify_realization(r: Realization, seed: int = DEFAULT_SEED) -> RealizationReport:
    """Check [Z_i, Z_j] = c^k_ij Z_k with the structure constants of the geometric basis."""
    table = geometric_table(r.n)
    basis = list(r.basis)
    if [X.geometric().components for X in basis] != [
        X.components for X in conformal_basis(r.n)
    ]:
        raise ValueError("geometric parts differ from the conformal basis")
    report = RealizationReport(r.name, r.n, 0)
    for i, j in itertools.combinations(range(len(basis)), 2):
        report.checked += 1
        br = lie_bracket(basis[i], basis[j])
        expected = VectorField(tuple(ZERO for _ in range(r.n + 1)), ZERO)
        for k, c in table.coeffs(i, j).items():
            expected = expected + basis[k].scale(c)
        diff_ = br - expected
        if any(is_zero(c, seed) is not Verdict.ZERO for c in diff_.components):
            report.mismatches.append((basis[i].name, basis[j].name, diff_))
    return report


# -- rank-one realizations ---------------------------------------------------------------

@dataclass
class RankOneReport:
    algebra: str
    verdict: str
    relations_hold: bool
    residuals: list
    identity_ok: bool | None = None
    labels: dict | None = None
    contradiction: Expr | None = None

    def to_json(self) -> dict:
        return {
            "algebra": self.algebra,
            "verdict": self.verdict,
            "relations_hold": self.relations_hold,
            "residuals": [str(r) for r in self.residuals],
            "identity_ok": self.identity_ok,
            "labels": self.labels,
            "contradiction": None if self.contradiction is None else str(self.contradiction),
        }


def _br(a: Expr, b: Expr) -> Expr:
    """u-component of [a du, b du]."""
    return a * diff(b, U) - b * diff(a, U)


def _zero(e: Expr, seed: int) -> bool:
    return is_zero(e, seed) is Verdict.ZERO


def _solve_for(r: Expr, s: Expr) -> Expr | None:
    from .expr import as_symbol

    v = as_symbol(s)
    c = diff(r, v)
    if c.is_zero_structural() or c.depends_on(v):
        return None
    return -(r - c * s) / c


def rank_one_check(algebra: str, etas: Sequence, n: int = 3, seed: int = DEFAULT_SEED) -> RankOneReport:
    """Rank-one realizations eta_i(x, u) du of so(3) or sl(2).

    so3: residuals of [Q1,Q2]=Q3, [Q2,Q3]=Q1, [Q3,Q1]=Q2 and the identity
    eta1^2 + eta2^2 + eta3^2 = -(eta3 R1 + eta1 R2 + eta2 R3), which rules
    out any real nonzero solution.
    sl2: relations [h,e]=2e, [h,f]=-2f, [e,f]=h tried over all labelings;
    when they hold the classifying equation is solved for F_u and F and the
    remaining equation is reported.
    """
    if len(etas) != 3:
        raise ValueError(f"rank_one_check needs exactly 3 expressions, got {len(etas)}")
    e1, e2, e3 = (as_expr(e) for e in etas)
    if algebra == "so3":
        R = [_br(e1, e2) - e3, _br(e2, e3) - e1, _br(e3, e1) - e2]
        holds = all(_zero(r, seed) for r in R)
        identity = e1 * e1 + e2 * e2 + e3 * e3 + e3 * R[0] + e1 * R[1] + e2 * R[2]
        identity_ok = _zero(identity, seed)
        if all(e.is_zero_structural() for e in (e1, e2, e3)):
            verdict = "degenerate"
        else:
            verdict = "no nonzero realization"
        return RankOneReport("so3", verdict, holds, R, identity_ok)
    if algebra != "sl2":
        raise ValueError(f"unknown algebra {algebra!r}; choose so3 or sl2")
    best = None
    for perm in itertools.permutations(range(3)):
        h, e, f = ((e1, e2, e3)[i] for i in perm)
        R = [_br(h, e) - 2 * e, _br(h, f) + 2 * f, _br(e, f) - h]
        if all(_zero(r, seed) for r in R):
            best = (perm, R, h, e, f)
            break
        if best is None:
            best = (perm, R, None, None, None)
    perm, R, h, e, f = best
    if h is None:
        return RankOneReport("sl2", "relations fail", False, R)
    labels = {"h": perm[0], "e": perm[1], "f": perm[2]}
    if any(x.is_zero_structural() for x in (h, e, f)):
        return RankOneReport("sl2", "degenerate", True, R, labels=labels)
    g = Metric(n)
    zero_xi = tuple(ZERO for _ in range(n + 1))
    jets = jet_symbols(n)
    rf = formal_residual(VectorField(zero_xi, f), g)
    rh = formal_residual(VectorField(zero_xi, h), g)
    re = formal_residual(VectorField(zero_xi, e), g)
    Fu = _solve_for(rf, jets["Fu"])
    if Fu is None:
        return RankOneReport("sl2", "undetermined", True, R, labels=labels)
    rh = rh.subs({jets["Fu"]: Fu})
    Fval = _solve_for(rh, jets["F"])
    if Fval is None:
        return RankOneReport("sl2", "undetermined", True, R, labels=labels)
    final = re.subs({jets["Fu"]: Fu, jets["F"]: Fval})
    verdict = "contradiction" if not _zero(final, seed) else "consistent"
    return RankOneReport("sl2", verdict, True, R, labels=labels, contradiction=final)
