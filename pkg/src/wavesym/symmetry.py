"""Classifying determining equations for point symmetries of box u = F.

Two classes are handled: the general class F(x, u, grad u) and the reduced
class F(x, u).  Candidates are vector fields Q = xi^mu(x) d_mu + eta d_u whose
x-part is a conformal Killing field.  The residual functions below vanish
identically exactly when Q is a point symmetry.  An independent check via
the second prolongation of Q is provided by :func:`prolongation_oracle`.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import NamedTuple

from .expr import (
    DEFAULT_SEED,
    DEFAULT_TOL,
    U,
    ZERO,
    Expr,
    Symbol,
    Verdict,
    as_expr,
    const,
    deriv,
    diff,
    is_zero,
    num,
    power as _power,
    substitute,
    sym,
)
from .liefields import (
    ConformalParams,
    VectorField,
    conformal_basis,
    killing_check,
    killing_solution,
)
from .minkowski import DimensionError, Metric, partial_box

__all__ = [
    "Nonlinearity",
    "SymmetryReport",
    "ReducedResidual",
    "ClassError",
    "determining_residual_general",
    "determining_residual_reduced",
    "prolongation_oracle",
    "kg_classifying_residual",
    "conformal_exponent",
    "power_invariance_check",
    "check_symmetry",
    "split_linear_eta",
    "jet_symbols",
    "classifying_coefficients",
    "formal_residual",
    "report_from_json",
]

KINDS = ("general", "reduced", "power", "potential", "zero")


class ClassError(ValueError):
    """Input violates the assumptions of the nonlinearity class."""


def _has_gradient(e: Expr) -> bool:
    return any(s.kind in ("p", "q", "t") for s in e.free_symbols)


@dataclass(frozen=True)
class Nonlinearity:
    """Right-hand side F of box u = F with its class.

    ``general`` may depend on u_mu; all other kinds are reduced (F(x, u)).
    ``potential`` stores F = -V u.
    """

    kind: str
    body: Expr
    params: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown nonlinearity kind {self.kind!r}")
        object.__setattr__(self, "body", as_expr(self.body))
        if self.kind != "general" and _has_gradient(self.body):
            raise ClassError(f"a {self.kind} nonlinearity may not depend on u_mu: {self.body}")

    @property
    def is_reduced(self) -> bool:
        return self.kind != "general"

    @classmethod
    def general(cls, body) -> "Nonlinearity":
        return cls("general", body)

    @classmethod
    def reduced(cls, body) -> "Nonlinearity":
        return cls("reduced", body)

    @classmethod
    def power(cls, k, F0=None) -> "Nonlinearity":
        F0 = const("F0") if F0 is None else as_expr(F0)
        kk = k.as_number() if isinstance(k, Expr) else Fraction(k)
        if kk is not None and kk in (0, 1):
            raise ClassError("power nonlinearity needs k != 0, 1")
        return cls("power", F0 * _power(sym(U), k), {"k": k, "F0": F0})

    @classmethod
    def potential(cls, V) -> "Nonlinearity":
        V = as_expr(V)
        if V.depends_on(U) or _has_gradient(V):
            raise ClassError(f"potential must depend on x only: {V}")
        return cls("potential", -V * sym(U), {"V": V})

    @classmethod
    def zero(cls) -> "Nonlinearity":
        return cls("zero", ZERO)

    def __str__(self):
        return str(self.body)


def _as_nonlinearity(F) -> Nonlinearity:
    if isinstance(F, Nonlinearity):
        return F
    F = as_expr(F)
    return Nonlinearity("general" if _has_gradient(F) else "reduced", F)


def _metric(Q: VectorField, g) -> Metric:
    if g is None:
        return Metric(Q.n)
    g = g if isinstance(g, Metric) else Metric(g)
    if g.n != Q.n:
        raise DimensionError(f"candidate has n={Q.n}, metric has n={g.n}")
    return g


def _xs(g: Metric) -> list[Symbol]:
    return [Symbol("x", m) for m in range(g.size)]


def _ps(g: Metric) -> list[Symbol]:
    return [Symbol("p", m) for m in range(g.size)]


def jet_symbols(n: int) -> dict:
    """Formal constants standing for F, F_u, F_{x^mu} and F_{u_mu} at a point."""
    return {
        "F": const("Fval"),
        "Fu": const("Fu"),
        "Fx": [const(f"Fx{m}") for m in range(n + 1)],
        "Fp": [const(f"Fp{m}") for m in range(n + 1)],
    }


def classifying_coefficients(Q: VectorField, g: Metric) -> dict:
    """Coefficients of F, F_u, F_{x^mu}, F_{u_mu} and the F-free rest of the classifying equation."""
    eta = Q.eta
    xs = _xs(g)
    pv = [deriv(m) for m in range(g.size)]
    eta_u = diff(eta, U)
    eta_uu = diff(eta_u, U)
    coef_p = []
    for mu in range(g.size):
        tau = diff(eta, xs[mu]) + pv[mu] * eta_u
        for s in range(g.size):
            tau = tau - pv[s] * diff(Q.xi[s], xs[mu])
        coef_p.append(tau)
    rest = -partial_box(eta, g)
    for s in range(g.size):
        rest = rest + pv[s] * partial_box(Q.xi[s], g)
    for mu in range(g.size):
        rest = rest - 2 * g.sign(mu) * pv[mu] * diff(eta_u, xs[mu])
        rest = rest - g.sign(mu) * pv[mu] * pv[mu] * eta_uu
    return {
        "F": 2 * diff(Q.xi[0], xs[0]) - eta_u,
        "Fu": eta,
        "Fx": list(Q.xi),
        "Fp": coef_p,
        "rest": rest,
    }


def formal_residual(Q: VectorField, g: Metric | int | None = None) -> Expr:
    """The classifying equation with F and its derivatives left as formal jet constants."""
    g = _metric(Q, g)
    c = classifying_coefficients(Q, g)
    j = jet_symbols(g.n)
    r = c["rest"] + c["F"] * j["F"] + c["Fu"] * j["Fu"]
    for mu in range(g.size):
        r = r + c["Fx"][mu] * j["Fx"][mu] + c["Fp"][mu] * j["Fp"][mu]
    return r


def determining_residual_general(F, Q: VectorField, g: Metric | int | None = None,
                                 seed: int = DEFAULT_SEED) -> Expr:
    """Residual of the classifying equation for F(x, u, grad u).

    Raises NotGeometricError if xi depends on u and KillingError if xi is
    not a conformal Killing field.
    """
    F = _as_nonlinearity(F)
    g = _metric(Q, g)
    killing_check(Q, g, seed)
    f = F.body
    c = classifying_coefficients(Q, g)
    r = c["rest"] + c["F"] * f + c["Fu"] * diff(f, U)
    for mu in range(g.size):
        if not c["Fx"][mu].is_zero_structural():
            r = r + c["Fx"][mu] * diff(f, Symbol("x", mu))
        fp = diff(f, Symbol("p", mu))
        if not fp.is_zero_structural():
            r = r + c["Fp"][mu] * fp
    return r


def split_linear_eta(eta: Expr) -> tuple[Expr, Expr]:
    """Write eta = a(x) u + b(x); ClassError if eta is not linear in u."""
    eta = as_expr(eta)
    a = diff(eta, U)
    if a.depends_on(U) or _has_gradient(eta):
        raise ClassError(f"eta must be linear in u for the reduced class: {eta}")
    b = eta - a * sym(U)
    if b.depends_on(U):
        raise ClassError(f"eta must be linear in u for the reduced class: {eta}")
    return a, b


class ReducedResidual(NamedTuple):
    residual: Expr
    constraint_ok: bool


def determining_residual_reduced(F, Q: VectorField, g: Metric | int | None = None,
                                 seed: int = DEFAULT_SEED) -> ReducedResidual:
    """Residual for F(x, u) with eta = a(x) u + b(x), and the coupling box xi^mu = 2 g^{mu mu} a_mu."""
    F = _as_nonlinearity(F)
    if not F.is_reduced or _has_gradient(F.body):
        raise ClassError(f"the reduced class needs F = F(x, u), got {F.body}")
    g = _metric(Q, g)
    killing_check(Q, g, seed)
    a, _ = split_linear_eta(Q.eta)
    f = F.body
    xs = _xs(g)
    r = ZERO
    for mu in range(g.size):
        if not Q.xi[mu].is_zero_structural():
            r = r + Q.xi[mu] * diff(f, xs[mu])
    r = r + Q.eta * diff(f, U) + (2 * diff(Q.xi[0], xs[0]) - a) * f - partial_box(Q.eta, g)
    ok = True
    for mu in range(g.size):
        c = partial_box(Q.xi[mu], g) - 2 * g.sign(mu) * diff(a, xs[mu])
        if is_zero(c, seed) is not Verdict.ZERO:
            ok = False
            break
    return ReducedResidual(r, ok)


# -- second prolongation ------------------------------------------------------------------

def _q(i: int, j: int) -> Symbol:
    return Symbol("q", (min(i, j), max(i, j)))


def _total(e: Expr, nu: int, size: int) -> Expr:
    """Total derivative on second-order jets: d_nu + u_nu d_u + u_{mu nu} d_{u_mu}."""
    r = diff(e, Symbol("x", nu)) + deriv(nu) * diff(e, U)
    for mu in range(size):
        d = diff(e, Symbol("p", mu))
        if not d.is_zero_structural():
            r = r + sym(_q(mu, nu)) * d
    return r


def prolongation_residual(F, Q: VectorField, g: Metric | int | None = None) -> Expr:
    """pr2 Q applied to box u - F, restricted to solutions via u_00 = F + sum_a u_aa."""
    F = _as_nonlinearity(F)
    g = _metric(Q, g)
    size = g.size
    f = F.body
    pv = [deriv(m) for m in range(size)]
    first = []
    for mu in range(size):
        t = _total(Q.eta, mu, size)
        for s in range(size):
            t = t - pv[s] * _total(Q.xi[s], mu, size)
        first.append(t)
    box = ZERO
    for mu in range(size):
        t = _total(first[mu], mu, size)
        for s in range(size):
            t = t - sym(_q(mu, s)) * _total(Q.xi[s], mu, size)
        box = box + g.sign(mu) * t
    prF = Q(f)
    for mu in range(size):
        prF = prF + first[mu] * diff(f, Symbol("p", mu))
    expr = box - prF
    shell = f
    for a in range(1, size):
        shell = shell + sym(_q(a, a))
    return substitute(expr, {_q(0, 0): shell})


def prolongation_oracle(F, Q: VectorField, g: Metric | int | None = None,
                        seed: int = DEFAULT_SEED, tol: float = DEFAULT_TOL) -> str:
    """'symmetry', 'not symmetry' or 'undetermined' from the second prolongation."""
    v = is_zero(prolongation_residual(F, Q, g), seed, tol)
    if v is Verdict.ZERO:
        return "symmetry"
    if v is Verdict.NONZERO:
        return "not symmetry"
    return "undetermined"


# -- worked classes ----------------------------------------------------------------------------

def kg_classifying_residual(V, p: ConformalParams) -> Expr:
    """xi^mu V_mu + 2 d_0 xi^0 V for the Killing field with parameters p."""
    V = as_expr(V)
    if V.depends_on(U) or _has_gradient(V):
        raise ClassError(f"V must be a function of x only: {V}")
    X = killing_solution(p)
    r = 2 * diff(X.xi[0], Symbol("x", 0)) * V
    for mu in range(p.n + 1):
        r = r + X.xi[mu] * diff(V, Symbol("x", mu))
    return r


def conformal_exponent(n: int) -> Fraction:
    if n < 2:
        raise DimensionError(f"dimension n must be >= 2, got {n}")
    return Fraction(n + 3, n - 1)


@dataclass
class SymmetryReport:
    generator: str
    residual: Expr
    verdict: str
    constraint_ok: bool | None = None
    kappa: Expr | None = None
    n: int | None = None
    F: str | None = None
    cls: str | None = None
    Q: VectorField | None = None

    @property
    def is_symmetry(self) -> bool:
        return self.verdict == "symmetry"

    def to_json(self) -> dict:
        out = {
            "generator": self.generator,
            "residual": str(self.residual),
            "verdict": "symmetry" if self.is_symmetry else "not",
            "constraint_ok": self.constraint_ok,
            "kappa": None if self.kappa is None else str(self.kappa),
        }
        if self.n is not None:
            out["n"] = self.n
        if self.F is not None:
            out["F"] = self.F
        if self.cls is not None:
            out["class"] = self.cls
        if self.Q is not None:
            out["Q"] = [str(c) for c in self.Q.components]
        return out


def check_symmetry(F, Q: VectorField, cls: str | None = None, g: Metric | int | None = None,
                   seed: int = DEFAULT_SEED, tol: float = DEFAULT_TOL) -> SymmetryReport:
    """Evaluate the appropriate determining equation and package the verdict."""
    F = _as_nonlinearity(F)
    g = _metric(Q, g)
    cls = cls or ("reduced" if F.is_reduced else "general")
    kappa = killing_check(Q, g, seed)
    if cls == "reduced":
        res, ok = determining_residual_reduced(F, Q, g, seed)
    elif cls == "general":
        res, ok = determining_residual_general(F, Q, g, seed), None
    else:
        raise ValueError(f"unknown class {cls!r}")
    z = is_zero(res, seed, tol)
    sym_ok = z is Verdict.ZERO and ok is not False
    return SymmetryReport(
        Q.name or "Q", res, "symmetry" if sym_ok else "not", ok, kappa, g.n, str(F.body), cls, Q
    )


def power_invariance_check(k, n: int, eta: str = "conformal", F0=None,
                           seed: int = DEFAULT_SEED) -> list[SymmetryReport]:
    """Per-generator verdicts for F = F0 u^k with eta = a(x) u.

    ``eta="conformal"`` uses a = ((1 - n)/4) kappa for every generator;
    ``eta="matched"`` uses a = kappa/(1 - k), the weight that makes the
    residual vanish for constant kappa.
    """
    if n < 2:
        raise DimensionError(f"dimension n must be >= 2, got {n}")
    if eta not in ("conformal", "matched"):
        raise ValueError(f"unknown eta rule {eta!r}")
    F = Nonlinearity.power(k, F0)
    g = Metric(n)
    u = sym(U)
    reports = []
    for X in conformal_basis(n):
        kappa = killing_check(X, g, seed)
        if eta == "conformal":
            a = Fraction(1 - n, 4) * kappa
        else:
            a = kappa / (1 - as_expr(k))
        Q = X.with_eta(a * u)
        reports.append(check_symmetry(F, Q, "reduced", g, seed))
    return reports


def report_from_json(data: dict, seed: int = DEFAULT_SEED, tol: float = DEFAULT_TOL) -> SymmetryReport:
    """Rebuild a report's inputs from its JSON form and re-run the check."""
    from .parser import parse

    n = data["n"]
    comps = [parse(c, n) for c in data["Q"]]
    Q = VectorField(tuple(comps[:-1]), comps[-1], data["generator"])
    body = parse(data["F"], n)
    cls = data["class"]
    F = Nonlinearity.general(body) if cls == "general" else Nonlinearity.reduced(body)
    return check_symmetry(F, Q, cls, n, seed, tol)
