from math import comb

import pytest

from wavesym.canonical import (
    REALIZATIONS,
    rank_one_check,
    realization,
    realization_thm1,
    realization_thm2,
    verify_realization,
)
from wavesym.expr import U, ZERO, sym
from wavesym.liefields import VectorField, conformal_basis, is_rank_one, structure_table
from wavesym.minkowski import coords
from wavesym.parser import parse
from wavesym.symmetry import Nonlinearity, conformal_exponent, determining_residual_reduced

u = sym(U)


def test_thm1_eps0_is_geometric():
    r = realization_thm1(3, 0)
    assert r.generator("D").components == tuple(coords(3)) + (ZERO,)
    assert [X.components for X in r.basis] == [X.components for X in conformal_basis(3)]


def test_thm1_eps1_dk_in_span():
    r = realization_thm1(3, 1)
    t = structure_table(list(r.basis))
    assert t.closed
    assert t.coeffs("D", "K0") == {t.index("K0"): 1}


def test_thm2_weights():
    assert realization_thm2(3).generator("D").eta == -u
    assert realization_thm2(2).generator("K0").eta == parse("-x0*u", 2)


@pytest.mark.parametrize("name", REALIZATIONS[1:])
@pytest.mark.parametrize("n", [2, 3, 4])
def test_realizations_verify(name, n):
    rep = verify_realization(realization(name, n))
    assert rep.passed
    assert rep.checked == comb((n + 2) * (n + 3) // 2, 2)


def test_fault_injection_reports_bracket():
    n = 3
    r = realization_thm2(n)
    K0 = r.generator("K0")
    bad = r.replace("K0", K0.with_eta((2 - n) * parse("x0*u", n)), "thm2-faulty")
    rep = verify_realization(bad)
    assert not rep.passed
    assert rep.mismatches[0][:2] == ("P0", "K0")


def test_bad_epsilon():
    with pytest.raises(ValueError):
        realization_thm1(2, 2)


@pytest.mark.parametrize("n", [2, 3])
def test_thm2_is_symmetry_algebra_of_conformal_power(n):
    F = Nonlinearity.power(conformal_exponent(n))
    for X in realization_thm2(n).basis:
        r, ok = determining_residual_reduced(F, X)
        assert r == ZERO and ok, X.name


def test_sine_perturbed_rotation_breaks_closure():
    # n=2: J01 + sin(u) du does not close with the K_mu
    basis = conformal_basis(2)
    pert = [X.with_eta(parse("sin(u)", 2)) if X.name == "J01" else X for X in basis]
    t = structure_table(pert)
    assert not t.closed
    assert any("K" in t.names[i] + t.names[j] for i, j in t.failures)


SO3_CORPUS = [
    ("sin(u)", "cos(u)", "1"),
    ("u", "u^2", "x0"),
    ("1", "0", "0"),
    ("exp(u)", "-exp(u)", "u*x1"),
    ("sin(x0)*u", "cos(x0)", "u^3 + 1"),
    ("1", "u", "u^2"),
]


@pytest.mark.parametrize("etas", SO3_CORPUS)
def test_so3_impossible(etas):
    rep = rank_one_check("so3", [parse(e, 3) for e in etas])
    assert rep.verdict == "no nonzero realization"
    assert rep.identity_ok
    assert not rep.relations_hold


def test_so3_zero_triple():
    rep = rank_one_check("so3", [ZERO, ZERO, ZERO])
    assert rep.verdict == "degenerate"


def test_sl2_canonical_triple():
    rep = rank_one_check("sl2", [parse("1", 3), parse("2*u", 3), parse("-u^2", 3)])
    assert rep.relations_hold
    assert rep.verdict == "contradiction"
    assert rep.contradiction == parse("2*u_0^2 - 2*u_1^2 - 2*u_2^2 - 2*u_3^2", 3)


def test_sl2_relations_fail():
    rep = rank_one_check("sl2", [parse("1", 3), parse("u", 3), parse("x0", 3)])
    assert rep.verdict == "relations fail"


def test_rank_one_wedge():
    zero = (ZERO,) * 4
    fields = [VectorField(zero, parse(e, 3)) for e in ("1", "2*u", "-u^2")]
    assert is_rank_one(fields)
