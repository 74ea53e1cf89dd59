import pytest

from wavesym.expr import U, ZERO, num, sym
from wavesym.minkowski import (
    CausalClass,
    DimensionError,
    Metric,
    causal_class,
    coords,
    dalembertian,
    lower_index,
    raise_index,
    scalar_product,
    x_squared,
)
from wavesym.parser import parse


def test_scalar_product_examples():
    assert scalar_product((1, 0, 0, 0), (1, 0, 0, 0), Metric(3)) == num(1)
    assert scalar_product((1, 1, 0, 0), (1, 1, 0, 0), Metric(3)) == ZERO
    assert scalar_product((0, 1, 0), (0, 0, 1), Metric(2)) == ZERO


def test_scalar_product_length_mismatch():
    with pytest.raises(DimensionError):
        scalar_product((1, 0), (1, 0, 0), Metric(2))


@pytest.mark.parametrize(
    "v, cls",
    [
        ((2, 1, 0, 0), CausalClass.TIME_LIKE),
        ((1, 1, 0, 0), CausalClass.LIGHT_LIKE),
        ((0, 0, 0, 0), CausalClass.SPACE_LIKE),
        ((0, 1, 0, 0), CausalClass.SPACE_LIKE),
    ],
)
def test_causal_class(v, cls):
    assert causal_class(v) is cls


def test_index_gymnastics():
    assert lower_index((1, 2, 3), Metric(2)) == [num(1), num(-2), num(-3)]
    v = [parse("x0 + u", 3), num(2), parse("x1^2", 3), num(0)]
    assert raise_index(lower_index(v, Metric(3)), Metric(3)) == v
    assert lower_index((0, 0, 0)) == [ZERO, ZERO, ZERO]


def test_dalembertian_examples():
    assert dalembertian(parse("x0^2", 3), Metric(3)) == num(2)
    for n in (2, 3, 4):
        assert dalembertian(x_squared(n), Metric(n)) == num(2 * (n + 1))


@pytest.mark.parametrize("n", [2, 3])
def test_box_of_c_dot_x_times_x(n):
    g = Metric(n)
    cs = [parse(f"c{a}", n) for a in range(n + 1)]
    cx = scalar_product(cs, coords(n), g)
    for alpha, x in enumerate(coords(n)):
        assert dalembertian(cx * x, g) == 2 * cs[alpha]


def test_dalembertian_rejects_u():
    with pytest.raises(ValueError):
        dalembertian(sym(U), Metric(3))


def test_metric_dimension():
    with pytest.raises(DimensionError):
        Metric(1)
    assert Metric(3).size == 4
    assert [Metric(3).sign(m) for m in range(4)] == [1, -1, -1, -1]
