from __future__ import annotations

from fractions import Fraction as F

import pytest
from hypothesis import given
from hypothesis import strategies as st

from teleportsim.scalar import SQRT2, Scalar, exact_sqrt, is_zero, sqrt2_inject

rationals = st.fractions(min_value=-50, max_value=50, max_denominator=40)
scalars = st.builds(Scalar, rationals, rationals)


def test_conjugate_product():
    assert Scalar(1, 1) * Scalar(1, -1) == -1


def test_inverse_of_two():
    assert Scalar(2).inv() == F(1, 2)


def test_sqrt2_inject():
    x = sqrt2_inject(F(3, 4))
    assert x.rational_part == 0 and x.radical_part == F(3, 4)


def test_inverse_of_zero_raises():
    with pytest.raises(ZeroDivisionError):
        Scalar(0).inv()
    with pytest.raises(ZeroDivisionError):
        Scalar(1) / Scalar(0)


def test_float_mixing_refused():
    with pytest.raises(TypeError):
        Scalar(1) + 0.5
    with pytest.raises(TypeError):
        Scalar(0.5)


def test_sqrt2_squares_to_two():
    assert SQRT2 * SQRT2 == 2
    assert (SQRT2 / 2) ** 2 == F(1, 2)


def test_exact_sqrt():
    assert exact_sqrt(F(9, 4)) == F(3, 2)
    assert exact_sqrt(F(1, 2)) == Scalar(0, F(1, 2))
    assert exact_sqrt(Scalar(3, 2)) == Scalar(1, 1)
    assert exact_sqrt(Scalar(3, -2)) == Scalar(-1, 1)
    with pytest.raises(ValueError):
        exact_sqrt(3)
    with pytest.raises(ValueError):
        exact_sqrt(-4)


def test_ordering_is_exact():
    assert Scalar(F(141, 100)) < SQRT2 < Scalar(F(142, 100))
    assert Scalar(-2, 2) > 0
    assert Scalar(-3, 2) < 0
    assert not is_zero(Scalar(0, 1))


@given(scalars, scalars, scalars)
def test_field_axioms(a, b, c):
    assert (a + b) + c == a + (b + c)
    assert a * (b + c) == a * b + a * c
    assert a * b == b * a
    assert a - a == 0


@given(scalars)
def test_inverse(a):
    if a != 0:
        assert a * a.inv() == 1


@given(scalars)
def test_float_agrees(a):
    assert abs(float(a) - (float(a.rational_part) + float(a.radical_part) * 2 ** 0.5)) < 1e-9


@given(scalars)
def test_exact_sqrt_of_square(a):
    r = exact_sqrt(a * a)
    assert r * r == a * a and r >= 0
