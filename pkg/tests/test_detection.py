from __future__ import annotations

import math
from fractions import Fraction as F

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from teleportsim.detection import (
    BALANCED,
    CHAIN,
    FIFTY_FIFTY,
    CascadeSpec,
    apply_measurement,
    cascade_coefficient_by_fock,
    cascade_coefficient_by_routing,
    cascade_effective_coefficient,
    cascade_tree,
    leaf_fractions,
    povm_cascade,
    povm_click,
    povm_click_unpolarized,
    povm_identity,
    povm_no_click,
    povm_single_click,
)
from teleportsim.fock import Ket, basis_ket, outer, squared_norm
from teleportsim.scalar import is_zero

ETAS = (F(0), F(1, 10), F(1, 2), F(49, 50), F(1))


def test_no_click_examples():
    assert povm_no_click("a", F(1, 2))(0) == 1
    assert povm_no_click("a", 1)(1) == 0
    assert povm_no_click("a", F(1, 10))(2) == F(81, 100)


def test_click_examples():
    assert povm_click("a", F(1, 10))(1) == F(1, 10)
    assert povm_click("a", F(1, 10))(0) == 0


def test_unpolarized_examples():
    assert povm_click_unpolarized("x", "y", 1)(1, 0) == 1
    assert povm_click_unpolarized("x", "y", F(1, 2))(1, 1) == F(3, 4)
    assert povm_click_unpolarized("x", "y", F(1, 2))(0, 0) == 0


def test_efficiency_range():
    with pytest.raises(ValueError):
        povm_click("a", F(3, 2))
    with pytest.raises(ValueError):
        povm_no_click("a", -F(1, 10))
    with pytest.raises(ValueError):
        CascadeSpec(0, F(1, 2))
    with pytest.raises(ValueError):
        CascadeSpec(2, F(1, 2), y_policy="maybe")


@pytest.mark.parametrize("eta", ETAS)
def test_completeness_and_bounds(eta):
    e0, e1 = povm_no_click("a", eta), povm_click("a", eta)
    for n in range(7):
        assert e0(n) + e1(n) == 1
        assert 0 <= e0(n) <= 1 and 0 <= e1(n) <= 1
        assert e1(n) == e0.complement()(n)
        for m in range(7 - n):
            assert 0 <= povm_click_unpolarized("x", "y", eta)(n, m) <= 1


def test_cascade_tree_shapes():
    assert cascade_tree(1) == 0
    assert cascade_tree(4) == ((0, 1), (2, 3))
    assert cascade_tree(3, CHAIN) == ((0, 1), 2)
    assert leaf_fractions(3) == [F(1, 3)] * 3
    assert leaf_fractions(4, CHAIN, FIFTY_FIFTY) == [F(1, 8), F(1, 8), F(1, 4), F(1, 2)]


def test_cascade_examples():
    eta = F(1, 10)
    for n in range(1, 5):
        assert cascade_effective_coefficient(n, 1, eta) == eta
        assert cascade_effective_coefficient(n, 0, eta) == 0
    assert cascade_effective_coefficient(1, 2, eta) == 1 - (1 - eta) ** 2


@pytest.mark.parametrize("eta", ETAS)
def test_two_detector_two_photons(eta):
    # routing oracle: both photons in one detector (prob 1/2) or split (prob 1/2)
    loss = 1 - eta
    same = 1 - loss ** 2
    split = 2 * eta * loss
    expected = F(1, 2) * same + F(1, 2) * split
    assert cascade_effective_coefficient(2, 2, eta) == expected
    assert cascade_coefficient_by_routing(2, 2, eta) == expected
    assert cascade_coefficient_by_fock(2, 2, eta) == expected


def test_rejection_monotone():
    vals = [cascade_effective_coefficient(n, 2, 1) for n in range(1, 5)]
    assert all(a > b for a, b in zip(vals, vals[1:]))
    assert vals == [1, F(1, 2), F(1, 3), F(1, 4)]


@pytest.mark.parametrize("n", [1, 2, 3, 4])
@pytest.mark.parametrize("photons", [0, 1, 2, 3])
def test_three_routes_agree(n, photons):
    for eta in (F(1, 10), F(1, 2), F(49, 50)):
        tree = cascade_effective_coefficient(n, photons, eta)
        assert cascade_coefficient_by_routing(n, photons, eta) == tree
        exact = n != 3  # uniform 3-way splitting needs sqrt(1/3)
        fock = cascade_coefficient_by_fock(n, photons, eta if exact else float(eta), exact=exact)
        assert math.isclose(float(fock), float(tree), rel_tol=1e-12, abs_tol=1e-15)


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_transparency_and_topology_independence(n):
    for eta in ETAS:
        assert cascade_effective_coefficient(n, 1, eta, CHAIN) == eta
        for k in range(4):
            assert (cascade_effective_coefficient(n, k, eta, BALANCED)
                    == cascade_effective_coefficient(n, k, eta, CHAIN))


def test_fifty_fifty_trees_depend_on_topology():
    # with plain 50:50 splitters a four-detector chain is unbalanced
    bal = cascade_effective_coefficient(4, 2, 1, BALANCED, FIFTY_FIFTY)
    chain = cascade_effective_coefficient(4, 2, 1, CHAIN, FIFTY_FIFTY)
    assert bal == F(1, 4) and chain == F(11, 32)


def test_cascade_povm_bounds():
    for n in range(1, 5):
        povm = povm_cascade("a", CascadeSpec(n, F(1, 2)))
        for k in range(7):
            assert 0 <= povm(k) <= 1


def test_single_click_pattern_sum():
    povm = povm_single_click(("l1", "l2"), F(1, 2))
    assert povm(1, 1) == 2 * F(1, 2) * F(1, 2)
    assert povm(0, 0) == 0


def test_measurement_click_on_u():
    psi = Ket({basis_ket({"d_y": 1}): F(3, 5), basis_ket({"d_x": 1}): F(4, 5)})
    state = Ket({basis_ket({"u": 1, "d_y": 1}): F(3, 5), basis_ket({"u": 1, "d_x": 1}): F(4, 5)})
    rho = apply_measurement(state, [povm_click("u", 1)], {"u"})
    assert rho == outer(psi) and rho.trace() == 1


def test_measurement_of_vacuum():
    rho = apply_measurement(Ket.vacuum(modes=("u", "d")), [povm_click("u", F(1, 2))], {"u"})
    assert rho.is_zero()


def test_measurement_errors():
    k = Ket.basis({"u": 1, "d": 1})
    with pytest.raises(ValueError):
        apply_measurement(k, [povm_click("d", 1)], {"u"})
    with pytest.raises(ValueError):
        apply_measurement(k, [povm_click("u", 1), povm_no_click("u", 1)], {"u"})
    with pytest.raises(KeyError):
        apply_measurement(k, [], {"zz"})


occupations = st.dictionaries(st.sampled_from(("u", "v", "d")), st.integers(0, 3), max_size=3)
coefficients = st.fractions(min_value=-3, max_value=3, max_denominator=7)
kets = st.lists(st.tuples(occupations, coefficients), min_size=1, max_size=5).map(
    lambda terms: sum((Ket.basis(o, c) for o, c in terms), Ket.zero(modes=("u", "v", "d"))))


@settings(max_examples=60)
@given(kets, st.sampled_from(ETAS))
def test_measurement_trace_oracle(k, eta):
    povms = [povm_click("u", eta), povm_no_click("v", eta)]
    rho = apply_measurement(k, povms, {"u", "v"})
    direct = 0
    for b, c in k.items():
        occ = dict(b)
        w = povms[0](occ.get("u", 0)) * povms[1](occ.get("v", 0))
        direct += c * c * w * squared_norm(Ket.basis(occ))
    assert rho.trace() == direct
    assert rho.is_hermitian() and rho.diagonal_nonnegative()
    full = apply_measurement(k, [povm_identity(("u", "v"))], {"u", "v"})
    assert full.trace() == squared_norm(k)
    assert is_zero(full.trace() - rho.trace() - apply_measurement(
        k, [povms[0].complement(), povms[1]], {"u", "v"}).trace()
        - apply_measurement(k, [povm_identity(("u",)), povms[1].complement()], {"u", "v"}).trace())
