from __future__ import annotations

import math
from fractions import Fraction as F

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from teleportsim.fock import Ket, PhotonCapError, basis_ket, inner_product, squared_norm, to_normalized
from teleportsim.optics import (
    BeamSplitterSpec,
    PolarizationRotation,
    UnitarityError,
    beam_splitter,
    l_minus,
    l_plus,
    l_zero,
    linear_substitution,
    pair_norm_sq,
    pair_state,
    phi_n,
    polarization_rotation,
    tensor,
)
from teleportsim.pdc import SourceSpec, pdc_state
from teleportsim.scalar import HALF_SQRT2

PA, PB = ("a_x", "a_y"), ("b_x", "b_y")
BS = BeamSplitterSpec.balanced("a", "b", "c", "d")

occupations = st.dictionaries(st.sampled_from(("a", "b")), st.integers(0, 3), max_size=2)
coefficients = st.fractions(min_value=-3, max_value=3, max_denominator=9)
two_mode_kets = st.lists(st.tuples(occupations, coefficients), min_size=1, max_size=4).map(
    lambda terms: sum((Ket.basis(o, c) for o, c in terms), Ket.zero(modes=("a", "b"))))


def test_single_photon_split():
    out = beam_splitter(Ket.basis({"a": 1}, modes=("a", "b")), BS)
    assert out == Ket({basis_ket({"c": 1}): HALF_SQRT2, basis_ket({"d": 1}): HALF_SQRT2})


def test_hong_ou_mandel():
    out = beam_splitter(Ket.basis({"a": 1, "b": 1}), BS)
    assert out.coeff({"c": 1, "d": 1}) == 0
    # (|2,0> - |0,2>)/sqrt2 in the orthonormal basis
    norm = to_normalized(Ket({b: float(c) for b, c in out.items()}))
    assert math.isclose(norm.coeff({"c": 2}), 1 / math.sqrt(2))
    assert math.isclose(norm.coeff({"d": 2}), -1 / math.sqrt(2))


def test_vacuum_through_splitter():
    assert beam_splitter(Ket.vacuum(modes=("a", "b")), BS) == Ket.vacuum()


def test_unitarity_violation():
    with pytest.raises(UnitarityError):
        BeamSplitterSpec("a", "b", "c", "d", F(1, 2), F(1, 2))
    with pytest.raises(UnitarityError):
        PolarizationRotation(("x", "y"), F(1, 2), F(1, 2))


def test_missing_input_mode():
    with pytest.raises(KeyError):
        beam_splitter(Ket.basis({"a": 1}), BS)


def test_output_clash_refused():
    with pytest.raises(ValueError):
        linear_substitution(Ket.basis({"a": 1, "c": 1}), {"a": [("c", 1)]})


def test_rotation_identity_and_definition():
    k = Ket.basis({"x": 2, "y": 1}, F(2, 3))
    assert polarization_rotation(k, PolarizationRotation(("x", "y"), 1, 0)) == k
    rot = PolarizationRotation(("x", "y"), F(3, 5), F(4, 5))
    out = polarization_rotation(Ket.basis({"x": 1}), rot)
    assert out == Ket({basis_ket({"x": 1}): F(3, 5), basis_ket({"y": 1}): F(4, 5)})


@given(two_mode_kets)
def test_rotation_inverse(k):
    rot = PolarizationRotation(("a", "b"), F(3, 5), F(4, 5))
    assert polarization_rotation(polarization_rotation(k, rot), rot.inverse()) == k


@given(two_mode_kets, st.sampled_from([(HALF_SQRT2, HALF_SQRT2), (F(3, 5), F(4, 5)), (F(5, 13), F(-12, 13))]))
def test_splitter_unitarity(k, amps):
    spec = BeamSplitterSpec("a", "b", "c", "d", *amps)
    assert squared_norm(beam_splitter(k, spec)) == squared_norm(k)
    assert squared_norm(polarization_rotation(k, PolarizationRotation(("a", "b"), *amps))) == squared_norm(k)


@given(st.integers(1, 3))
def test_hom_identical_polarisation(n):
    # n photons in each input: odd-odd coincidences vanish
    out = beam_splitter(Ket.basis({"a": 1, "b": 1}), BS)
    assert out.coeff({"c": 1, "d": 1}) == 0
    out = beam_splitter(Ket.basis({"a": n, "b": n}), BS)
    for j in range(1, 2 * n, 2):
        assert out.coeff({"c": j, "d": 2 * n - j}) == 0


def test_l_plus_on_vacuum():
    out = l_plus(Ket.vacuum(), PA, PB)
    expected = Ket.basis({"a_x": 1, "b_y": 1}) - Ket.basis({"a_y": 1, "b_x": 1})
    assert out == expected


def test_l_plus_linearity():
    k = Ket.basis({"a_x": 1}, F(2, 7), modes=PA + PB)
    assert l_plus(k * 3, PA, PB) == l_plus(k, PA, PB) * 3


def test_pair_norms():
    for n in range(4):
        assert squared_norm(pair_state(n)) == 1 / pair_norm_sq(n)
    assert pair_norm_sq(2) == F(1, 12)
    assert pair_norm_sq(3) == F(1, 144)


def test_phi_n():
    assert phi_n(0) == Ket.vacuum(modes=PA + PB)
    assert phi_n(1) == l_plus(Ket.vacuum(), PA, PB) * HALF_SQRT2
    assert squared_norm(phi_n(3)) == 1
    assert math.isclose(squared_norm(phi_n(2, mode="float")), 1.0)
    with pytest.raises(ValueError):
        phi_n(2)
    with pytest.raises(PhotonCapError):
        phi_n(3, cap=4)


def test_phi_orthonormal():
    states = [phi_n(n, mode="float") for n in range(4)]
    for i, a in enumerate(states):
        for j, b in enumerate(states):
            assert math.isclose(inner_product(a, b), 1.0 if i == j else 0.0, abs_tol=1e-14)


def test_phi3_terms():
    # L+^3|0> has four occupation patterns with weights from the binomial expansion
    k = pair_state(3)
    assert len(k) == 4
    assert k.coeff({"a_x": 3, "b_y": 3}) == 36


@st.composite
def small_four_mode_kets(draw):
    terms = draw(st.lists(st.tuples(
        st.dictionaries(st.sampled_from(PA + PB), st.integers(0, 2), max_size=4), coefficients),
        min_size=1, max_size=3))
    return sum((Ket.basis(o, c) for o, c in terms), Ket.zero(modes=PA + PB))


@settings(max_examples=60)
@given(small_four_mode_kets())
def test_su11_commutator(k):
    comm = l_minus(l_plus(k, PA, PB), PA, PB) - l_plus(l_minus(k, PA, PB), PA, PB)
    assert comm == l_zero(k, PA, PB) * 2


def _float_ket(k: Ket) -> Ket:
    return Ket({b: float(c) for b, c in k.items()}, modes=k.modes)


@settings(max_examples=15, deadline=None)
@given(st.floats(0.01, 0.2))
def test_normal_ordering_on_vacuum(tau):
    # exp(tau (L+ - L-))|0> against exp(-q) exp(r L+)|0>, Taylor series in float
    term = Ket.vacuum(modes=PA + PB, coeff=1.0)
    total = term
    for m in range(1, 30):
        term = (l_plus(term, PA, PB) - l_minus(term, PA, PB)) * (tau / m)
        total = total + term
    r, q = math.tanh(tau), 2 * math.log(math.cosh(tau))
    ordered = pdc_state(SourceSpec(PA, PB, r, 3)) * math.exp(-q)
    for b, c in ordered.items():
        assert math.isclose(total.coeff(b), c, rel_tol=1e-9, abs_tol=1e-15)


def test_tensor():
    k = tensor(Ket.basis({"a": 1}), Ket.basis({"b": 2}, 3))
    assert k == Ket.basis({"a": 1, "b": 2}, 3)
    with pytest.raises(ValueError):
        tensor(Ket.basis({"a": 1}), Ket.basis({"a": 1}))
