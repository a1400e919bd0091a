from __future__ import annotations

import math
from fractions import Fraction as F

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from teleportsim.detection import CHAIN, NO_CLICK, TRACE_OUT, CascadeSpec
from teleportsim.experiment import (
    ConfigError,
    ExperimentConfig,
    IdealState,
    OrderedDensity,
    build_output_state,
    cross_term_check,
    efficiency_sensitivity,
    f2_formula,
    f2_threshold,
    f2_threshold_limit,
    f3_formula,
    fidelity,
    innsbruck_threshold,
    innsbruck_variant,
    max_p1,
    partition_demo,
    proportionality,
    pump_ratio,
    required_p2,
    third_order_reference,
    vacuum_signal_formula,
    vacuum_signal_ratio,
)
from teleportsim.fock import DensityOperator, Ket, basis_ket, outer
from teleportsim.scalar import Scalar

DX, DY = basis_ket({"d_x": 1}), basis_ket({"d_y": 1})


def cfg(n=1, eta=F(1, 10), y=NO_CLICK, order=2, cos=1, sin=0, p1=F(1, 100), p2=F(1, 100),
        eta_u=1, eta_v=1, **kw):
    return ExperimentConfig(p1=p1, p2=p2, cos_theta=cos, sin_theta=sin, eta_u_sq=eta_u, eta_v_sq=eta_v,
                            cascade=CascadeSpec(n, eta, y), truncation_order=order, **kw)


# -- configuration ---------------------------------------------------------------

def test_order_validation():
    with pytest.raises(ConfigError) as exc:
        cfg(order=4)
    assert exc.value.key == "order"


@pytest.mark.parametrize("kw,key", [
    ({"p1": 0}, "p1"), ({"p2": -F(1, 100)}, "p2"), ({"eta_u": F(3, 2)}, "eta_u_sq"),
    ({"cos": F(1, 2), "sin": F(1, 2)}, "theta"), ({"p1": 0.01}, "mode"),
])
def test_config_errors_name_key(kw, key):
    with pytest.raises(ConfigError) as exc:
        cfg(**kw)
    assert exc.value.key == key


def test_ideal_states():
    ideal = IdealState(F(3, 5), F(4, 5))
    assert ideal.psi == Ket({DY: F(3, 5), DX: F(4, 5)})
    from teleportsim.fock import inner_product
    assert inner_product(ideal.psi, ideal.psi_perp) == 0
    assert inner_product(ideal.psi_perp, ideal.psi_perp) == 1
    with pytest.raises(ValueError):
        IdealState(1, 1)


# -- second order ----------------------------------------------------------------

def test_single_detector_vacuum_ratio():
    od = build_output_state(cfg())
    assert vacuum_signal_ratio(od, IdealState(1, 0)) == F(14, 5)
    assert fidelity(od, IdealState(1, 0)) == F(5, 19) == f2_formula(1, F(1, 100), F(1, 100), F(1, 10))


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_perfect_cascade_ratio(n):
    # at unit efficiency only the 1/n rejection of double pairs remains
    od = build_output_state(cfg(n=n, eta=1))
    assert vacuum_signal_ratio(od, IdealState(1, 0)) == F(1, n)
    assert vacuum_signal_formula(n, F(1, 100), F(1, 100), 1) == F(1, n)


@pytest.mark.parametrize("n", [2, 3, 4])
@pytest.mark.parametrize("eta", [F(1, 10), F(1, 2), F(49, 50)])
def test_cascade_ratio_observed(n, eta):
    # measured vacuum/signal ratio for an n-cascade with no click in a_y
    od = build_output_state(cfg(n=n, eta=eta, p1=F(1, 100), p2=F(1, 200)))
    observed = F(1, 100) * (1 + (3 * n - 1) * (1 - eta)) / (n * F(1, 200))
    assert vacuum_signal_ratio(od, IdealState(1, 0)) == observed


def test_order_two_structure():
    od = build_output_state(cfg(n=2, eta=F(1, 2), cos=F(3, 5), sin=F(4, 5)))
    assert set(od.blocks) == {(2, 0), (1, 1)}
    signal = od.block(1, 1)
    psi = IdealState(F(3, 5), F(4, 5)).psi
    assert proportionality(signal, outer(psi)) is not None
    assert set(od.block(2, 0).entries) == {((), ())}
    assert not od.cross


def test_blocks_hermitian_nonnegative():
    for order in (2, 3):
        od = build_output_state(cfg(n=2, eta=F(1, 2), order=order, cos=F(3, 5), sin=F(4, 5),
                                    eta_u=F(1, 2), eta_v=F(1, 10)))
        for block in od.blocks.values():
            assert block.is_hermitian() and block.diagonal_nonnegative()
        assert od.trace() > 0


@pytest.mark.parametrize("n", [2, 3, 4])
def test_explicit_cascade_matches_effective_povm(n):
    exact = n != 3
    eta = F(1, 2) if exact else 0.5
    mode = "exact" if exact else "float"
    p = F(1, 100) if exact else 0.01
    base = dict(n=n, eta=eta, p1=p, p2=p, mode=mode, eta_u=eta, eta_v=eta, cos=1 if exact else 1.0,
                sin=0 if exact else 0.0)
    eff = build_output_state(cfg(**base), with_cross=False)
    explicit = build_output_state(cfg(**base, explicit_cascade=True), with_cross=False)
    assert set(eff.blocks) == set(explicit.blocks)
    for key, block in eff.blocks.items():
        for kb, c in block.items():
            assert math.isclose(float(explicit.block(*key).entry(*kb)), float(c), rel_tol=1e-12)


def test_chain_topology_same_state():
    a = build_output_state(cfg(n=4, eta=F(1, 2), order=3))
    b = build_output_state(ExperimentConfig(
        p1=F(1, 100), p2=F(1, 100), cascade=CascadeSpec(4, F(1, 2), NO_CLICK, topology=CHAIN),
        truncation_order=3))
    assert a.blocks.keys() == b.blocks.keys()
    assert all(a.blocks[k] == b.blocks[k] for k in a.blocks)


def test_float_mode_agrees():
    ex = build_output_state(cfg(n=2, eta=F(1, 2), order=3, cos=F(3, 5), sin=F(4, 5)))
    fl = build_output_state(cfg(n=2, eta=0.5, order=3, cos=0.6, sin=0.8, p1=0.01, p2=0.01,
                                eta_u=1.0, eta_v=1.0, mode="float"))
    assert math.isclose(float(fidelity(ex, IdealState(F(3, 5), F(4, 5)))),
                        fidelity(fl, IdealState(0.6, 0.8)), rel_tol=1e-12)


# -- fidelity and formulas ---------------------------------------------------------

def test_fidelity_examples():
    ideal = IdealState(F(3, 5), F(4, 5))
    assert fidelity(outer(ideal.psi), ideal) == 1
    assert fidelity(outer(ideal.psi_perp), ideal) == 0
    a2, b2 = F(1, 3), F(2, 3)
    rho = DensityOperator({((), ()): a2}, modes=("d_x", "d_y")) + outer(ideal.psi) * b2
    assert fidelity(rho, ideal) == b2 / (a2 + b2)
    with pytest.raises(ZeroDivisionError):
        fidelity(DensityOperator(modes=("d_x", "d_y")), ideal)


def test_f2_formula_examples():
    p = F(1, 100)
    assert f2_formula(1, p, p, 1) == F(1, 2)
    # bracket is 1 at unit efficiency but the n in the numerator remains
    assert f2_formula(4, p, p, 1) == F(4, 5)
    assert f2_formula(1, p, p, F(1, 10)) == F(5, 19)


def test_thresholds():
    p = F(1, 100)
    assert f2_threshold_limit(p, p) == F(14, 15)
    assert f2_threshold(4, p, p) == F(50, 51)
    assert f2_threshold(3, p, p) == 1
    assert f2_threshold(5, p, p) == F(64, 66)
    for n in range(1, 6):
        t = f2_threshold(n, p, p)
        assert f2_formula(n, p, p, t) == F(3, 4)
        assert max_p1(n, p, t) == p
    assert innsbruck_threshold(p, p) == F(8, 3)  # above unity: unreachable


def test_single_detector_variant():
    rho, f = innsbruck_variant(F(1, 10))
    assert f == F(10, 39)
    assert vacuum_signal_ratio(rho, IdealState(1, 0)) == F(29, 10)
    assert innsbruck_variant(1)[1] == F(1, 3)
    # state proportional to (3 - eta^2)|0><0| + |psi><psi|
    psi = IdealState(F(3, 5), F(4, 5))
    rho, _ = innsbruck_variant(F(1, 2), cos_theta=F(3, 5), sin_theta=F(4, 5))
    ref = DensityOperator({((), ()): F(5, 2)}, modes=("d_x", "d_y")) + outer(psi.psi)
    assert proportionality(rho, ref) is not None


def test_efficiency_sensitivity():
    assert efficiency_sensitivity(F(1, 10), F(95, 100)) == F(85, 100) / F(19, 10)
    assert efficiency_sensitivity(F(1, 2), F(1, 2)) == 0
    p = F(1, 100)
    fp, fm = f2_formula(1, p, p, F(95, 100)), f2_formula(1, p, p, F(1, 10))
    assert efficiency_sensitivity(F(1, 10), F(95, 100)) == (fp - fm) / fp


def test_pump_economics():
    p1 = F(1, 100)
    assert required_p2(p1, F(1, 10)) == F(87, 10) * p1
    assert required_p2(p1, 1) == 6 * p1
    assert pump_ratio(1) == 1 and pump_ratio(4) == 2
    assert math.isclose(pump_ratio(8.7), 2.9496, abs_tol=1e-4)
    with pytest.raises(ValueError):
        pump_ratio(-1)


# -- third order -----------------------------------------------------------------

def _third(eta, cos=F(3, 5), sin=F(4, 5), p=F(1, 100)):
    return build_output_state(ExperimentConfig(
        p1=p, p2=p, cos_theta=cos, sin_theta=sin, eta_u_sq=eta, eta_v_sq=eta,
        cascade=CascadeSpec(1, eta, TRACE_OUT), truncation_order=3))


@pytest.mark.parametrize("theta", [(F(3, 5), F(4, 5)), (F(1), F(0))])
@pytest.mark.parametrize("eta", [F(1, 10), F(1, 2)])
def test_third_order_vacuum_and_two_photon_blocks(theta, eta):
    od = _third(eta, *theta)
    ref = third_order_reference(*theta, eta)
    lam = proportionality(od.block(3, 0), ref[(3, 0)])
    assert lam is not None and lam > 0
    assert proportionality(od.block(1, 2), ref[(1, 2)]) == lam
    assert set(od.blocks) == {(2, 0), (1, 1), (3, 0), (2, 1), (1, 2)}


@pytest.mark.parametrize("eta", [F(1, 10), F(1, 2), F(49, 50)])
def test_third_order_single_photon_block_observed(eta):
    # measured: 2(2-eta^2)(|psi><psi| - |psi_perp><psi_perp|) + 8(3-eta^2) rho1
    ideal = IdealState(F(3, 5), F(4, 5))
    od = _third(eta)
    ref = third_order_reference(F(3, 5), F(4, 5), eta)
    lam = proportionality(od.block(3, 0), ref[(3, 0)])
    rho1 = DensityOperator({(DX, DX): F(1, 2), (DY, DY): F(1, 2)}, modes=("d_x", "d_y"))
    observed = (outer(ideal.psi) - outer(ideal.psi_perp)) * (2 * (2 - eta)) + rho1 * (8 * (3 - eta))
    assert od.block(2, 1) == observed * lam


def test_third_order_fidelity_formula_limits():
    for eta in (F(1, 10), F(1, 2), 1):
        assert f3_formula(0, eta) == 1 / (4 - F(eta))
    eta, p = F(1, 10), F(1, 10**4)
    f2 = 1 / (4 - eta)
    rel = (f2 - f3_formula(p, eta)) / f2
    assert F(5, 10**5) <= rel <= F(5, 10**4)


@pytest.mark.parametrize("p", [F(1, 10**4), F(1, 100)])
@pytest.mark.parametrize("eta", [F(1, 10), F(1, 2), F(1)])
def test_third_order_fidelity_observed(p, eta):
    od = _third(eta, p=p)
    observed = (4 + p * (2 - eta) * (8 - 3 * eta)) / (
        4 * (4 - eta) + p * (72 - 68 * eta + 22 * eta ** 2 - 3 * eta ** 3))
    assert fidelity(od, IdealState(F(3, 5), F(4, 5))) == observed


# -- structure and invariances -------------------------------------------------------

def test_cross_terms():
    assert cross_term_check(build_output_state(cfg()))
    assert cross_term_check(build_output_state(cfg(order=3, y=TRACE_OUT)))
    bad = DensityOperator({((), ()): F(1), ((), DX): F(1, 4), (DX, ()): F(1, 4), (DX, DX): F(1)},
                          modes=("d_x", "d_y"))
    assert not cross_term_check(bad)
    od = build_output_state(cfg())
    od.cross[((2, 0), (1, 1))] = bad
    assert not cross_term_check(od)
    misplaced = OrderedDensity({(2, 0): DensityOperator({(DX, DX): F(1)})}, F(1), F(1))
    assert not cross_term_check(misplaced)


def test_partition_demo():
    for a2, b2, theta in ((F(1, 2), F(1, 2), (1, 0)), (F(1), F(0), (1, 0)), (F(1, 4), F(3, 4), (F(3, 5), F(4, 5)))):
        rho, rho_p, equal = partition_demo(a2, b2, IdealState(*theta))
        assert equal and rho == rho_p
    rho, rho_p, equal = partition_demo(0.3, 0.7, IdealState(0.6, 0.8))
    assert all(math.isclose(rho_p.entry(*k), c, abs_tol=1e-15) for k, c in rho.items())


triples = st.sampled_from([(F(1), F(0)), (F(3, 5), F(4, 5)), (F(4, 5), F(3, 5)), (F(5, 13), F(12, 13)),
                           (F(-8, 17), F(15, 17))])
effs = st.sampled_from([F(1, 10), F(1, 2), F(49, 50), F(1)])


@settings(max_examples=25, deadline=None)
@given(triples, effs, effs, st.integers(1, 4), st.sampled_from([NO_CLICK, TRACE_OUT]), st.sampled_from([2, 3]))
def test_theta_invariance_and_uv_symmetry(theta, eta_u, eta_v, n, y, order):
    eta_c = F(1, 2)
    ref = fidelity(build_output_state(cfg(n=n, eta=eta_c, y=y, order=order, eta_u=eta_u, eta_v=eta_v),
                                      with_cross=False), IdealState(1, 0))
    od = build_output_state(cfg(n=n, eta=eta_c, y=y, order=order, cos=theta[0], sin=theta[1],
                                eta_u=eta_v, eta_v=eta_u), with_cross=False)
    assert fidelity(od, IdealState(*theta)) == ref
    assert cross_term_check(od)


def test_radical_free_probabilities():
    od = build_output_state(cfg(n=2, eta=F(1, 2), order=3, cos=F(3, 5), sin=F(4, 5)))
    tr = od.trace()
    assert not isinstance(tr, Scalar) or tr.is_rational
