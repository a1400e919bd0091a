"""Registry of the acceptance checks behind ``teleportsim verify``.

Each numbered criterion expands into one or more :class:`CheckResult` rows.
A :class:`Perturbation` lets a harness deliberately break a constant to
confirm that the suite can fail.
"""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable

from .detection import (
    BALANCED,
    CHAIN,
    NO_CLICK,
    TRACE_OUT,
    CascadeSpec,
    cascade_effective_coefficient,
    povm_click,
    povm_click_unpolarized,
    povm_no_click,
)
from .experiment import (
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
    innsbruck_variant,
    partition_demo,
    proportionality,
    required_p2,
    third_order_reference,
    vacuum_signal_formula,
    vacuum_signal_ratio,
)
from .fock import DensityOperator, Ket, apply_annihilation, apply_creation, basis_ket, squared_norm
from .optics import BeamSplitterSpec, PolarizationRotation, beam_splitter, polarization_rotation
from .pdc import distinguishability_trials, expected_trials, p_pdc, pdc_tail, statistical_distance_sq
from .scalar import Scalar

__all__ = [
    "CheckResult",
    "Perturbation",
    "CRITERIA",
    "render",
    "run_checks",
    "criterion_status",
    "format_result",
]

F = Fraction
P_GRID = ((F(1, 100), F(1, 100)), (F(1, 100), F(1, 200)), (F(1, 200), F(1, 100)), (F(1, 200), F(1, 200)))
ETA_GRID = (F(1, 10), F(1, 2), F(49, 50), F(1))
N_GRID = (1, 2, 3, 4)
THETAS = ((F(1), F(0)), (F(3, 5), F(4, 5)), (F(4, 5), F(3, 5)))


@dataclass(frozen=True)
class Perturbation:
    """Deliberate constant changes for negative controls; defaults are the true values."""

    f2_vacuum_slope: int = 5


@dataclass(frozen=True)
class CheckResult:
    criterion: int
    tag: str
    name: str
    expected: str
    actual: str
    passed: bool


def render(x) -> str:
    if isinstance(x, bool):
        return str(x)
    if isinstance(x, Scalar) and x.is_rational:
        x = x.rational_part
    if isinstance(x, float):
        return f"{x:.15g}"
    return str(x)


def _check(criterion: int, name: str, expected, actual, passed: bool) -> CheckResult:
    return CheckResult(criterion, CRITERIA[criterion][0], name, render(expected), render(actual), bool(passed))


def _config(n: int, eta, p1=F(1, 100), p2=F(1, 100), y=NO_CLICK, order=2, theta=(F(1), F(0)),
            eta_u=F(1), eta_v=F(1)) -> ExperimentConfig:
    return ExperimentConfig(p1=p1, p2=p2, cos_theta=theta[0], sin_theta=theta[1],
                            eta_u_sq=eta_u, eta_v_sq=eta_v,
                            cascade=CascadeSpec(n, eta, y), truncation_order=order)


def _with_p(od: OrderedDensity, p1, p2) -> OrderedDensity:
    # blocks do not depend on p1, p2, which only weight them
    return OrderedDensity(od.blocks, p1, p2, od.cross, od.order)


def _first_mismatch(pairs: Iterable[tuple[str, object, object]]):
    pairs = list(pairs)
    for label, exp, act in pairs:
        if exp != act:
            return label, exp, act, False
    label, exp, act = pairs[0]
    return label, exp, act, True


# -- criteria -------------------------------------------------------------------

def _c1(pert: Perturbation) -> list[CheckResult]:
    out = []
    for n in N_GRID:
        for eta in ETA_GRID:
            od = build_output_state(_config(n, eta), with_cross=False)
            ideal = IdealState(1, 0)
            rows = []
            for p1, p2 in P_GRID:
                sim = vacuum_signal_ratio(_with_p(od, p1, p2), ideal)
                rows.append((f"p1={p1},p2={p2}", vacuum_signal_formula(n, p1, p2, eta), sim))
            label, exp, act, ok = _first_mismatch(rows)
            out.append(_check(1, f"n={n} eta_c^2={eta} [{label}]", exp, act, ok))
    return out


def _c2(pert: Perturbation) -> list[CheckResult]:
    out = [
        _check(2, "threshold n=4, p1=p2", F(50, 51), f2_threshold(4, F(1, 100), F(1, 100)),
               f2_threshold(4, F(1, 100), F(1, 100)) == F(50, 51)),
        _check(2, "threshold limit n->inf, p1=p2", F(14, 15), f2_threshold_limit(F(1, 100), F(1, 100)),
               f2_threshold_limit(F(1, 100), F(1, 100)) == F(14, 15)),
    ]
    for n in N_GRID:
        for eta in ETA_GRID:
            od = build_output_state(_config(n, eta), with_cross=False)
            rows = []
            for p1, p2 in P_GRID:
                sim = fidelity(_with_p(od, p1, p2), IdealState(1, 0))
                formula = f2_formula(n, p1, p2, eta, vacuum_slope=pert.f2_vacuum_slope)
                rows.append((f"p1={p1},p2={p2}", formula, sim))
            label, exp, act, ok = _first_mismatch(rows)
            out.append(_check(2, f"fidelity n={n} eta_c^2={eta} [{label}]", exp, act, ok))
    return out


def _c3(pert: Perturbation) -> list[CheckResult]:
    _, f_inns = innsbruck_variant(F(1, 10))
    od = build_output_state(_config(1, F(1)), with_cross=False)
    f_ideal = fidelity(od, IdealState(1, 0))
    return [
        _check(3, "one detector, a_y undetected, eta_c^2=1/10", F(10, 39), f_inns, f_inns == F(10, 39)),
        _check(3, "one detector, no click in a_y, eta_c^2=1", F(1, 2), f_ideal, f_ideal == F(1, 2)),
    ]


def _c4(pert: Perturbation) -> list[CheckResult]:
    out = []
    c, s = F(3, 5), F(4, 5)
    for eta in (F(1, 10), F(1, 2)):
        cfg = ExperimentConfig(p1=F(1, 100), p2=F(1, 100), cos_theta=c, sin_theta=s,
                               eta_u_sq=eta, eta_v_sq=eta, cascade=CascadeSpec(1, eta, TRACE_OUT),
                               truncation_order=3)
        od = build_output_state(cfg, with_cross=False)
        ref = third_order_reference(c, s, eta)
        lam = proportionality(od.block(3, 0), ref[(3, 0)])
        out.append(_check(4, f"eta^2={eta} block (3,0) vacuum only", "proportional",
                          "proportional" if lam is not None else "not proportional", lam is not None))
        for key in ((2, 1), (1, 2)):
            got = proportionality(od.block(*key), ref[key])
            ok = lam is not None and got is not None and got == lam
            act = "no common factor" if got is None else f"factor {render(got)}"
            out.append(_check(4, f"eta^2={eta} block {key} vs reference", f"factor {render(lam)}", act, ok))
    return out


def _c5(pert: Perturbation) -> list[CheckResult]:
    out = []
    for eta in ETA_GRID:
        got = f3_formula(0, eta)
        out.append(_check(5, f"p=0 limit eta^2={eta}", 1 / (4 - eta), got, got == 1 / (4 - eta)))
    p, eta = F(1, 10**4), F(1, 10)
    f2 = 1 / (4 - eta)
    rel = (f2 - f3_formula(p, eta)) / f2
    out.append(_check(5, "relative change at p=1e-4, eta^2=1/10", "[5e-05, 5e-04]", float(rel),
                      F(5, 10**5) <= rel <= F(5, 10**4)))
    for p in (F(1, 10**4), F(1, 100)):
        for eta in (F(1, 10), F(1, 2)):
            cfg = ExperimentConfig(p1=p, p2=p, eta_u_sq=eta, eta_v_sq=eta,
                                   cascade=CascadeSpec(1, eta, TRACE_OUT), truncation_order=3)
            sim = fidelity(build_output_state(cfg, with_cross=False), IdealState(1, 0))
            formula = f3_formula(p, eta)
            out.append(_check(5, f"formula vs simulation p={p} eta^2={eta}", formula, sim, formula == sim))
    return out


def _c6(pert: Perturbation) -> list[CheckResult]:
    got = efficiency_sensitivity(F(1, 10), F(95, 100), vacuum_slope=pert.f2_vacuum_slope)
    exp = F(85, 100) / F(19, 10)
    return [
        _check(6, "sensitivity 1/10 -> 95/100", exp, got, got == exp),
        _check(6, "order of magnitude", "[0.1, 1)", float(got), F(1, 10) <= got < 1),
    ]


def _c7(pert: Perturbation) -> list[CheckResult]:
    out = []
    for p1 in (F(1, 100), F(1, 200)):
        got = required_p2(p1, F(1, 10))
        out.append(_check(7, f"required p2 at p1={p1}", F(87, 10) * p1, got, got == F(87, 10) * p1))
    p1, p2 = F(1, 100), F(1, 100)
    slow = expected_trials(p1 / F(87, 10), p2) / expected_trials(p1, p2)
    out.append(_check(7, "running-time factor for p1 -> p1/8.7", F(87, 10), slow, slow == F(87, 10)))
    return out


def _c8(pert: Perturbation) -> list[CheckResult]:
    r = F(1, 10)
    partial = sum(p_pdc(n, r) for n in range(201))
    err = abs(1 - partial)
    out = [
        _check(8, "sum of pair probabilities to n=200 at r^2=1/100", "|1 - sum| < 1e-30", float(err),
               err < F(1, 10**30) and err == pdc_tail(200, r) * (1 - r * r) ** 2 / (1 - r * r) ** 2),
    ]
    p = F(1, 1000)
    scaled = statistical_distance_sq(p, 10) * 8 / float(p * p)
    out.append(_check(8, "ds^2 * 8/p^2 at p=1e-3", "[0.99, 1.01]", scaled, 0.99 <= scaled <= 1.01))
    for p in (F(1), F(1, 100), F(1, 1000)):
        ratio = distinguishability_trials(p) / expected_trials(p)
        out.append(_check(8, f"trial-count ratio at p={p}", 8, ratio, ratio == 8))
    return out


def _c9(pert: Perturbation) -> list[CheckResult]:
    out = []
    for order in (2, 3):
        bad = []
        count = 0
        for n in N_GRID:
            for eta in ETA_GRID:
                for y in (NO_CLICK, TRACE_OUT):
                    od = build_output_state(_config(n, eta, y=y, order=order, theta=(F(3, 5), F(4, 5)),
                                                    eta_u=F(1, 2), eta_v=F(1, 10)))
                    count += 1
                    if not cross_term_check(od):
                        bad.append(f"n={n},eta={eta},{y}")
        out.append(_check(9, f"order {order}, {count} configurations", "block-diagonal",
                           "block-diagonal" if not bad else "violated at " + "; ".join(bad), not bad))
    injected = DensityOperator({((), ()): F(1), ((), basis_ket({"d_x": 1})): F(1, 4),
                                (basis_ket({"d_x": 1}), ()): F(1, 4),
                                (basis_ket({"d_x": 1}), basis_ket({"d_x": 1})): F(1)},
                               modes=("d_x", "d_y"))
    flag = cross_term_check(injected)
    out.append(_check(9, "negative control with injected |0><1|", False, flag, flag is False))
    return out


def _prop_ladder() -> bool:
    for n in range(6):
        e = Ket.basis({"a": n, "b": 1})
        comm = apply_annihilation(apply_creation(e, "a"), "a") - apply_creation(apply_annihilation(e, "a"), "a")
        if comm != e:
            return False
    return True


def _small_kets() -> list[Ket]:
    kets = []
    for na in range(4):
        for nb in range(4 - na):
            kets.append(Ket.basis({"a": na, "b": nb}))
    kets.append(Ket.basis({"a": 2, "b": 1}) - Ket.basis({"a": 1}) * F(3, 7) + Ket.basis({"b": 3}) * 2)
    return kets


def _prop_unitarity() -> bool:
    bss = [BeamSplitterSpec.balanced("a", "b", "c", "d"),
           BeamSplitterSpec.from_transmissivity("a", "b", "c", "d", F(1, 2)),
           BeamSplitterSpec("a", "b", "c", "d", F(3, 5), F(4, 5))]
    rot = PolarizationRotation(("a", "b"), F(3, 5), F(4, 5))
    for k in _small_kets():
        k = k.with_modes(("a", "b"))
        for bs in bss:
            if squared_norm(beam_splitter(k, bs)) != squared_norm(k):
                return False
        if squared_norm(polarization_rotation(k, rot)) != squared_norm(k):
            return False
    return True


def _prop_hom() -> bool:
    for pol in ("x", "y"):
        k = Ket.basis({f"a_{pol}": 1, f"b_{pol}": 1})
        out = beam_splitter(k, BeamSplitterSpec.balanced(f"a_{pol}", f"b_{pol}", f"c_{pol}", f"d_{pol}"))
        if out.coeff({f"c_{pol}": 1, f"d_{pol}": 1}) != 0:
            return False
    return True


def _prop_povm() -> bool:
    for eta in (F(0),) + ETA_GRID:
        e0, e1 = povm_no_click("m", eta), povm_click("m", eta)
        eu = povm_click_unpolarized("x", "y", eta)
        for n in range(7):
            if e0(n) + e1(n) != 1 or not (0 <= e0(n) <= 1 and 0 <= e1(n) <= 1):
                return False
            for m in range(7 - n):
                if not 0 <= eu(n, m) <= 1:
                    return False
        for k in range(1, 5):
            for ph in range(7):
                if not 0 <= cascade_effective_coefficient(k, ph, eta) <= 1:
                    return False
    return True


def _prop_transparency() -> bool:
    return all(cascade_effective_coefficient(n, 1, eta, topo) == eta
               for n in N_GRID for eta in ETA_GRID for topo in (BALANCED, CHAIN))


def _prop_topology() -> bool:
    return all(cascade_effective_coefficient(n, k, eta, BALANCED) == cascade_effective_coefficient(n, k, eta, CHAIN)
               for n in N_GRID for k in range(4) for eta in ETA_GRID)


def _fidelities(theta, eta_u, eta_v) -> list:
    vals = []
    for n, y, order in ((1, NO_CLICK, 2), (2, NO_CLICK, 2), (1, TRACE_OUT, 2), (1, TRACE_OUT, 3)):
        cfg = _config(n, F(1, 2), y=y, order=order, theta=theta, eta_u=eta_u, eta_v=eta_v)
        vals.append(fidelity(build_output_state(cfg, with_cross=False), IdealState(*theta)))
    return vals


def _prop_theta() -> bool:
    ref = _fidelities(THETAS[0], F(1, 2), F(1, 10))
    return all(_fidelities(t, F(1, 2), F(1, 10)) == ref for t in THETAS[1:])


def _prop_uv() -> bool:
    return _fidelities(THETAS[1], F(1, 2), F(1, 10)) == _fidelities(THETAS[1], F(1, 10), F(1, 2))


def _prop_partition() -> bool:
    cases = ((F(1, 2), F(1, 2), THETAS[0]), (F(1), F(0), THETAS[0]), (F(1, 4), F(3, 4), THETAS[1]))
    for a, b, t in cases:
        rho, rho_p, equal = partition_demo(a, b, IdealState(*t))
        if not equal or rho != rho_p:
            return False
    return True


_PROPERTIES: tuple[tuple[str, Callable[[], bool]], ...] = (
    ("ladder commutator", _prop_ladder),
    ("beam-splitter and rotation unitarity", _prop_unitarity),
    ("two-photon interference zero coincidence", _prop_hom),
    ("POVM completeness and bounds", _prop_povm),
    ("cascade single-photon transparency", _prop_transparency),
    ("cascade topology independence", _prop_topology),
    ("fidelity independent of theta", _prop_theta),
    ("fidelity symmetric in u/v efficiencies", _prop_uv),
    ("partition ensembles give equal operators", _prop_partition),
)


def _c10(pert: Perturbation) -> list[CheckResult]:
    out = []
    for name, fn in _PROPERTIES:
        ok = fn()
        out.append(_check(10, name, True, ok, ok))
    return out


CRITERIA: dict[int, tuple[str, str, Callable[[Perturbation], list[CheckResult]]]] = {
    1: ("cascade-ratio", "second-order vacuum/signal ratio of a detector cascade", _c1),
    2: ("threshold", "second-order fidelity and efficiency thresholds", _c2),
    3: ("single-detector", "second-order fidelity without a cascade", _c3),
    4: ("third-order-blocks", "third-order block structure", _c4),
    5: ("third-order-fidelity", "third-order fidelity formula", _c5),
    6: ("sensitivity", "efficiency sensitivity", _c6),
    7: ("pump", "pump-rate economics", _c7),
    8: ("pair-statistics", "pair-number statistics", _c8),
    9: ("block-diagonal", "photon-number block structure", _c9),
    10: ("properties", "algebraic and physical property suites", _c10),
}


def _selected(filter_text: str | None) -> list[int]:
    if not filter_text:
        return sorted(CRITERIA)
    needle = filter_text.lower()
    return [k for k, (tag, desc, _) in sorted(CRITERIA.items())
            if needle in tag or needle in desc or needle in (f"c{k}", str(k))]


def _run_one(args: tuple[int, Perturbation]) -> list[CheckResult]:
    k, pert = args
    return CRITERIA[k][2](pert)


def run_checks(filter_text: str | None = None, perturbation: Perturbation | None = None,
               jobs: int = 1) -> list[CheckResult]:
    """Run the selected criteria; results come back in criterion order whatever ``jobs`` is."""
    pert = perturbation or Perturbation()
    keys = _selected(filter_text)
    work = [(k, pert) for k in keys]
    if jobs > 1 and len(work) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            chunks = list(pool.map(_run_one, work))
    else:
        chunks = [_run_one(w) for w in work]
    return [r for chunk in chunks for r in chunk]


def criterion_status(results: Iterable[CheckResult]) -> dict[int, bool]:
    status: dict[int, bool] = {}
    for r in results:
        status[r.criterion] = status.get(r.criterion, True) and r.passed
    return status


def format_result(r: CheckResult) -> str:
    mark = "PASS" if r.passed else "FAIL"
    return f"[{mark}] C{r.criterion} {r.tag}: {r.name} | expected {r.expected} | actual {r.actual}"
