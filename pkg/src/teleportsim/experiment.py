"""The generalised two-source teleportation experiment.

Source 1 creates pairs in modes a (Victor) and b (Alice's input); source 2 in
c (Alice) and d (Bob).  A 50:50 splitter maps (b, c) to the Bell-measurement
ports (u, v), a polarisation rotation acts on a, and the x branch of a feeds
a detector cascade.  Conditioning on one cascade click, clicks in u and v
and (optionally) no click in a_y leaves Bob's unnormalised state in d.

Amplitudes are tracked per pair-production tag ``(l1, l2)``.  Since
``r^2 = p/2`` the ``(l1, l2)`` diagonal block multiplies ``p1^l1 p2^l2``;
the global ``exp(-q1-q2)`` normalisation is dropped throughout.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Mapping

from .detection import (
    NO_CLICK,
    TRACE_OUT,
    CascadeSpec,
    DiagonalPovm,
    expand_cascade,
    povm_cascade,
    povm_click_unpolarized,
    povm_no_click,
    povm_single_click,
)
from .fock import (
    BasisKet,
    DensityOperator,
    Ket,
    basis_ket,
    measure_and_trace,
    photon_count,
)
from .optics import (
    BeamSplitterSpec,
    PolarizationRotation,
    beam_splitter,
    pair_state,
    polarization_rotation,
    tensor,
)
from .scalar import Scalar, is_zero

__all__ = [
    "ExperimentConfig",
    "OrderedDensity",
    "IdealState",
    "ConfigError",
    "SOURCE1",
    "SOURCE2",
    "BOB_MODES",
    "build_output_state",
    "fidelity",
    "vacuum_signal_ratio",
    "vacuum_signal_formula",
    "f2_formula",
    "f2_threshold",
    "f2_threshold_limit",
    "innsbruck_threshold",
    "innsbruck_variant",
    "f3_formula",
    "efficiency_sensitivity",
    "required_p2",
    "max_p1",
    "pump_ratio",
    "partition_demo",
    "cross_term_check",
    "third_order_reference",
    "proportionality",
]

SOURCE1 = (("a_x", "a_y"), ("b_x", "b_y"))
SOURCE2 = (("c_x", "c_y"), ("d_x", "d_y"))
BOB_MODES = ("d_x", "d_y")
EXACT = "exact"
FLOAT = "float"


class ConfigError(ValueError):
    """Invalid experiment configuration; ``key`` names the offending field."""

    def __init__(self, key: str, message: str) -> None:
        super().__init__(f"{key}: {message}")
        self.key = key


def _to_mode(x, mode: str):
    if mode == FLOAT:
        return float(x)
    if isinstance(x, float):
        raise ConfigError("mode", f"float value {x!r} in an exact configuration")
    if isinstance(x, Scalar):
        return x if x.radical_part else x.rational_part
    return Fraction(x)


@dataclass(frozen=True)
class ExperimentConfig:
    """Free parameters of the generalised experiment.

    ``cos_theta``/``sin_theta`` fix the prepared polarisation; the pair
    probabilities ``p1`` (state preparation) and ``p2`` (entanglement channel)
    only scale blocks, so any positive value is accepted.
    """

    p1: object = Fraction(1, 100)
    p2: object = Fraction(1, 100)
    cos_theta: object = 1
    sin_theta: object = 0
    eta_u_sq: object = 1
    eta_v_sq: object = 1
    cascade: CascadeSpec = field(default_factory=lambda: CascadeSpec(1, 1))
    truncation_order: int = 2
    mode: str = EXACT
    explicit_cascade: bool = False

    def __post_init__(self) -> None:
        if self.mode not in (EXACT, FLOAT):
            raise ConfigError("mode", f"must be 'exact' or 'float', got {self.mode!r}")
        if self.truncation_order not in (2, 3):
            raise ConfigError("order", f"truncation order must be 2 or 3, got {self.truncation_order!r}")
        conv = {}
        for key in ("p1", "p2", "cos_theta", "sin_theta", "eta_u_sq", "eta_v_sq"):
            conv[key] = _to_mode(getattr(self, key), self.mode)
        for key in ("p1", "p2"):
            if not conv[key] > 0:
                raise ConfigError(key, f"pair probability must be positive, got {conv[key]}")
        for key in ("eta_u_sq", "eta_v_sq"):
            if not 0 <= conv[key] <= 1:
                raise ConfigError(key, f"efficiency must lie in [0, 1], got {conv[key]}")
        c, s = conv["cos_theta"], conv["sin_theta"]
        norm = c * c + s * s
        if (self.mode == FLOAT and abs(norm - 1.0) > 1e-12) or (self.mode == EXACT and norm != 1):
            raise ConfigError("theta", f"cos^2 + sin^2 = {norm}, not 1")
        eta_c = _to_mode(self.cascade.eta_c_sq, self.mode)
        if eta_c != self.cascade.eta_c_sq or type(eta_c) is not type(self.cascade.eta_c_sq):
            object.__setattr__(self, "cascade", replace(self.cascade, eta_c_sq=eta_c))
        for key, value in conv.items():
            object.__setattr__(self, key, value)

    @property
    def exact(self) -> bool:
        return self.mode == EXACT

    @property
    def photon_cap(self) -> int:
        return 2 * self.truncation_order

    @property
    def g_uvc(self):
        return self.eta_u_sq * self.eta_v_sq * self.cascade.eta_c_sq

    @classmethod
    def innsbruck(cls, eta_sq=Fraction(1, 10), p=Fraction(1, 100), **kwargs) -> ExperimentConfig:
        """No cascade, a_y left undetected, one source pumped twice."""
        kwargs.setdefault("cascade", CascadeSpec(1, eta_sq, TRACE_OUT))
        return cls(p1=p, p2=p, **kwargs)


@dataclass(frozen=True)
class IdealState:
    """Bob's target ``cos|0,1> + sin|1,0>`` and its orthogonal partner, in (d_x, d_y)."""

    cos_theta: object
    sin_theta: object
    modes: tuple[str, str] = BOB_MODES

    def __post_init__(self) -> None:
        c, s = self.cos_theta, self.sin_theta
        norm = c * c + s * s
        if isinstance(norm, float):
            if abs(norm - 1.0) > 1e-12:
                raise ValueError("ideal state must have unit norm")
        elif norm != 1:
            raise ValueError("ideal state must have unit norm")

    @classmethod
    def from_config(cls, config: ExperimentConfig) -> IdealState:
        return cls(config.cos_theta, config.sin_theta)

    def _ket(self, a, b) -> Ket:
        x, y = self.modes
        return Ket({basis_ket({y: 1}): a, basis_ket({x: 1}): b}, modes=self.modes)

    @property
    def psi(self) -> Ket:
        return self._ket(self.cos_theta, self.sin_theta)

    @property
    def psi_perp(self) -> Ket:
        return self._ket(self.sin_theta, -self.cos_theta)


@dataclass
class OrderedDensity:
    """Bob's conditional state split by pair-production order.

    ``blocks[(i, j)]`` is the operator multiplying ``p1^i p2^j``.
    ``cross`` holds any surviving coherence between different production
    tags ``(l1, l2) != (l1', l2')``; physically it must be empty.
    """

    blocks: dict[tuple[int, int], DensityOperator]
    p1: object
    p2: object
    cross: dict[tuple[tuple[int, int], tuple[int, int]], DensityOperator] = field(default_factory=dict)
    order: int = 2

    def total(self) -> DensityOperator:
        acc = DensityOperator(modes=BOB_MODES)
        for (i, j), block in sorted(self.blocks.items()):
            acc = acc + block * (self.p1 ** i * self.p2 ** j)
        return acc

    def trace(self):
        return self.total().trace()

    def block(self, i: int, j: int) -> DensityOperator:
        return self.blocks.get((i, j), DensityOperator(modes=BOB_MODES))


# -- pipeline -------------------------------------------------------------------

def _tags(order: int) -> list[tuple[int, int]]:
    return [(l1, l2) for l1 in range(order + 1) for l2 in range(order + 1 - l1)]


def _source_ket(l: int, pair_a, pair_b, cap: int, one) -> Ket:
    # (1/l!) L+^l |0>, i.e. the r^l coefficient of the truncated exponential
    return pair_state(l, pair_a, pair_b, cap=cap, coeff=one / math.factorial(l))


def _propagate(ket: Ket, config: ExperimentConfig) -> Ket:
    exact = config.exact
    for pol in ("x", "y"):
        ket = beam_splitter(ket, BeamSplitterSpec.balanced(
            f"b_{pol}", f"c_{pol}", f"u_{pol}", f"v_{pol}", exact=exact))
    rot = PolarizationRotation(("a_x", "a_y"), config.cos_theta, config.sin_theta)
    return polarization_rotation(ket, rot)


def _povms(config: ExperimentConfig, leaves: list[str] | None) -> list[DiagonalPovm]:
    spec = config.cascade
    povms = []
    if leaves is None:
        povms.append(povm_cascade("a_x", spec))
    else:
        povms.append(povm_single_click(leaves, spec.eta_c_sq))
    if spec.y_policy == NO_CLICK:
        povms.append(povm_no_click("a_y", spec.eta_c_sq))
    povms.append(povm_click_unpolarized("u_x", "u_y", config.eta_u_sq))
    povms.append(povm_click_unpolarized("v_x", "v_y", config.eta_v_sq))
    return povms


def _weight_fn(povms: list[DiagonalPovm]):
    def weight(gone: BasisKet):
        w = 1
        for povm in povms:
            w = w * povm.weight(gone)
            if not w:
                return w
        return w
    return weight


def build_output_state(config: ExperimentConfig, *, with_cross: bool = True) -> OrderedDensity:
    """Bob's unnormalised conditional state, block-tagged by pair-production order.

    With ``config.explicit_cascade`` the x branch is physically routed through
    the splitter tree and the leaves measured individually; otherwise the
    equivalent single-mode effective POVM is applied to a_x.
    """
    cap = config.photon_cap
    one = 1.0 if not config.exact else Fraction(1)
    tags = _tags(config.truncation_order)
    kets: dict[tuple[int, int], Ket] = {}
    leaves = None
    for l1, l2 in tags:
        k1 = _source_ket(l1, *SOURCE1, cap, one)
        k2 = _source_ket(l2, *SOURCE2, cap, one)
        ket = _propagate(tensor(k1, k2), config)
        if config.explicit_cascade:
            ket, leaves = expand_cascade(
                ket, "a_x", config.cascade.n_detectors, exact=config.exact,
                topology=config.cascade.topology, splitting=config.cascade.splitting)
        kets[(l1, l2)] = ket
    weight = _weight_fn(_povms(config, leaves))

    blocks: dict[tuple[int, int], DensityOperator] = {}
    cross: dict = {}
    for t in tags:
        ket = kets[t]
        traced = ket.modes - set(BOB_MODES)
        rho = measure_and_trace(ket, weight, traced)
        if not rho.is_zero():
            scale = Fraction(1, 2 ** (t[0] + t[1])) if config.exact else 0.5 ** (t[0] + t[1])
            blocks[t] = rho * scale
        if not with_cross:
            continue
        for u in tags:
            if u == t:
                continue
            bra = kets[u]
            traced_all = (ket.modes | bra.modes) - set(BOB_MODES)
            rho_tu = measure_and_trace(ket.with_modes(traced_all), weight, traced_all,
                                       bra=bra.with_modes(traced_all))
            if not rho_tu.is_zero():
                cross[(t, u)] = rho_tu
    return OrderedDensity(blocks=blocks, p1=config.p1, p2=config.p2, cross=cross,
                          order=config.truncation_order)


# -- figures of merit ------------------------------------------------------------

def _as_operator(rho) -> DensityOperator:
    return rho.total() if isinstance(rho, OrderedDensity) else rho


def fidelity(rho, ideal: IdealState):
    """``<psi|rho|psi> / Tr rho`` for an unnormalised conditional state."""
    op = _as_operator(rho)
    tr = op.trace()
    if is_zero(tr):
        raise ZeroDivisionError("fidelity of a state with zero trace")
    return op.expectation(ideal.psi) / tr


def vacuum_signal_ratio(rho, ideal: IdealState):
    """Vacuum population over the population of the ideal state."""
    op = _as_operator(rho)
    signal = op.expectation(ideal.psi)
    if is_zero(signal):
        raise ZeroDivisionError("no overlap with the ideal state")
    return op.entry((), ()) / signal


def _q(x):
    return Fraction(x) if isinstance(x, int) else x


def vacuum_signal_formula(n: int, p1, p2, eta_c_sq):
    """Closed-form second-order vacuum/signal ratio ``p1 [1 + (5n-3)(1-eta_c^2)] / (n p2)``."""
    p1, p2, eta = _q(p1), _q(p2), _q(eta_c_sq)
    return p1 * (1 + (5 * n - 3) * (1 - eta)) / (n * p2)


def f2_formula(n: int, p1, p2, eta_c_sq, *, vacuum_slope=5):
    """Second-order fidelity of an n-cascade with no click required in a_y.

    ``vacuum_slope`` is the ``5`` in the ``(5n - 3)`` vacuum term; it exists
    only so a negative control can perturb it.
    """
    p1, p2, eta = _q(p1), _q(p2), _q(eta_c_sq)
    vac = p1 * (1 + (vacuum_slope * n - 3) * (1 - eta))
    return n * p2 / (vac + n * p2)


def f2_threshold(n: int, p1, p2):
    """Smallest cascade efficiency giving ``f2_formula >= 3/4``."""
    p1, p2 = _q(p1), _q(p2)
    return ((15 * n - 6) * p1 - n * p2) / ((15 * n - 9) * p1)


def f2_threshold_limit(p1, p2):
    """``n -> infinity`` limit of :func:`f2_threshold`: ``(15 p1 - p2) / (15 p1)``."""
    p1, p2 = _q(p1), _q(p2)
    return (15 * p1 - p2) / (15 * p1)


def innsbruck_threshold(p1, p2):
    """Efficiency bound for the single-detector, a_y-untraced scheme: ``3 - p2/(3 p1)``."""
    p1, p2 = _q(p1), _q(p2)
    return 3 - p2 / (3 * p1)


def innsbruck_variant(eta_c_sq, p=Fraction(1, 100), cos_theta=1, sin_theta=0,
                      eta_u_sq=1, eta_v_sq=1, mode: str = EXACT):
    """Simulate the original arrangement at second order.

    Returns ``(rho, fidelity)``; ``rho`` is the order-2 conditional state.
    """
    config = ExperimentConfig(
        p1=p, p2=p, cos_theta=cos_theta, sin_theta=sin_theta,
        eta_u_sq=eta_u_sq, eta_v_sq=eta_v_sq,
        cascade=CascadeSpec(1, eta_c_sq, TRACE_OUT), truncation_order=2, mode=mode)
    od = build_output_state(config, with_cross=False)
    rho = od.total()
    return rho, fidelity(rho, IdealState.from_config(config))


def f3_formula(p, eta_sq):
    """Third-order fidelity for equal efficiencies, ``p1 = p2 = p``, no cascade, a_y untraced."""
    p, e = _q(p), _q(eta_sq)
    num = 4 + p * (2 - e) ** 2
    den = 4 * (4 - e) + p * (80 - 76 * e + 34 * e ** 2 - 3 * e ** 3)
    return num / den


def efficiency_sensitivity(eta_minus_sq, eta_plus_sq, p=Fraction(1, 100), *, vacuum_slope=5):
    """Relative fidelity gain from the better cascade efficiency (single detector, p1 = p2)."""
    f_plus = f2_formula(1, p, p, eta_plus_sq, vacuum_slope=vacuum_slope)
    f_minus = f2_formula(1, p, p, eta_minus_sq, vacuum_slope=vacuum_slope)
    return (f_plus - f_minus) / f_plus


def required_p2(p1, eta_c_sq):
    """Entanglement-source pair probability needed for fidelity 3/4 without a cascade."""
    return 3 * (3 - _q(eta_c_sq)) * _q(p1)


def max_p1(n: int, p2, eta_c_sq):
    """Largest ``p1`` satisfying ``f2_formula >= 3/4`` for an n-cascade."""
    eta = _q(eta_c_sq)
    return n * _q(p2) / (3 * (1 + (5 * n - 3) * (1 - eta)))


def pump_ratio(x) -> float:
    """``tanh(k2 t) / tanh(k1 t)`` when ``p2 = x p1``."""
    if x < 0:
        raise ValueError("pair-probability ratio must be non-negative")
    return math.sqrt(float(x))


def partition_demo(alpha_sq, beta_sq, ideal: IdealState):
    """Two decompositions of ``|a|^2 |0><0| + |b|^2 |psi><psi|``.

    Returns ``(rho, rho_prime, equal)`` where ``rho_prime`` mixes
    ``a|0> +- b|psi>`` with weight 1/2 each.  In exact mode the mixture is
    expanded with formal real amplitudes ``a``, ``b``: each monomial ``a^2``,
    ``a b``, ``b^2`` collects its operator, and only the squares are then
    replaced by the given weights, so no square root is ever taken.
    """
    from .fock import outer

    vac = Ket.vacuum(modes=ideal.modes)
    psi = ideal.psi
    parts = (vac, psi)
    rho = outer(vac) * alpha_sq + outer(psi) * beta_sq
    if isinstance(alpha_sq, float) or isinstance(beta_sq, float):
        alpha, beta = math.sqrt(alpha_sq), math.sqrt(beta_sq)
        psi1 = vac * alpha + psi * beta
        psi2 = vac * alpha - psi * beta
        rho_prime = outer(psi1) * 0.5 + outer(psi2) * 0.5
        return rho, rho_prime, rho == rho_prime
    half = Fraction(1, 2)
    # monomial (i, j) stands for amp_i * amp_j with amps = (a, b)
    by_monomial: dict[tuple[int, int], DensityOperator] = {}
    for signs in ((1, 1), (1, -1)):
        for i in range(2):
            for j in range(2):
                key = tuple(sorted((i, j)))
                term = outer(parts[i], parts[j]) * (half * signs[i] * signs[j])
                by_monomial[key] = by_monomial.get(key, DensityOperator(modes=ideal.modes)) + term
    cross = by_monomial[(0, 1)]
    rho_prime = by_monomial[(0, 0)] * alpha_sq + by_monomial[(1, 1)] * beta_sq
    equal = cross.is_zero() and rho == rho_prime
    return rho, rho_prime, equal


def cross_term_check(rho) -> bool:
    """True iff the state is block-diagonal in Bob's photon number.

    Checks that no tag-crossing coherence survived, that block ``(i, j)``
    only holds ``j``-photon terms, and that no entry couples different
    photon numbers.
    """
    if isinstance(rho, OrderedDensity):
        if rho.cross:
            return False
        for (i, j), block in rho.blocks.items():
            for k, b in block.entries:
                if photon_count(k) != j or photon_count(b) != j:
                    return False
        return True
    for k, b in rho.entries:
        if photon_count(k) != photon_count(b):
            return False
    return True


# -- third-order structure --------------------------------------------------------

def _normalized_to_divided(entries: Mapping[tuple[BasisKet, BasisKet], object]) -> DensityOperator:
    from .fock import basis_metric
    from .scalar import exact_sqrt

    out = {}
    for (kb, bb), c in entries.items():
        w = basis_metric(kb) * basis_metric(bb)
        if isinstance(c, float):
            out[(kb, bb)] = c / math.sqrt(w)
        else:
            out[(kb, bb)] = c / exact_sqrt(w)
    return DensityOperator(out, modes=BOB_MODES)


def third_order_reference(cos_theta, sin_theta, eta_c_sq) -> dict[tuple[int, int], DensityOperator]:
    """Reference third-order blocks for one detector, a_y undetected, without the common prefactor.

    Returns operators for ``p1^3``, ``p1^2 p2`` and ``p1 p2^2``; the ``p1^2 p2``
    term carries ``|psi><psi| + |psi_perp><psi_perp|`` with a plus sign.
    """
    from .fock import outer

    c, s, e = _q(cos_theta), _q(sin_theta), _q(eta_c_sq)
    exact = not isinstance(c, float)
    ideal = IdealState(c, s)
    x, y = BOB_MODES
    vac = DensityOperator({((), ()): 1}, modes=BOB_MODES)
    rho1 = DensityOperator({
        (basis_ket({x: 1}), basis_ket({x: 1})): Fraction(1, 2) if exact else 0.5,
        (basis_ket({y: 1}), basis_ket({y: 1})): Fraction(1, 2) if exact else 0.5,
    }, modes=BOB_MODES)
    cos2 = c * c - s * s
    sin2 = 2 * s * c
    root2 = Scalar(0, 1) if exact else math.sqrt(2.0)
    cross = sin2 * root2 / 2
    sixth = Fraction(1, 6) if exact else 1.0 / 6.0
    xx, yy, xy = basis_ket({x: 2}), basis_ket({y: 2}), basis_ket({x: 1, y: 1})
    rho2_norm = {
        (yy, yy): (2 + cos2) * sixth,
        (xx, xx): (2 - cos2) * sixth,
        (xy, xy): 2 * sixth,
        (xx, xy): cross * sixth,
        (xy, xx): cross * sixth,
        (yy, xy): cross * sixth,
        (xy, yy): cross * sixth,
    }
    rho2 = _normalized_to_divided(rho2_norm)
    return {
        (3, 0): vac * (6 * (6 - 4 * e + e * e)),
        (2, 1): (outer(ideal.psi) + outer(ideal.psi_perp)) * (2 * (2 - e)) + rho1 * (8 * (3 - e)),
        (1, 2): rho2 * 12,
    }


def proportionality(a: DensityOperator, b: DensityOperator):
    """Return ``lam`` with ``a == lam * b`` exactly, or ``None`` if no such scalar exists."""
    if b.is_zero():
        return 0 if a.is_zero() else None
    key, ref = next(iter(b.items()))
    lam = a.entry(*key) / ref
    return lam if (b * lam) == a else None
