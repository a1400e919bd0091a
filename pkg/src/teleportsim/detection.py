"""Lossy bucket-detector POVMs, polarisation-resolved detector cascades and
conditional measurement.

All measurement operators here are diagonal in the occupation basis, so a
POVM is just a coefficient function of the occupations of its modes.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Sequence

from .fock import BasisKet, DensityOperator, Ket, ModeId, measure_and_trace
from .optics import BeamSplitterSpec, beam_splitter, linear_substitution

__all__ = [
    "DiagonalPovm",
    "CascadeSpec",
    "NO_CLICK",
    "TRACE_OUT",
    "povm_no_click",
    "povm_click",
    "povm_click_unpolarized",
    "povm_identity",
    "povm_single_click",
    "povm_cascade",
    "cascade_tree",
    "leaf_fractions",
    "cascade_effective_coefficient",
    "cascade_coefficient_by_routing",
    "cascade_coefficient_by_fock",
    "leaf_mode",
    "expand_cascade",
    "apply_measurement",
]

NO_CLICK = "no-click"
TRACE_OUT = "trace"
_Y_POLICIES = (NO_CLICK, TRACE_OUT)

BALANCED = "balanced"
CHAIN = "chain"
UNIFORM = "uniform"
FIFTY_FIFTY = "fifty-fifty"


def _check_efficiency(eta_sq) -> None:
    if not 0 <= eta_sq <= 1:
        raise ValueError(f"detector efficiency must lie in [0, 1], got {eta_sq}")


@dataclass(frozen=True)
class DiagonalPovm:
    """Occupation-diagonal POVM element on ``modes``.

    ``coefficient`` receives the tuple of occupations of ``modes`` (in order)
    and returns the diagonal entry.
    """

    modes: tuple[ModeId, ...]
    coefficient: Callable[[tuple[int, ...]], object]
    label: str = ""

    def __call__(self, *occupations: int):
        if len(occupations) == 1 and isinstance(occupations[0], tuple):
            occupations = occupations[0]
        if len(occupations) != len(self.modes):
            raise ValueError(f"{self.label or 'POVM'} expects {len(self.modes)} occupations")
        return self.coefficient(tuple(occupations))

    def weight(self, traced: BasisKet):
        occ = dict(traced)
        return self.coefficient(tuple(occ.get(m, 0) for m in self.modes))

    def complement(self) -> DiagonalPovm:
        f = self.coefficient
        return DiagonalPovm(self.modes, lambda occ: 1 - f(occ), label=f"I - {self.label}")


def povm_no_click(mode: ModeId, eta_sq) -> DiagonalPovm:
    """No count from a detector of efficiency ``eta_sq``: ``(1 - eta^2)^n``."""
    _check_efficiency(eta_sq)
    loss = 1 - eta_sq
    return DiagonalPovm((mode,), lambda occ: loss ** occ[0], label=f"E0[{mode}]")


def povm_click(mode: ModeId, eta_sq) -> DiagonalPovm:
    """At least one count: ``1 - (1 - eta^2)^n``."""
    _check_efficiency(eta_sq)
    loss = 1 - eta_sq
    return DiagonalPovm((mode,), lambda occ: 1 - loss ** occ[0], label=f"E1[{mode}]")


def povm_click_unpolarized(mode_x: ModeId, mode_y: ModeId, eta_sq) -> DiagonalPovm:
    """Polarisation-blind click on a spatial mode: ``1 - (1 - eta^2)^(n+m)``."""
    _check_efficiency(eta_sq)
    loss = 1 - eta_sq
    return DiagonalPovm((mode_x, mode_y), lambda occ: 1 - loss ** (occ[0] + occ[1]),
                        label=f"E1[{mode_x},{mode_y}]")


def povm_identity(modes: Sequence[ModeId]) -> DiagonalPovm:
    return DiagonalPovm(tuple(modes), lambda occ: 1, label="I")


def _single_click(occ: tuple[int, ...], loss):
    # exactly one of the detectors fires
    no = [loss ** n for n in occ]
    total = 0
    for i, n in enumerate(occ):
        if not n:
            continue
        term = 1 - no[i]
        for j, q in enumerate(no):
            if j != i:
                term = term * q
        total = total + term
    return total


def povm_single_click(modes: Sequence[ModeId], eta_sq) -> DiagonalPovm:
    """Exactly one of the detectors on ``modes`` clicks (sum over single-click patterns)."""
    _check_efficiency(eta_sq)
    loss = 1 - eta_sq
    return DiagonalPovm(tuple(modes), lambda occ: _single_click(occ, loss),
                        label=f"E1cas[{','.join(modes)}]")


# -- cascades -------------------------------------------------------------------

@dataclass(frozen=True)
class CascadeSpec:
    """Detector cascade on the x branch of the state-preparation mode.

    ``topology`` picks the splitter tree (``balanced`` or ``chain``);
    ``splitting`` is ``uniform`` (each splitter's transmissivity sends an equal
    share of the light to every detector) or ``fifty-fifty``.
    """

    n_detectors: int
    eta_c_sq: object
    y_policy: str = NO_CLICK
    topology: str = BALANCED
    splitting: str = UNIFORM

    def __post_init__(self) -> None:
        if self.n_detectors < 1:
            raise ValueError("a cascade needs at least one detector")
        _check_efficiency(self.eta_c_sq)
        if self.y_policy not in _Y_POLICIES:
            raise ValueError(f"y_policy must be one of {_Y_POLICIES}, got {self.y_policy!r}")
        if self.topology not in (BALANCED, CHAIN):
            raise ValueError(f"unknown cascade topology {self.topology!r}")
        if self.splitting not in (UNIFORM, FIFTY_FIFTY):
            raise ValueError(f"unknown splitting rule {self.splitting!r}")


def cascade_tree(n: int, topology: str = BALANCED):
    """Nested ``(left, right)`` tuples with integer leaves ``0..n-1``."""
    if n < 1:
        raise ValueError("need at least one detector")
    if topology == CHAIN:
        tree = 0
        for i in range(1, n):
            tree = (tree, i)
        return tree
    if topology != BALANCED:
        raise ValueError(f"unknown cascade topology {topology!r}")

    def build(lo: int, hi: int):
        if hi - lo == 1:
            return lo
        mid = lo + (hi - lo + 1) // 2
        return (build(lo, mid), build(mid, hi))

    return build(0, n)


def _leaves(tree) -> int:
    return 1 if isinstance(tree, int) else _leaves(tree[0]) + _leaves(tree[1])


def _transmissivity(tree, splitting: str) -> Fraction:
    if splitting == FIFTY_FIFTY:
        return Fraction(1, 2)
    left = _leaves(tree[0])
    return Fraction(left, left + _leaves(tree[1]))


def leaf_fractions(n: int, topology: str = BALANCED, splitting: str = UNIFORM) -> list[Fraction]:
    """Share of the input intensity reaching each detector."""
    out = [Fraction(0)] * n

    def walk(tree, w):
        if isinstance(tree, int):
            out[tree] = w
            return
        t = _transmissivity(tree, splitting)
        walk(tree[0], w * t)
        walk(tree[1], w * (1 - t))

    walk(cascade_tree(n, topology), Fraction(1))
    return out


def _tree_events(tree, photons: int, loss, splitting: str):
    """(no-click, exactly-one-click) coefficients for 0..photons input photons."""
    if isinstance(tree, int):
        none = [loss ** k for k in range(photons + 1)]
        one = [1 - x for x in none]
        return none, one
    t = _transmissivity(tree, splitting)
    r = 1 - t
    if isinstance(loss, float):
        t, r = float(t), float(r)
    n_l, o_l = _tree_events(tree[0], photons, loss, splitting)
    n_r, o_r = _tree_events(tree[1], photons, loss, splitting)
    none, one = [], []
    for k in range(photons + 1):
        acc_n = 0
        acc_o = 0
        for j in range(k + 1):
            # j photons transmitted to the left subtree: binomial intensity split
            w = math.comb(k, j) * t ** j * r ** (k - j)
            acc_n = acc_n + w * n_l[j] * n_r[k - j]
            acc_o = acc_o + w * (o_l[j] * n_r[k - j] + n_l[j] * o_r[k - j])
        none.append(acc_n)
        one.append(acc_o)
    return none, one


def cascade_effective_coefficient(n_detectors: int, photons: int, eta_c_sq,
                                  topology: str = BALANCED, splitting: str = UNIFORM):
    """Probability that exactly one cascade detector clicks for ``photons`` input photons.

    Conjugating a diagonal product POVM back through a splitter with a vacuum
    second port gives the binomial mixture of the two output coefficients; the
    recursion applies that rule at every node of the tree.
    """
    _check_efficiency(eta_c_sq)
    if photons < 0:
        raise ValueError("photon number must be non-negative")
    loss = 1 - eta_c_sq
    tree = cascade_tree(n_detectors, topology)
    _, one = _tree_events(tree, photons, loss, splitting)
    return one[photons]


def cascade_coefficient_by_routing(n_detectors: int, photons: int, eta_c_sq,
                                   topology: str = BALANCED, splitting: str = UNIFORM):
    """Brute-force oracle: enumerate every photon-to-detector routing."""
    fractions = leaf_fractions(n_detectors, topology, splitting)
    if isinstance(eta_c_sq, float):
        fractions = [float(f) for f in fractions]
    loss = 1 - eta_c_sq
    total = 0
    for route in itertools.product(range(n_detectors), repeat=photons):
        prob = 1
        for leaf in route:
            prob = prob * fractions[leaf]
        counts = [0] * n_detectors
        for leaf in route:
            counts[leaf] += 1
        total = total + prob * _single_click(tuple(counts), loss)
    return total


def leaf_mode(base: ModeId, index: int) -> ModeId:
    return f"{base}{index + 1}"


def expand_cascade(ket: Ket, base_mode: ModeId, n_detectors: int, *, exact: bool = True,
                   topology: str = BALANCED, splitting: str = UNIFORM) -> tuple[Ket, list[ModeId]]:
    """Route ``base_mode`` through the splitter tree; returns the ket and the leaf modes.

    Every splitter takes vacuum in its second port.  Exact mode needs each
    transmissivity to have square roots in Q(sqrt 2) (e.g. all 50:50 trees);
    use ``exact=False`` otherwise.
    """
    tree = cascade_tree(n_detectors, topology)
    leaves = [leaf_mode(base_mode, i) for i in range(n_detectors)]
    if n_detectors == 1:
        return linear_substitution(ket.with_modes([base_mode]),
                                   {base_mode: [(leaves[0], 1 if exact else 1.0)]}), leaves
    nodes = itertools.count()

    def name(t) -> ModeId:
        return leaf_mode(base_mode, t) if isinstance(t, int) else f"{base_mode}~n{next(nodes)}"

    def route(state: Ket, mode: ModeId, t) -> Ket:
        if isinstance(t, int):
            return state
        trans = _transmissivity(t, splitting)
        ancilla = f"{base_mode}~vac{next(nodes)}"
        left, right = name(t[0]), name(t[1])
        spec = BeamSplitterSpec.from_transmissivity(
            mode, ancilla, left, right, trans if exact else float(trans))
        state = beam_splitter(state.with_modes([mode, ancilla]), spec)
        return route(route(state, left, t[0]), right, t[1])

    return route(ket.with_modes([base_mode]), base_mode, tree), leaves


def cascade_coefficient_by_fock(n_detectors: int, photons: int, eta_c_sq, *, exact: bool = True,
                                topology: str = BALANCED, splitting: str = UNIFORM):
    """Oracle through the full Fock-space network: split ``|k>``, measure leaves, trace."""
    ket = Ket.basis({"a_x": photons}, coeff=1 if exact else 1.0)
    routed, leaves = expand_cascade(ket, "a_x", n_detectors, exact=exact,
                                    topology=topology, splitting=splitting)
    povm = povm_single_click(leaves, eta_c_sq if exact else float(eta_c_sq))
    rho = apply_measurement(routed, [povm], routed.modes)
    # e_k has squared norm 1/k!
    return rho.trace() * math.factorial(photons)


def povm_cascade(mode: ModeId, spec: CascadeSpec) -> DiagonalPovm:
    """Effective single-mode POVM for "exactly one cascade detector clicks"."""
    cache: dict[int, object] = {}

    def coeff(occ):
        k = occ[0]
        if k not in cache:
            cache[k] = cascade_effective_coefficient(spec.n_detectors, k, spec.eta_c_sq,
                                                     spec.topology, spec.splitting)
        return cache[k]

    return DiagonalPovm((mode,), coeff, label=f"E{spec.n_detectors}-cas[{mode}]")


# -- conditional measurement -------------------------------------------------------

def apply_measurement(state: Ket, povms: Sequence[DiagonalPovm],
                      traced_modes: Iterable[ModeId]) -> DensityOperator:
    """``Tr_traced[prod(E) |state><state|]``: the unnormalised conditional state.

    Its trace is the probability of the conditioning event (relative to the
    squared norm of ``state``).
    """
    traced = frozenset(traced_modes)
    seen: set[ModeId] = set()
    for povm in povms:
        outside = set(povm.modes) - traced
        if outside:
            raise ValueError(f"POVM {povm.label!r} acts on non-traced mode(s) {sorted(outside)}")
        overlap = seen & set(povm.modes)
        if overlap:
            raise ValueError(f"POVMs overlap on mode(s) {sorted(overlap)}")
        seen.update(povm.modes)
    unknown = traced - state.modes
    if unknown:
        raise KeyError(f"unknown traced mode(s) {sorted(unknown)}")

    def weight(gone: BasisKet):
        w = 1
        for povm in povms:
            w = w * povm.weight(gone)
            if not w:
                return w
        return w

    return measure_and_trace(state, weight, traced)
