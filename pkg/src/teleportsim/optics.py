"""Passive linear optics on divided-power kets.

Every element here is a linear substitution of creation operators,
``a^dag -> sum_k c_k m_k^dag``.  In the divided-power basis the expansion of
``e_n(a)`` is multinomial-free::

    (sum_k c_k m_k^dag)^n / n!  =  sum_{j_1+..+j_K=n}  prod_k c_k^{j_k} e_{j_k}(m_k)

so the only integer factors that appear are the binomials produced when two
contributions land in the same output mode.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Mapping, Sequence

from .fock import (
    DIVIDED,
    BasisKet,
    ConventionError,
    Ket,
    ModeId,
    PhotonCapError,
    apply_annihilation,
    apply_creation,
    apply_number,
    to_divided,
    to_normalized,
)
from .scalar import HALF_SQRT2, as_exact, exact_sqrt

__all__ = [
    "BeamSplitterSpec",
    "PolarizationRotation",
    "UnitarityError",
    "linear_substitution",
    "beam_splitter",
    "polarization_rotation",
    "l_plus",
    "l_minus",
    "l_zero",
    "pair_state",
    "pair_norm_sq",
    "phi_n",
    "tensor",
]


class UnitarityError(ValueError):
    """Element parameters do not satisfy ``x^2 + y^2 = 1``."""


def _unit_pair(x, y, what: str) -> None:
    total = x * x + y * y
    if isinstance(total, float) or isinstance(x, float) or isinstance(y, float):
        if abs(float(total) - 1.0) > 1e-12:
            raise UnitarityError(f"{what}: squares sum to {float(total)!r}, not 1")
    elif total != 1:
        raise UnitarityError(f"{what}: squares sum to {total}, not 1")


@dataclass(frozen=True)
class BeamSplitterSpec:
    """Lossless splitter ``c = eta*a + eta_t*b``, ``d = eta_t*a - eta*b``.

    ``eta`` is the amplitude transmission; ``eta**2 + eta_t**2`` must be 1.
    """

    mode_in_a: ModeId
    mode_in_b: ModeId
    mode_out_c: ModeId
    mode_out_d: ModeId
    eta: object
    eta_tilde: object

    def __post_init__(self) -> None:
        _unit_pair(self.eta, self.eta_tilde, "beam splitter")

    @classmethod
    def balanced(cls, a: ModeId, b: ModeId, c: ModeId, d: ModeId, *, exact: bool = True):
        h = HALF_SQRT2 if exact else math.sqrt(0.5)
        return cls(a, b, c, d, h, h)

    @classmethod
    def from_transmissivity(cls, a: ModeId, b: ModeId, c: ModeId, d: ModeId, t):
        """Build from the intensity transmission ``t = eta**2``.

        Exact when both ``sqrt(t)`` and ``sqrt(1-t)`` lie in Q(sqrt 2); a
        float ``t`` gives a float-mode splitter.
        """
        if isinstance(t, float):
            return cls(a, b, c, d, math.sqrt(t), math.sqrt(1.0 - t))
        t = as_exact(t)
        return cls(a, b, c, d, exact_sqrt(t), exact_sqrt(1 - t))

    def substitution(self) -> dict[ModeId, list[tuple[ModeId, object]]]:
        # transpose of the mode equations: a^dag -> eta c^dag + eta_t d^dag,
        # b^dag -> eta_t c^dag - eta d^dag
        return {
            self.mode_in_a: [(self.mode_out_c, self.eta), (self.mode_out_d, self.eta_tilde)],
            self.mode_in_b: [(self.mode_out_c, self.eta_tilde), (self.mode_out_d, -self.eta)],
        }


@dataclass(frozen=True)
class PolarizationRotation:
    """Real rotation of a polarisation pair by the angle with the given cos/sin."""

    mode_pair: tuple[ModeId, ModeId]
    cos_theta: object
    sin_theta: object

    def __post_init__(self) -> None:
        _unit_pair(self.cos_theta, self.sin_theta, "polarisation rotation")

    def inverse(self) -> PolarizationRotation:
        return PolarizationRotation(self.mode_pair, self.cos_theta, -self.sin_theta)

    def substitution(self) -> dict[ModeId, list[tuple[ModeId, object]]]:
        x, y = self.mode_pair
        c, s = self.cos_theta, self.sin_theta
        return {x: [(x, c), (y, s)], y: [(x, -s), (y, c)]}


@lru_cache(maxsize=None)
def _compositions(n: int, parts: int) -> tuple[tuple[int, ...], ...]:
    if parts == 1:
        return ((n,),)
    out = []
    for j in range(n, -1, -1):
        for rest in _compositions(n - j, parts - 1):
            out.append((j,) + rest)
    return tuple(out)


def _pow(x, k: int):
    if k == 0:
        return 1
    if k == 1:
        return x
    return x ** k


def linear_substitution(ket: Ket, mapping: Mapping[ModeId, Sequence[tuple[ModeId, object]]]) -> Ket:
    """Apply ``m^dag -> sum c_k t_k^dag`` simultaneously for every mode in ``mapping``.

    Output modes must be fresh or among the substituted inputs; landing on an
    untouched occupied mode would silently merge unrelated photons.
    """
    if ket.convention != DIVIDED:
        if not ket.is_float:
            raise ConventionError("normalized-basis optics needs float mode")
        return to_normalized(linear_substitution(to_divided(ket), mapping))
    inputs = set(mapping)
    outputs = {t for targets in mapping.values() for t, _ in targets}
    clash = (outputs - inputs) & (ket.modes - inputs)
    if clash:
        raise ValueError(f"output mode(s) {sorted(clash)} already carry untouched photons")

    # per (mode, n): list of (target occupations, coefficient)
    expansions: dict[tuple[ModeId, int], list] = {}

    def expansion(mode: ModeId, n: int):
        key = (mode, n)
        hit = expansions.get(key)
        if hit is not None:
            return hit
        targets = mapping[mode]
        res = []
        for comp in _compositions(n, len(targets)):
            coeff = 1
            occ = []
            for (t, c), j in zip(targets, comp):
                if j:
                    coeff = coeff * _pow(c, j)
                    occ.append((t, j))
            if coeff != 0:
                res.append((occ, coeff))
        expansions[key] = res
        return res

    out: dict[BasisKet, object] = {}
    for b, c in ket.items():
        fixed = {}
        moving = []
        for m, n in b:
            if m in mapping:
                moving.append((m, n))
            else:
                fixed[m] = n
        # partial products keyed by occupation of the output modes
        partial: list[tuple[dict, object]] = [({}, c)]
        for m, n in moving:
            nxt = []
            for occ, coeff in partial:
                for add, ec in expansion(m, n):
                    new = dict(occ)
                    factor = 1
                    for t, j in add:
                        prev = new.get(t, 0)
                        if prev:
                            factor *= math.comb(prev + j, j)
                        new[t] = prev + j
                    val = coeff * ec
                    if factor != 1:
                        val = val * factor
                    nxt.append((new, val))
            partial = nxt
        for occ, coeff in partial:
            full = dict(fixed)
            full.update(occ)
            key = tuple(sorted((m, n) for m, n in full.items() if n))
            prev = out.get(key)
            out[key] = coeff if prev is None else prev + coeff
    modes = (ket.modes - inputs) | outputs
    return Ket(out, convention=DIVIDED, cap=ket.cap, modes=modes)


def beam_splitter(ket: Ket, spec: BeamSplitterSpec) -> Ket:
    missing = {spec.mode_in_a, spec.mode_in_b} - ket.modes
    if missing:
        raise KeyError(f"beam-splitter input mode(s) {sorted(missing)} not in ket")
    return linear_substitution(ket, spec.substitution())


def polarization_rotation(ket: Ket, rot: PolarizationRotation) -> Ket:
    return linear_substitution(ket.with_modes(rot.mode_pair), rot.substitution())


# -- pair creation -----------------------------------------------------------------

def _check_distinct(pair_a, pair_b) -> None:
    if len({*pair_a, *pair_b}) != 4:
        raise ValueError("pair-creation operator needs four distinct modes")


def l_plus(ket: Ket, pair_a: tuple[ModeId, ModeId], pair_b: tuple[ModeId, ModeId]) -> Ket:
    """Apply ``L+ = a_x^dag b_y^dag - a_y^dag b_x^dag``."""
    _check_distinct(pair_a, pair_b)
    ax, ay = pair_a
    bx, by = pair_b
    first = apply_creation(apply_creation(ket, by), ax)
    second = apply_creation(apply_creation(ket, bx), ay)
    return first - second


def l_minus(ket: Ket, pair_a: tuple[ModeId, ModeId], pair_b: tuple[ModeId, ModeId]) -> Ket:
    """Apply ``L- = a_x b_y - a_y b_x`` (the adjoint of ``L+``)."""
    _check_distinct(pair_a, pair_b)
    ax, ay = pair_a
    bx, by = pair_b
    ket = ket.with_modes((ax, ay, bx, by))
    first = apply_annihilation(apply_annihilation(ket, by), ax)
    second = apply_annihilation(apply_annihilation(ket, bx), ay)
    return first - second


def l_zero(ket: Ket, pair_a: tuple[ModeId, ModeId], pair_b: tuple[ModeId, ModeId]) -> Ket:
    """Apply ``L0 = (N_a + N_b + 2) / 2`` over the four modes."""
    _check_distinct(pair_a, pair_b)
    total = ket * 2
    for m in (*pair_a, *pair_b):
        total = total + apply_number(ket, m)
    half = 0.5 if ket.is_float else Fraction(1, 2)
    return total * half


def pair_state(n: int, pair_a=("a_x", "a_y"), pair_b=("b_x", "b_y"), *, cap: int | None = None,
               coeff=1) -> Ket:
    """Unnormalised ``L+^n |0>``."""
    if n < 0:
        raise ValueError("pair number must be non-negative")
    if cap is not None and 2 * n > cap:
        raise PhotonCapError(f"{n} pairs need {2 * n} photons, cap is {cap}")
    ket = Ket.vacuum(cap=cap, modes=(*pair_a, *pair_b), coeff=coeff)
    for _ in range(n):
        ket = l_plus(ket, pair_a, pair_b)
    return ket


def pair_norm_sq(n: int) -> Fraction:
    """``N_n^2 = 1 / (n! (n+1)!)``, the normalisation of ``L+^n |0>``."""
    return Fraction(1, math.factorial(n) * math.factorial(n + 1))


def phi_n(n: int, pair_a=("a_x", "a_y"), pair_b=("b_x", "b_y"), *, cap: int | None = None,
          mode: str = "exact") -> Ket:
    """Normalised n-pair singlet state ``N_n L+^n |0>``.

    In exact mode ``N_n`` must lie in Q(sqrt 2) (true for n = 0, 1, 3; n = 2
    needs sqrt 3 and raises).  Float mode works for every ``n``.
    """
    norm_sq = pair_norm_sq(n)
    if mode == "exact":
        factor = exact_sqrt(norm_sq)
    elif mode == "float":
        factor = math.sqrt(norm_sq)
    else:
        raise ValueError(f"unknown arithmetic mode {mode!r}")
    return pair_state(n, pair_a, pair_b, cap=cap) * factor


def tensor(k1: Ket, k2: Ket) -> Ket:
    """Product of kets on disjoint mode sets."""
    if k1.modes & k2.modes:
        raise ValueError(f"tensor factors share modes {sorted(k1.modes & k2.modes)}")
    out = {}
    for b1, c1 in k1.items():
        for b2, c2 in k2.items():
            out[tuple(sorted(b1 + b2))] = c1 * c2
    cap = None
    if k1.cap is not None or k2.cap is not None:
        cap = max(c for c in (k1.cap, k2.cap) if c is not None)
    return Ket(out, convention=k1.convention, cap=cap, modes=k1.modes | k2.modes)

