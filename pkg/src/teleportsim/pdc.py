"""Truncated parametric down-conversion states and pair-number statistics."""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .fock import Ket, ModeId, PhotonCapError
from .optics import l_plus
from .scalar import Scalar

__all__ = [
    "PdcParams",
    "SourceSpec",
    "pdc_state",
    "p_pdc",
    "p_pdc_small",
    "p_poisson",
    "pdc_tail",
    "statistical_distance_sq",
    "distinguishability_trials",
    "expected_trials",
]


def _exact(x) -> bool:
    return isinstance(x, (int, Fraction, Scalar))


def _q(x):
    return x if isinstance(x, Scalar) else Fraction(x)


@dataclass(frozen=True)
class PdcParams:
    """Source strength.  ``r = tanh(tau)``, ``q = 2 ln cosh(tau)``, ``p = 2 r^2``.

    Exact sources are specified by a rational ``r``; ``tau`` and ``q`` are then
    left as ``None`` and ``exp(-2q)`` is carried as ``(1 - r^2)^2``.
    """

    r: object
    tau: float | None = None
    q: float | None = None

    def __post_init__(self) -> None:
        if not 0 <= self.r < 1:
            raise ValueError(f"r = tanh(tau) must lie in [0, 1), got {self.r}")

    @classmethod
    def from_tau(cls, tau: float) -> PdcParams:
        return cls(r=math.tanh(tau), tau=tau, q=2.0 * math.log(math.cosh(tau)))

    @classmethod
    def from_p(cls, p) -> PdcParams:
        """From the pair probability ``p``; ``r = sqrt(p/2)`` must be rational in exact mode."""
        if isinstance(p, float):
            return cls.from_tau(math.atanh(math.sqrt(p / 2.0)))
        r_sq = Fraction(p) / 2
        rn, rd = math.isqrt(r_sq.numerator), math.isqrt(r_sq.denominator)
        if rn * rn != r_sq.numerator or rd * rd != r_sq.denominator:
            raise ValueError(f"r = sqrt({r_sq}) is irrational; use float mode")
        return cls(r=Fraction(rn, rd))

    @property
    def p(self):
        return 2 * self.r * self.r

    @property
    def exp_minus_2q(self):
        """``exp(-2q) = cosh(tau)^-4 = (1 - r^2)^2``."""
        one_minus = 1 - self.r * self.r
        return one_minus * one_minus


@dataclass(frozen=True)
class SourceSpec:
    """One down-converter creating pairs in ``pair_a`` x ``pair_b``, truncated at ``max_pairs``."""

    pair_a: tuple[ModeId, ModeId]
    pair_b: tuple[ModeId, ModeId]
    r: object
    max_pairs: int

    def __post_init__(self) -> None:
        if self.max_pairs < 0:
            raise ValueError("max_pairs must be non-negative")


def pdc_state(spec: SourceSpec, cap: int | None = None) -> Ket:
    """``sum_{l<=K} r^l / l! L+^l |0>``, without the ``exp(-q)`` prefactor.

    The dropped factor is ``1 - r^2`` (since ``L0|0> = |0>``) and is common to
    every term, so it cancels from all conditional quantities.
    """
    if cap is not None and 2 * spec.max_pairs > cap:
        raise PhotonCapError(f"{spec.max_pairs} pairs exceed the photon cap {cap}")
    modes = (*spec.pair_a, *spec.pair_b)
    term = Ket.vacuum(cap=cap, modes=modes)
    total = term
    r = spec.r
    for l in range(1, spec.max_pairs + 1):
        term = l_plus(term, spec.pair_a, spec.pair_b) * (r / l if isinstance(r, float) else Fraction(1, l) * r)
        total = total + term
    return total


def p_pdc(n: int, r):
    """Probability of ``n`` pairs: ``(n+1) r^(2n) (1-r^2)^2``."""
    if n < 0:
        raise ValueError("n must be non-negative")
    if not 0 <= r < 1:
        raise ValueError(f"r must lie in [0, 1), got {r}")
    r2 = r * r
    one_minus = 1 - r2
    return (n + 1) * r2 ** n * one_minus * one_minus


def pdc_tail(n_max: int, r):
    """Exact closed form of ``sum_{n > n_max} p_pdc(n, r)``.

    From ``sum_{n>N} (n+1) x^n = x^(N+1) (N+2 - (N+1) x) / (1-x)^2``.
    """
    x = r * r
    return x ** (n_max + 1) * ((n_max + 2) - (n_max + 1) * x)


def p_pdc_small(n: int, p):
    """Weak-source form ``(n+1) (p/2)^n exp(-p)``; exact ``p`` drops ``exp(-p)``."""
    if _exact(p):
        return (n + 1) * (Fraction(p) / 2) ** n
    return (n + 1) * (p / 2.0) ** n * math.exp(-p)


def p_poisson(n: int, p):
    """``p^n exp(-p) / n!``; exact ``p`` returns ``p^n / n!`` with ``exp(-p)`` left symbolic."""
    if n < 0:
        raise ValueError("n must be non-negative")
    if p < 0:
        raise ValueError("p must be non-negative")
    if _exact(p):
        return Fraction(p) ** n / math.factorial(n)
    return p ** n * math.exp(-p) / math.factorial(n)


def statistical_distance_sq(p, n_max: int) -> float:
    """``sum_{n=1..n_max} (P_pdc(n) - P_poisson(n))^2 / P_poisson(n)`` for the weak-source forms.

    The Poisson distribution is the base measure.  The polynomial parts are
    summed exactly when ``p`` is rational; the common ``exp(-p)`` is applied last.
    """
    if p <= 0:
        raise ValueError("p must be positive")
    if _exact(p):
        q = Fraction(p)
        total = Fraction(0)
        for n in range(1, n_max + 1):
            base = q ** n / math.factorial(n)
            diff = (n + 1) * (q / 2) ** n - base
            total += diff * diff / base
        return float(total) * math.exp(-float(q))
    total = 0.0
    for n in range(1, n_max + 1):
        base = p ** n / math.factorial(n)
        diff = (n + 1) * (p / 2.0) ** n - base
        total += diff * diff / base
    return total * math.exp(-p)


def distinguishability_trials(p):
    """Samplings needed to tell the pair statistics from Poisson: ``8 / p^2``."""
    if p <= 0:
        raise ValueError("p must be positive")
    return 8 / (p * p) if _exact(p) else 8.0 / (p * p)


def expected_trials(p, p2=None):
    """Mean trials for one pair from each source: ``1 / (p1 p2)``, with ``p2`` defaulting to ``p``."""
    p2 = p if p2 is None else p2
    if p <= 0 or p2 <= 0:
        raise ValueError("pair probabilities must be positive")
    if _exact(p) and _exact(p2):
        return 1 / (_q(p) * _q(p2))
    return 1.0 / (float(p) * float(p2))
