"""Sparse multimode Fock states and density operators.

A basis ket is a canonical tuple of ``(mode, occupation)`` pairs sorted by
mode label with zero occupations dropped, so equal states hash equally and
iteration order is reproducible.

Two coefficient conventions are supported:

``divided``
    basis vector ``e_n = (a^dag)^n |0> / n!``.  Ladder operators act with
    integer factors (``a^dag e_n = (n+1) e_{n+1}``, ``a e_n = e_{n-1}``), so
    exact kets never need ``sqrt(n!)``.  Inner products carry the metric
    ``<e_n, e_m> = delta_nm / n!`` per mode.
``normalized``
    the usual orthonormal ``|n>``; float mode only.
"""
from __future__ import annotations

import math
from collections import defaultdict
from fractions import Fraction
from types import MappingProxyType
from typing import Callable, Iterable, Iterator, Mapping

from .scalar import Scalar, exact_sqrt, is_zero

__all__ = [
    "ModeId",
    "BasisKet",
    "Ket",
    "DensityOperator",
    "PhotonCapError",
    "ConventionError",
    "DIVIDED",
    "NORMALIZED",
    "basis_ket",
    "occupation",
    "photon_count",
    "basis_metric",
    "apply_creation",
    "apply_annihilation",
    "apply_number",
    "inner_product",
    "squared_norm",
    "to_normalized",
    "to_divided",
    "outer",
    "outer_and_trace",
    "dm_trace",
    "partial_trace",
    "measure_and_trace",
]

ModeId = str
BasisKet = tuple  # tuple[tuple[ModeId, int], ...]

DIVIDED = "divided"
NORMALIZED = "normalized"
_CONVENTIONS = (DIVIDED, NORMALIZED)


class PhotonCapError(ValueError):
    """A state exceeded the photon-number cap of its experiment."""


class ConventionError(ValueError):
    """Operands use incompatible basis conventions or arithmetic modes."""


def basis_ket(occupations: Mapping[ModeId, int] | Iterable[tuple[ModeId, int]] = ()) -> BasisKet:
    items = occupations.items() if isinstance(occupations, Mapping) else occupations
    out = []
    for mode, n in items:
        if n < 0:
            raise ValueError(f"negative occupation {n} in mode {mode!r}")
        if n:
            out.append((mode, int(n)))
    out.sort()
    for i in range(1, len(out)):
        if out[i][0] == out[i - 1][0]:
            raise ValueError(f"duplicate mode {out[i][0]!r}")
    return tuple(out)


def occupation(b: BasisKet, mode: ModeId) -> int:
    for m, n in b:
        if m == mode:
            return n
    return 0


def photon_count(b: BasisKet) -> int:
    return sum(n for _, n in b)


def _with_occupation(b: BasisKet, mode: ModeId, n: int) -> BasisKet:
    rest = [(m, k) for m, k in b if m != mode]
    if n:
        rest.append((mode, n))
        rest.sort()
    return tuple(rest)


_FACT = [1]


def _factorial(n: int) -> int:
    while len(_FACT) <= n:
        _FACT.append(_FACT[-1] * len(_FACT))
    return _FACT[n]


def basis_metric(b: BasisKet):
    """Squared norm ``prod 1/n!`` of a divided-power basis vector."""
    w = 1
    for _, n in b:
        if n > 1:
            w *= _factorial(n)
    return 1 if w == 1 else Fraction(1, w)


class Ket:
    """Immutable sparse linear combination of basis kets."""

    __slots__ = ("_terms", "_convention", "_cap", "_modes")

    def __init__(
        self,
        terms: Mapping[BasisKet, object] | Iterable[tuple[BasisKet, object]] = (),
        *,
        convention: str = DIVIDED,
        cap: int | None = None,
        modes: Iterable[ModeId] = (),
    ) -> None:
        if convention not in _CONVENTIONS:
            raise ValueError(f"unknown basis convention {convention!r}")
        items = terms.items() if isinstance(terms, Mapping) else terms
        clean = {}
        mode_set = set(modes)
        for b, c in items:
            if is_zero(c):
                continue
            if cap is not None and photon_count(b) > cap:
                raise PhotonCapError(
                    f"basis ket {b} has {photon_count(b)} photons, cap is {cap}"
                )
            clean[b] = c
            mode_set.update(m for m, _ in b)
        self._terms = dict(sorted(clean.items()))
        self._convention = convention
        self._cap = cap
        self._modes = frozenset(mode_set)

    @classmethod
    def vacuum(cls, *, convention: str = DIVIDED, cap: int | None = None,
               modes: Iterable[ModeId] = (), coeff=1) -> Ket:
        return cls({(): coeff}, convention=convention, cap=cap, modes=modes)

    @classmethod
    def basis(cls, occupations, coeff=1, **kwargs) -> Ket:
        return cls({basis_ket(occupations): coeff}, **kwargs)

    @classmethod
    def zero(cls, **kwargs) -> Ket:
        return cls({}, **kwargs)

    @property
    def terms(self) -> Mapping[BasisKet, object]:
        return MappingProxyType(self._terms)

    @property
    def convention(self) -> str:
        return self._convention

    @property
    def cap(self) -> int | None:
        return self._cap

    @property
    def modes(self) -> frozenset:
        return self._modes

    def __len__(self) -> int:
        return len(self._terms)

    def __iter__(self) -> Iterator[BasisKet]:
        return iter(self._terms)

    def items(self):
        return self._terms.items()

    def coeff(self, b: BasisKet | Mapping[ModeId, int]):
        if isinstance(b, Mapping):
            b = basis_ket(b)
        return self._terms.get(b, 0)

    def is_zero(self) -> bool:
        return not self._terms

    @property
    def is_float(self) -> bool:
        return any(isinstance(c, float) for c in self._terms.values())

    def max_photons(self) -> int:
        return max((photon_count(b) for b in self._terms), default=0)

    def _derive(self, terms, modes=None) -> Ket:
        return Ket(terms, convention=self._convention, cap=self._cap,
                   modes=self._modes if modes is None else modes)

    def with_cap(self, cap: int | None) -> Ket:
        return Ket(self._terms, convention=self._convention, cap=cap, modes=self._modes)

    def with_modes(self, modes: Iterable[ModeId]) -> Ket:
        return Ket(self._terms, convention=self._convention, cap=self._cap,
                   modes=self._modes | frozenset(modes))

    def _check_compatible(self, other: Ket) -> None:
        if self._convention != other._convention:
            raise ConventionError(
                f"basis convention mismatch: {self._convention} vs {other._convention}"
            )

    def __add__(self, other: Ket) -> Ket:
        if not isinstance(other, Ket):
            return NotImplemented
        self._check_compatible(other)
        acc = dict(self._terms)
        for b, c in other._terms.items():
            acc[b] = acc[b] + c if b in acc else c
        cap = self._cap if other._cap is None else (
            other._cap if self._cap is None else min(self._cap, other._cap))
        return Ket(acc, convention=self._convention, cap=cap, modes=self._modes | other._modes)

    def __neg__(self) -> Ket:
        return self._derive({b: -c for b, c in self._terms.items()})

    def __sub__(self, other: Ket) -> Ket:
        if not isinstance(other, Ket):
            return NotImplemented
        return self + (-other)

    def __mul__(self, factor) -> Ket:
        if isinstance(factor, Ket):
            return NotImplemented
        return self._derive({b: c * factor for b, c in self._terms.items()})

    __rmul__ = __mul__

    def __truediv__(self, factor) -> Ket:
        return self._derive({b: c / factor for b, c in self._terms.items()})

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Ket):
            return NotImplemented
        return self._convention == other._convention and self._terms == other._terms

    __hash__ = None

    def __repr__(self) -> str:
        if not self._terms:
            return "Ket(0)"
        parts = []
        for b, c in self._terms.items():
            label = ",".join(f"{m}:{n}" for m, n in b) or "vac"
            parts.append(f"({c})|{label}>")
        return "Ket(" + " + ".join(parts) + ")"


# -- ladder operators ---------------------------------------------------------

def apply_creation(ket: Ket, mode: ModeId) -> Ket:
    """Apply ``a^dag`` on ``mode``."""
    out = {}
    if ket.convention == DIVIDED:
        for b, c in ket.items():
            n = occupation(b, mode)
            out[_with_occupation(b, mode, n + 1)] = c * (n + 1)
    else:
        if not ket.is_float and ket.items():
            raise ConventionError("normalized-basis ladder action needs float mode (sqrt(n+1))")
        for b, c in ket.items():
            n = occupation(b, mode)
            out[_with_occupation(b, mode, n + 1)] = c * math.sqrt(n + 1)
    return Ket(out, convention=ket.convention, cap=ket.cap, modes=ket.modes | {mode})


def apply_annihilation(ket: Ket, mode: ModeId) -> Ket:
    """Apply ``a`` on ``mode``; basis terms with no photon there vanish."""
    out = {}
    normalized = ket.convention == NORMALIZED
    if normalized and not ket.is_float and ket.items():
        raise ConventionError("normalized-basis ladder action needs float mode (sqrt(n))")
    for b, c in ket.items():
        n = occupation(b, mode)
        if n == 0:
            continue
        nb = _with_occupation(b, mode, n - 1)
        out[nb] = c * math.sqrt(n) if normalized else c
    return Ket(out, convention=ket.convention, cap=ket.cap, modes=ket.modes | {mode})


def apply_number(ket: Ket, mode: ModeId) -> Ket:
    """Apply the number operator ``a^dag a`` on ``mode`` (same in both conventions)."""
    out = {}
    for b, c in ket.items():
        n = occupation(b, mode)
        if n:
            out[b] = c * n
    return Ket(out, convention=ket.convention, cap=ket.cap, modes=ket.modes | {mode})


# -- inner products -------------------------------------------------------------

def inner_product(k1: Ket, k2: Ket):
    """``<k1|k2>`` for real kets, using the divided-power metric where needed."""
    if k1.convention != k2.convention:
        raise ConventionError(f"cannot pair {k1.convention} with {k2.convention} kets")
    small, large = (k1, k2) if len(k1) <= len(k2) else (k2, k1)
    total = None
    divided = k1.convention == DIVIDED
    lt = large.terms
    for b, c in small.items():
        d = lt.get(b)
        if d is None:
            continue
        term = c * d
        if divided:
            w = basis_metric(b)
            if w != 1:
                term = term * w
        total = term if total is None else total + term
    if total is None:
        return 0.0 if (k1.is_float or k2.is_float) else Scalar(0)
    return total


def squared_norm(ket: Ket):
    return inner_product(ket, ket)


def to_normalized(ket: Ket) -> Ket:
    """Convert a divided-power ket to the orthonormal basis (float mode)."""
    if ket.convention == NORMALIZED:
        return ket
    out = {b: float(c) * math.sqrt(basis_metric(b)) for b, c in ket.items()}
    return Ket(out, convention=NORMALIZED, cap=ket.cap, modes=ket.modes)


def to_divided(ket: Ket) -> Ket:
    """Convert an orthonormal-basis ket to divided powers (float mode)."""
    if ket.convention == DIVIDED:
        return ket
    out = {b: float(c) / math.sqrt(basis_metric(b)) for b, c in ket.items()}
    return Ket(out, convention=DIVIDED, cap=ket.cap, modes=ket.modes)


# -- density operators ----------------------------------------------------------

class DensityOperator:
    """Sparse real operator ``sum c |k><b|`` over basis kets.

    In the divided convention ``|k>`` is the (unnormalised) vector ``e_k``;
    use :meth:`normalized_entry` for matrix elements in the orthonormal basis.
    """

    __slots__ = ("_entries", "_convention", "_modes", "normalization")

    def __init__(
        self,
        entries: Mapping[tuple[BasisKet, BasisKet], object] = (),
        *,
        convention: str = DIVIDED,
        modes: Iterable[ModeId] = (),
        normalization: str = "unnormalized-conditional",
    ) -> None:
        if convention not in _CONVENTIONS:
            raise ValueError(f"unknown basis convention {convention!r}")
        items = entries.items() if isinstance(entries, Mapping) else entries
        clean = {}
        mode_set = set(modes)
        for (k, b), c in items:
            if is_zero(c):
                continue
            clean[(k, b)] = c
            mode_set.update(m for m, _ in k)
            mode_set.update(m for m, _ in b)
        self._entries = dict(sorted(clean.items()))
        self._convention = convention
        self._modes = frozenset(mode_set)
        self.normalization = normalization

    @property
    def entries(self) -> Mapping[tuple[BasisKet, BasisKet], object]:
        return MappingProxyType(self._entries)

    @property
    def convention(self) -> str:
        return self._convention

    @property
    def modes(self) -> frozenset:
        return self._modes

    def __len__(self) -> int:
        return len(self._entries)

    def items(self):
        return self._entries.items()

    def entry(self, ket_b, bra_b):
        if isinstance(ket_b, Mapping):
            ket_b = basis_ket(ket_b)
        if isinstance(bra_b, Mapping):
            bra_b = basis_ket(bra_b)
        return self._entries.get((ket_b, bra_b), 0)

    def normalized_entry(self, ket_b, bra_b):
        """Matrix element ``<k|rho|b>`` in the orthonormal Fock basis."""
        if isinstance(ket_b, Mapping):
            ket_b = basis_ket(ket_b)
        if isinstance(bra_b, Mapping):
            bra_b = basis_ket(bra_b)
        c = self._entries.get((ket_b, bra_b), 0)
        if self._convention == NORMALIZED or is_zero(c):
            return c
        w = basis_metric(ket_b) * basis_metric(bra_b)
        if isinstance(c, float):
            return c * math.sqrt(w)
        return c * exact_sqrt(w)

    def is_zero(self) -> bool:
        return not self._entries

    def trace(self):
        total = None
        divided = self._convention == DIVIDED
        for (k, b), c in self._entries.items():
            if k != b:
                continue
            term = c * basis_metric(k) if divided else c
            total = term if total is None else total + term
        if total is None:
            return Scalar(0) if not self._is_float() else 0.0
        return total

    def _is_float(self) -> bool:
        return any(isinstance(c, float) for c in self._entries.values())

    def expectation(self, ket: Ket):
        """``<psi|rho|psi>`` for a real ket in the same convention."""
        if ket.convention != self._convention:
            raise ConventionError("ket/operator convention mismatch")
        divided = self._convention == DIVIDED
        # <psi|e_k> = psi_k / k! in the divided metric
        bra = {}
        for b, c in ket.items():
            bra[b] = c * basis_metric(b) if divided else c
        total = None
        for (k, b), c in self._entries.items():
            x = bra.get(k)
            if x is None:
                continue
            y = bra.get(b)
            if y is None:
                continue
            term = x * c * y
            total = term if total is None else total + term
        if total is None:
            return Scalar(0) if not (self._is_float() or ket.is_float) else 0.0
        return total

    def is_hermitian(self) -> bool:
        for (k, b), c in self._entries.items():
            other = self._entries.get((b, k), 0)
            if isinstance(c, float) or isinstance(other, float):
                if abs(float(c) - float(other)) > 1e-12 * max(1.0, abs(float(c))):
                    return False
            elif c != other:
                return False
        return True

    def diagonal_nonnegative(self) -> bool:
        for (k, b), c in self._entries.items():
            if k == b and c < 0:
                return False
        return True

    def photon_numbers(self) -> set[int]:
        out = set()
        for k, b in self._entries:
            out.add(photon_count(k))
            out.add(photon_count(b))
        return out

    def __add__(self, other: DensityOperator) -> DensityOperator:
        if not isinstance(other, DensityOperator):
            return NotImplemented
        if other._convention != self._convention:
            raise ConventionError("density operator convention mismatch")
        acc = dict(self._entries)
        for key, c in other._entries.items():
            acc[key] = acc[key] + c if key in acc else c
        return DensityOperator(acc, convention=self._convention,
                               modes=self._modes | other._modes,
                               normalization=self.normalization)

    def __sub__(self, other: DensityOperator) -> DensityOperator:
        return self + other * -1

    def __mul__(self, factor) -> DensityOperator:
        if isinstance(factor, DensityOperator):
            return NotImplemented
        return DensityOperator({key: c * factor for key, c in self._entries.items()},
                               convention=self._convention, modes=self._modes,
                               normalization=self.normalization)

    __rmul__ = __mul__

    def __truediv__(self, factor) -> DensityOperator:
        return DensityOperator({key: c / factor for key, c in self._entries.items()},
                               convention=self._convention, modes=self._modes,
                               normalization=self.normalization)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, DensityOperator):
            return NotImplemented
        return self._convention == other._convention and self._entries == other._entries

    __hash__ = None

    def __repr__(self) -> str:
        return f"DensityOperator({len(self._entries)} entries, modes={sorted(self._modes)})"


def outer(ket: Ket, bra: Ket | None = None) -> DensityOperator:
    """``|ket><bra|`` (``bra`` defaults to ``ket``)."""
    bra = ket if bra is None else bra
    if ket.convention != bra.convention:
        raise ConventionError("ket/bra convention mismatch")
    entries = {}
    for k, c in ket.items():
        for b, d in bra.items():
            entries[(k, b)] = c * d
    return DensityOperator(entries, convention=ket.convention, modes=ket.modes | bra.modes)


outer_and_trace = outer


def dm_trace(rho: DensityOperator):
    return rho.trace()


def _split(b: BasisKet, traced: frozenset) -> tuple[BasisKet, BasisKet]:
    kept, gone = [], []
    for m, n in b:
        (gone if m in traced else kept).append((m, n))
    return tuple(kept), tuple(gone)


def partial_trace(rho: DensityOperator, modes: Iterable[ModeId]) -> DensityOperator:
    """Trace out ``modes``; only entries diagonal in the traced modes survive."""
    traced = frozenset(modes)
    unknown = traced - rho.modes
    if unknown:
        raise KeyError(f"unknown mode(s) {sorted(unknown)} for partial trace")
    divided = rho.convention == DIVIDED
    acc = defaultdict(lambda: None)
    for (k, b), c in rho.items():
        k_keep, k_gone = _split(k, traced)
        b_keep, b_gone = _split(b, traced)
        if k_gone != b_gone:
            continue
        term = c * basis_metric(k_gone) if divided else c
        prev = acc[(k_keep, b_keep)]
        acc[(k_keep, b_keep)] = term if prev is None else prev + term
    return DensityOperator(dict(acc), convention=rho.convention,
                           modes=rho.modes - traced, normalization=rho.normalization)


def measure_and_trace(
    ket: Ket,
    weight: Callable[[BasisKet], object],
    traced: Iterable[ModeId],
    bra: Ket | None = None,
) -> DensityOperator:
    """``Tr_traced[W |ket><bra|]`` for an operator ``W`` diagonal in the traced modes.

    ``weight`` maps the traced-mode part of a basis ket to ``W``'s diagonal
    coefficient.  The outer product is never formed: terms are grouped by their
    traced occupation first, which is what keeps order-3 pipelines cheap.
    """
    traced = frozenset(traced)
    bra = ket if bra is None else bra
    if ket.convention != bra.convention:
        raise ConventionError("ket/bra convention mismatch")
    divided = ket.convention == DIVIDED
    groups_k: dict = defaultdict(list)
    for b, c in ket.items():
        keep, gone = _split(b, traced)
        groups_k[gone].append((keep, c))
    if bra is ket:
        groups_b = groups_k
    else:
        groups_b = defaultdict(list)
        for b, c in bra.items():
            keep, gone = _split(b, traced)
            groups_b[gone].append((keep, c))
    acc: dict = {}
    for gone, kterms in groups_k.items():
        bterms = groups_b.get(gone)
        if not bterms:
            continue
        w = weight(gone)
        if is_zero(w):
            continue
        if divided:
            m = basis_metric(gone)
            if m != 1:
                w = w * m
        for kk, c in kterms:
            cw = c * w
            for bb, d in bterms:
                key = (kk, bb)
                term = cw * d
                prev = acc.get(key)
                acc[key] = term if prev is None else prev + term
    return DensityOperator(acc, convention=ket.convention,
                           modes=(ket.modes | bra.modes) - traced)
