"""Exact arithmetic in Q(sqrt 2), with a plain-float fallback.

Exact values are :class:`Scalar` instances ``a + b*sqrt(2)`` with rational
``a`` and ``b``.  Float mode uses ordinary Python floats; the two never mix
silently, so an exact pipeline cannot be contaminated by a rounding error.
"""
from __future__ import annotations

import math
from fractions import Fraction
from numbers import Rational
from typing import Union

__all__ = [
    "Scalar",
    "Number",
    "SQRT2",
    "HALF_SQRT2",
    "sqrt2_inject",
    "as_exact",
    "is_exact",
    "exact_sqrt",
    "to_float",
    "is_zero",
]

_RationalLike = Union[int, Fraction]


class Scalar:
    """Element ``rational + radical*sqrt(2)`` of the field Q(sqrt 2)."""

    __slots__ = ("_a", "_b", "_hash")

    def __init__(self, rational: _RationalLike = 0, radical: _RationalLike = 0) -> None:
        if isinstance(rational, float) or isinstance(radical, float):
            raise TypeError("Scalar parts must be exact rationals, not float")
        self._a = Fraction(rational)
        self._b = Fraction(radical)
        self._hash = None

    @property
    def rational_part(self) -> Fraction:
        return self._a

    @property
    def radical_part(self) -> Fraction:
        return self._b

    @property
    def is_rational(self) -> bool:
        return self._b == 0

    def as_fraction(self) -> Fraction:
        """Return the value as a Fraction; raises if a sqrt(2) part is present."""
        if self._b:
            raise ValueError(f"{self} is irrational")
        return self._a

    # -- coercion -----------------------------------------------------------
    @staticmethod
    def _coerce(other: object) -> Scalar | None:
        if isinstance(other, Scalar):
            return other
        if isinstance(other, (int, Fraction)) or isinstance(other, Rational):
            return Scalar(Fraction(other))
        if isinstance(other, float):
            raise TypeError("cannot mix an exact Scalar with a float; use float mode throughout")
        return None

    # -- field operations ---------------------------------------------------
    def __add__(self, other: object) -> Scalar:
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return Scalar(self._a + o._a, self._b + o._b)

    __radd__ = __add__

    def __neg__(self) -> Scalar:
        return Scalar(-self._a, -self._b)

    def __pos__(self) -> Scalar:
        return self

    def __sub__(self, other: object) -> Scalar:
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return Scalar(self._a - o._a, self._b - o._b)

    def __rsub__(self, other: object) -> Scalar:
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o - self

    def __mul__(self, other: object) -> Scalar:
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        a, b = self._a, self._b
        c, d = o._a, o._b
        if not b and not d:
            return Scalar(a * c)
        return Scalar(a * c + 2 * b * d, a * d + b * c)

    __rmul__ = __mul__

    def conjugate(self) -> Scalar:
        """Galois conjugate ``a - b*sqrt(2)`` (not complex conjugation)."""
        return Scalar(self._a, -self._b)

    def norm(self) -> Fraction:
        """Field norm ``a^2 - 2 b^2``; zero only for the zero element."""
        return self._a * self._a - 2 * self._b * self._b

    def inv(self) -> Scalar:
        n = self.norm()
        if n == 0:
            raise ZeroDivisionError("inverse of zero Scalar")
        return Scalar(self._a / n, -self._b / n)

    def __truediv__(self, other: object) -> Scalar:
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        if not o._b:
            if o._a == 0:
                raise ZeroDivisionError("division by zero Scalar")
            return Scalar(self._a / o._a, self._b / o._a)
        return self * o.inv()

    def __rtruediv__(self, other: object) -> Scalar:
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o * self.inv()

    def __pow__(self, exponent: int) -> Scalar:
        if not isinstance(exponent, int):
            return NotImplemented
        if exponent < 0:
            return self.inv() ** (-exponent)
        result = Scalar(1)
        base = self
        while exponent:
            if exponent & 1:
                result = result * base
            base = base * base
            exponent >>= 1
        return result

    # -- ordering -----------------------------------------------------------
    def sign(self) -> int:
        a, b = self._a, self._b
        if b == 0:
            return (a > 0) - (a < 0)
        if a == 0:
            return (b > 0) - (b < 0)
        if (a > 0) == (b > 0):
            return 1 if a > 0 else -1
        # opposite signs: compare a^2 with 2 b^2
        diff = a * a - 2 * b * b
        dominant = 1 if a > 0 else -1
        return dominant if diff > 0 else -dominant

    def __eq__(self, other: object) -> bool:
        if isinstance(other, float):
            return False
        try:
            o = self._coerce(other)
        except TypeError:
            return False
        if o is None:
            return NotImplemented
        return self._a == o._a and self._b == o._b

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(self._a) if not self._b else hash((self._a, self._b))
        return self._hash

    def __lt__(self, other: object) -> bool:
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return (self - o).sign() < 0

    def __le__(self, other: object) -> bool:
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return (self - o).sign() <= 0

    def __gt__(self, other: object) -> bool:
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return (self - o).sign() > 0

    def __ge__(self, other: object) -> bool:
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return (self - o).sign() >= 0

    def __bool__(self) -> bool:
        return bool(self._a) or bool(self._b)

    def __float__(self) -> float:
        return float(self._a) + float(self._b) * math.sqrt(2.0)

    def __repr__(self) -> str:
        return f"Scalar({self._a!s}, {self._b!s})"

    def __str__(self) -> str:
        if not self._b:
            return str(self._a)
        if not self._a:
            return f"{self._b}*sqrt2"
        sign = "+" if self._b > 0 else "-"
        return f"{self._a}{sign}{abs(self._b)}*sqrt2"


Number = Union[Scalar, float]

SQRT2 = Scalar(0, 1)
HALF_SQRT2 = Scalar(0, Fraction(1, 2))


def sqrt2_inject(x: _RationalLike) -> Scalar:
    """Return ``x * sqrt(2)`` as a Scalar."""
    return Scalar(0, Fraction(x))


def is_exact(x: object) -> bool:
    return isinstance(x, (Scalar, int, Fraction))


def as_exact(x: object) -> Scalar:
    """Coerce an int/Fraction/Scalar to a Scalar; floats are rejected."""
    if isinstance(x, Scalar):
        return x
    if isinstance(x, (int, Fraction)):
        return Scalar(x)
    raise TypeError(f"expected an exact value, got {type(x).__name__}")


def to_float(x: object) -> float:
    return float(x)


def is_zero(x: object) -> bool:
    if isinstance(x, float):
        return x == 0.0
    return not x


def _rational_sqrt(q: Fraction) -> Fraction | None:
    if q < 0:
        return None
    num, den = q.numerator, q.denominator
    rn, rd = math.isqrt(num), math.isqrt(den)
    if rn * rn == num and rd * rd == den:
        return Fraction(rn, rd)
    return None


def exact_sqrt(x: Scalar | _RationalLike) -> Scalar:
    """Non-negative square root of ``x`` when it lies in Q(sqrt 2).

    Solves ``(u + v sqrt2)^2 = a + b sqrt2``; anything without such a root
    (e.g. 1/3) raises ``ValueError`` and must be evaluated in float mode.
    """
    s = as_exact(x)
    a, b = s.rational_part, s.radical_part
    if s.sign() < 0:
        raise ValueError(f"sqrt({s}) of a negative number")
    if b == 0:
        r = _rational_sqrt(a)
        if r is not None:
            return Scalar(r)
        r = _rational_sqrt(a / 2)
        if r is not None:
            return Scalar(0, r)
        raise ValueError(f"sqrt({a}) is not an element of Q(sqrt 2)")
    # u^2 + 2 v^2 = a, 2 u v = b  =>  u^2 = (a +- sqrt(a^2 - 2 b^2)) / 2
    d = _rational_sqrt(a * a - 2 * b * b)
    if d is not None:
        for u_sq in ((a + d) / 2, (a - d) / 2):
            u = _rational_sqrt(u_sq)
            if u:
                root = Scalar(u, b / (2 * u))
                return root if root.sign() >= 0 else -root
    raise ValueError(f"sqrt({s}) is not an element of Q(sqrt 2)")
