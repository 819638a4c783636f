"""Exchange signs for Green components and exact polynomials in the order p."""

from __future__ import annotations

import enum
from itertools import zip_longest
from typing import Iterable, Sequence


class Statistics(enum.Enum):
    PARABOSE = "parabose"
    PARAFERMI = "parafermi"

    @classmethod
    def parse(cls, text: str) -> "Statistics":
        key = text.strip().lower().replace("-", "").replace("_", "")
        for member in cls:
            if member.value == key:
                return member
        raise ValueError(f"unknown statistics {text!r}")


def exchange_sign(stat: Statistics, same_index: bool) -> int:
    """Sign picked up when two Green components of one field change places.

    Components sharing a Green index follow ordinary bose (fermi) rules,
    components with different indices follow the opposite rule.
    """
    sign = 1 if same_index else -1
    return sign if stat is Statistics.PARABOSE else -sign


class PPolynomial:
    """Immutable polynomial in p with exact integer coefficients.

    ``coeffs[k]`` is the coefficient of ``p**k``; trailing zeros are stripped
    so the zero polynomial has an empty coefficient tuple.
    """

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Iterable[int] = ()):
        cs = [int(c) for c in coeffs]
        while cs and cs[-1] == 0:
            cs.pop()
        object.__setattr__(self, "coeffs", tuple(cs))

    def __setattr__(self, name, value):
        raise AttributeError("PPolynomial is immutable")

    @classmethod
    def const(cls, c: int) -> "PPolynomial":
        return cls((c,))

    @classmethod
    def p(cls) -> "PPolynomial":
        return cls((0, 1))

    @staticmethod
    def _coerce(other) -> "PPolynomial":
        if isinstance(other, PPolynomial):
            return other
        if isinstance(other, int):
            return PPolynomial((other,))
        return NotImplemented

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def is_zero(self) -> bool:
        return not self.coeffs

    def __bool__(self):
        return bool(self.coeffs)

    def __eq__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self.coeffs == other.coeffs

    def __hash__(self):
        return hash(self.coeffs)

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return PPolynomial(a + b for a, b in zip_longest(self.coeffs, other.coeffs, fillvalue=0))

    __radd__ = __add__

    def __neg__(self):
        return PPolynomial(-c for c in self.coeffs)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        if not self.coeffs or not other.coeffs:
            return PPolynomial()
        out = [0] * (len(self.coeffs) + len(other.coeffs) - 1)
        for i, a in enumerate(self.coeffs):
            if a:
                for j, b in enumerate(other.coeffs):
                    out[i + j] += a * b
        return PPolynomial(out)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        if not isinstance(n, int) or n < 0:
            raise ValueError("exponent must be a non-negative integer")
        result, base = PPolynomial.const(1), self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def __call__(self, p0: int) -> int:
        return ppoly_eval(self, p0)

    def __repr__(self):
        return f"PPolynomial({list(self.coeffs)})"

    def __str__(self):
        return format_ppoly(self)


def falling_factorial(b: int) -> PPolynomial:
    """p (p-1) ... (p-b+1): injective assignments of b blocks to p Green indices."""
    if b < 0:
        raise ValueError("b must be non-negative")
    result = PPolynomial.const(1)
    for k in range(b):
        result = result * PPolynomial((-k, 1))
    return result


def ppoly_eval(poly: PPolynomial, p0: int) -> int:
    acc = 0
    for c in reversed(poly.coeffs):
        acc = acc * p0 + c
    return acc


def interpolate(points: Sequence[tuple[int, int]]) -> PPolynomial:
    """Exact Lagrange interpolation through integer points.

    Raises ValueError when the interpolant does not have integer coefficients.
    """
    from fractions import Fraction

    n = len(points)
    acc = [Fraction(0)] * n
    for i, (xi, yi) in enumerate(points):
        basis = [Fraction(1)]
        denom = Fraction(1)
        for j, (xj, _) in enumerate(points):
            if j == i:
                continue
            # multiply basis by (p - xj)
            nxt = [Fraction(0)] * (len(basis) + 1)
            for k, c in enumerate(basis):
                nxt[k] -= c * xj
                nxt[k + 1] += c
            basis = nxt
            denom *= xi - xj
        for k, c in enumerate(basis):
            acc[k] += c * yi / denom
    if any(c.denominator != 1 for c in acc):
        raise ValueError("interpolant has non-integer coefficients")
    return PPolynomial(int(c) for c in acc)


def _monomial_text(c: int, k: int) -> str:
    mag = abs(c)
    if k == 0:
        body = str(mag)
    else:
        var = "p" if k == 1 else f"p^{k}"
        body = var if mag == 1 else f"{mag}{var}"
    return body


def format_ppoly(poly: PPolynomial) -> str:
    """Ascending-power text form, e.g. ``2p - p^2``."""
    if poly.is_zero():
        return "0"
    parts = []
    for k, c in enumerate(poly.coeffs):
        if c == 0:
            continue
        body = _monomial_text(c, k)
        if not parts:
            parts.append(("-" if c < 0 else "") + body)
        else:
            parts.append(("- " if c < 0 else "+ ") + body)
    return " ".join(parts)
