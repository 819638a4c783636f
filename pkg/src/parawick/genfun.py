"""Path-integral route: Green-graded functional derivatives of W_free.

Sources carry a field, a Green block label, a point and a starred flag
(J*/eta-bar when set, J/eta otherwise). Exchanging two source components
costs the same sign as exchanging the corresponding field components.
Derivatives are left-acting and graded like the source they target.

Two evaluation strategies are offered by :func:`n_point`:

``"exponential"``
    differentiate exp(-i B) directly; every derivative either removes an
    already produced source factor or brings down a new one from the
    exponent.
``"series"``
    expand W_free to the order n/2 term of its exponential series with
    formal integration points and differentiate the polynomial.

Both sum over set partitions of the insertion positions into Green blocks,
weighting each partition by the number of injective index assignments.
"""

from __future__ import annotations

import itertools
from collections import defaultdict
from dataclasses import dataclass, replace
from fractions import Fraction
from math import factorial
from typing import Iterable, Optional, Sequence

from .algebra import PPolynomial, falling_factorial
from .correlator import (
    Charge,
    CorrelatorResult,
    FieldSpec,
    Kernel,
    KernelKind,
    Mode,
    ProductSpec,
    RelativeRules,
    Term,
    default_relative_rules,
    pair_signs,
    set_partitions,
)


@dataclass(frozen=True)
class SourceComponent:
    field: FieldSpec
    label: int
    point: str
    starred: bool = False

    @property
    def sort_key(self):
        return (self.field.name, self.label, self.starred, self.point)


@dataclass(frozen=True)
class Derivative:
    """delta / delta S(point) for the source species (field, label, starred)."""

    field: FieldSpec
    label: int
    point: str
    starred: bool = False

    def matches(self, s: SourceComponent) -> bool:
        return (
            s.field.name == self.field.name
            and s.label == self.label
            and s.starred == self.starred
        )


@dataclass(frozen=True)
class BoundKernel:
    """Propagator between two points; for spinors ``a`` is the psi end."""

    kind: KernelKind
    a: str
    b: str

    @property
    def key(self):
        if self.kind is KernelKind.FERMION_FEYNMAN:
            return (self.kind.value, self.a, self.b)
        return (self.kind.value,) + tuple(sorted((self.a, self.b)))

    def rebind(self, old: str, new: str) -> "BoundKernel":
        return BoundKernel(self.kind, new if self.a == old else self.a, new if self.b == old else self.b)


@dataclass(frozen=True)
class SourceMonomial:
    factors: tuple[SourceComponent, ...] = ()
    scalar: Fraction = Fraction(1)
    i_power: int = 0
    kernels: tuple[BoundKernel, ...] = ()

    @property
    def key(self):
        return (self.factors, self.i_power % 4, tuple(sorted(k.key for k in self.kernels)))


class FunctionalState:
    """Sum of source monomials with like monomials merged."""

    def __init__(self, monomials: Iterable[SourceMonomial] = ()):
        merged: dict = {}
        for m in monomials:
            m = replace(m, i_power=m.i_power % 4)
            k = m.key
            if k in merged:
                merged[k] = replace(merged[k], scalar=merged[k].scalar + m.scalar)
            else:
                merged[k] = m
        self.monomials = tuple(m for m in merged.values() if m.scalar != 0)

    @classmethod
    def raw(cls, monomials: Iterable[SourceMonomial]) -> "FunctionalState":
        """Wrap monomials already known to be distinct and nonzero."""
        state = cls.__new__(cls)
        state.monomials = tuple(monomials)
        return state

    @classmethod
    def unit(cls) -> "FunctionalState":
        return cls([SourceMonomial()])

    def __iter__(self):
        return iter(self.monomials)

    def __len__(self):
        return len(self.monomials)

    def is_zero(self) -> bool:
        return not self.monomials

    def at_zero_sources(self) -> "FunctionalState":
        return FunctionalState(m for m in self.monomials if not m.factors)


def grading_sign(a, b, rules: Optional[RelativeRules]) -> int:
    """Sign for moving source (or derivative) ``a`` past ``b``."""
    same, diff = pair_signs(a.field, b.field, rules)
    return same if a.label == b.label else diff


def swap_adjacent(m: SourceMonomial, i: int, rules) -> SourceMonomial:
    f = list(m.factors)
    s = grading_sign(f[i], f[i + 1], rules)
    f[i], f[i + 1] = f[i + 1], f[i]
    return replace(m, factors=tuple(f), scalar=m.scalar * s)


def canonicalize(m: SourceMonomial, rules: Optional[RelativeRules]) -> Optional[SourceMonomial]:
    """Bubble the factors into sorted order; None if the monomial vanishes.

    Two identical factors whose self-exchange sign is -1 square to zero.
    """
    f = list(m.factors)
    sign = 1
    for end in range(len(f) - 1, 0, -1):
        for i in range(end):
            if f[i].sort_key > f[i + 1].sort_key:
                sign *= grading_sign(f[i], f[i + 1], rules)
                f[i], f[i + 1] = f[i + 1], f[i]
    for a, b in zip(f, f[1:]):
        if a == b and grading_sign(a, b, rules) == -1:
            return None
    return replace(m, factors=tuple(f), scalar=m.scalar * sign)


# -- W_free ------------------------------------------------------------------

def _bilinears(fields: Sequence[FieldSpec], labels: Sequence[int]):
    for f in fields:
        for a in labels:
            yield f, a


def _bilinear_monomial(f: FieldSpec, a: int, u: str, v: str) -> SourceMonomial:
    kind = f.kernel
    if f.charge is Charge.NEUTRAL:
        factors = (SourceComponent(f, a, u), SourceComponent(f, a, v))
        scalar = Fraction(1, 2)
    else:
        factors = (SourceComponent(f, a, u, True), SourceComponent(f, a, v, False))
        scalar = Fraction(1)
    return SourceMonomial(factors, scalar, 3, (BoundKernel(kind, u, v),))


def _times(x: SourceMonomial, y: SourceMonomial) -> SourceMonomial:
    return SourceMonomial(
        x.factors + y.factors, x.scalar * y.scalar, x.i_power + y.i_power, x.kernels + y.kernels
    )


def w_free_expansion(
    fields: Sequence[FieldSpec], half_order: int, labels: Sequence[int] = (1,)
) -> FunctionalState:
    """Order-m term (1/m!) (-i sum_f sum_a int int S-bar K S)^m of W_free.

    Each bilinear copy gets its own formal integration points ``u<k>``, ``v<k>``.
    Only the Green block labels in ``labels`` are generated.
    """
    m = half_order
    if m < 0:
        raise ValueError("half_order must be non-negative")
    bils = list(_bilinears(fields, labels))
    out = []
    for choice in itertools.product(bils, repeat=m):
        mono = SourceMonomial(scalar=Fraction(1, factorial(m)))
        for k, (f, a) in enumerate(choice, start=1):
            mono = _times(mono, _bilinear_monomial(f, a, f"u{k}", f"v{k}"))
        out.append(mono)
    return FunctionalState(out)


# -- differentiation ---------------------------------------------------------

def _contract(m: SourceMonomial, d: Derivative, rules) -> list[SourceMonomial]:
    """Terms where ``d`` removes one existing factor, plus the pass-through sign."""
    out = []
    sign = 1
    for i, s in enumerate(m.factors):
        if d.matches(s):
            out.append(
                SourceMonomial(
                    m.factors[:i] + m.factors[i + 1:],
                    m.scalar * sign,
                    m.i_power,
                    tuple(k.rebind(s.point, d.point) for k in m.kernels),
                )
            )
        sign *= grading_sign(d, s, rules)
    return out, sign


def pass_through_sign(m: SourceMonomial, d: Derivative, rules: Optional[RelativeRules] = None) -> int:
    """Sign picked up by ``d`` when it moves past every factor of ``m``."""
    return _contract(m, d, rules)[1]


def apply_derivative(state: FunctionalState, d: Derivative, rules: Optional[RelativeRules] = None) -> FunctionalState:
    """Left-acting graded derivative on an explicit source polynomial."""
    out = []
    for m in state:
        terms, _ = _contract(m, d, rules)
        out.extend(terms)
    return FunctionalState(out)


class _Fresh:
    def __init__(self):
        self.n = 0

    def __call__(self) -> str:
        self.n += 1
        return f"w{self.n}"


def _apply_to_exponential(state: FunctionalState, d: Derivative, rules, fresh: _Fresh) -> FunctionalState:
    """Derivative of (pending factors) * exp(-i B)."""
    out = []
    f = d.field
    same = pair_signs(f, f, rules)[0]
    for m in state:
        terms, sign = _contract(m, d, rules)
        out.extend(terms)
        w = fresh()
        if f.charge is Charge.NEUTRAL:
            new = SourceComponent(f, d.label, w)
            k = BoundKernel(f.kernel, d.point, w)
            s = 1
        elif d.starred:
            new = SourceComponent(f, d.label, w, False)
            k = BoundKernel(f.kernel, d.point, w)
            s = 1
        else:
            # pass the starred source at the front of the bilinear first
            new = SourceComponent(f, d.label, w, True)
            k = BoundKernel(f.kernel, w, d.point)
            s = same
        out.append(SourceMonomial(m.factors + (new,), m.scalar * sign * s, m.i_power + 3, m.kernels + (k,)))
    # fresh points keep every partial contraction distinct
    return FunctionalState.raw(out)


def insertion_derivative(product: ProductSpec, pos: int, label: int, rules) -> tuple[Derivative, int, int]:
    """(derivative, sign, i units) representing the insertion at 1-based ``pos``.

    phi / psi   -> (1/i) d/dS-bar,   phi* / psibar -> s (1/i) d/dS,
    with s the same-index exchange sign of the field; neutral fields use d/dJ.
    """
    ins = product.insertions[pos - 1]
    f = ins.field
    if f.charge is Charge.NEUTRAL:
        return Derivative(f, label, ins.label, False), 1, 3
    if ins.adjoint:
        return Derivative(f, label, ins.label, False), pair_signs(f, f, rules)[0], 3
    return Derivative(f, label, ins.label, True), 1, 3


def _block_feasible(product: ProductSpec, labels: Sequence[int]) -> bool:
    counts: dict = defaultdict(lambda: [0, 0])
    for ins, a in zip(product.insertions, labels):
        counts[(ins.field.name, a)][ins.adjoint] += 1
    for (name, _), (plain, adj) in counts.items():
        f = next(i.field for i in product.insertions if i.field.name == name)
        if f.charge is Charge.NEUTRAL:
            if (plain + adj) % 2:
                return False
        elif plain != adj:
            return False
    return True


def differentiate(
    product: ProductSpec, labels: Sequence[int], method: str = "exponential", rules=None
) -> FunctionalState:
    """Apply the insertions' derivatives, rightmost first, and set sources to zero."""
    if rules is None:
        rules = product.rules()
    n = len(product.insertions)
    scalar, ipow = Fraction(1), 0
    derivs = []
    for pos in range(n, 0, -1):
        d, s, u = insertion_derivative(product, pos, labels[pos - 1], rules)
        derivs.append(d)
        scalar *= s
        ipow += u
    if method == "exponential":
        state = FunctionalState.raw([SourceMonomial(scalar=scalar, i_power=ipow)])
        fresh = _Fresh()
        for d in derivs:
            state = _apply_to_exponential(state, d, rules, fresh)
    elif method == "series":
        used = sorted(set(labels))
        state = w_free_expansion(product.fields, n // 2, used)
        state = FunctionalState(replace(m, scalar=m.scalar * scalar, i_power=m.i_power + ipow) for m in state)
        for d in derivs:
            state = apply_derivative(state, d, rules)
    else:
        raise ValueError(f"unknown method {method!r}")
    return state.at_zero_sources()


def _to_term(product: ProductSpec, m: SourceMonomial, weight: PPolynomial) -> Term:
    pos = {ins.label: i for i, ins in enumerate(product.insertions, start=1)}
    factors, order = [], []
    for k in m.kernels:
        i, j = pos[k.a], pos[k.b]
        if k.kind is KernelKind.FERMION_FEYNMAN:
            args = (k.a, k.b)
        else:
            args = (k.a, k.b) if i > j else (k.b, k.a)
        order.append((min(i, j), max(i, j)))
        factors.append((min(i, j), Kernel(k.kind, args)))
    factors.sort(key=lambda t: t[0])
    if m.scalar.denominator != 1:
        raise ArithmeticError(f"non-integral coefficient {m.scalar}")
    return Term(weight * int(m.scalar), m.i_power % 4, tuple(k for _, k in factors), tuple(sorted(order)))


def n_point(product: ProductSpec, method: str = "exponential") -> CorrelatorResult:
    """Time-ordered n-point function from the free generating functional."""
    if product.mode is not Mode.TIME_ORDERED:
        raise ValueError("n_point handles time-ordered products only")
    n = len(product.insertions)
    if n == 0:
        return CorrelatorResult.unit()
    if n % 2:
        return CorrelatorResult()
    rules = product.rules()
    terms = []
    for labels in set_partitions(n):
        if not _block_feasible(product, labels):
            continue
        weight = falling_factorial(max(labels) + 1)
        for m in differentiate(product, labels, method, rules):
            terms.append(_to_term(product, m, weight))
    return CorrelatorResult.from_terms(terms)


__all__ = [
    "BoundKernel",
    "Derivative",
    "FunctionalState",
    "SourceComponent",
    "SourceMonomial",
    "apply_derivative",
    "canonicalize",
    "default_relative_rules",
    "differentiate",
    "grading_sign",
    "n_point",
    "pass_through_sign",
    "w_free_expansion",
]
