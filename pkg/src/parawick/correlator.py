"""Canonical route: Wick pairings with Green-index weights.

Every admissible perfect matching of the insertions contributes one term.
Its coefficient is a polynomial in p obtained by summing over the ways the
contraction pairs can share Green indices: a set partition of the pairs
into blocks (pairs in one block carry the same index, distinct blocks
carry distinct indices) is weighted by the number of injective index
assignments, p (p-1) ... (p-b+1), times the product of exchange signs of
all crossing pairs.
"""

from __future__ import annotations

import enum
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterator, Mapping, Optional, Sequence

from .algebra import PPolynomial, Statistics, exchange_sign, falling_factorial, ppoly_eval


class Charge(enum.Enum):
    NEUTRAL = "neutral"
    CHARGED = "charged"


class KernelKind(enum.Enum):
    SCALAR_FEYNMAN = "iDF"
    FERMION_FEYNMAN = "iSF"
    KRONECKER = "delta"


class OpKind(enum.Enum):
    FIELD = "field"
    ANNIHILATOR = "annihilator"
    CREATOR = "creator"


class Mode(enum.Enum):
    TIME_ORDERED = "time_ordered"
    OPERATOR_STRING = "operator_string"


@dataclass(frozen=True)
class FieldSpec:
    name: str
    stat: Statistics
    charge: Charge = Charge.NEUTRAL

    def __post_init__(self):
        if self.stat is Statistics.PARAFERMI and self.charge is Charge.NEUTRAL:
            # spinor fields always pair psi with psibar
            object.__setattr__(self, "charge", Charge.CHARGED)

    @property
    def kernel(self) -> KernelKind:
        if self.stat is Statistics.PARAFERMI:
            return KernelKind.FERMION_FEYNMAN
        return KernelKind.SCALAR_FEYNMAN

    @property
    def pairs_with_adjoint(self) -> bool:
        return self.charge is Charge.CHARGED or self.stat is Statistics.PARAFERMI


@dataclass(frozen=True)
class Insertion:
    field: FieldSpec
    adjoint: bool
    label: str
    op_kind: OpKind = OpKind.FIELD


RelativeRules = Mapping[frozenset, tuple[int, int]]


def default_relative_rules(fields: Sequence[FieldSpec]) -> dict[frozenset, tuple[int, int]]:
    """Exchange signs (same index, different index) between distinct fields.

    Two parafermi fields use the parafermi rule; any pair involving a
    parabose field uses the parabose rule.
    """
    rules = {}
    fs = list({f.name: f for f in fields}.values())
    for a in range(len(fs)):
        for b in range(a + 1, len(fs)):
            fa, fb = fs[a], fs[b]
            if fa.stat is Statistics.PARAFERMI and fb.stat is Statistics.PARAFERMI:
                rules[frozenset((fa.name, fb.name))] = (-1, 1)
            else:
                rules[frozenset((fa.name, fb.name))] = (1, -1)
    return rules


@dataclass(frozen=True)
class ProductSpec:
    insertions: tuple[Insertion, ...]
    mode: Mode = Mode.TIME_ORDERED
    relative_rules: Optional[Mapping[frozenset, tuple[int, int]]] = None

    def __post_init__(self):
        object.__setattr__(self, "insertions", tuple(self.insertions))
        if self.mode is Mode.OPERATOR_STRING:
            for ins in self.insertions:
                if ins.op_kind is OpKind.FIELD:
                    raise ValueError("operator-string products take annihilators and creators only")

    def __len__(self):
        return len(self.insertions)

    @property
    def fields(self) -> tuple[FieldSpec, ...]:
        seen = {}
        for ins in self.insertions:
            seen.setdefault(ins.field.name, ins.field)
        return tuple(seen.values())

    def rules(self) -> dict[frozenset, tuple[int, int]]:
        """Relative rules with defaults filled in for unlisted field pairs."""
        rules = default_relative_rules(self.fields)
        if self.relative_rules:
            rules.update(self.relative_rules)
        return rules


def pair_signs(fa: FieldSpec, fb: FieldSpec, rules: Optional[RelativeRules]) -> tuple[int, int]:
    """(same-index sign, different-index sign) for exchanging components of fa and fb."""
    if fa.name == fb.name:
        return exchange_sign(fa.stat, True), exchange_sign(fa.stat, False)
    key = frozenset((fa.name, fb.name))
    if rules is None or key not in rules:
        raise KeyError(f"no relative exchange rule for fields {fa.name!r} and {fb.name!r}")
    return tuple(rules[key])


# -- matchings ---------------------------------------------------------------

Pair = tuple[int, int]


@dataclass(frozen=True)
class Matching:
    """Perfect pairing of 1-based string positions, pairs sorted by left end."""

    pairs: tuple[Pair, ...]

    def __iter__(self):
        return iter(self.pairs)

    def __len__(self):
        return len(self.pairs)


def admissible(left: Insertion, right: Insertion, mode: Mode) -> bool:
    if left.field.name != right.field.name:
        return False
    if mode is Mode.OPERATOR_STRING:
        return left.op_kind is OpKind.ANNIHILATOR and right.op_kind is OpKind.CREATOR
    if left.field.pairs_with_adjoint:
        return left.adjoint != right.adjoint
    return True


def _matchings(free: list[int], ins: Sequence[Insertion], mode: Mode) -> Iterator[list[Pair]]:
    if not free:
        yield []
        return
    first, rest = free[0], free[1:]
    for k, other in enumerate(rest):
        if admissible(ins[first], ins[other], mode):
            for tail in _matchings(rest[:k] + rest[k + 1:], ins, mode):
                yield [(first + 1, other + 1)] + tail


def enumerate_matchings(product: ProductSpec) -> list[Matching]:
    n = len(product.insertions)
    if n % 2:
        return []
    return [Matching(tuple(m)) for m in _matchings(list(range(n)), product.insertions, product.mode)]


def all_perfect_matchings(n: int) -> Iterator[Matching]:
    """Every perfect matching of positions 1..n, no admissibility filter."""
    if n % 2:
        return
    dummy = FieldSpec("_", Statistics.PARABOSE)
    ins = [Insertion(dummy, False, str(i)) for i in range(n)]
    for m in _matchings(list(range(n)), ins, Mode.TIME_ORDERED):
        yield Matching(tuple(m))


def crosses(a: Pair, b: Pair) -> bool:
    (i, j), (k, l) = a, b
    return i < k < j < l or k < i < l < j


@dataclass(frozen=True)
class CrossingGraph:
    vertices: tuple[Pair, ...]
    edges: tuple[tuple[int, int], ...]  # indices into vertices
    fields: Optional[tuple[FieldSpec, ...]] = None

    @property
    def n_crossings(self) -> int:
        return len(self.edges)


def crossing_edges(m: Matching, fields: Optional[Sequence[FieldSpec]] = None) -> CrossingGraph:
    verts = tuple(m.pairs)
    edges = tuple(
        (a, b)
        for a in range(len(verts))
        for b in range(a + 1, len(verts))
        if crosses(verts[a], verts[b])
    )
    return CrossingGraph(verts, edges, tuple(fields) if fields is not None else None)


# -- set-partition coefficient ----------------------------------------------

def set_partitions(n: int) -> Iterator[list[int]]:
    """Restricted growth strings: block id of each of n elements."""
    if n == 0:
        yield []
        return
    labels = [0] * n

    def rec(i: int, nblocks: int):
        if i == n:
            yield list(labels)
            return
        for b in range(nblocks + 1):
            labels[i] = b
            yield from rec(i + 1, max(nblocks, b + 1))

    yield from rec(1, 1)


def block_sum(
    n: int,
    edge_signs: Sequence[tuple[int, int, int, int]],
    join: Sequence[tuple[int, int]] = (),
    split: Sequence[tuple[int, int]] = (),
) -> PPolynomial:
    """Sum over set partitions of n vertices of falling_factorial(#blocks) * prod(edge signs).

    ``edge_signs`` holds (u, v, same_sign, different_sign). ``join`` pairs must
    share a block and ``split`` pairs must lie in distinct blocks.
    """
    by_blocks: dict[int, int] = defaultdict(int)
    for labels in set_partitions(n):
        if any(labels[u] != labels[v] for u, v in join):
            continue
        if any(labels[u] == labels[v] for u, v in split):
            continue
        w = 1
        for u, v, s_same, s_diff in edge_signs:
            w *= s_same if labels[u] == labels[v] else s_diff
        by_blocks[(max(labels) + 1) if labels else 0] += w
    total = PPolynomial()
    for b in sorted(by_blocks):
        if by_blocks[b]:
            total = total + falling_factorial(b) * by_blocks[b]
    return total


def _edge_signs(g: CrossingGraph, stat: Optional[Statistics], relative_rules) -> list:
    out = []
    for u, v in g.edges:
        if g.fields is None:
            if stat is None:
                raise ValueError("statistics required for an untyped crossing graph")
            s = (exchange_sign(stat, True), exchange_sign(stat, False))
        else:
            s = pair_signs(g.fields[u], g.fields[v], relative_rules)
        out.append((u, v, s[0], s[1]))
    return out


def matching_coefficient(
    g: CrossingGraph,
    stat: Optional[Statistics] = None,
    relative_rules: Optional[RelativeRules] = None,
) -> PPolynomial:
    """Green-index weight of one matching as a polynomial in p.

    When the graph carries per-vertex fields their statistics (and, for
    crossings between distinct fields, ``relative_rules``) fix the signs;
    otherwise every crossing uses ``stat``.
    """
    return block_sum(len(g.vertices), _edge_signs(g, stat, relative_rules))


# -- results -----------------------------------------------------------------

@dataclass(frozen=True)
class Kernel:
    kind: KernelKind
    args: tuple[str, str]

    def __str__(self):
        if self.kind is KernelKind.KRONECKER:
            return f"delta({self.args[0]},{self.args[1]})"
        return f"{self.kind.value}({self.args[0]}-{self.args[1]})"

    @property
    def sort_key(self):
        return (self.kind.value, self.args)


@dataclass(frozen=True)
class Term:
    coefficient: PPolynomial
    i_power: int
    factors: tuple[Kernel, ...]
    order: tuple = field(default=(), compare=False)

    @property
    def key(self):
        return tuple(sorted(k.sort_key for k in self.factors))


@dataclass(frozen=True)
class CorrelatorResult:
    terms: tuple[Term, ...] = ()

    @classmethod
    def from_terms(cls, terms) -> "CorrelatorResult":
        """Merge like terms, drop zeros, sort canonically."""
        merged: dict = {}
        for t in terms:
            k = (t.i_power % 4, t.key)
            if k in merged:
                old = merged[k]
                order = min(old.order, t.order)
                factors = old.factors if old.order <= t.order else t.factors
                merged[k] = Term(old.coefficient + t.coefficient, k[0], factors, order)
            else:
                merged[k] = Term(t.coefficient, k[0], t.factors, t.order)
        kept = [t for t in merged.values() if not t.coefficient.is_zero()]
        kept.sort(key=lambda t: (t.order, t.key))
        return cls(tuple(kept))

    @classmethod
    def unit(cls) -> "CorrelatorResult":
        return cls((Term(PPolynomial.const(1), 0, (), ()),))

    def is_zero(self) -> bool:
        return not self.terms

    def __len__(self):
        return len(self.terms)

    def signature(self):
        """Order-independent comparison key."""
        return sorted((t.i_power, t.key, t.coefficient.coeffs) for t in self.terms)

    def at(self, p0: int) -> list[tuple[int, int, tuple[Kernel, ...]]]:
        return [(ppoly_eval(t.coefficient, p0), t.i_power, t.factors) for t in self.terms]

    def scalar_value(self, p0: int, modes: Optional[Mapping[str, int]] = None) -> complex:
        """Numerical value when every factor is a Kronecker symbol.

        ``modes`` maps labels to integers; labels that look like integers
        map to themselves.
        """
        total = 0j
        for t in self.terms:
            v = complex(ppoly_eval(t.coefficient, p0)) * (1j ** t.i_power)
            for k in t.factors:
                if k.kind is not KernelKind.KRONECKER:
                    raise ValueError("only Kronecker factors have a numerical value")
                a, b = (_mode_of(x, modes) for x in k.args)
                v *= 1 if a == b else 0
            total += v
        return total

    def __str__(self):
        return format_result(self)


def _mode_of(label: str, modes):
    if modes and label in modes:
        return modes[label]
    return int(label)


def format_term(t: Term) -> str:
    """Text form such as ``(2p - p^2) * iDF(x2-x4) * iDF(x1-x3)``.

    Field kernels are printed with their factor of i absorbed; any leftover
    power of i is written explicitly.
    """
    n_field = sum(k.kind is not KernelKind.KRONECKER for k in t.factors)
    extra = (t.i_power - n_field) % 4
    coeff = -t.coefficient if extra >= 2 else t.coefficient
    parts = [f"({coeff})" if sum(1 for c in coeff.coeffs if c) > 1 else str(coeff)]
    if extra % 2:
        parts.append("i")
    parts.extend(str(k) for k in t.factors)
    if parts[0] == "1" and len(parts) > 1:
        parts = parts[1:]
    return " * ".join(parts)


def format_result(r: CorrelatorResult) -> str:
    if r.is_zero():
        return "0"
    out = ""
    for k, t in enumerate(r.terms):
        text = format_term(t)
        if k == 0:
            out = text
        elif text.startswith("-"):
            out += " - " + text[1:]
        else:
            out += " + " + text
    return out


# -- evaluation ----------------------------------------------------------------

def contraction_unit(product: ProductSpec, pair: Pair) -> tuple[int, Optional[Kernel], int]:
    """(sign, kernel, i units) contributed by contracting one pair of positions."""
    i, j = pair
    a, b = product.insertions[i - 1], product.insertions[j - 1]
    if product.mode is Mode.OPERATOR_STRING:
        if a.label == b.label:
            return 1, None, 0
        if a.label.isdigit() and b.label.isdigit():
            # distinct concrete modes
            return (1 if int(a.label) == int(b.label) else 0), None, 0
        return 1, Kernel(KernelKind.KRONECKER, (a.label, b.label)), 0
    f = a.field
    if f.kernel is KernelKind.FERMION_FEYNMAN:
        psi, psibar = (b, a) if a.adjoint else (a, b)
        sign = exchange_sign(f.stat, True) if a.adjoint else 1
        return sign, Kernel(KernelKind.FERMION_FEYNMAN, (psi.label, psibar.label)), 1
    return 1, Kernel(KernelKind.SCALAR_FEYNMAN, (b.label, a.label)), 1


def matching_term(product: ProductSpec, m: Matching, coefficient: PPolynomial) -> Term:
    sign, ipow, factors = 1, 0, []
    for pair in m.pairs:
        s, k, units = contraction_unit(product, pair)
        sign *= s
        ipow += units
        if k is not None:
            factors.append(k)
    return Term(coefficient * sign, ipow % 4, tuple(factors), m.pairs)


def graph_for(product: ProductSpec, m: Matching) -> CrossingGraph:
    fields = [product.insertions[i - 1].field for i, _ in m.pairs]
    return crossing_edges(m, fields)


def evaluate(product: ProductSpec) -> CorrelatorResult:
    """Vacuum expectation value as a sum over admissible Wick pairings."""
    n = len(product.insertions)
    if n == 0:
        return CorrelatorResult.unit()
    if n % 2:
        return CorrelatorResult()
    rules = product.rules()
    terms = []
    for m in enumerate_matchings(product):
        coeff = matching_coefficient(graph_for(product, m), relative_rules=rules)
        terms.append(matching_term(product, m, coeff))
    return CorrelatorResult.from_terms(terms)


def evaluate_green_components(product: ProductSpec, indices: Sequence[int], p0: int) -> CorrelatorResult:
    """Contract Green components with fixed indices at concrete order p0.

    Only equal-index pairs contract; each crossing contributes the exchange
    sign for its two fixed indices.
    """
    if len(indices) != len(product.insertions):
        raise ValueError("one Green index per insertion required")
    for a in indices:
        if not 1 <= a <= p0:
            raise ValueError(f"Green index {a} outside 1..{p0}")
    n = len(indices)
    if n == 0:
        return CorrelatorResult.unit()
    if n % 2:
        return CorrelatorResult()
    rules = product.rules()
    terms = []
    for m in enumerate_matchings(product):
        if any(indices[i - 1] != indices[j - 1] for i, j in m.pairs):
            continue
        g = graph_for(product, m)
        sign = 1
        for u, v in g.edges:
            s_same, s_diff = pair_signs(g.fields[u], g.fields[v], rules)
            same = indices[g.vertices[u][0] - 1] == indices[g.vertices[v][0] - 1]
            sign *= s_same if same else s_diff
        terms.append(matching_term(product, m, PPolynomial.const(sign)))
    return CorrelatorResult.from_terms(terms)
