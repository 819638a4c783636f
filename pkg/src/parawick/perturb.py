"""First-order (one vertex) corrections to time-ordered products.

The vertex legs are appended to the right of the external insertions, all
at the integration point. Saturated vertices commute with every field
component, so their position in the string does not change any sign.
Vertex constraints act on the Green blocks of the contraction pairs:

* diagonal powers (Green-diagonal bilinears) force the two legs of each
  bilinear into one block;
* nested all-different vertices and the Yukawa vertex force all legs into
  pairwise distinct blocks.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .algebra import PPolynomial, Statistics, ppoly_eval
from .correlator import (
    Charge,
    CorrelatorResult,
    FieldSpec,
    Insertion,
    Kernel,
    Mode,
    ProductSpec,
    Term,
    block_sum,
    contraction_unit,
    enumerate_matchings,
    graph_for,
    pair_signs,
)


class VertexKind(enum.Enum):
    DIAGONAL_POWER = "diagonal_power"
    NESTED_ALL_DIFFERENT = "nested_all_different"
    YUKAWA = "yukawa"


@dataclass(frozen=True)
class VertexSpec:
    kind: VertexKind
    fields: tuple[FieldSpec, ...]
    degree: int = 1  # number of Green-diagonal bilinears, diagonal powers only
    order: Optional[int] = None  # order p the vertex is built for
    coupling: str = "g"
    point: str = "z"

    def __post_init__(self):
        object.__setattr__(self, "fields", tuple(self.fields))
        if self.kind is VertexKind.DIAGONAL_POWER:
            if len(self.fields) != 1 or self.degree < 1:
                raise ValueError("diagonal power vertex takes one field and degree >= 1")
        elif self.kind is VertexKind.YUKAWA:
            if len(self.fields) != 2:
                raise ValueError("Yukawa vertex takes (parafermi field, parabose field)")
            psi, phi = self.fields
            if psi.stat is not Statistics.PARAFERMI or phi.stat is not Statistics.PARABOSE:
                raise ValueError("Yukawa vertex takes (parafermi field, parabose field)")
        elif len({f.name for f in self.fields}) != len(self.fields):
            raise ValueError("nested vertex needs distinct fields")

    @property
    def arity(self) -> int:
        if self.kind is VertexKind.DIAGONAL_POWER:
            return 2 * self.degree
        if self.kind is VertexKind.YUKAWA:
            return 3
        return len(self.fields)

    def legs(self) -> tuple[list[Insertion], list[tuple[int, int]], list[tuple[int, int]]]:
        """(leg insertions, same-block leg pairs, distinct-block leg pairs)."""
        z = self.point
        legs, join, split = [], [], []
        if self.kind is VertexKind.DIAGONAL_POWER:
            (f,) = self.fields
            for b in range(self.degree):
                if f.charge is Charge.NEUTRAL:
                    legs += [Insertion(f, False, z), Insertion(f, False, z)]
                else:
                    legs += [Insertion(f, True, z), Insertion(f, False, z)]
                join.append((2 * b, 2 * b + 1))
            return legs, join, split
        if self.kind is VertexKind.YUKAWA:
            psi, phi = self.fields
            legs = [Insertion(psi, True, z), Insertion(psi, False, z), Insertion(phi, False, z)]
        else:
            legs = [Insertion(f, False, z) for f in self.fields]
        split = [(a, b) for a in range(len(legs)) for b in range(a + 1, len(legs))]
        return legs, join, split


@dataclass
class AdmissibilityReport:
    admissible: bool
    unsaturated: bool = False
    even_degree: bool = False
    notes: list[str] = field(default_factory=list)


def vertex_admissibility(v: VertexSpec, p: Optional[int] = None) -> AdmissibilityReport:
    """Flag all-different vertices that do not saturate the Green indices or have even degree."""
    if v.kind is VertexKind.DIAGONAL_POWER:
        return AdmissibilityReport(True, notes=["Green-diagonal vertex, any order"])
    order = p if p is not None else v.order
    rep = AdmissibilityReport(True)
    if order is None:
        rep.notes.append("order not given; saturation unchecked")
    elif v.arity != order:
        rep.unsaturated = True
        rep.admissible = False
        rep.notes.append(f"arity {v.arity} does not saturate order {order}")
    if v.arity % 2 == 0:
        rep.even_degree = True
        rep.admissible = False
        rep.notes.append(f"even degree {v.arity}: vertex anticommutes with the field")
    return rep


@dataclass(frozen=True)
class DiagramTerm:
    coefficient: PPolynomial
    i_power: int
    factors: tuple[Kernel, ...]
    coupling: str = "g"
    points: tuple[str, ...] = ("z",)
    order: tuple = field(default=(), compare=False)

    def __str__(self):
        from .correlator import format_term

        body = format_term(Term(self.coefficient, self.i_power, self.factors))
        integral = " ".join(f"int[{z}]" for z in self.points)
        return f"{self.coupling} * {integral} * {body}"


def extended_product(product: ProductSpec, v: VertexSpec) -> ProductSpec:
    legs, _, _ = v.legs()
    return ProductSpec(product.insertions + tuple(legs), Mode.TIME_ORDERED, product.relative_rules)


def first_order_correction(
    product: ProductSpec,
    v: Optional[VertexSpec],
    p: Optional[int] = None,
    constrained: bool = True,
) -> list[DiagramTerm]:
    """Order-g term: i g int d^4z <T externals * vertex(z)>.

    With ``constrained=False`` the vertex Green constraints are dropped and
    the result is the plain correlator of the extended product. With a
    concrete ``p`` coefficients are evaluated there and vanishing terms
    dropped. ``v=None`` gives the free (order g^0) result.
    """
    if product.mode is not Mode.TIME_ORDERED:
        raise ValueError("vertex corrections need a time-ordered product")
    if v is None:
        from .correlator import evaluate

        res = evaluate(product)
        return _finish(
            [DiagramTerm(t.coefficient, t.i_power, t.factors, "", (), t.order) for t in res.terms], p
        )
    if p is not None and constrained and v.kind is not VertexKind.DIAGONAL_POWER and p < v.arity:
        return []
    ext = extended_product(product, v)
    n_ext = len(product.insertions)
    _, join_legs, split_legs = v.legs()
    rules = ext.rules()
    terms = []
    for m in enumerate_matchings(ext):
        pair_of = {}
        for idx, (i, j) in enumerate(m.pairs):
            pair_of[i - 1] = idx
            pair_of[j - 1] = idx
        join, split = [], []
        feasible = True
        if constrained:
            for a, b in join_legs:
                pa, pb = pair_of[n_ext + a], pair_of[n_ext + b]
                if pa != pb:
                    join.append((pa, pb))
            for a, b in split_legs:
                pa, pb = pair_of[n_ext + a], pair_of[n_ext + b]
                if pa == pb:
                    feasible = False
                    break
                split.append((pa, pb))
        if not feasible:
            continue
        g = graph_for(ext, m)
        edges = []
        for u, w in g.edges:
            s_same, s_diff = pair_signs(g.fields[u], g.fields[w], rules)
            edges.append((u, w, s_same, s_diff))
        coeff = block_sum(len(m.pairs), edges, join, split)
        sign, ipow, factors = 1, 1, []  # leading i from i g int V
        for pair in m.pairs:
            s, k, units = contraction_unit(ext, pair)
            sign *= s
            ipow += units
            if k is not None:
                factors.append(k)
        terms.append(DiagramTerm(coeff * sign, ipow % 4, tuple(factors), v.coupling, (v.point,), m.pairs))
    return _finish(terms, p)


def _finish(terms: Sequence[DiagramTerm], p: Optional[int]) -> list[DiagramTerm]:
    merged = CorrelatorResult.from_terms(
        Term(t.coefficient, t.i_power, t.factors, t.order) for t in terms
    )
    coupling = terms[0].coupling if terms else "g"
    points = terms[0].points if terms else ()
    out = []
    for t in merged.terms:
        c = t.coefficient
        if p is not None:
            c = PPolynomial.const(ppoly_eval(c, p))
            if c.is_zero():
                continue
        out.append(DiagramTerm(c, t.i_power, t.factors, coupling, points, t.order))
    return out
