import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from conftest import CPHI, PB, PF, PHI, PSI, product
from parawick.algebra import PPolynomial
from parawick.correlator import Charge, FieldSpec, KernelKind, evaluate
from parawick.genfun import (
    Derivative,
    FunctionalState,
    SourceComponent,
    SourceMonomial,
    apply_derivative,
    canonicalize,
    differentiate,
    n_point,
    pass_through_sign,
    swap_adjacent,
    w_free_expansion,
)

P = PPolynomial.p()
def test_w_free_order_zero_is_unit():
    assert w_free_expansion([PHI], 0).monomials == FunctionalState.unit().monomials


def test_w_free_order_one():
    (m,) = w_free_expansion([PHI], 1).monomials
    assert m.i_power == 3  # -i
    assert m.scalar == Fraction(1, 2)
    assert len(m.kernels) == 1 and m.kernels[0].kind is KernelKind.SCALAR_FEYNMAN
    (mc,) = w_free_expansion([CPHI], 1).monomials
    assert mc.scalar == 1 and [s.starred for s in mc.factors] == [True, False]


def test_w_free_order_two_has_two_kernels():
    state = w_free_expansion([CPHI], 2)
    assert all(len(m.kernels) == 2 for m in state)
    assert sum(m.scalar for m in state) == Fraction(1, 2)


def test_w_free_order_two_reproduces_neutral_four_point():
    prod = product((PHI, False, "x4"), (PHI, False, "x3"), (PHI, False, "x2"), (PHI, False, "x1"))
    assert n_point(prod, method="series") == evaluate(prod)


def test_derivative_on_matching_source_gives_unit():
    s = SourceComponent(PHI, 1, "x")
    out = apply_derivative(FunctionalState([SourceMonomial((s,))]), Derivative(PHI, 1, "x"))
    assert out.monomials == FunctionalState.unit().monomials


def test_derivative_passes_other_block_with_exchange_sign():
    s = SourceComponent(PHI, 2, "y")
    mono = SourceMonomial((s,))
    d = Derivative(PHI, 1, "x")
    assert pass_through_sign(mono, d) == -1
    assert apply_derivative(FunctionalState([mono]), d).is_zero()
    same = SourceComponent(PHI, 1, "y")
    assert pass_through_sign(SourceMonomial((same,)), d) == 1
    fermi = SourceComponent(PSI, 2, "y")
    assert pass_through_sign(SourceMonomial((fermi,)), Derivative(PSI, 1, "x")) == 1


def test_grassmann_nilpotency():
    eta = SourceComponent(PSI, 1, "x")
    d = Derivative(PSI, 1, "x")
    once = apply_derivative(FunctionalState([SourceMonomial((eta,))]), d)
    assert once.monomials == FunctionalState.unit().monomials
    assert apply_derivative(once, d).is_zero()
    assert canonicalize(SourceMonomial((eta, eta)), None) is None


def test_two_point_both_methods():
    prod = product((PHI, False, "x2"), (PHI, False, "x1"))
    assert str(n_point(prod)) == "p * iDF(x1-x2)"
    assert n_point(prod, method="series") == n_point(prod)


def test_charged_four_point():
    prod = product((CPHI, True, "x4"), (CPHI, True, "x3"), (CPHI, False, "x2"), (CPHI, False, "x1"))
    assert str(n_point(prod)) == "(2p - p^2) * iDF(x2-x4) * iDF(x1-x3) + p^2 * iDF(x1-x4) * iDF(x2-x3)"


def test_parafermi_four_point_relative_sign():
    prod = product((PSI, False, "x4"), (PSI, False, "x3"), (PSI, True, "x2"), (PSI, True, "x1"))
    r = n_point(prod)
    assert sorted(t.coefficient.coeffs for t in r.terms) == sorted([(0, 0, 1), (0, -2, 1)])
    assert r == evaluate(prod)


def test_odd_and_empty():
    assert n_point(product((PHI, False, "x"))).is_zero()
    assert len(n_point(product()).terms) == 1


def test_unknown_method():
    with pytest.raises(ValueError):
        n_point(product((PHI, False, "a"), (PHI, False, "b")), method="bogus")


def test_truncation_orders_off_by_one_vanish():
    prod = product((CPHI, True, "x4"), (CPHI, True, "x3"), (CPHI, False, "x2"), (CPHI, False, "x1"))
    rules = prod.rules()
    for labels in ([0, 0, 0, 0], [0, 1, 0, 1]):
        for order in (1, 3):
            state = w_free_expansion([CPHI], order, sorted(set(labels)))
            for pos in range(4, 0, -1):
                ins = prod.insertions[pos - 1]
                state = apply_derivative(state, Derivative(CPHI, labels[pos - 1], ins.label, not ins.adjoint), rules)
            assert state.at_zero_sources().is_zero()
    assert not differentiate(prod, [0, 0, 0, 0], "series").is_zero()


@pytest.mark.parametrize(
    "spec",
    [
        [(PSI, False, "a"), (PSI, True, "b")],
        [(PSI, True, "a"), (PSI, False, "b")],
        [(PSI, True, "a"), (PSI, False, "b"), (PSI, True, "c"), (PSI, False, "d")],
        [(PHI, False, "a"), (PHI, False, "b"), (PHI, False, "c"), (PHI, False, "d"), (PHI, False, "e"), (PHI, False, "f")],
        [(CPHI, False, "a"), (CPHI, True, "b"), (CPHI, True, "c"), (CPHI, False, "d"), (CPHI, True, "e"), (CPHI, False, "f")],
    ],
)
def test_series_equals_exponential(spec):
    prod = product(*spec)
    assert n_point(prod, method="series") == n_point(prod) == evaluate(prod)


def test_series_mixed_fields():
    chi = FieldSpec("chi", PB, Charge.NEUTRAL)
    prod = product((PSI, True, "a"), (chi, False, "b"), (PSI, False, "c"), (chi, False, "d"))
    assert n_point(prod, method="series") == evaluate(prod)


# -- grading ------------------------------------------------------------------------

CHI = FieldSpec("chi", PF, Charge.CHARGED)
FIELDS = [PHI, FieldSpec("xi", PB, Charge.CHARGED), PSI, CHI]


@st.composite
def monomials(draw):
    n = draw(st.integers(0, 8))
    comps = []
    for _ in range(n):
        f = draw(st.sampled_from(FIELDS))
        comps.append(SourceComponent(f, draw(st.integers(1, 3)), draw(st.sampled_from("uvw")), draw(st.booleans())))
    return SourceMonomial(tuple(comps))


RULES = product(*[(f, False, str(k)) for k, f in enumerate(FIELDS)]).rules()


@settings(max_examples=200, deadline=None)
@given(monomials(), st.lists(st.integers(0, 7), max_size=20))
def test_canonical_form_is_independent_of_rewrite_path(m, swaps):
    base = canonicalize(m, RULES)
    cur = m
    for i in swaps:
        if i < len(cur.factors) - 1:
            cur = swap_adjacent(cur, i, RULES)
    again = canonicalize(cur, RULES)
    if base is None:
        assert again is None
    else:
        assert again is not None
        assert again.factors == base.factors and again.scalar == base.scalar


@settings(max_examples=100, deadline=None)
@given(monomials())
def test_swapping_twice_is_identity(m):
    for i in range(len(m.factors) - 1):
        assert swap_adjacent(swap_adjacent(m, i, RULES), i, RULES) == m
