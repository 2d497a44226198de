from fractions import Fraction

import pytest
import sympy
from hypothesis import given
from hypothesis import strategies as st

from krhom.exactalg import (
    ExactDivisionError,
    Laurent2,
    Laurent2Frac,
    MultiPoly,
    SparseMatQ,
    SubstitutionCycleError,
    matrix_rank,
    poly_exact_divide,
    poly_substitute,
    rank_kernel_image,
)

V = (0, 1, 2)
SYMS = sympy.symbols("x0 x1 x2")


def to_sympy(p: MultiPoly):
    return sum(sympy.Rational(c.numerator, c.denominator) * sympy.Mul(*[s ** k for s, k in zip(SYMS, e)])
               for e, c in ((e, Fraction(c)) for e, c in p.terms.items()))


coeffs = st.integers(-3, 3)
exps = st.tuples(st.integers(0, 2), st.integers(0, 2), st.integers(0, 2))
polys = st.dictionaries(exps, coeffs, max_size=4).map(lambda d: MultiPoly(V, d))


@given(polys, polys, polys)
def test_ring_axioms(p, q, r):
    assert (p + q) * r == p * r + q * r
    assert p * q == q * p
    assert (p * q) * r == p * (q * r)
    assert p - p == MultiPoly.zero(V)


@given(polys, polys)
def test_product_matches_sympy(p, q):
    assert sympy.expand(to_sympy(p * q) - to_sympy(p) * to_sympy(q)) == 0


@given(polys, polys)
def test_exact_division_recovers_factor(p, q):
    if q.is_zero():
        return
    assert poly_exact_divide(p * q, q) == p


def test_inexact_division_raises():
    x = MultiPoly.var(V, 0)
    with pytest.raises(ExactDivisionError):
        poly_exact_divide(x + 1, x)


def test_substitution_and_cycle():
    x, y, z = (MultiPoly.var(V, v) for v in V)
    p = x * x + y
    assert poly_substitute(p, {0: y + z}) == (y + z) ** 2 + y
    with pytest.raises(SubstitutionCycleError):
        poly_substitute(p, {0: y, 1: x})


def test_q_degree_and_homogeneity():
    x, y, _ = (MultiPoly.var(V, v) for v in V)
    p = x * y + x * x
    assert p.is_homogeneous() and p.q_degree() == 4
    assert not (p + x).is_homogeneous()


matrices = st.lists(st.lists(st.integers(-2, 2), min_size=4, max_size=4), min_size=1, max_size=5)


@given(matrices)
def test_rank_and_kernel_match_sympy(rows):
    M = SparseMatQ.from_dense(rows)
    res = rank_kernel_image(M)
    assert res["rank"] == sympy.Matrix(rows).rank()
    assert len(res["kernel"]) == 4 - res["rank"]
    for k in res["kernel"]:
        assert not M.apply(k)
    assert matrix_rank(M.column_vectors()) == res["rank"]


def test_laurent_fraction_reduces_denominator():
    z = Laurent2({(0, 1): 1, (0, -1): -1})
    f = Laurent2Frac(z * z * Laurent2.monomial(1, 0), 1)
    assert f.is_polynomial()
    assert f.as_polynomial() == z * Laurent2.monomial(1, 0)


def test_series_of_quotient():
    # (a - a^-1) / (q - q^-1) = -(a - a^-1) q (1 + q^2 + q^4 + ...)
    f = Laurent2Frac(Laurent2({(1, 0): 1, (-1, 0): -1}), 1)
    s = f.series_coefficients(5)
    assert s == {(1, 1): -1, (1, 3): -1, (1, 5): -1, (-1, 1): 1, (-1, 3): 1, (-1, 5): 1}
