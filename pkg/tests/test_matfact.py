import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import braid_texts
from krhom.diagram import close_braid, parse_braid
from krhom.exactalg import MultiPoly
from krhom.homology import StateEngine, double_homology
from krhom.matfact import (
    KoszulMatrix,
    Potential,
    assemble,
    exclude_variable,
    local_factor,
    ring_map,
    row_operation,
    twist,
    u_factor,
    verify_mf,
)

V = (0, 1, 2)
coeffs = st.integers(-2, 2)
exps = st.tuples(st.integers(0, 2), st.integers(0, 2), st.integers(0, 2))
polys = st.dictionaries(exps, coeffs, max_size=3).map(lambda d: MultiPoly(V, d))
potentials = st.dictionaries(st.integers(2, 5), st.integers(-2, 2), min_size=1, max_size=2).map(Potential.from_dict)


@pytest.mark.parametrize("kind", ["+", "-", "s", "r"])
@given(p=potentials)
def test_local_factor_is_a_factorization(kind, p):
    C = local_factor(kind, (0, 1, 2, 3), p)
    report = verify_mf(C, vertical="commute")
    assert report.checks["d_plus_squared"] and report.checks["d_minus_squared"]
    assert report.checks["potential"], report.first_failure
    X = [MultiPoly.var(C.variables, e) if e in C.variables else None for e in range(4)]
    if all(x is not None for x in X):
        assert C.potential == p.of(X[2]) + p.of(X[3]) - p.of(X[0]) - p.of(X[1])


def test_u_factor_has_zero_potential():
    C = u_factor(0, Potential.sl(3))
    assert verify_mf(C, vertical="commute").ok


@given(braid_texts(max_b=3, max_len=4, singular=1), st.sampled_from([None, 2, 3, 4]), st.sampled_from(["middle", "reduced_edge", "unreduced"]))
def test_assembled_complexes_verify(text, n, variant):
    p = None if n is None else Potential.monomial(n)
    C = assemble(close_braid(parse_braid(text)), p, variant)
    report = verify_mf(C)
    assert report.ok, report.first_failure
    assert C.potential.is_zero()


def test_sign_conventions_give_the_same_homology():
    D = close_braid(parse_braid("b=2; w=1 1 1"))
    qs = range(-8, 9)
    dims = []
    for conv in ("A", "B"):
        C = assemble(D, None, "reduced_edge", convention=conv)
        assert verify_mf(C).ok
        dims.append(double_homology(StateEngine(C), qs))
    assert dims[0] == dims[1]


def test_complex_json_is_deterministic():
    C = assemble(close_braid(parse_braid("b=2; w=1 -1")), Potential.sl(2))
    text = C.to_json()
    assert json.dumps(json.loads(text), sort_keys=True) == text
    assert assemble(close_braid(parse_braid("b=2; w=1 -1")), Potential.sl(2)).to_json() == text


koszul = st.lists(st.tuples(polys, polys), min_size=2, max_size=3).map(lambda rows: KoszulMatrix(tuple(rows)))


@given(koszul, st.data())
def test_row_operation_preserves_potential(K, data):
    n = len(K.rows)
    i = data.draw(st.integers(0, n - 1))
    j = data.draw(st.integers(0, n - 1).filter(lambda x: x != i))
    c = data.draw(polys)
    assert row_operation(K, i, j, c).potential == K.potential


@given(koszul, st.integers(0, 2), polys)
def test_exclude_linear_variable_preserves_potential(K, x, shift):
    # make row 0 have b = X_x + (terms free of X_x)
    rest = MultiPoly(V, {e: c for e, c in shift.terms.items() if e[x] == 0 and sum(e) <= 1})
    b0 = MultiPoly.var(V, x) + rest
    K = KoszulMatrix(((K.rows[0][0], b0),) + K.rows[1:])
    out = exclude_variable(K, 0, x)
    newV = tuple(v for v in V if v != x)
    images = {v: MultiPoly.var(newV, v) for v in newV}
    images[x] = MultiPoly(newV, {tuple(k for t, k in enumerate(e) if t != x): -c for e, c in rest.terms.items()})
    before = ring_map(K.potential, images, newV)
    assert out.potential == before


two_rows = st.lists(st.tuples(polys, polys), min_size=2, max_size=2).map(lambda rows: KoszulMatrix(tuple(rows)))


@given(two_rows, polys)
def test_twist_keeps_a_factorization(K, h):
    C = K.to_complex()
    assert verify_mf(C, vertical="commute").checks["potential"]
    hs = sorted({s.h for s in C.shifts})
    lo = hs[0]
    tops = [g for g, s in enumerate(C.shifts) if s.h == lo + 2]
    bottoms = [g for g, s in enumerate(C.shifts) if s.h == lo]
    H = [dict() for _ in range(C.rank)]
    if tops and bottoms and len(hs) == 3:
        H[tops[0]][bottoms[0]] = h
    T = twist(C, H)
    r = verify_mf(T, vertical="commute")
    assert r.checks["potential"] and r.checks["d_plus_squared"]
    assert T.potential == C.potential
