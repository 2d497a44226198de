from fractions import Fraction

from hypothesis import given
from hypothesis import strategies as st

from krhom.diagram import close_braid, parse_braid
from krhom.homology import (
    FilteredComplex,
    SliceHomology,
    StateEngine,
    TripleGradedDims,
    column_rank,
    double_homology,
    spectral_sequence,
)
from krhom.matfact import assemble


def test_slice_homology_of_small_complex():
    # 1-dim in, 3-dim middle, 1-dim out; in = e0 + e1, out = e1 - e0 on e0, e1
    inc = [{0: Fraction(1), 1: Fraction(1)}]
    out = [{0: Fraction(-1)}, {0: Fraction(1)}, {}]
    H = SliceHomology(3, inc, out, 1)
    assert H.dim == 1
    assert H.coords({2: Fraction(5)}) == [Fraction(5)]
    assert H.coords({0: Fraction(1), 1: Fraction(1)}) == [0]


def test_spectral_sequence_long_differential():
    fc = FilteredComplex({0: [0], 1: [2]}, {0: [{0: Fraction(1)}]})
    pages = spectral_sequence(fc)
    assert [p.total() for p in pages] == [2, 2, 2, 0]
    assert pages[2].ranks == {(0, 0): 1}
    assert pages[-1].converged


@st.composite
def filtered_complexes(draw):
    """Cancelling pairs x -> y with filt(y) >= filt(x), plus free classes,
    then a filtration-preserving change of basis in each degree."""
    n_pairs = draw(st.integers(0, 3))
    n_free = draw(st.integers(0, 2))
    filt = {0: [], 1: []}
    D = {0: []}
    rows = []
    for _ in range(n_pairs):
        fx = draw(st.integers(0, 3))
        fy = draw(st.integers(fx, 4))
        filt[0].append(fx)
        filt[1].append(fy)
        rows.append(len(filt[1]) - 1)
    for _ in range(n_free):
        filt[draw(st.integers(0, 1))].append(draw(st.integers(0, 4)))
    n0, n1 = len(filt[0]), len(filt[1])
    M = [[Fraction(0)] * n0 for _ in range(n1)]
    for k, r in enumerate(rows):
        M[r][k] = Fraction(1)
    # target basis change: row_i += c row_j requires filt(i) <= filt(j) in degree 1
    for _ in range(draw(st.integers(0, 4))):
        if n1 < 2:
            break
        i, j = draw(st.integers(0, n1 - 1)), draw(st.integers(0, n1 - 1))
        if i != j and filt[1][i] >= filt[1][j]:
            c = draw(st.integers(-2, 2))
            for k in range(n0):
                M[i][k] += c * M[j][k]
    D[0] = [{r: M[r][c] for r in range(n1) if M[r][c]} for c in range(n0)]
    return FilteredComplex(filt, D), n0 + n1 - 2 * column_rank(D[0])


@given(filtered_complexes())
def test_spectral_sequence_converges_to_homology(data):
    fc, total = data
    fc.check()
    pages = spectral_sequence(fc)
    for a, b in zip(pages, pages[1:]):
        assert b.total() == a.total() - 2 * sum(a.ranks.values())
    assert pages[-1].total() == total
    assert pages[-1].converged


def test_double_homology_of_trefoil_raw():
    C = assemble(close_braid(parse_braid("b=2; w=1 1 1")), None, "reduced_edge")
    dims = double_homology(StateEngine(C), range(-10, 11))
    assert dims.total() == 3


def test_workers_do_not_change_results():
    C = assemble(close_braid(parse_braid("b=3; w=1 -2 1 -2")), None, "reduced_edge")
    qs = range(-8, 9)
    assert double_homology(StateEngine(C, 1), qs) == double_homology(StateEngine(C, 3), qs)


def test_graded_dims_shift_and_list():
    d = TripleGradedDims({(0, 0, 0): 1, (2, 2, -2): 0})
    assert d.dims == {(0, 0, 0): 1}
    assert d.shifted((1, -1, 1)).to_list() == [[1, -1, 1, 1]]
