"""Link invariants in final normalization.

Every function here takes a braid word, assembles the relevant complex,
scans a finite q-window and returns dimensions with the global shifts
applied.  Windows come from the support of the HOMFLY polynomial; a result
is flagged ``truncated`` when homology reaches either outer edge.

Grading conventions (final, after shifts):

* HOMFLY homology: triples (i, j, k) with delta = i + j + k and
  Euler characteristic sum (-1)^((k - j)/2) a^j q^i.
* sl(N) homology: pairs (I, J) = (gr_N, gr_v) and Euler characteristic
  sum (-1)^J q^I.
* totally reduced homology: pairs (I, K) with K = 2 gr_v, which is odd.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

from .diagram import BraidWord, close_braid, connected_sum_words, format_braid, letter_col, letter_kind, parse_braid
from .exactalg import Laurent2, Laurent2Frac, MultiPoly, SparseMatQ, laurent2_specialize, rank_kernel_image
from .homology import (
    FlatComplex,
    PageData,
    SliceHomology,
    StateEngine,
    TotalHomology,
    TripleGradedDims,
    column_rank,
    double_homology,
    filtered_complex_EN,
    filtered_complex_Em1,
    spectral_sequence,
    vertical_complex,
)
from .matfact import MFComplex, Potential, as_potential, assemble
from .moypoly import link_homfly_moy

Triple = Tuple[int, int, int]
Pair = Tuple[int, int]
Vec = Dict[int, Fraction]
Coeff = Union[int, Fraction]

DEFAULT_PAD = 3
DEFAULT_N_MAX = 6


class InvariantError(RuntimeError):
    """A consistency check between two independent computations failed."""


class EulerMismatch(InvariantError):
    pass


# ---------------------------------------------------------------------------
# Small helpers
# ---------------------------------------------------------------------------


def as_braid(w: Union[str, BraidWord]) -> BraidWord:
    return parse_braid(w) if isinstance(w, str) else w


def global_shift(w: BraidWord, variant: str) -> Triple:
    """Triple-grading shift applied to raw (q, 2 gr_h, 2 gr_v) dimensions."""
    wr, b = w.writhe, w.b
    if variant == "reduced":
        return (-wr + b - 1, wr + b - 1, wr - b + 1)
    if variant == "middle":
        return (-wr + b, wr + b - 1, wr - b + 1)
    if variant == "unreduced":
        return (-wr + b, wr + b, wr - b)
    raise ValueError(f"unknown variant {variant!r}")


def _window(P: Laurent2Frac, pad: int) -> Tuple[int, int]:
    """Final-grading window [lo, hi] covering the ascending q-expansion of P."""
    qs = [q for (_, q) in P.numerator.terms]
    if not qs:
        raise ValueError("zero polynomial has no support")
    lo = min(qs) + P.denom_power
    hi = max(qs) + P.denom_power
    return lo - 2 * pad, hi + 2 * pad


def _truncated(keys: Iterable[int], lo: int, hi: int) -> bool:
    """Homology within the outermost two q-degrees (step 2) on either side."""
    return any(x <= lo + 2 or x >= hi - 2 for x in keys)


def homfly_polynomials(w: Union[str, BraidWord]) -> Tuple[Laurent2Frac, Laurent2Frac]:
    """(unreduced, reduced) HOMFLY polynomials of the closure."""
    return link_homfly_moy(as_braid(w))


def euler_characteristic(dims: Union[TripleGradedDims, Mapping[Triple, int]]) -> Laurent2:
    d = dims.dims if isinstance(dims, TripleGradedDims) else dims
    terms: Dict[Tuple[int, int], int] = {}
    for (i, j, k), n in d.items():
        if (k - j) % 2:
            raise ValueError("k - j must be even")
        s = -1 if ((k - j) // 2) % 2 else 1
        terms[(j, i)] = terms.get((j, i), 0) + s * n
    return Laurent2(terms)


def euler_check(dims: Union[TripleGradedDims, Mapping[Triple, int]], P: Union[Laurent2, Laurent2Frac], q_max: Optional[int] = None) -> bool:
    """Compare the graded Euler characteristic with P.

    Polynomials are compared exactly.  When P has a (q - q^-1) denominator it
    is expanded in ascending q and compared up to ``q_max`` (default: the
    window top of ``dims``).
    """
    chi = euler_characteristic(dims)
    if isinstance(P, Laurent2):
        P = Laurent2Frac(P)
    if P.denom_power == 0:
        return chi == P.numerator
    if q_max is None:
        win = getattr(dims, "window", None)
        if win is None:
            raise ValueError("q_max needed to compare against a series")
        q_max = win[1]
    ser = P.series_coefficients(q_max)
    mine = {k: v for k, v in chi.terms.items() if k[1] <= q_max}
    return {k: v for k, v in ser.items()} == mine


def regrade(dims: Union[TripleGradedDims, Mapping[Triple, int]], N: int) -> Dict[Pair, int]:
    """(i, j, k) -> (i + N j, (k - j)/2)."""
    d = dims.dims if isinstance(dims, TripleGradedDims) else dims
    out: Dict[Pair, int] = {}
    for (i, j, k), n in d.items():
        key = (i + N * j, (k - j) // 2)
        out[key] = out.get(key, 0) + n
    return out


def delta_grading(t: Triple) -> int:
    return t[0] + t[1] + t[2]


# ---------------------------------------------------------------------------
# HOMFLY homology
# ---------------------------------------------------------------------------


def _homfly_raw(w: BraidWord, variant: str, lo: int, hi: int, workers: int, edge: Optional[int] = None):
    kind = {"reduced": "reduced_edge", "middle": "middle", "unreduced": "unreduced"}[variant]
    D = close_braid(w)
    C = assemble(D, None, kind, edge=edge)
    s = global_shift(w, variant)
    # reduced: i has the parity opposite to the component count; the others agree with it
    parity = (w.n_components() + (variant == "reduced")) % 2
    qs = [i - s[0] for i in range(lo, hi + 1) if (i - parity) % 2 == 0]
    eng = StateEngine(C, workers)
    raw = double_homology(eng, qs)
    return eng, raw, s


def homfly_homology(
    w: Union[str, BraidWord],
    pad: int = DEFAULT_PAD,
    window: Optional[Tuple[int, int]] = None,
    workers: int = 1,
    edge: Optional[int] = None,
) -> TripleGradedDims:
    """Reduced HOMFLY homology with the global shift applied."""
    w = as_braid(w)
    if window is None:
        window = _window(homfly_polynomials(w)[1], pad)
    lo, hi = window
    _, raw, s = _homfly_raw(w, "reduced", lo, hi, workers, edge)
    out = raw.shifted(s)
    out.window = (lo, hi)
    out.truncated = _truncated((k[0] for k in out.dims), lo, hi)
    _check_parity(out, w.n_components())
    return out


def _check_parity(dims: TripleGradedDims, n_components: int):
    want = (n_components + 1) % 2
    for t in dims.dims:
        if any((x - want) % 2 for x in t):
            raise InvariantError(f"grading {t} has the wrong parity for {n_components} component(s)")


def _tower_prediction(base: Mapping[Triple, int], hi: int) -> Dict[Triple, int]:
    """dims of base (x) Q[x], x in degree (2, 0, 0), generator in degree (1, 0, 0)."""
    out: Dict[Triple, int] = {}
    for (i, j, k), n in base.items():
        m = i + 1
        while m <= hi:
            out[(m, j, k)] = out.get((m, j, k), 0) + n
            m += 2
    return out


def _circle_prediction(base: Mapping[Triple, int]) -> Dict[Triple, int]:
    """dims of base (x) H*(S^1), the two classes shifted by (0, +-1, -1)."""
    out: Dict[Triple, int] = {}
    for (i, j, k), n in base.items():
        for dj in (1, -1):
            key = (i, j + dj, k - 1)
            out[key] = out.get(key, 0) + n
    return out


def middle_and_unreduced(
    w: Union[str, BraidWord],
    window: Optional[Tuple[int, int]] = None,
    pad: int = DEFAULT_PAD,
    workers: int = 1,
    check: bool = True,
) -> Tuple[TripleGradedDims, TripleGradedDims]:
    """Middle and unreduced HOMFLY homology inside a window.

    With ``check`` the relations H = H^ (x) Q[x] and H~ = H (x) H*(S^1) are
    verified in every degree the window determines completely.
    """
    w = as_braid(w)
    red = homfly_homology(w, pad=pad, workers=workers)
    if window is None:
        window = (red.window[0] - 1, red.window[1] + 1)
    lo, hi = window
    res = []
    for variant in ("middle", "unreduced"):
        _, raw, s = _homfly_raw(w, variant, lo, hi, workers)
        d = raw.shifted(s)
        d.window = (lo, hi)
        d.truncated = True  # towers never end inside a finite window
        res.append(d)
    middle, unred = res
    if check:
        top = min(hi, red.window[1] + 1)
        pred = _tower_prediction(red.dims, top)
        got = {k: v for k, v in middle.dims.items() if k[0] <= top}
        if pred != got:
            raise InvariantError(f"middle homology {got} is not Q[x] times reduced {pred}")
        pred2 = _circle_prediction({k: v for k, v in middle.dims.items() if k[0] <= hi})
        got2 = {k: v for k, v in unred.dims.items() if k[0] <= hi}
        if pred2 != got2:
            raise InvariantError("unreduced homology is not middle homology times H*(S^1)")
    return middle, unred


# ---------------------------------------------------------------------------
# sl(N) homology
# ---------------------------------------------------------------------------


class BigradedDims(TripleGradedDims):
    """Dimensions keyed by pairs, e.g. (gr_N, gr_v)."""


def sln_polynomial(w: Union[str, BraidWord], N: int, reduced: bool = True) -> Dict[int, int]:
    unred, red = homfly_polynomials(w)
    P = red if reduced else unred
    sp = laurent2_specialize(P, N)
    if isinstance(sp, tuple):
        raise InvariantError("specialized polynomial is not a Laurent polynomial")
    return sp


def sln_euler(dims: Mapping[Pair, int]) -> Dict[int, int]:
    out: Dict[int, int] = {}
    for (I, J), n in dims.items():
        out[I] = out.get(I, 0) + (-1 if J % 2 else 1) * n
    return {k: v for k, v in out.items() if v}


def _sln_engine(w: BraidWord, N: int, reduced: bool, edge: Optional[int]):
    D = close_braid(w)
    variant = "reduced_edge" if reduced else "unreduced"
    C = assemble(D, Potential.sl(N), variant, edge=edge)
    return TotalHomology(C, N)


def sln_homology(
    w: Union[str, BraidWord],
    N: int,
    reduced: bool = True,
    edge: Optional[int] = None,
    pad: int = DEFAULT_PAD,
    window: Optional[Tuple[int, int]] = None,
    check: bool = True,
) -> BigradedDims:
    """sl(N) homology in final (gr_N, gr_v) gradings.

    Raises :class:`EulerMismatch` when the window is complete and the Euler
    characteristic differs from the specialized HOMFLY polynomial.
    """
    if N < 1:
        raise ValueError("N must be at least 1")
    w = as_braid(w)
    target = sln_polynomial(w, N, reduced)
    if window is None:
        qs = list(target) or [0]
        window = (min(qs) - 2 * pad, max(qs) + 2 * pad)
    lo, hi = window
    shift = (N - 1) * w.writhe
    TH = _sln_engine(w, N, reduced, edge)
    raw = TH.vertical_homology(range(lo - shift, hi - shift + 1))
    dims = {(G + shift, v): n for (G, v), n in raw.items()}
    out = BigradedDims(dims, _truncated((k[0] for k in dims), lo, hi), (lo, hi))
    if check and not out.truncated and sln_euler(out.dims) != target:
        raise EulerMismatch(f"sl({N}) Euler characteristic {sln_euler(out.dims)} != {target}")
    return out


def stabilization(
    w: Union[str, BraidWord],
    N_max: int = DEFAULT_N_MAX,
    pad: int = DEFAULT_PAD,
    homfly: Optional[TripleGradedDims] = None,
) -> Tuple[Optional[int], Dict[int, bool]]:
    """Smallest N0 such that sl(N) homology equals the regraded HOMFLY
    homology for every N0 <= N <= N_max; None when N_max itself fails."""
    w = as_braid(w)
    if w.n_components() != 1:
        raise ValueError("stabilization is defined for knots")
    H = homfly if homfly is not None else homfly_homology(w, pad=pad)
    match: Dict[int, bool] = {}
    for N in range(1, N_max + 1):
        match[N] = sln_homology(w, N, pad=pad).dims == regrade(H, N)
    N0 = None
    for N in range(N_max, 0, -1):
        if not match[N]:
            break
        N0 = N
    return N0, match


# ---------------------------------------------------------------------------
# Braid graphs and the MOY state decomposition
# ---------------------------------------------------------------------------


def graph_homology(g: Union[str, BraidWord], q_min: int, q_max: int, workers: int = 1) -> BigradedDims:
    """Unreduced homology of a closed braid graph, keyed by (q, 2 gr_h)."""
    g = as_braid(g)
    if not g.is_graph():
        raise ValueError("braid graphs have singular crossings only")
    C = assemble(close_braid(g), None, "unreduced")
    eng = StateEngine(C, workers)
    raw = eng.positive_dims(range(q_min, q_max + 1))
    dims = {(q, j): n for (q, j, _), n in raw.dims.items()}
    return BigradedDims(dims, True, (q_min, q_max))


def graph_poincare(dims: Mapping[Pair, int]) -> Laurent2:
    """sum (-1)^(j/2) a^j q^i dim."""
    terms: Dict[Tuple[int, int], int] = {}
    for (i, j), n in dims.items():
        s = -1 if (j // 2) % 2 else 1
        terms[(j, i)] = terms.get((j, i), 0) + s * n
    return Laurent2(terms)


def graph_check(g: Union[str, BraidWord], q_max: int, workers: int = 1) -> Tuple[bool, Dict, Dict]:
    """Signed Poincare polynomial of the graph homology against
    (-aq)^(-b) times the MOY graph polynomial, as q-series up to ``q_max``."""
    from .moypoly import graph_homfly

    g = as_braid(g)
    P = graph_homfly(g).value * Laurent2Frac(Laurent2.monomial(-g.b, -g.b, (-1) ** g.b))
    q_min = P.min_q_exponent()
    dims = graph_homology(g, q_min, q_max, workers)
    mine = {k: v for k, v in graph_poincare(dims.dims).terms.items()}
    want = P.series_coefficients(q_max)
    return mine == want, mine, want


def state_decomposition_check(w: Union[str, BraidWord], q_min: int, q_max: int, workers: int = 1) -> Tuple[bool, Dict, Dict]:
    """Unreduced positive homology of a braid against the sum over MOY states
    of the graph homologies shifted by {mu, 0, -2 mu}."""
    from .diagram import moy_states

    w = as_braid(w)
    C = assemble(close_braid(w), None, "unreduced")
    lhs = StateEngine(C, workers).positive_dims(range(q_min, q_max + 1)).dims
    rhs: Dict[Triple, int] = {}
    for st in moy_states(w):
        mu = st.weight
        lo, hi = q_min - mu, q_max - mu
        gd = graph_homology(st.resolved, lo, hi, workers).dims
        for (q, j), n in gd.items():
            key = (q + mu, j, -2 * mu)
            rhs[key] = rhs.get(key, 0) + n
    return lhs == rhs, lhs, rhs


# ---------------------------------------------------------------------------
# Thinness and signature
# ---------------------------------------------------------------------------


@dataclass
class ThinVerdict:
    thin: bool
    sigma: Optional[int]
    histogram: Dict[int, int]

    def to_dict(self) -> dict:
        return {"thin": self.thin, "sigma": self.sigma, "delta_histogram": {str(k): v for k, v in sorted(self.histogram.items())}}


def delta_thinness(dims: Union[TripleGradedDims, Mapping[Triple, int]], sigma: Optional[int] = None) -> ThinVerdict:
    """Thin means a single delta value, equal to sigma when sigma is given."""
    d = dims.dims if isinstance(dims, TripleGradedDims) else dims
    hist: Dict[int, int] = {}
    for t, n in d.items():
        hist[delta_grading(t)] = hist.get(delta_grading(t), 0) + n
    thin = len(hist) == 1 and (sigma is None or sigma in hist)
    return ThinVerdict(thin, sigma, hist)


def seifert_matrix(w: Union[str, BraidWord]) -> List[List[int]]:
    """Seifert matrix of the braid-closure surface: one disk per strand, one
    twisted band per letter, one loop per pair of consecutive bands in a
    column.  Needs every column to carry at least one band."""
    w = as_braid(w)
    if not w.is_ordinary():
        raise ValueError("Seifert matrix needs ordinary crossings")
    bands: Dict[int, List[Tuple[int, int]]] = {}
    for t, x in enumerate(w.letters):
        bands.setdefault(letter_col(x), []).append((t, 1 if x > 0 else -1))
    if w.b > 1 and set(bands) != set(range(1, w.b)):
        raise ValueError("braid closure is split; every column needs a crossing")
    gens = []
    for c in sorted(bands):
        B = bands[c]
        for r in range(len(B) - 1):
            gens.append((c, B[r], B[r + 1]))
    n = len(gens)
    V = [[0] * n for _ in range(n)]
    for a, (c, (p, e), (p2, e2)) in enumerate(gens):
        if e == e2:
            V[a][a] = -e
        for b_, (d, (s, _), (s2, _)) in enumerate(gens):
            if d == c and s == p2:
                if e2 > 0:
                    V[a][b_] = 1
                else:
                    V[b_][a] = -1
            elif d == c + 1:
                if p < s < p2 < s2:
                    V[b_][a] = 1
                elif s < p < s2 < p2:
                    V[b_][a] = -1
    return V


def _inertia(M: Sequence[Sequence[Coeff]]) -> Tuple[int, int, int]:
    """(positive, negative, zero) counts of a symmetric rational matrix,
    by exact congruence diagonalization."""
    A = [[Fraction(x) for x in row] for row in M]
    n = len(A)
    pos = neg = 0
    active = list(range(n))
    while active:
        piv = next((r for r in active if A[r][r] != 0), None)
        if piv is None:
            pair = next(((r, c) for r in active for c in active if r != c and A[r][c] != 0), None)
            if pair is None:
                break
            r, c = pair
            # replace row/col r by r + c; then A[r][r] = 2 A[r][c] + A[c][c]
            for k in range(n):
                A[r][k] += A[c][k]
            for k in range(n):
                A[k][r] += A[k][c]
            if A[r][r] == 0:
                for k in range(n):
                    A[r][k] -= 2 * A[c][k]
                for k in range(n):
                    A[k][r] -= 2 * A[k][c]
            piv = r
        d = A[piv][piv]
        if d > 0:
            pos += 1
        else:
            neg += 1
        active.remove(piv)
        for r in active:
            f = A[r][piv] / d
            if f:
                for k in range(n):
                    A[r][k] -= f * A[piv][k]
        for r in active:
            A[r][piv] = A[piv][r] = Fraction(0)
    return pos, neg, n - pos - neg


def signature(w: Union[str, BraidWord]) -> int:
    """Knot signature, normalized so that positive knots have positive
    signature (the positive trefoil gives +2)."""
    w = as_braid(w)
    if w.n_components() != 1:
        raise ValueError("signature is computed for knots only")
    if w.b <= 1:
        return 0
    V = seifert_matrix(w)
    n = len(V)
    S = [[V[i][j] + V[j][i] for j in range(n)] for i in range(n)]
    pos, neg, _ = _inertia(S)
    return neg - pos


def determinant(w: Union[str, BraidWord]) -> int:
    """|det(V + V^T)|; 0 for split closures."""
    w = as_braid(w)
    if w.b <= 1:
        return 1
    try:
        V = seifert_matrix(w)
    except ValueError:
        return 0
    n = len(V)
    if n == 0:
        return 1
    S = SparseMatQ(n, n, {(i, j): V[i][j] + V[j][i] for i in range(n) for j in range(n) if V[i][j] + V[j][i]})
    return abs(_det(S, n))


def _det(S: SparseMatQ, n: int) -> int:
    A = [[Fraction(S.entries.get((i, j), 0)) for j in range(n)] for i in range(n)]
    d = Fraction(1)
    for c in range(n):
        p = next((r for r in range(c, n) if A[r][c]), None)
        if p is None:
            return 0
        if p != c:
            A[c], A[p] = A[p], A[c]
            d = -d
        d *= A[c][c]
        for r in range(c + 1, n):
            f = A[r][c] / A[c][c]
            if f:
                for k in range(c, n):
                    A[r][k] -= f * A[c][k]
    return int(d)


# ---------------------------------------------------------------------------
# Totally reduced homology
# ---------------------------------------------------------------------------


def _cols(mat: List[List[Fraction]]) -> List[Dict[int, Fraction]]:
    return [{r: x for r, x in enumerate(c) if x} for c in mat]


def _kernel(mat: List[List[Fraction]], n_src: int, n_tgt: int) -> List[Dict[int, Fraction]]:
    if n_tgt == 0 or not mat:
        return [{c: Fraction(1)} for c in range(n_src)]
    entries = {(r, c): x for c, col in enumerate(mat) for r, x in enumerate(col) if x}
    return rank_kernel_image(SparseMatQ(n_tgt, n_src, entries))["kernel"]


def _apply(mat: List[List[Fraction]], vec: Mapping[int, Fraction]) -> Dict[int, Fraction]:
    out: Dict[int, Fraction] = {}
    for c, x in vec.items():
        for r, y in enumerate(mat[c]):
            if y:
                out[r] = out.get(r, 0) + x * y
    return {k: v for k, v in out.items() if v}


class _SlnComplex:
    """(H(C, d_tot), d_v*) with the action of an edge variable, at raw
    gradings (G, v)."""

    def __init__(self, TH: TotalHomology, x_edge: int):
        self.TH = TH
        ring = TH.C.meta["ring"]
        self.x = ring.edge_poly(x_edge)
        self.vs = list(TH.F.v_values)

    def dim(self, G: int, v: int) -> int:
        if v not in self.vs:
            return 0
        return self.TH.homology(G, v).dim

    def dv(self, G: int, v: int) -> List[List[Fraction]]:
        if not self.dim(G, v) or not self.dim(G, v + 1):
            return [[] for _ in range(self.dim(G, v))]
        return self.TH.dv_star(G, v)

    def mult(self, G: int, v: int) -> List[List[Fraction]]:
        if not self.dim(G, v) or not self.dim(G + 2, v):
            return [[] for _ in range(self.dim(G, v))]
        return self.TH.multiplication(self.x, G, v)

    def homology_dim(self, G: int, v: int) -> int:
        z = len(_kernel(self.dv(G, v), self.dim(G, v), self.dim(G, v + 1)))
        b = column_rank(_cols(self.dv(G, v - 1))) if self.dim(G, v - 1) else 0
        return z - b

    def induced_rank(self, G: int, v: int) -> int:
        """Rank of multiplication on d_v* homology, (G, v) -> (G + 2, v)."""
        if not self.dim(G, v) or not self.dim(G + 2, v):
            return 0
        Z = _kernel(self.dv(G, v), self.dim(G, v), self.dim(G, v + 1))
        M = self.mult(G, v)
        B = _cols(self.dv(G + 2, v - 1)) if self.dim(G + 2, v - 1) else []
        return column_rank([_apply(M, z) for z in Z] + B) - column_rank(B)


@dataclass
class TotallyReduced:
    dims: BigradedDims
    les_predicted: Dict[Pair, int]
    les_ok: bool


def _cone_dims(S: _SlnComplex, Gp: int) -> Dict[int, int]:
    """Homology of the cone of multiplication at shifted q-grading Gp, keyed
    by K = 2 gr_v (odd)."""
    vs = S.vs
    Ks = range(2 * min(vs) - 1, 2 * max(vs) + 2, 2)

    def block(K):
        a = S.dim(Gp - 1, (K + 1) // 2)
        b = S.dim(Gp + 1, (K - 1) // 2)
        return a, b

    def D(K) -> List[Dict[int, Fraction]]:
        a, b = block(K)
        a2, _ = block(K + 2)
        va = (K + 1) // 2
        vb = (K - 1) // 2
        cols = []
        dvA = S.dv(Gp - 1, va) if a else []
        mA = S.mult(Gp - 1, va) if a else []
        for c in range(a):
            col: Dict[int, Fraction] = {}
            for r, x in enumerate(dvA[c]):
                if x:
                    col[r] = -x
            for r, x in enumerate(mA[c]):
                if x:
                    col[a2 + r] = col.get(a2 + r, 0) + x
            cols.append(col)
        dvB = S.dv(Gp + 1, vb) if b else []
        for c in range(b):
            cols.append({a2 + r: x for r, x in enumerate(dvB[c]) if x})
        return cols

    out = {}
    for K in Ks:
        n = sum(block(K))
        if not n:
            continue
        rk_out = column_rank(D(K))
        rk_in = column_rank(D(K - 2)) if sum(block(K - 2)) else 0
        h = n - rk_out - rk_in
        if h:
            out[K] = h
    return out


def totally_reduced(
    w: Union[str, BraidWord],
    i: int,
    j: int,
    N: int,
    pad: int = DEFAULT_PAD,
    window: Optional[Tuple[int, int]] = None,
) -> TotallyReduced:
    """Homology of the cone of X_j on the sl(N) complex reduced at edge i.

    Keys are (gr_N, 2 gr_v) after the (N-1)w shift.  The long exact sequence
    with the X_j action on sl(N) homology predicts every dimension; the
    prediction is returned and compared.
    """
    w = as_braid(w)
    D = close_braid(w)
    comps = D.link_components()
    if len(comps) != 2:
        raise ValueError("totally reduced homology needs a two-component link")
    ci = next(n for n, c in enumerate(comps) if i in c)
    cj = next(n for n, c in enumerate(comps) if j in c)
    if ci == cj:
        raise ValueError("edges i and j must lie on different components")
    TH = TotalHomology(assemble(D, Potential.sl(N), "reduced_edge", edge=i), N)
    S = _SlnComplex(TH, j)
    shift = (N - 1) * w.writhe
    if window is None:
        sp = sln_polynomial(w, N, True)
        qs = list(sp) or [0]
        window = (min(qs) - 2 * pad - 2, max(qs) + 2 * pad + 2)
    lo, hi = window
    dims: Dict[Pair, int] = {}
    pred: Dict[Pair, int] = {}
    for I in range(lo, hi + 1):
        Gp = I - shift
        for K, n in _cone_dims(S, Gp).items():
            dims[(I, K)] = n
        for K in range(2 * min(S.vs) - 1, 2 * max(S.vs) + 2, 2):
            vlo, vhi = (K - 1) // 2, (K + 1) // 2
            hb = S.homology_dim(Gp + 1, vlo)
            coker = hb - S.induced_rank(Gp - 1, vlo)
            ker = S.homology_dim(Gp - 1, vhi) - S.induced_rank(Gp - 1, vhi)
            if coker + ker:
                pred[(I, K)] = coker + ker
    out = BigradedDims(dims, _truncated((k[0] for k in dims), lo, hi), (lo, hi))
    return TotallyReduced(out, pred, pred == dims)


# ---------------------------------------------------------------------------
# Skein exact sequence
# ---------------------------------------------------------------------------


@dataclass
class SkeinReport:
    N: int
    crossing: int
    ranks: Dict[int, List[int]]
    dims: Dict[int, List[int]]
    closes: bool
    determinants: Tuple[int, int, int]

    @property
    def det_criterion(self) -> bool:
        dp, dm, d0 = self.determinants
        return dm + 2 * d0 == dp

    def to_dict(self) -> dict:
        return {
            "N": self.N,
            "crossing": self.crossing,
            "closes": self.closes,
            "determinants": {"plus": self.determinants[0], "minus": self.determinants[1], "zero": self.determinants[2]},
            "det_criterion": self.det_criterion,
            "sequences": {str(G): {"dims": self.dims[G], "ranks": self.ranks[G]} for G in sorted(self.dims)},
        }


def skein_triple(w: Union[str, BraidWord], t: int) -> Tuple[BraidWord, BraidWord, BraidWord]:
    """(L+, L-, L0) at letter ``t`` of ``w``."""
    w = as_braid(w)
    x = w.letters[t]
    if letter_kind(x) not in "+-":
        raise ValueError("skein triples need an ordinary crossing")
    c = letter_col(x)
    L = list(w.letters)
    plus = BraidWord(w.b, tuple(L[:t] + [c] + L[t + 1 :]))
    minus = BraidWord(w.b, tuple(L[:t] + [-c] + L[t + 1 :]))
    zero = BraidWord(w.b, tuple(L[:t] + L[t + 1 :]))
    return plus, minus, zero


def _find_crossing(plus: BraidWord, minus: BraidWord, zero: BraidWord) -> int:
    if not (plus.b == minus.b == zero.b) or len(plus.letters) != len(minus.letters) or len(zero.letters) != len(plus.letters) - 1:
        raise ValueError("inputs do not form a skein triple")
    diff = [t for t, (x, y) in enumerate(zip(plus.letters, minus.letters)) if x != y]
    if len(diff) != 1:
        raise ValueError("L+ and L- must differ at exactly one crossing")
    t = diff[0]
    x, y = plus.letters[t], minus.letters[t]
    if not (isinstance(x, int) and x > 0 and y == -x):
        raise ValueError("L+ must carry the positive crossing and L- the negative one")
    if skein_triple(plus, t)[2] != zero:
        raise ValueError("L0 is not the oriented resolution of the crossing")
    return t


def _edge_at(w: BraidWord, t: int, col: int) -> int:
    """Label of the edge at column ``col`` (1-based) just above letter ``t``."""
    cur = list(range(1, w.b + 1))
    nxt = w.b + 1
    for x in w.letters[:t]:
        c = letter_col(x) - 1
        cur[c], cur[c + 1] = nxt, nxt + 1
        nxt += 2
    return cur[col - 1]


def _close_sequence(ds: List[int]) -> Tuple[bool, List[int]]:
    """Ranks of the maps of an exact sequence 0 -> d_1 -> ... -> d_n -> 0,
    forced by exactness; ok when they are all feasible."""
    ranks = []
    prev = 0
    ok = True
    for n, d in enumerate(ds):
        r = d - prev
        nxt = ds[n + 1] if n + 1 < len(ds) else 0
        if r < 0 or r > nxt:
            ok = False
        ranks.append(r)
        prev = r
    return ok and prev == 0, ranks


def skein_triple_check(
    plus: Union[str, BraidWord],
    minus: Union[str, BraidWord],
    zero: Union[str, BraidWord],
    N: int,
    pad: int = DEFAULT_PAD,
) -> SkeinReport:
    """Rank bookkeeping of the long exact sequence of
    0 -> C(L+){-2,0,4} -> C(L-) -> C(L0, i, j){-1,0,1} -> 0
    in raw gradings, one sequence per q-grading of L-.
    """
    plus, minus, zero = as_braid(plus), as_braid(minus), as_braid(zero)
    t = _find_crossing(plus, minus, zero)
    if plus.n_components() != 1 or minus.n_components() != 1 or zero.n_components() != 2:
        raise ValueError("L+ and L- must be knots and L0 a two-component link")
    c = letter_col(plus.letters[t])
    ei = _edge_at(plus, t, c)
    ej = _edge_at(zero, t, c + 1)
    Sp = _SlnComplex(TotalHomology(assemble(close_braid(plus), Potential.sl(N), "reduced_edge", edge=ei), N), ei)
    Sm = _SlnComplex(TotalHomology(assemble(close_braid(minus), Potential.sl(N), "reduced_edge", edge=ei), N), ei)
    S0 = _SlnComplex(TotalHomology(assemble(close_braid(zero), Potential.sl(N), "reduced_edge", edge=ei), N), ej)

    def raw_window(w: BraidWord) -> Tuple[int, int]:
        sp = sln_polynomial(w, N, True)
        qs = list(sp) or [0]
        s = (N - 1) * w.writhe
        return min(qs) - s - 2 * pad, max(qs) - s + 2 * pad

    lo_m, hi_m = raw_window(minus)
    lo_p, hi_p = raw_window(plus)
    lo_0, hi_0 = raw_window(zero)
    lo = min(lo_m, lo_p - 2, lo_0 - 2) - 2
    hi = max(hi_m, hi_p - 2, hi_0 + 2) + 2
    vs = sorted(set(Sp.vs) | set(Sm.vs) | set(S0.vs))
    Ks = list(range(2 * min(vs) - 4, 2 * max(vs) + 8, 2))
    cone_cache: Dict[int, Dict[int, int]] = {}
    dims: Dict[int, List[int]] = {}
    ranks: Dict[int, List[int]] = {}
    ok_all = True
    for G in range(lo, hi + 1):
        if G + 1 not in cone_cache:
            cone_cache[G + 1] = _cone_dims(S0, G + 1)
        seq = []
        for K in Ks:
            a = Sp.homology_dim(G + 2, (K - 4) // 2) if (K - 4) // 2 in Sp.vs else 0
            b = Sm.homology_dim(G, K // 2) if K // 2 in Sm.vs else 0
            c0 = cone_cache[G + 1].get(K - 1, 0)
            seq += [a, b, c0]
        if not any(seq):
            continue
        ok, rk = _close_sequence(seq)
        dims[G] = seq
        ranks[G] = rk
        ok_all = ok_all and ok
    dets = (determinant(plus), determinant(minus), determinant(zero))
    return SkeinReport(N, t, ranks, dims, ok_all, dets)


# ---------------------------------------------------------------------------
# Spectral sequence pages in final gradings
# ---------------------------------------------------------------------------


@dataclass
class PageSummary:
    page: int
    dims: TripleGradedDims
    rank: int

    def total(self) -> int:
        return self.dims.total()


@dataclass
class SequenceResult:
    kind: str
    pages: List[PageSummary]
    converged: bool
    truncated: bool

    def final(self) -> PageSummary:
        return self.pages[-1]

    def to_dict(self) -> dict:
        return {
            "sequence": self.kind,
            "converged": self.converged,
            "window_truncated": self.truncated,
            "pages": [{"page": p.page, "rank": p.rank, "total": p.total(), "dims": p.dims.to_list()} for p in self.pages],
        }


def _merge_pages(per_Q: List[Tuple[List[PageData], Callable]]) -> List[PageSummary]:
    depth = max((len(ps) for ps, _ in per_Q), default=1)
    out = []
    for r in range(depth):
        dims: Dict[Triple, int] = {}
        rank = 0
        for ps, conv in per_Q:
            pg = ps[min(r, len(ps) - 1)]
            if r < len(ps):
                rank += sum(pg.ranks.values())
            for (p, g), n in pg.dims.items():
                key = conv(p, g)
                dims[key] = dims.get(key, 0) + n
        out.append(PageSummary(r, TripleGradedDims(dims), rank))
    return out


def spectral_pages(
    w: Union[str, BraidWord],
    seq: Union[int, str],
    pad: int = DEFAULT_PAD,
    workers: int = 1,
) -> SequenceResult:
    """Pages of E_k(N) (``seq`` = N >= 1) or E_k(-1) (``seq`` = -1 or
    "minus1"), with every generator labelled by its final triple grading."""
    w = as_braid(w)
    if seq == "minus1":
        seq = -1
    seq = int(seq)
    H = homfly_homology(w, pad=pad, workers=workers)
    s = global_shift(w, "reduced")
    raw = [(i - s[0], j - s[1], k - s[2]) for (i, j, k) in H.dims]
    D = close_braid(w)
    per_Q = []
    if seq >= 1:
        N = seq
        C = assemble(D, Potential.sl(N), "reduced_edge")
        eng = StateEngine(C, workers)
        Qs = sorted({q + N * j for (q, j, _) in raw}) or [0]
        rng = range(min(Qs) - 2 * pad, max(Qs) + 2 * pad + 1)
        for Q in rng:
            ps = spectral_sequence(filtered_complex_EN(eng, N, Q))

            def conv(p, g, Q=Q, N=N):
                h = -p
                v = g + h
                return (Q - 2 * N * h + s[0], 2 * h + s[1], 2 * v + s[2])

            per_Q.append((Q, ps, conv))
        kind = f"E({N})"
    elif seq == -1:
        C = assemble(D, None, "reduced_edge")
        F = FlatComplex(C)
        Qs = sorted({q - j for (q, j, _) in raw}) or [0]
        rng = range(min(Qs) - 2 * pad, max(Qs) + 2 * pad + 1)
        for Qp in rng:
            ps = spectral_sequence(filtered_complex_Em1(F, Qp))

            def conv(p, g, Qp=Qp):
                v = p
                h = g - p
                return (Qp + 2 * h + s[0], 2 * h + s[1], 2 * v + s[2])

            per_Q.append((Qp, ps, conv))
        kind = "E(-1)"
    else:
        raise ValueError("seq must be a positive N or -1")
    lo, hi = rng.start, rng.stop - 1
    truncated = any(ps[-1].total() for Q, ps, _ in per_Q if Q <= lo + 2 or Q >= hi - 2)
    pages = _merge_pages([(ps, conv) for _, ps, conv in per_Q])
    converged = all(ps[-1].converged for _, ps, _ in per_Q)
    return SequenceResult(kind, pages, converged, truncated)


def total_homology_minus1(pages: SequenceResult) -> Dict[Pair, int]:
    """Final page of E(-1) as (gr_+, gr'_-1) = ((j + k)/2, i - j) dims."""
    out: Dict[Pair, int] = {}
    for (i, j, k), n in pages.final().dims.dims.items():
        key = ((j + k) // 2, i - j)
        out[key] = out.get(key, 0) + n
    return out


# ---------------------------------------------------------------------------
# Page-one differentials for arbitrary potentials
# ---------------------------------------------------------------------------


Slice3 = Tuple[int, int, int]
Block = Dict[Tuple[Slice3, Slice3], List[List[Fraction]]]


def _potential_degrees(p: Potential) -> List[int]:
    return sorted({k for k, _ in p.coeffs})


def _combine(reps: Sequence[Mapping[int, MultiPoly]], coeffs: Mapping[int, Fraction]) -> Dict[int, MultiPoly]:
    out: Dict[int, MultiPoly] = {}
    for n, c in coeffs.items():
        for g, p in reps[n].items():
            term = p * c
            out[g] = out[g] + term if g in out else term
    return {g: p for g, p in out.items() if not p.is_zero()}


class PageOne:
    """E_1 = H(H+, d_v*) on fixed bases, with d_1(p) for any potential p.

    One state engine is shared by every potential: d_plus and d_v do not
    depend on p, so H+ and its representatives are fixed once.  Slices are
    raw triples (q, h, v); d_1(p) maps (q, h, v) to (q + 2(n - 1), h - 1, v)
    for each monomial x^n of p.
    """

    def __init__(self, w: Union[str, BraidWord], pad: int = 1, workers: int = 1):
        self.w = as_braid(w)
        self.D = close_braid(self.w)
        self.C0 = assemble(self.D, Potential.sl(1), "reduced_edge")
        self.engine = StateEngine(self.C0, workers)
        lo, hi = _window(homfly_polynomials(self.w)[1], pad)
        s = global_shift(self.w, "reduced")
        parity = (self.w.n_components() + 1) % 2
        self.qs = [i - s[0] for i in range(lo, hi + 1) if (i - parity) % 2 == 0]
        self.engine.precompute(self.qs)
        self._homology: Dict[Slice3, SliceHomology] = {}
        self._offsets: Dict[Tuple[int, int], Dict[Tuple[int, ...], int]] = {}
        self._dv: Dict[Tuple[int, int], Dict[int, List[Vec]]] = {}
        self._complexes: Dict[Potential, MFComplex] = {}
        for q in self.qs:
            for h in self.engine.h_values:
                self._block(q, h)
        self._sources = sorted(self._homology)

    def _block(self, q: int, h: int) -> Dict[Tuple[int, ...], int]:
        hit = self._offsets.get((q, h))
        if hit is not None:
            return hit
        blocks, maps, offset = vertical_complex(self.engine, q, h)
        self._offsets[(q, h)] = offset
        self._dv[(q, h)] = maps
        for v, basis in blocks.items():
            inc = maps.get(v - 1, [])
            out = maps.get(v, [{} for _ in basis])
            H = SliceHomology(len(basis), inc, out, len(blocks.get(v + 1, [])))
            if H.dim:
                self._homology[(q, h, v)] = H
        return offset

    @property
    def slices(self) -> List[Slice3]:
        return self._sources

    def dims(self) -> TripleGradedDims:
        s = global_shift(self.w, "reduced")
        return TripleGradedDims({(q, 2 * h, 2 * v): self._homology[(q, h, v)].dim for (q, h, v) in self._sources}).shifted(s)

    def _complex(self, p: Potential) -> MFComplex:
        C = self._complexes.get(p)
        if C is None:
            C = assemble(self.D, p, "reduced_edge")
            if C.d_plus != self.C0.d_plus or C.d_vert != self.C0.d_vert or C.labels != self.C0.labels:
                raise InvariantError("d_plus or d_v changed with the potential")
            self._complexes[p] = C
        return C

    def _split(self, q: int, h: int, v: int, vec: Mapping[int, Fraction]):
        """Per-state pieces of a vector on the vertical block at (q, h, v)."""
        eng = self.engine
        offset = self._block(q, h)
        for s, off in offset.items():
            if eng.states[s].v != v:
                continue
            part = {n - off: x for n, x in vec.items() if off <= n < off + eng.dim(s, q, h)}
            if part:
                yield s, part

    def d1(self, p) -> Block:
        """Matrices of d_1(p) between the fixed E_1 bases, as coordinate
        columns keyed by (source slice, target slice)."""
        p = as_potential(p)
        C = self._complex(p)
        eng = self.engine
        shifts = [2 * (n - 1) for n in _potential_degrees(p)]
        out: Block = {}
        for src in self.slices:
            q, h, v = src
            H = self._homology[src]
            cols: Dict[Slice3, List[List[Fraction]]] = {}
            images: List[Dict[Slice3, Vec]] = []
            for rep in H.reps:
                img: Dict[Slice3, Vec] = {}
                for s, part in self._split(q, h, v, rep):
                    y = _combine(eng.reps(s, q, h), part)
                    z = eng.project(s, eng._apply(C.d_minus, eng.lift(s, y)))
                    n_terms = sum(len(t.terms) for t in z.values())
                    used = 0
                    for dq in shifts:
                        T, TH = eng.slice(s, q + dq, h - 1)
                        vec = T.from_poly(z, strict=False)
                        used += sum(1 for g, t in z.items() for e in t.terms if (g, e) in T.index)
                        if not vec or not TH.dim:
                            continue
                        off = self._block(q + dq, h - 1)[s]
                        tgt = img.setdefault((q + dq, h - 1, v), {})
                        for r, x in enumerate(TH.coords(vec)):
                            if x:
                                tgt[off + r] = tgt.get(off + r, 0) + x
                    if used != n_terms:
                        raise InvariantError("d_minus image leaves the scanned slices")
                images.append(img)
            targets = sorted({t for img in images for t in img})
            for t in targets:
                TH = self._homology.get(t)
                vecs = [img.get(t, {}) for img in images]
                if TH is None:
                    if any(self._cycle_class_nonzero(t, x) for x in vecs):
                        raise InvariantError(f"nonzero class in empty slice {t}")
                    continue
                cols[t] = [TH.coords(x) for x in vecs]
            for t, mat in cols.items():
                if any(any(c) for c in mat):
                    out[(src, t)] = mat
        return out

    def _cycle_class_nonzero(self, t: Slice3, vec: Vec) -> bool:
        q, h, v = t
        maps = self._dv.get((q, h), {})
        inc = maps.get(v - 1, [])
        return bool(vec) and column_rank(list(inc) + [vec]) > column_rank(inc)


def _block_dims(P: PageOne, key: Slice3) -> int:
    H = P._homology.get(key)
    return H.dim if H else 0


def block_add(*terms: Tuple[Coeff, Block]) -> Block:
    out: Block = {}
    for c, B in terms:
        for k, mat in B.items():
            cur = out.setdefault(k, [[Fraction(0)] * len(col) for col in mat])
            for a, col in enumerate(mat):
                for b, x in enumerate(col):
                    cur[a][b] += c * x
    return {k: m for k, m in out.items() if any(any(col) for col in m)}


def block_compose(P: PageOne, second: Block, first: Block) -> Block:
    """second o first."""
    out: Block = {}
    for (a, b), M1 in first.items():
        for (b2, c), M2 in second.items():
            if b2 != b:
                continue
            n_c = _block_dims(P, c)
            cur = out.setdefault((a, c), [[Fraction(0)] * n_c for _ in M1])
            for col, v in enumerate(M1):
                for r, x in enumerate(v):
                    if x:
                        for r2, y in enumerate(M2[r]):
                            cur[col][r2] += x * y
    return {k: m for k, m in out.items() if any(any(col) for col in m)}


@dataclass
class D1Report:
    linear: Dict[str, bool]
    anticommute: Dict[str, bool]
    nonzero: Dict[str, int]

    @property
    def ok(self) -> bool:
        return all(self.linear.values()) and all(self.anticommute.values())


def d1_check(w: Union[str, BraidWord], degrees: Sequence[int] = (2, 3, 4), coeffs: Tuple[int, int] = (2, -3), pad: int = 1) -> D1Report:
    """Linearity and anticommutation of d_1 for the monomials x^n, n in degrees."""
    P = PageOne(w, pad=pad)
    mono = {n: P.d1(Potential.monomial(n)) for n in degrees}
    a, b = coeffs
    linear: Dict[str, bool] = {}
    anti: Dict[str, bool] = {}
    for n in degrees:
        for m in degrees:
            if m < n:
                continue
            if m > n:
                combo = P.d1(Potential.from_dict({n: a, m: b}))
                linear[f"x^{n},x^{m}"] = not block_add((1, combo), (-a, mono[n]), (-b, mono[m]))
            ac = block_add((1, block_compose(P, mono[n], mono[m])), (1, block_compose(P, mono[m], mono[n])))
            anti[f"x^{n},x^{m}"] = not ac
    nonzero = {f"x^{n}": sum(column_rank([{r: x for r, x in enumerate(c) if x} for c in M]) for M in mono[n].values()) for n in degrees}
    return D1Report(linear, anti, nonzero)


# ---------------------------------------------------------------------------
# Reports and corpus
# ---------------------------------------------------------------------------


CORPUS: Dict[str, str] = {
    "unknot": "b=1; w=",
    "3_1": "b=2; w=1 1 1",
    "4_1": "b=3; w=1 -2 1 -2",
    "5_1": "b=2; w=1 1 1 1 1",
    "5_2": "b=3; w=1 1 1 2 -1 2",
    "hopf": "b=2; w=1 1",
    "unlink2": "b=2; w=",
    "3_1#3_1": "b=3; w=1 1 1 2 2 2",
    "3_1#4_1": format_braid(connected_sum_words(parse_braid("b=2; w=1 1 1"), parse_braid("b=3; w=1 -2 1 -2"))),
}


def laurent_to_json(P: Laurent2Frac) -> dict:
    return {
        "terms": [[a, q, str(c)] for (a, q), c in sorted(P.numerator.terms.items())],
        "denom_power": P.denom_power,
    }


@dataclass
class InvariantReport:
    braid: str
    writhe: int
    strands: int
    components: int
    homfly: Laurent2Frac
    dims: TripleGradedDims
    euler_ok: bool
    signature: Optional[int] = None
    thin: Optional[ThinVerdict] = None
    sln: Dict[int, BigradedDims] = field(default_factory=dict)
    stabilization: Optional[int] = None
    pages: Dict[str, SequenceResult] = field(default_factory=dict)
    name: Optional[str] = None

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "braid": self.braid,
            "writhe": self.writhe,
            "strands": self.strands,
            "components": self.components,
            "homfly": laurent_to_json(self.homfly),
            "homfly_dims": self.dims.to_list(),
            "window": list(self.dims.window) if self.dims.window else None,
            "signature": self.signature,
            "thinness": None if self.thin is None else self.thin.to_dict(),
            "sln": {str(N): d.to_list() for N, d in sorted(self.sln.items())},
            "stabilization": self.stabilization,
            "pages": {k: v.to_dict() for k, v in sorted(self.pages.items())},
            "flags": {"window_truncated": self.dims.truncated, "euler_ok": self.euler_ok},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)


def invariant_report(
    w: Union[str, BraidWord],
    name: Optional[str] = None,
    sln: Sequence[int] = (),
    pad: int = DEFAULT_PAD,
    workers: int = 1,
) -> InvariantReport:
    w = as_braid(w)
    _, P = homfly_polynomials(w)
    dims = homfly_homology(w, pad=pad, workers=workers)
    knot = w.n_components() == 1
    sigma = signature(w) if knot and w.is_ordinary() else None
    rep = InvariantReport(
        braid=format_braid(w),
        writhe=w.writhe,
        strands=w.b,
        components=w.n_components(),
        homfly=P,
        dims=dims,
        euler_ok=euler_check(dims, P),
        signature=sigma,
        thin=delta_thinness(dims, sigma) if knot else None,
        name=name,
    )
    for N in sln:
        rep.sln[N] = sln_homology(w, N, pad=pad, check=False)
    return rep
