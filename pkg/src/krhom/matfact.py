"""Graded matrix factorizations and complexes of them.

A complex here is a free module over a polynomial ring with three
differentials: ``d_plus`` of degree (2, 2, 0), ``d_minus`` of degree
(2N, -2, 0) for ``p = x^(N+1)`` and ``d_vert`` of degree (0, 0, 2), in the
(i, j, k) = (q, 2 gr_h, 2 gr_v) grading.  Maps are stored column-wise:
``d[src] = {tgt: coefficient}``.

Assembled complexes record, per generator, the local generator it uses in
each tensor factor.  Each local generator carries a horizontal bit (source or
target of ``d_plus``) and a vertical bit (source or target of ``d_vert``),
which the homology layer uses to split a complex by MOY state.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from .diagram import EdgeRingPresentation, TangleDiagram, edge_ring
from .exactalg import Coeff, ExactDivisionError, MultiPoly, poly_exact_divide

Map = List[Dict[int, MultiPoly]]


# ---------------------------------------------------------------------------
# Gradings and potentials
# ---------------------------------------------------------------------------


@dataclass(frozen=True, order=True)
class GradedShift:
    i: int = 0
    j: int = 0
    k: int = 0

    def __add__(self, other: "GradedShift") -> "GradedShift":
        return GradedShift(self.i + other.i, self.j + other.j, self.k + other.k)

    def __neg__(self) -> "GradedShift":
        return GradedShift(-self.i, -self.j, -self.k)

    @property
    def h(self) -> int:
        return self.j // 2

    @property
    def v(self) -> int:
        return self.k // 2

    @property
    def parity(self) -> int:
        """Parity of gr_h + gr_v, the sign-relevant degree."""
        return (self.h + self.v) & 1

    def as_tuple(self) -> Tuple[int, int, int]:
        return (self.i, self.j, self.k)


@dataclass(frozen=True)
class Potential:
    """One-variable polynomial p(x), stored as {power: coefficient}."""

    coeffs: Tuple[Tuple[int, Coeff], ...] = ()

    @classmethod
    def from_dict(cls, d: Mapping[int, Coeff]) -> "Potential":
        return cls(tuple(sorted((int(k), v) for k, v in d.items() if v != 0)))

    @classmethod
    def monomial(cls, n: int, c: Coeff = 1) -> "Potential":
        return cls.from_dict({n: c})

    @classmethod
    def sl(cls, N: int) -> "Potential":
        """p = x^(N+1)."""
        if N < 1:
            raise ValueError("N must be at least 1")
        return cls.monomial(N + 1)

    def as_dict(self) -> Dict[int, Coeff]:
        return dict(self.coeffs)

    def is_zero(self) -> bool:
        return not self.coeffs

    def __add__(self, other: "Potential") -> "Potential":
        d = self.as_dict()
        for k, v in other.coeffs:
            d[k] = d.get(k, 0) + v
        return Potential.from_dict(d)

    def scaled(self, c: Coeff) -> "Potential":
        return Potential.from_dict({k: v * c for k, v in self.coeffs})

    def derivative(self) -> "Potential":
        return Potential.from_dict({k - 1: k * v for k, v in self.coeffs if k > 0})

    def of(self, x: MultiPoly) -> MultiPoly:
        out = MultiPoly.zero(x.variables)
        for k, v in self.coeffs:
            out = out + (x ** k) * v
        return out

    @property
    def sl_rank(self) -> Optional[int]:
        """N when p = c * x^(N+1), else None."""
        if len(self.coeffs) == 1 and self.coeffs[0][0] >= 2:
            return self.coeffs[0][0] - 1
        return None

    def __str__(self) -> str:
        if not self.coeffs:
            return "0"
        return " + ".join(f"{v}*x^{k}" for k, v in reversed(self.coeffs))


def as_potential(p) -> Potential:
    if p is None or (isinstance(p, int) and p == 0):
        return Potential()
    if isinstance(p, Potential):
        return p
    if isinstance(p, Mapping):
        return Potential.from_dict(p)
    raise TypeError(f"cannot interpret {p!r} as a potential")


# ---------------------------------------------------------------------------
# Complexes
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FactorInfo:
    """One tensor factor: a crossing, a split/singular vertex or a U factor.

    ``rows[v] = (a, b)`` is the Koszul row of the factor restricted to
    vertical bit ``v``; ``d_plus`` multiplies by ``b`` and ``d_minus`` by
    ``a`` (before tensor signs).
    """

    kind: str
    edges: Tuple[int, ...]
    hbits: Tuple[int, ...]
    vbits: Tuple[int, ...]
    rows: Tuple[Tuple[MultiPoly, MultiPoly], ...] = ()


@dataclass
class MFComplex:
    variables: Tuple
    shifts: List[GradedShift]
    d_plus: Map
    d_minus: Map
    d_vert: Map
    potential: MultiPoly
    labels: List[Tuple[int, ...]] = field(default_factory=list)
    factors: Tuple[FactorInfo, ...] = ()
    p: Potential = field(default_factory=Potential)
    meta: Dict = field(default_factory=dict)

    def __post_init__(self):
        n = len(self.shifts)
        if not self.labels:
            self.labels = [(g,) for g in range(n)]
        for name in ("d_plus", "d_minus", "d_vert"):
            d = getattr(self, name)
            if len(d) != n:
                raise ValueError(f"{name} has {len(d)} columns for {n} generators")

    @property
    def rank(self) -> int:
        return len(self.shifts)

    def hbits(self, g: int) -> Tuple[int, ...]:
        return tuple(f.hbits[x] for f, x in zip(self.factors, self.labels[g]))

    def vbits(self, g: int) -> Tuple[int, ...]:
        return tuple(f.vbits[x] for f, x in zip(self.factors, self.labels[g]))

    def zero_poly(self) -> MultiPoly:
        return MultiPoly.zero(self.variables)

    def to_dict(self) -> dict:
        def dump(d: Map):
            return [[s, t, str(c)] for s, col in enumerate(d) for t, c in sorted(col.items())]

        return {
            "variables": list(self.variables),
            "potential": str(self.potential),
            "p": str(self.p),
            "generators": [
                {"label": list(lab), "shift": list(sh.as_tuple())} for lab, sh in zip(self.labels, self.shifts)
            ],
            "factors": [{"kind": f.kind, "edges": list(f.edges)} for f in self.factors],
            "d_plus": dump(self.d_plus),
            "d_minus": dump(self.d_minus),
            "d_vert": dump(self.d_vert),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def _empty_map(n: int) -> Map:
    return [dict() for _ in range(n)]


def unit_complex(variables: Sequence) -> MFComplex:
    """Rank-one factorization with zero differentials: the tensor unit."""
    variables = tuple(variables)
    return MFComplex(variables, [GradedShift()], _empty_map(1), _empty_map(1), _empty_map(1), MultiPoly.zero(variables), [()], ())


def _put(d: Dict[int, MultiPoly], t: int, c: MultiPoly):
    if c.is_zero():
        return
    old = d.get(t)
    if old is not None:
        c = old + c
        if c.is_zero():
            del d[t]
            return
    d[t] = c


def tensor(A: MFComplex, B: MFComplex, rule: str = "total") -> MFComplex:
    """Tensor product over the common ring.

    ``rule="total"``: B's differentials pick up (-1)^(gr_h + gr_v) of A's
    generator (all three differentials are odd).
    ``rule="split"``: d_plus/d_minus pick up (-1)^gr_h and d_vert picks up
    (-1)^gr_v, so d_vert commutes with d_plus and d_minus.
    """
    if A.variables != B.variables:
        raise ValueError("tensor factors must share a variable universe")
    if rule not in ("total", "split"):
        raise ValueError(f"unknown sign rule {rule!r}")
    nA, nB = A.rank, B.rank
    n = nA * nB
    shifts = [None] * n
    labels = [None] * n
    dp, dm, dv = _empty_map(n), _empty_map(n), _empty_map(n)
    for a in range(nA):
        sa = A.shifts[a]
        if rule == "total":
            s_pm = s_v = -1 if sa.parity else 1
        else:
            s_pm = -1 if sa.h & 1 else 1
            s_v = -1 if sa.v & 1 else 1
        for b in range(nB):
            g = a * nB + b
            shifts[g] = sa + B.shifts[b]
            labels[g] = A.labels[a] + B.labels[b]
            for dst, srcA, srcB, sgn in ((dp, A.d_plus, B.d_plus, s_pm), (dm, A.d_minus, B.d_minus, s_pm), (dv, A.d_vert, B.d_vert, s_v)):
                col = dst[g]
                for ta, c in srcA[a].items():
                    _put(col, ta * nB + b, c)
                for tb, c in srcB[b].items():
                    _put(col, a * nB + tb, c if sgn == 1 else -c)
    return MFComplex(
        A.variables,
        shifts,
        dp,
        dm,
        dv,
        A.potential + B.potential,
        labels,
        A.factors + B.factors,
        A.p if not A.p.is_zero() else B.p,
        {},
    )


def sign_vertical(C: MFComplex) -> MFComplex:
    """Multiply d_vert by (-1)^gr_h of the source generator."""
    dv = []
    for s, col in enumerate(C.d_vert):
        if C.shifts[s].h & 1:
            dv.append({t: -c for t, c in col.items()})
        else:
            dv.append(dict(col))
    return MFComplex(C.variables, list(C.shifts), C.d_plus, C.d_minus, dv, C.potential, list(C.labels), C.factors, C.p, dict(C.meta))


def shifted(C: MFComplex, s: GradedShift) -> MFComplex:
    return MFComplex(C.variables, [x + s for x in C.shifts], C.d_plus, C.d_minus, C.d_vert, C.potential, list(C.labels), C.factors, C.p, dict(C.meta))


def map_ring(C: MFComplex, images: Mapping, variables: Sequence) -> MFComplex:
    """Apply the ring map sending each variable of ``C`` to ``images[var]``."""
    variables = tuple(variables)
    images = {v: images[v].with_variables(variables) for v in C.variables}
    cache: Dict[MultiPoly, MultiPoly] = {}

    def f(p: MultiPoly) -> MultiPoly:
        r = cache.get(p)
        if r is None:
            r = ring_map(p, images, variables)
            cache[p] = r
        return r

    def fm(d: Map) -> Map:
        out = []
        for col in d:
            nc = {}
            for t, c in col.items():
                x = f(c)
                if not x.is_zero():
                    nc[t] = x
            out.append(nc)
        return out

    factors = tuple(
        FactorInfo(fi.kind, fi.edges, fi.hbits, fi.vbits, tuple((f(a), f(b)) for a, b in fi.rows)) for fi in C.factors
    )
    return MFComplex(variables, list(C.shifts), fm(C.d_plus), fm(C.d_minus), fm(C.d_vert), f(C.potential), list(C.labels), factors, C.p, dict(C.meta))


def ring_map(p: MultiPoly, images: Mapping, variables: Tuple) -> MultiPoly:
    """Evaluate ``p`` at polynomial images of its variables."""
    out: Dict[Tuple[int, ...], Coeff] = {}
    powers: Dict[Tuple[int, int], MultiPoly] = {}
    imgs = [images[v] for v in p.variables]
    one = MultiPoly.one(variables)
    for e, c in p.terms.items():
        term = one * c
        for idx, k in enumerate(e):
            if k:
                key = (idx, k)
                pw = powers.get(key)
                if pw is None:
                    pw = imgs[idx] ** k
                    powers[key] = pw
                term = term * pw
        for te, tc in term.terms.items():
            v = out.get(te, 0) + tc
            if v == 0:
                out.pop(te, None)
            else:
                out[te] = v
    return MultiPoly(variables, out)


# ---------------------------------------------------------------------------
# Local factors
# ---------------------------------------------------------------------------


def _local_ring(edges: Tuple[int, int, int, int]) -> EdgeRingPresentation:
    i, j, k, l = edges
    free = (i, j, k)
    elim = {l: MultiPoly.linear(free, {i: 1, j: 1, k: -1})}
    return EdgeRingPresentation(free, elim, tuple(sorted(edges)))


def _rank2(variables, a: MultiPoly, b: MultiPoly, s0: GradedShift, s1: GradedShift) -> Tuple[List[GradedShift], Map, Map]:
    dp = [{1: b} if not b.is_zero() else {}, {}]
    dm = [{}, {0: a} if not a.is_zero() else {}]
    return [s0, s1], dp, dm


def local_factor(kind: str, edges: Tuple[int, int, int, int], p=None, ring: Optional[EdgeRingPresentation] = None) -> MFComplex:
    """Local complex of a crossing or four-valent vertex.

    ``edges`` are (i, j, k, l): incoming left/right, outgoing left/right.
    ``kind`` is "+", "-", "s" (singular) or "r" (split, the oriented
    resolution viewed as a vertex).  Differentials have commuting d_vert;
    signs making everything anticommute are applied at assembly.
    """
    p = as_potential(p)
    if ring is None:
        ring = _local_ring(edges)
    V = ring.free
    # Quotients are taken in the crossing's own ring, where b is never zero,
    # then pushed into ``ring`` (an edge may close up onto its own crossing).
    loc = _local_ring(edges)
    Li, Lj, Lk, Ll = (loc.edge_poly(e) for e in edges)
    W_loc = p.of(Lk) + p.of(Ll) - p.of(Li) - p.of(Lj)
    try:
        a_or_loc = poly_exact_divide(W_loc, Lk - Li)
        a_sg_loc = poly_exact_divide(W_loc, -((Lk - Li) * (Lk - Lj)))
    except ExactDivisionError as exc:
        raise ExactDivisionError(f"local potential not divisible at crossing {edges}") from exc
    images = {e: ring.edge_poly(e) for e in loc.free}
    Xi, Xj, Xk, Xl = (ring.edge_poly(e) for e in edges)
    W = p.of(Xk) + p.of(Xl) - p.of(Xi) - p.of(Xj)
    b_or = Xk - Xi
    b_sg = -((Xk - Xi) * (Xk - Xj))
    a_or = ring_map(a_or_loc, images, V)
    a_sg = ring_map(a_sg_loc, images, V)
    one = MultiPoly.one(V)
    S = GradedShift
    if kind == "s":
        shifts, dp, dm = _rank2(V, a_sg, b_sg, S(1, -2, 0), S(-1, 0, 0))
        info = FactorInfo("s", tuple(edges), (0, 1), (0, 0), ((a_sg, b_sg),))
        return MFComplex(V, shifts, dp, dm, _empty_map(2), W, [(0,), (1,)], (info,), p)
    if kind == "r":
        shifts, dp, dm = _rank2(V, a_or, b_or, S(0, -2, 0), S(0, 0, 0))
        info = FactorInfo("r", tuple(edges), (0, 1), (0, 0), ((a_or, b_or),))
        return MFComplex(V, shifts, dp, dm, _empty_map(2), W, [(0,), (1,)], (info,), p)
    if kind == "+":
        # generators: 0 = B0, 1 = B1 (singular, vertical source), 2 = A0, 3 = A1
        shifts = [S(2, -2, -2), S(0, 0, -2), S(0, -2, 0), S(0, 0, 0)]
        rows = ((a_sg, b_sg), (a_or, b_or))
        dv = [{2: Xj - Xk}, {3: one}, {}, {}]
    elif kind == "-":
        # generators: 0 = A0, 1 = A1 (oriented, vertical source), 2 = B0, 3 = B1
        shifts = [S(0, -2, 0), S(0, 0, 0), S(0, -2, 2), S(-2, 0, 2)]
        rows = ((a_or, b_or), (a_sg, b_sg))
        dv = [{2: one}, {3: Xj - Xk}, {}, {}]
    else:
        raise ValueError(f"unknown crossing kind {kind!r}")
    dp = _empty_map(4)
    dm = _empty_map(4)
    for v, (a, b) in enumerate(rows):
        _put(dp[2 * v], 2 * v + 1, b)
        _put(dm[2 * v + 1], 2 * v, a)
    dv = [{t: c for t, c in col.items() if not c.is_zero()} for col in dv]
    info = FactorInfo(kind, tuple(edges), (0, 1, 0, 1), (0, 0, 1, 1), rows)
    return MFComplex(V, shifts, dp, dm, dv, W, [(0,), (1,), (2,), (3,)], (info,), p)


def u_factor(edge: int, p=None, ring: Optional[EdgeRingPresentation] = None) -> MFComplex:
    """Two copies of the ring at (0,-2,0) and (0,0,0); d_plus = 0 and
    d_minus = p'(X_edge)."""
    p = as_potential(p)
    if ring is None:
        ring = EdgeRingPresentation((edge,), {}, (edge,))
    V = ring.free
    X = ring.edge_poly(edge)
    a = p.derivative().of(X)
    zero = MultiPoly.zero(V)
    dm = [{}, {0: a} if not a.is_zero() else {}]
    info = FactorInfo("U", (edge,), (0, 1), (0, 0), ((a, zero),))
    return MFComplex(V, [GradedShift(0, -2, 0), GradedShift(0, 0, 0)], _empty_map(2), dm, _empty_map(2), zero, [(0,), (1,)], (info,), p)


# ---------------------------------------------------------------------------
# Verification
# ---------------------------------------------------------------------------


@dataclass
class MFReport:
    checks: Dict[str, bool]
    first_failure: Optional[Tuple[str, int, int]] = None

    @property
    def ok(self) -> bool:
        return all(self.checks.values())

    def to_dict(self) -> dict:
        return {"ok": self.ok, "checks": dict(self.checks), "first_failure": self.first_failure}


def compose(d2: Map, d1: Map, n: int) -> Map:
    """Column-wise d2 o d1."""
    out = _empty_map(n)
    for s in range(n):
        acc = out[s]
        for m, c1 in d1[s].items():
            for t, c2 in d2[m].items():
                _put(acc, t, c1 * c2)
    return out


def _add_maps(x: Map, y: Map) -> Map:
    out = [dict(c) for c in x]
    for s, col in enumerate(y):
        for t, c in col.items():
            _put(out[s], t, c)
    return out


def _first_nonzero(d: Map, expect: Optional[MultiPoly] = None) -> Optional[Tuple[int, int]]:
    for s, col in enumerate(d):
        for t, c in col.items():
            if expect is not None and t == s:
                if c != expect:
                    return (s, t)
            elif not c.is_zero():
                return (s, t)
        if expect is not None and not expect.is_zero() and col.get(s) is None:
            return (s, s)
    return None


def _degree_ok(C: MFComplex, d: Map, delta: Tuple[Optional[int], int, int]) -> bool:
    for s, col in enumerate(d):
        ss = C.shifts[s]
        for t, c in col.items():
            st = C.shifts[t]
            if st.j - ss.j != delta[1] or st.k - ss.k != delta[2]:
                return False
            if delta[0] is not None:
                if not c.is_homogeneous():
                    return False
                if 2 * c.total_degree() != ss.i + delta[0] - st.i:
                    return False
    return True


def verify_mf(C: MFComplex, vertical: str = "anticommute") -> MFReport:
    """Check d+^2 = d-^2 = 0, d+d- + d-d+ = w, d_v^2 = 0, the sign relation
    between d_v and d+/d-, and homogeneity of all three maps."""
    n = C.rank
    checks: Dict[str, bool] = {}
    first = None

    def record(name, loc):
        nonlocal first
        checks[name] = loc is None
        if loc is not None and first is None:
            first = (name, loc[0], loc[1])

    record("d_plus_squared", _first_nonzero(compose(C.d_plus, C.d_plus, n)))
    record("d_minus_squared", _first_nonzero(compose(C.d_minus, C.d_minus, n)))
    pm = _add_maps(compose(C.d_plus, C.d_minus, n), compose(C.d_minus, C.d_plus, n))
    record("potential", _first_nonzero(pm, C.potential))
    record("d_vert_squared", _first_nonzero(compose(C.d_vert, C.d_vert, n)))
    for name, d in (("d_vert_d_plus", C.d_plus), ("d_vert_d_minus", C.d_minus)):
        x = compose(C.d_vert, d, n)
        y = compose(d, C.d_vert, n)
        if vertical == "commute":
            y = [{t: -c for t, c in col.items()} for col in y]
        record(name, _first_nonzero(_add_maps(x, y)))
    N = C.p.sl_rank
    checks["degree_d_plus"] = _degree_ok(C, C.d_plus, (2, 2, 0))
    checks["degree_d_vert"] = _degree_ok(C, C.d_vert, (0, 0, 2))
    checks["degree_d_minus"] = _degree_ok(C, C.d_minus, (2 * N if N is not None else None, -2, 0))
    for name in ("degree_d_plus", "degree_d_vert", "degree_d_minus"):
        if not checks[name] and first is None:
            first = (name, -1, -1)
    return MFReport(checks, first)


# ---------------------------------------------------------------------------
# Koszul factorizations
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class KoszulMatrix:
    """Rows (a_i, b_i) with potential sum a_i b_i.

    ``relations`` lists (x, m) with m monic in x; polynomials are kept in
    normal form modulo them (x-degree below deg m).
    """

    rows: Tuple[Tuple[MultiPoly, MultiPoly], ...]
    relations: Tuple[Tuple[object, MultiPoly], ...] = ()

    @property
    def variables(self) -> Tuple:
        return self.rows[0][0].variables if self.rows else ()

    def normal_form(self, p: MultiPoly) -> MultiPoly:
        for x, m in self.relations:
            p = _remainder_monic(p, m, x)
        return p

    @property
    def potential(self) -> MultiPoly:
        total = MultiPoly.zero(self.variables)
        for a, b in self.rows:
            total = total + a * b
        return self.normal_form(total)

    def to_complex(self) -> MFComplex:
        V = self.variables
        C = unit_complex(V)
        for a, b in self.rows:
            s1 = 2 - 2 * b.total_degree() if b.is_homogeneous() and not b.is_zero() else 0
            shifts, dp, dm = _rank2(V, a, b, GradedShift(0, -2, 0), GradedShift(s1, 0, 0))
            C = tensor(C, MFComplex(V, shifts, dp, dm, _empty_map(2), a * b, [(0,), (1,)], (FactorInfo("K", (), (0, 1), (0, 0), ((a, b),)),)))
        if self.relations:
            C = MFComplex(
                C.variables,
                C.shifts,
                [{t: self.normal_form(c) for t, c in col.items()} for col in C.d_plus],
                [{t: self.normal_form(c) for t, c in col.items()} for col in C.d_minus],
                C.d_vert,
                self.normal_form(C.potential),
                C.labels,
                C.factors,
            )
        return C


def _remainder_monic(p: MultiPoly, m: MultiPoly, x) -> MultiPoly:
    """Remainder of ``p`` on division by ``m``, monic in ``x``."""
    idx = m.variables.index(x)
    d = max(e[idx] for e in m.terms)
    lead = [e for e in m.terms if e[idx] == d]
    if len(lead) != 1 or any(k for t, k in enumerate(lead[0]) if t != idx) or m.terms[lead[0]] != 1:
        raise ValueError(f"{m} is not monic in X{x}")
    p = p.with_variables(m.variables) if p.variables != m.variables else p
    rest = m - MultiPoly.var(m.variables, x) ** d
    terms = dict(p.terms)
    while True:
        high = [e for e in terms if e[idx] >= d]
        if not high:
            break
        e = max(high, key=lambda t: t[idx])
        c = terms.pop(e)
        lower = list(e)
        lower[idx] -= d
        mono = MultiPoly._raw(m.variables, {tuple(lower): c})
        for te, tc in (mono * rest).terms.items():
            v = terms.get(te, 0) - tc
            if v == 0:
                terms.pop(te, None)
            else:
                terms[te] = v
    return MultiPoly(m.variables, terms)


def row_operation(K: KoszulMatrix, i: int, j: int, c: MultiPoly) -> KoszulMatrix:
    """(a_i, b_i), (a_j, b_j) -> (a_i + c a_j, b_i), (a_j, b_j - c b_i)."""
    if i == j:
        raise ValueError("row operation needs two distinct rows")
    rows = list(K.rows)
    ai, bi = rows[i]
    aj, bj = rows[j]
    rows[i] = (K.normal_form(ai + c * aj), bi)
    rows[j] = (aj, K.normal_form(bj - c * bi))
    return KoszulMatrix(tuple(rows), K.relations)


def exclude_variable(K: KoszulMatrix, r: int, x) -> KoszulMatrix:
    """Drop row ``r`` and pass to the quotient by its ``b``, which must be
    monic in ``x``.  Linear relations become a substitution that removes
    ``x`` from the universe; higher-degree ones are kept as a relation."""
    a_r, b_r = K.rows[r]
    V = b_r.variables
    idx = V.index(x)
    d = max((e[idx] for e in b_r.terms), default=0)
    if d < 1:
        raise ValueError(f"b_{r} has no X{x} term")
    lead = [e for e in b_r.terms if e[idx] == d]
    if len(lead) != 1 or any(k for t, k in enumerate(lead[0]) if t != idx) or b_r.terms[lead[0]] != 1:
        raise ValueError(f"b_{r} is not monic in X{x}")
    others = [row for t, row in enumerate(K.rows) if t != r]
    if d == 1:
        expr = MultiPoly.var(V, x) - b_r
        newV = tuple(v for v in V if v != x)
        images = {v: (expr if v == x else MultiPoly.var(V, v)) for v in V}
        images = {v: _drop(p, x, newV) for v, p in images.items()}

        def sub(p):
            return ring_map(p, images, newV)

        rels = tuple((y, sub(m)) for y, m in K.relations)
        out = KoszulMatrix(tuple((sub(a), sub(b)) for a, b in others), rels)
        return KoszulMatrix(tuple((out.normal_form(a), out.normal_form(b)) for a, b in out.rows), rels)
    rels = K.relations + ((x, b_r),)
    out = KoszulMatrix(tuple(others), rels)
    return KoszulMatrix(tuple((out.normal_form(a), out.normal_form(b)) for a, b in others), rels)


def _drop(p: MultiPoly, x, newV: Tuple) -> MultiPoly:
    idx = p.variables.index(x)
    if any(e[idx] for e in p.terms):
        raise ValueError(f"X{x} still present")
    return MultiPoly(newV, {tuple(k for t, k in enumerate(e) if t != idx): c for e, c in p.terms.items()})


def twist(C: MFComplex, H: Map) -> MFComplex:
    """Replace d_minus by d_minus + d_plus H - H d_plus, where H maps the top
    horizontal degree to the bottom one of a complex spanning three
    consecutive horizontal degrees."""
    hs = sorted({s.h for s in C.shifts})
    if len(hs) > 3 or (hs and hs[-1] - hs[0] > 2):
        raise ValueError("twist needs a complex supported in three consecutive horizontal degrees")
    lo = hs[0]
    for s, col in enumerate(H):
        for t in col:
            if C.shifts[s].h != lo + 2 or C.shifts[t].h != lo:
                raise ValueError("H must map horizontal degree 2 to degree 0")
    n = C.rank
    dpH = compose(C.d_plus, H, n)
    Hdp = compose(H, C.d_plus, n)
    new = _add_maps(_add_maps(C.d_minus, dpH), [{t: -c for t, c in col.items()} for col in Hdp])
    return MFComplex(C.variables, list(C.shifts), C.d_plus, new, C.d_vert, C.potential, list(C.labels), C.factors, C.p, dict(C.meta))


# ---------------------------------------------------------------------------
# Assembly
# ---------------------------------------------------------------------------


VARIANTS = ("middle", "reduced_global", "reduced_edge", "unreduced")


def assemble(
    D: TangleDiagram,
    p=None,
    variant: str = "reduced_edge",
    edge: Optional[int] = None,
    marks: Optional[Sequence[int]] = None,
    convention: str = "A",
) -> MFComplex:
    """Global complex of a closed diagram.

    ``middle``: C_p(D) over R(D).
    ``reduced_edge``: the quotient by X_edge (default the smallest edge),
    times a U factor for every other connected component of the diagram.
    ``reduced_global``: p must be 0; realized as ``reduced_edge``, which is
    isomorphic to the globally reduced complex.
    ``unreduced``: one U factor per connected component, at ``marks``.
    """
    p = as_potential(p)
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}")
    if variant == "reduced_global" and not p.is_zero():
        raise ValueError("reduced_global requires p = 0")
    if convention not in ("A", "B"):
        raise ValueError("convention must be 'A' or 'B'")
    ring = edge_ring(D)
    comps = D.graph_components()
    if variant in ("reduced_edge", "reduced_global"):
        e0 = comps[0][0] if edge is None else edge
        if e0 not in D.edges:
            raise ValueError(f"marked edge {e0} is not in the diagram")
        u_edges = [c[0] for c in comps if e0 not in c]
    elif variant == "unreduced":
        if marks is None:
            u_edges = [c[0] for c in comps]
        else:
            marks = list(marks)
            for c in comps:
                if sum(1 for m in marks if m in c) != 1:
                    raise ValueError("unreduced assembly needs exactly one marked edge per component")
            u_edges = marks
    else:
        u_edges = []
    factors: List[MFComplex] = []
    for _, v in D.crossings:
        factors.append(local_factor(v.sign, v.edges4, p, ring))
    for e in u_edges:
        factors.append(u_factor(e, p, ring))
    V = ring.free
    if convention == "A":
        C = unit_complex(V)
        for F in factors:
            C = tensor(C, sign_vertical(F), "total")
    else:
        C = unit_complex(V)
        for F in factors:
            C = tensor(C, F, "split")
        C = sign_vertical(C)
    C.p = p
    if variant in ("reduced_edge", "reduced_global"):
        red = ring.reduced(e0)
        images = {v: red.edge_poly(v) for v in V}
        C = map_ring(C, images, red.free)
        C.meta["ring"] = red
        C.meta["marked_edge"] = e0
    else:
        C.meta["ring"] = ring
    C.p = p
    C.meta.update({"variant": variant, "u_edges": tuple(u_edges), "convention": convention})
    return C


def koszul_from_complex_rows(C: MFComplex) -> List[Tuple[MultiPoly, MultiPoly]]:
    """All (a, b) rows of every factor and vertical bit; for inspection."""
    return [row for f in C.factors for row in f.rows]
