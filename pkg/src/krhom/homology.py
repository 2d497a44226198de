"""Degree-wise exact homology of assembled complexes.

Every graded piece of a free module over a polynomial ring is a finite
dimensional Q-vector space with a monomial basis; maps between pieces are
exact rational matrices.  Three engines sit on top of that:

* flat slices of the whole complex (used for d_tot homology, the sequence
  filtered by the vertical grading, and braid graphs);
* :class:`StateEngine`, which splits (C, d_plus) by MOY state, excludes every
  Koszul row whose ``b`` is a nonzero linear form, and carries explicit
  projection and lift maps so that the induced maps d_v* and d_minus* can be
  evaluated on homology classes;
* :func:`spectral_sequence`, the pages of a finite filtered complex.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

from .exactalg import (
    Echelon,
    MultiPoly,
    SparseMatQ,
    matrix_rank,
    monomials_of_degree,
    poly_exact_divide,
    rank_kernel_image,
)
from .matfact import MFComplex, Map, ring_map

Vec = Dict[int, Fraction]
PolyVec = Dict[int, MultiPoly]
Triple = Tuple[int, int, int]


# ---------------------------------------------------------------------------
# Windows and results
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DegreeWindow:
    q_min: int
    q_max: int

    def __post_init__(self):
        if self.q_min > self.q_max:
            raise ValueError("empty degree window")

    def values(self, parity: Optional[int] = None) -> List[int]:
        return [q for q in range(self.q_min, self.q_max + 1) if parity is None or (q - parity) % 2 == 0]


@dataclass
class TripleGradedDims:
    dims: Dict[Tuple, int] = field(default_factory=dict)
    truncated: bool = False
    window: Optional[Tuple[int, int]] = None

    def __post_init__(self):
        self.dims = {k: v for k, v in self.dims.items() if v}

    def total(self) -> int:
        return sum(self.dims.values())

    def shifted(self, s: Sequence) -> "TripleGradedDims":
        out = {tuple(a + b for a, b in zip(k, s)): v for k, v in self.dims.items()}
        w = None if self.window is None else (self.window[0] + s[0], self.window[1] + s[0])
        return TripleGradedDims(out, self.truncated, w)

    def to_list(self) -> List[List]:
        return [list(k) + [v] for k, v in sorted(self.dims.items())]

    def __eq__(self, other) -> bool:
        if isinstance(other, TripleGradedDims):
            return self.dims == other.dims
        if isinstance(other, Mapping):
            return self.dims == {k: v for k, v in other.items() if v}
        return NotImplemented


# ---------------------------------------------------------------------------
# Slices and slice homology
# ---------------------------------------------------------------------------


class SliceSpace:
    """Basis of one graded piece: pairs (generator, exponent vector)."""

    __slots__ = ("items", "index", "nvars")

    def __init__(self, items: List[Tuple[int, Tuple[int, ...]]], nvars: int):
        self.items = items
        self.index = {it: n for n, it in enumerate(items)}
        self.nvars = nvars

    def __len__(self) -> int:
        return len(self.items)

    def to_poly(self, vec: Mapping[int, Fraction], variables: Tuple) -> PolyVec:
        terms: Dict[int, Dict] = {}
        for c, x in vec.items():
            if x:
                g, e = self.items[c]
                terms.setdefault(g, {})[e] = x
        return {g: MultiPoly(variables, t) for g, t in terms.items()}

    def from_poly(self, pv: Mapping[int, MultiPoly], strict: bool = True) -> Vec:
        out: Vec = {}
        for g, p in pv.items():
            for e, c in p.terms.items():
                idx = self.index.get((g, e))
                if idx is None:
                    if strict:
                        raise KeyError(f"term {(g, e)} outside the slice")
                    continue
                out[idx] = out.get(idx, 0) + c
        return {k: v for k, v in out.items() if v}


def make_space(gens: Iterable[int], qshift: Callable[[int], int], q: int, nvars: int) -> SliceSpace:
    items = []
    for g in gens:
        r = q - qshift(g)
        if r < 0 or r % 2:
            continue
        for e in monomials_of_degree(nvars, r // 2):
            items.append((g, e))
    return SliceSpace(items, nvars)


def map_columns(d: Map, S: SliceSpace, T: SliceSpace, entry: Callable[[MultiPoly], MultiPoly] = None, strict: bool = True) -> List[Vec]:
    """Matrix of ``d`` from slice S to slice T, as column vectors."""
    cols: List[Vec] = []
    for g, m in S.items:
        vec: Dict[int, Fraction] = {}
        for t, c in d[g].items():
            if entry is not None:
                c = entry(c)
            for e, x in c.terms.items():
                key = (t, tuple(a + b for a, b in zip(m, e)))
                r = T.index.get(key)
                if r is None:
                    if strict:
                        raise KeyError(f"image {key} outside the target slice")
                    continue
                vec[r] = vec.get(r, 0) + x
        cols.append({k: v for k, v in vec.items() if v})
    return cols


class SliceHomology:
    """ker(out) / im(in) on one slice, with representatives and coordinates.

    Representatives ``reps[f]`` satisfy ``reps[f][free[g]] = delta_fg``; the
    coordinates of a cycle are read off after reducing it by the image.
    """

    def __init__(self, dim_space: int, incoming: Sequence[Vec], outgoing: Sequence[Vec], n_target: int):
        self.dim_space = dim_space
        ech = Echelon()
        for v in incoming:
            if v:
                ech.add(v)
        self.image = ech
        pivots = set(ech.rows)
        nonpiv = [c for c in range(dim_space) if c not in pivots]
        entries = {}
        for col, c in enumerate(nonpiv):
            for r, x in outgoing[c].items():
                entries[(r, col)] = x
        res = rank_kernel_image(SparseMatQ(n_target, len(nonpiv), entries))
        self.free: List[int] = []
        self.reps: List[Vec] = []
        for k in res["kernel"]:
            f = next(col for col, x in k.items() if x == 1 and col not in set(res["pivots"]))
            self.free.append(nonpiv[f])
            self.reps.append({nonpiv[col]: x for col, x in k.items()})
        self._free_pos = {f: n for n, f in enumerate(self.free)}

    @property
    def dim(self) -> int:
        return len(self.reps)

    def coords(self, z: Mapping[int, Fraction]) -> List[Fraction]:
        if not self.free:
            return []
        v, scale = self.image.reduce(z)
        return [Fraction(v.get(f, 0), scale) for f in self.free]


def column_rank(cols: Sequence[Mapping]) -> int:
    """Rank of a list of sparse column vectors."""
    return matrix_rank(c for c in cols if c)


# ---------------------------------------------------------------------------
# State engine: positive homology and induced maps
# ---------------------------------------------------------------------------


@dataclass
class _Stage:
    factor: int
    pivot: object
    variables_before: Tuple
    variables_after: Tuple
    images_before: Dict  # ring var -> poly over variables_before
    images_after: Dict
    step: Dict  # variables_before -> polys over variables_after


class _State:
    def __init__(self, engine: "StateEngine", sigma: Tuple[int, ...], gens: List[int]):
        C = engine.C
        self.sigma = sigma
        self.gens = gens
        self.v = C.shifts[gens[0]].v
        R = C.variables
        images = {x: MultiPoly.var(R, x) for x in R}
        V = R
        stages: List[_Stage] = []
        for c, f in enumerate(C.factors):
            a, b = f.rows[sigma[c]] if len(f.rows) > 1 else f.rows[0]
            if b.is_zero():
                continue
            bb = ring_map(b, images, V)
            if bb.is_zero() or bb.total_degree() != 1 or not bb.is_homogeneous():
                continue
            coeffs = bb.linear_coefficients()
            units = [x for x, k in coeffs.items() if k in (1, -1)]
            x = max(units) if units else max(coeffs)
            k = coeffs[x]
            newV = tuple(y for y in V if y != x)
            expr = MultiPoly.linear(newV, {y: Fraction(-kk) / k for y, kk in coeffs.items() if y != x})
            step = {y: (expr if y == x else MultiPoly.var(newV, y)) for y in V}
            new_images = {r: ring_map(p, step, newV) for r, p in images.items()}
            stages.append(_Stage(c, x, V, newV, images, new_images, step))
            images, V = new_images, newV
        self.stages = stages
        self.variables = V
        self.images = images
        excl = [s.factor for s in stages]
        self.kept = [g for g in gens if all(C.factors[c].hbits[C.labels[g][c]] == 1 for c in excl)]
        self.kept_set = set(self.kept)
        self._cache: Dict[Tuple[int, MultiPoly], MultiPoly] = {}

    def sub(self, level: int, p: MultiPoly) -> MultiPoly:
        """Image of a ring element after the first ``level`` exclusions."""
        if level == 0:
            return p
        key = (level, p)
        r = self._cache.get(key)
        if r is None:
            st = self.stages[level - 1]
            r = ring_map(p, st.images_after, st.variables_after)
            self._cache[key] = r
        return r

    def vars_at(self, level: int, R: Tuple) -> Tuple:
        return R if level == 0 else self.stages[level - 1].variables_after


class StateEngine:
    """Positive homology of a closed-diagram complex, state by state."""

    def __init__(self, C: MFComplex, workers: int = 1):
        self.C = C
        self.workers = max(1, int(workers))
        by_state: Dict[Tuple[int, ...], List[int]] = {}
        for g in range(C.rank):
            by_state.setdefault(C.vbits(g), []).append(g)
        self.states: Dict[Tuple[int, ...], _State] = {s: _State(self, s, gs) for s, gs in sorted(by_state.items())}
        self._flip: Dict[int, List[int]] = {}
        self._slices: Dict = {}
        self._reps: Dict = {}
        self._dv: Dict = {}
        self._dm: Dict = {}
        self.h_values = sorted({s.h for s in C.shifts})

    # -- slices of K'' --------------------------------------------------------
    def _space(self, st: _State, q: int, h: int) -> SliceSpace:
        C = self.C
        gens = [g for g in st.kept if C.shifts[g].h == h]
        return make_space(gens, lambda g: C.shifts[g].i, q, len(st.variables))

    def _dplus_cols(self, st: _State, S: SliceSpace, T: SliceSpace) -> List[Vec]:
        L = len(st.stages)
        return map_columns(self.C.d_plus, S, T, entry=lambda c: st.sub(L, c))

    def slice(self, sigma, q: int, h: int) -> Tuple[SliceSpace, SliceHomology]:
        key = (sigma, q, h)
        hit = self._slices.get(key)
        if hit is not None:
            return hit
        st = self.states[sigma]
        S = self._space(st, q, h)
        P = self._space(st, q - 2, h - 1)
        T = self._space(st, q + 2, h + 1)
        inc = self._dplus_cols(st, P, S) if len(P) and len(S) else [{} for _ in range(len(P))]
        out = self._dplus_cols(st, S, T) if len(S) and len(T) else [{} for _ in range(len(S))]
        H = SliceHomology(len(S), inc, out, len(T))
        self._slices[key] = (S, H)
        return S, H

    def dim(self, sigma, q: int, h: int) -> int:
        return self.slice(sigma, q, h)[1].dim

    def reps(self, sigma, q: int, h: int) -> List[PolyVec]:
        key = (sigma, q, h)
        hit = self._reps.get(key)
        if hit is None:
            S, H = self.slice(sigma, q, h)
            st = self.states[sigma]
            hit = [S.to_poly(r, st.variables) for r in H.reps]
            self._reps[key] = hit
        return hit

    # -- lift and projection --------------------------------------------------
    def _partner(self, g: int, c: int) -> int:
        """Generator equal to ``g`` with factor ``c``'s horizontal bit cleared."""
        C = self.C
        lab = list(C.labels[g])
        f = C.factors[c]
        hb, vb = f.hbits[lab[c]], f.vbits[lab[c]]
        assert hb == 1
        lab[c] = next(x for x in range(len(f.hbits)) if f.hbits[x] == 0 and f.vbits[x] == vb)
        return self._label_index[tuple(lab)]

    @property
    def _label_index(self) -> Dict[Tuple[int, ...], int]:
        li = getattr(self, "_li", None)
        if li is None:
            li = {lab: g for g, lab in enumerate(self.C.labels)}
            self._li = li
        return li

    def lift(self, sigma, y: PolyVec) -> PolyVec:
        """Chain-level lift of a cycle of K'' to the full state complex."""
        st = self.states[sigma]
        C = self.C
        R = C.variables
        cur = dict(y)
        for level in range(len(st.stages), 0, -1):
            stage = st.stages[level - 1]
            Vb = stage.variables_before
            cur = {g: p.with_variables(Vb) for g, p in cur.items()}
            # d at level-1
            dy: PolyVec = {}
            for g, p in cur.items():
                for t, c in C.d_plus[g].items():
                    term = p * st.sub(level - 1, c)
                    if t in dy:
                        dy[t] = dy[t] + term
                    else:
                        dy[t] = term
            u: PolyVec = {}
            for t, val in dy.items():
                if val.is_zero():
                    continue
                proj = ring_map(val, stage.step, stage.variables_after).with_variables(Vb)
                diff = proj - val
                if diff.is_zero():
                    continue
                g0 = self._partner(t, stage.factor)
                entry = st.sub(level - 1, C.d_plus[g0][t])
                u[g0] = poly_exact_divide(diff, entry)
            for g, p in u.items():
                cur[g] = cur[g] + p if g in cur else p
        return {g: p.with_variables(R) for g, p in cur.items() if not p.is_zero()}

    def project(self, sigma, z: PolyVec) -> PolyVec:
        st = self.states[sigma]
        L = len(st.stages)
        out = {}
        for g, p in z.items():
            if g in st.kept_set:
                x = st.sub(L, p)
                if not x.is_zero():
                    out[g] = x
        return out

    # -- induced maps ---------------------------------------------------------
    def _apply(self, d: Map, z: PolyVec) -> PolyVec:
        out: PolyVec = {}
        for g, p in z.items():
            for t, c in d[g].items():
                term = p * c
                out[t] = out[t] + term if t in out else term
        return {g: p for g, p in out.items() if not p.is_zero()}

    def dv_star(self, sigma, q: int, h: int) -> Dict[Tuple[int, ...], List[List[Fraction]]]:
        """Matrices of d_v* from H+(sigma) at (q, h) to each target state,
        as lists of coordinate columns."""
        key = (sigma, q, h)
        hit = self._dv.get(key)
        if hit is not None:
            return hit
        C = self.C
        out: Dict[Tuple[int, ...], List[List[Fraction]]] = {}
        reps = self.reps(sigma, q, h)
        if reps:
            images = [self._apply(C.d_vert, self.lift(sigma, y)) for y in reps]
            targets = sorted({C.vbits(g) for z in images for g in z})
            for tau in targets:
                S, H = self.slice(tau, q, h)
                cols = []
                for z in images:
                    zt = {g: p for g, p in z.items() if C.vbits(g) == tau}
                    pz = self.project(tau, zt)
                    cols.append(H.coords(S.from_poly(pz)) if H.dim else [])
                if H.dim:
                    out[tau] = cols
        self._dv[key] = out
        return out

    def dminus_star(self, sigma, q: int, h: int, dq: int) -> List[List[Fraction]]:
        """d_minus* from H+(sigma) at (q, h) to (q + dq, h - 1)."""
        key = (sigma, q, h)
        hit = self._dm.get(key)
        if hit is not None:
            return hit
        C = self.C
        reps = self.reps(sigma, q, h)
        S, H = self.slice(sigma, q + dq, h - 1)
        cols = []
        for y in reps:
            z = self._apply(C.d_minus, self.lift(sigma, y))
            pz = self.project(sigma, z)
            cols.append(H.coords(S.from_poly(pz)) if H.dim else [])
        self._dm[key] = cols
        return cols

    # -- bulk ----------------------------------------------------------------
    def precompute(self, qs: Iterable[int], hs: Optional[Iterable[int]] = None):
        hs = list(self.h_values if hs is None else hs)
        keys = [(s, q, h) for s in self.states for q in qs for h in hs]
        if self.workers > 1:
            with ThreadPoolExecutor(self.workers) as ex:
                list(ex.map(lambda k: self.slice(*k), keys))
        else:
            for k in keys:
                self.slice(*k)

    def positive_dims(self, qs: Iterable[int]) -> TripleGradedDims:
        out: Dict[Triple, int] = {}
        qs = list(qs)
        self.precompute(qs)
        for s, st in self.states.items():
            for q in qs:
                for h in self.h_values:
                    d = self.dim(s, q, h)
                    if d:
                        key = (q, 2 * h, 2 * st.v)
                        out[key] = out.get(key, 0) + d
        return TripleGradedDims(out)


# ---------------------------------------------------------------------------
# Double homology
# ---------------------------------------------------------------------------


def _vertical_homology(dims_by_v: Dict[int, int], maps: Dict[int, List[Vec]]) -> Dict[int, int]:
    ranks = {v: column_rank(cols) for v, cols in maps.items()}
    return {v: d - ranks.get(v, 0) - ranks.get(v - 1, 0) for v, d in dims_by_v.items()}


def vertical_complex(engine: StateEngine, q: int, h: int):
    """Basis (state, index) per vertical degree and the d_v* matrices."""
    blocks: Dict[int, List[Tuple[Tuple[int, ...], int]]] = {}
    offset: Dict[Tuple[int, ...], int] = {}
    for s, st in engine.states.items():
        d = engine.dim(s, q, h)
        if d:
            offset[s] = len(blocks.get(st.v, []))
            blocks.setdefault(st.v, []).extend((s, n) for n in range(d))
    maps: Dict[int, List[Vec]] = {}
    for v, basis in blocks.items():
        if v + 1 not in blocks:
            continue
        cols: List[Vec] = []
        for s, n in basis:
            col: Vec = {}
            for tau, mat in engine.dv_star(s, q, h).items():
                if tau not in offset:
                    continue
                for r, x in enumerate(mat[n]):
                    if x:
                        col[offset[tau] + r] = x
            cols.append(col)
        maps[v] = cols
    return blocks, maps, offset


def double_homology(engine: StateEngine, qs: Iterable[int]) -> TripleGradedDims:
    """H(H(C, d_plus), d_v*) in raw gradings (q, 2 gr_h, 2 gr_v)."""
    qs = list(qs)
    engine.precompute(qs)
    out: Dict[Triple, int] = {}
    for q in qs:
        for h in engine.h_values:
            blocks, maps, _ = vertical_complex(engine, q, h)
            dims = _vertical_homology({v: len(b) for v, b in blocks.items()}, maps)
            for v, d in dims.items():
                if d:
                    out[(q, 2 * h, 2 * v)] = d
    return TripleGradedDims(out)


def positive_homology(C: MFComplex, window: DegreeWindow, workers: int = 1) -> Tuple[StateEngine, TripleGradedDims]:
    eng = StateEngine(C, workers)
    return eng, eng.positive_dims(window.values())


# ---------------------------------------------------------------------------
# Flat slices of the whole complex
# ---------------------------------------------------------------------------


class FlatComplex:
    """Graded pieces of an assembled complex at fixed (q, gr_h, gr_v)."""

    def __init__(self, C: MFComplex):
        self.C = C
        self.nvars = len(C.variables)
        self.by_hv: Dict[Tuple[int, int], List[int]] = {}
        for g, s in enumerate(C.shifts):
            self.by_hv.setdefault((s.h, s.v), []).append(g)
        self.h_values = sorted({s.h for s in C.shifts})
        self.v_values = sorted({s.v for s in C.shifts})
        self._spaces: Dict[Tuple[int, int, int], SliceSpace] = {}

    def space(self, q: int, h: int, v: int) -> SliceSpace:
        key = (q, h, v)
        S = self._spaces.get(key)
        if S is None:
            gens = self.by_hv.get((h, v), [])
            S = make_space(gens, lambda g: self.C.shifts[g].i, q, self.nvars)
            self._spaces[key] = S
        return S


class DirectSum:
    """Direct sum of slices, indexed by block key."""

    def __init__(self, blocks: List[Tuple[object, SliceSpace]]):
        self.blocks = [(k, S) for k, S in blocks if len(S)]
        self.offset = {}
        n = 0
        for k, S in self.blocks:
            self.offset[k] = n
            n += len(S)
        self.size = n
        self.space_of = dict(self.blocks)

    def __len__(self) -> int:
        return self.size

    def labels(self) -> List[object]:
        out = []
        for k, S in self.blocks:
            out.extend([k] * len(S))
        return out


def sum_map(d_list: Sequence[Tuple[Map, Callable]], A: DirectSum, B: DirectSum) -> List[Vec]:
    """Columns of a sum of maps between direct sums of flat slices.

    ``d_list`` holds (map, target_key_fn) pairs; target_key_fn sends a source
    block key to the block key its image lands in.
    """
    cols: List[Vec] = [dict() for _ in range(A.size)]
    for d, tk in d_list:
        for k, S in A.blocks:
            t = tk(k)
            T = B.space_of.get(t)
            if T is None:
                continue
            part = map_columns(d, S, T)
            o_s, o_t = A.offset[k], B.offset[t]
            for n, col in enumerate(part):
                acc = cols[o_s + n]
                for r, x in col.items():
                    nv = acc.get(o_t + r, 0) + x
                    if nv:
                        acc[o_t + r] = nv
                    else:
                        acc.pop(o_t + r, None)
    return cols


def to_polyvec(A: DirectSum, vec: Mapping[int, Fraction], variables: Tuple) -> PolyVec:
    out: PolyVec = {}
    for k, S in A.blocks:
        o = A.offset[k]
        part = {i - o: x for i, x in vec.items() if o <= i < o + len(S)}
        for g, p in S.to_poly(part, variables).items():
            out[g] = out[g] + p if g in out else p
    return out


def from_polyvec(A: DirectSum, pv: PolyVec, key_of_gen: Callable[[int, Tuple[int, ...]], object]) -> Vec:
    out: Vec = {}
    for g, p in pv.items():
        for e, c in p.terms.items():
            k = key_of_gen(g, e)
            S = A.space_of.get(k)
            if S is None:
                raise KeyError(f"term outside the direct sum: {(g, e)}")
            idx = A.offset[k] + S.index[(g, e)]
            out[idx] = out.get(idx, 0) + c
    return {k: v for k, v in out.items() if v}


class TotalHomology:
    """H(C, d_plus + d_minus) for p = x^(N+1), sliced by (gr_N, gr_v), and
    the induced d_v*.  Also supports multiplication by an edge variable."""

    def __init__(self, C: MFComplex, N: int):
        if C.p.sl_rank != N:
            raise ValueError("complex potential must be x^(N+1)")
        self.C = C
        self.N = N
        self.F = FlatComplex(C)
        self._sums: Dict[Tuple[int, int], DirectSum] = {}
        self._hom: Dict[Tuple[int, int], SliceHomology] = {}

    def grN(self, q: int, h: int) -> int:
        return q + (self.N - 1) * h

    def sum_space(self, G: int, v: int) -> DirectSum:
        key = (G, v)
        A = self._sums.get(key)
        if A is None:
            blocks = []
            for h in self.F.h_values:
                q = G - (self.N - 1) * h
                blocks.append(((q, h, v), self.F.space(q, h, v)))
            A = DirectSum(blocks)
            self._sums[key] = A
        return A

    def _dtot(self, A: DirectSum, B: DirectSum) -> List[Vec]:
        N = self.N
        return sum_map(
            [
                (self.C.d_plus, lambda k: (k[0] + 2, k[1] + 1, k[2])),
                (self.C.d_minus, lambda k: (k[0] + 2 * N, k[1] - 1, k[2])),
            ],
            A,
            B,
        )

    def homology(self, G: int, v: int) -> SliceHomology:
        key = (G, v)
        H = self._hom.get(key)
        if H is None:
            step = self.N + 1
            A = self.sum_space(G, v)
            P = self.sum_space(G - step, v)
            T = self.sum_space(G + step, v)
            inc = self._dtot(P, A) if len(A) else [{} for _ in range(len(P))]
            out = self._dtot(A, T) if len(T) else [{} for _ in range(len(A))]
            H = SliceHomology(len(A), inc, out, len(T))
            self._hom[key] = H
        return H

    def _key_of(self, G: int, v: int):
        def f(g, e):
            s = self.C.shifts[g]
            return (s.i + 2 * sum(e), s.h, v)

        return f

    def induced(self, d: Map, G: int, v: int, G2: int, v2: int) -> List[List[Fraction]]:
        """Matrix of the map induced by ``d`` on homology, from (G, v) to (G2, v2)."""
        H = self.homology(G, v)
        A = self.sum_space(G, v)
        H2 = self.homology(G2, v2)
        B = self.sum_space(G2, v2)
        cols = []
        for r in H.reps:
            pv = to_polyvec(A, r, self.C.variables)
            img: PolyVec = {}
            for g, p in pv.items():
                for t, c in d[g].items():
                    term = p * c
                    img[t] = img[t] + term if t in img else term
            img = {g: p for g, p in img.items() if not p.is_zero()}
            cols.append(H2.coords(from_polyvec(B, img, self._key_of(G2, v2))) if H2.dim else [])
        return cols

    def dv_star(self, G: int, v: int) -> List[List[Fraction]]:
        return self.induced(self.C.d_vert, G, v, G, v + 1)

    def multiplication(self, x: MultiPoly, G: int, v: int) -> List[List[Fraction]]:
        """Induced action of multiplication by ``x`` (homogeneous of q-degree 2)."""
        n = self.C.rank
        d = [{g: x} for g in range(n)]
        return self.induced(d, G, v, G + 2 * x.total_degree(), v)

    def vertical_homology(self, Gs: Iterable[int]) -> Dict[Tuple[int, int], int]:
        out: Dict[Tuple[int, int], int] = {}
        vs = self.F.v_values
        for G in Gs:
            dims = {v: self.homology(G, v).dim for v in vs}
            maps = {}
            for v in vs:
                if dims.get(v) and dims.get(v + 1):
                    maps[v] = [_coords_to_vec(c) for c in self.dv_star(G, v)]
            for v, d in _vertical_homology(dims, maps).items():
                if d:
                    out[(G, v)] = d
        return out


def _coords_to_vec(c: Sequence[Fraction]) -> Vec:
    return {n: x for n, x in enumerate(c) if x}


def total_homology_grN(C: MFComplex, N: int, G_values: Iterable[int]) -> Dict[Tuple[int, int], int]:
    """H(H(C, d_tot), d_v*) at raw (gr_N, gr_v)."""
    return TotalHomology(C, N).vertical_homology(G_values)


# ---------------------------------------------------------------------------
# Spectral sequences of filtered complexes
# ---------------------------------------------------------------------------


@dataclass
class FilteredComplex:
    """Finite complex C^g with D: C^g -> C^(g+1) and a filtration degree per
    basis vector; D never lowers the filtration."""

    filt: Dict[int, List[int]]
    D: Dict[int, List[Vec]]
    labels: Dict[int, List[object]] = field(default_factory=dict)

    def check(self):
        for g, cols in self.D.items():
            tgt = self.filt.get(g + 1, [])
            for s, col in enumerate(cols):
                for r in col:
                    if tgt[r] < self.filt[g][s]:
                        raise ValueError("differential lowers the filtration")


@dataclass
class PageData:
    page: int
    dims: Dict[Tuple[int, int], int]
    ranks: Dict[Tuple[int, int], int]
    converged: bool = False

    def total(self) -> int:
        return sum(self.dims.values())


def _z_space(fc: FilteredComplex, g: int, p: int, r: int) -> List[Vec]:
    """Basis of Z_r^p(g) = {x in F^p C^g : D x in F^(p+r)}, with Z_(-1)^p = F^p."""
    filt = fc.filt.get(g, [])
    cols = [c for c, f in enumerate(filt) if f >= p]
    if not cols:
        return []
    if r < 0:
        return [{c: Fraction(1)} for c in cols]
    D = fc.D.get(g)
    tfilt = fc.filt.get(g + 1, [])
    if not D:
        return [{c: Fraction(1)} for c in cols]
    entries = {}
    rows_used = {}
    for n, c in enumerate(cols):
        for row, x in D[c].items():
            if tfilt[row] < p + r:
                ri = rows_used.setdefault(row, len(rows_used))
                entries[(ri, n)] = x
    res = rank_kernel_image(SparseMatQ(len(rows_used), len(cols), entries))
    return [{cols[n]: x for n, x in k.items()} for k in res["kernel"]]


def _apply_cols(D: List[Vec], vec: Vec) -> Vec:
    out: Dict[int, Fraction] = {}
    for c, x in vec.items():
        for r, y in D[c].items():
            out[r] = out.get(r, 0) + x * y
    return {k: v for k, v in out.items() if v}


def spectral_sequence(fc: FilteredComplex, max_page: Optional[int] = None) -> List[PageData]:
    """Pages E_r, r = 0, 1, ..., of the filtration spectral sequence.

    E_r^p = Z_r^p / (Z_(r-1)^(p+1) + D Z_(r-1)^(p-r+1)) and
    rank d_r^p = dim Z_r^p - dim (Z_(r+1)^p + Z_(r-1)^(p+1)).
    Keys are (filtration p, degree g).
    """
    all_f = [f for fl in fc.filt.values() for f in fl]
    if not all_f:
        return [PageData(0, {}, {}, True)]
    pmin, pmax = min(all_f), max(all_f)
    last = pmax - pmin + 1
    if max_page is not None:
        last = min(last, max_page)
    degrees = sorted(fc.filt)
    zcache: Dict[Tuple[int, int, int], List[Vec]] = {}

    def Z(g, p, r):
        key = (g, p, r)
        if key not in zcache:
            zcache[key] = _z_space(fc, g, p, r)
        return zcache[key]

    pages: List[PageData] = []
    for r in range(0, last + 1):
        dims: Dict[Tuple[int, int], int] = {}
        ranks: Dict[Tuple[int, int], int] = {}
        for g in degrees:
            for p in range(pmin, pmax + 1):
                z = Z(g, p, r)
                if not z:
                    continue
                denom = list(Z(g, p + 1, r - 1))
                if g - 1 in fc.D and fc.D[g - 1]:
                    denom += [_apply_cols(fc.D[g - 1], x) for x in Z(g - 1, p - r + 1, r - 1)]
                d = len(z) - column_rank(denom)
                if d:
                    dims[(p, g)] = d
                    kr = column_rank(list(Z(g, p, r + 1)) + list(Z(g, p + 1, r - 1)))
                    rk = len(z) - kr
                    if rk:
                        ranks[(p, g)] = rk
        pages.append(PageData(r, dims, ranks))
    for n, pg in enumerate(pages):
        pg.converged = all(not x.ranks for x in pages[n:])
    return pages


# ---------------------------------------------------------------------------
# The two filtered complexes
# ---------------------------------------------------------------------------


def filtered_complex_EN(engine: StateEngine, N: int, Q: int) -> FilteredComplex:
    """(H+, d_v* + d_minus*) at fixed gr'_N = q + 2N gr_h, for p = x^(N+1).

    Degree g = gr_v - gr_h; filtration -gr_h.  E_1 is the HOMFLY homology.
    """
    if engine.C.p.sl_rank != N:
        raise ValueError("complex potential must be x^(N+1)")
    blocks: Dict[int, List[Tuple]] = {}
    where: Dict[Tuple, Tuple[int, int]] = {}
    for h in engine.h_values:
        q = Q - 2 * N * h
        for s, st in engine.states.items():
            d = engine.dim(s, q, h)
            if not d:
                continue
            g = st.v - h
            lst = blocks.setdefault(g, [])
            where[(s, q, h)] = (g, sum(engine.dim(*k) for k in lst))
            lst.append((s, q, h))
    filt: Dict[int, List[int]] = {}
    labels: Dict[int, List[object]] = {}
    for g, lst in blocks.items():
        filt[g] = [-k[2] for k in lst for _ in range(engine.dim(*k))]
        labels[g] = [k for k in lst for _ in range(engine.dim(*k))]
    D: Dict[int, List[Vec]] = {}
    for g, lst in blocks.items():
        cols: List[Vec] = []
        for (s, q, h) in lst:
            dv = engine.dv_star(s, q, h)
            dm = engine.dminus_star(s, q, h, 2 * N) if (s, q + 2 * N, h - 1) in where else None
            for n in range(engine.dim(s, q, h)):
                col: Vec = {}
                for tau, mat in dv.items():
                    tgt = where.get((tau, q, h))
                    if tgt is None:
                        continue
                    for r, x in enumerate(mat[n]):
                        if x:
                            col[tgt[1] + r] = col.get(tgt[1] + r, 0) + x
                if dm is not None:
                    tgt = where[(s, q + 2 * N, h - 1)]
                    for r, x in enumerate(dm[n]):
                        if x:
                            col[tgt[1] + r] = col.get(tgt[1] + r, 0) + x
                cols.append({k: v for k, v in col.items() if v})
        D[g] = cols
    fc = FilteredComplex(filt, D, labels)
    fc.check()
    return fc


def filtered_complex_Em1(F: FlatComplex, Qp: int) -> FilteredComplex:
    """(C, d_plus + d_v) at fixed gr'_(-1) = q - 2 gr_h; degree g = gr_v + gr_h,
    filtration gr_v."""
    C = F.C
    sums: Dict[int, DirectSum] = {}
    keys: Dict[int, List[Tuple[int, int, int]]] = {}
    for h in F.h_values:
        q = Qp + 2 * h
        for v in F.v_values:
            if (h, v) in F.by_hv:
                keys.setdefault(v + h, []).append((q, h, v))
    for g, ks in keys.items():
        sums[g] = DirectSum([(k, F.space(*k)) for k in ks])
    filt = {g: [k[2] for k in A.labels()] for g, A in sums.items() if len(A)}
    labels = {g: A.labels() for g, A in sums.items() if len(A)}
    D: Dict[int, List[Vec]] = {}
    for g in filt:
        A = sums[g]
        B = sums.get(g + 1)
        if B is None or not len(B):
            D[g] = [{} for _ in range(len(A))]
            continue
        D[g] = sum_map(
            [
                (C.d_plus, lambda k: (k[0] + 2, k[1] + 1, k[2])),
                (C.d_vert, lambda k: (k[0], k[1], k[2] + 1)),
            ],
            A,
            B,
        )
    fc = FilteredComplex(filt, D, labels)
    fc.check()
    return fc
