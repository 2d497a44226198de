"""Braid words, closed braid diagrams and braid graphs.

A closed braid on ``b`` strands with letters ``t = 1..n`` is turned into a
tangle diagram as follows.  Position ``p`` at level 0 carries edge ``p``.
Letter ``t`` at column ``c`` takes the current edges at positions ``c`` and
``c + 1`` as its incoming edges ``(i, j)`` (left, right) and creates outgoing
edges ``(k, l)`` (left, right).  Each closure arc gets one mark joining the
last edge at position ``p`` to edge ``p``.

For an ordinary crossing the strands run ``i -> l`` and ``j -> k``; the
oriented resolution joins ``i -> k`` and ``j -> l``.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple, Union

from .exactalg import MultiPoly

Letter = Union[int, Tuple[str, int]]

CROSSING_KINDS = ("+", "-", "s", "r")


class BraidParseError(ValueError):
    pass


def letter_col(x: Letter) -> int:
    return x[1] if isinstance(x, tuple) else abs(x)


def letter_kind(x: Letter) -> str:
    if isinstance(x, tuple):
        return x[0]
    return "+" if x > 0 else "-"


def make_letter(kind: str, col: int) -> Letter:
    if kind == "+":
        return col
    if kind == "-":
        return -col
    if kind in ("s", "r"):
        return (kind, col)
    raise ValueError(f"unknown letter kind {kind!r}")


@dataclass(frozen=True)
class BraidWord:
    """Braid word on ``b`` strands; letters are ``+i``, ``-i`` or ``('s', i)``."""

    b: int
    letters: Tuple[Letter, ...] = ()

    def __post_init__(self):
        if self.b < 0:
            raise ValueError("strand count must be non-negative")
        norm = []
        for x in self.letters:
            if isinstance(x, tuple):
                kind, col = x
                if kind not in ("s", "r"):
                    raise ValueError(f"bad tagged letter {x!r}")
                x = (kind, int(col))
            else:
                x = int(x)
                if x == 0:
                    raise ValueError("generator index 0 is not allowed")
            if not 1 <= letter_col(x) <= self.b - 1:
                raise ValueError(f"letter {x!r} out of range for b={self.b}")
            norm.append(x)
        object.__setattr__(self, "letters", tuple(norm))

    @property
    def writhe(self) -> int:
        return sum(1 if letter_kind(x) == "+" else -1 for x in self.letters if letter_kind(x) in "+-")

    @property
    def n_crossings(self) -> int:
        return len(self.letters)

    def is_ordinary(self) -> bool:
        return all(letter_kind(x) in "+-" for x in self.letters)

    def is_graph(self) -> bool:
        return all(letter_kind(x) == "s" for x in self.letters)

    def permutation(self) -> List[int]:
        """perm[p] = position at the bottom reached from top position p (0-based)."""
        pos = list(range(self.b))  # pos[p] = strand currently at position p
        for x in self.letters:
            c = letter_col(x) - 1
            pos[c], pos[c + 1] = pos[c + 1], pos[c]
        perm = [0] * self.b
        for p, s in enumerate(pos):
            perm[s] = p
        return perm

    def n_components(self) -> int:
        perm = self.permutation()
        seen = [False] * self.b
        count = 0
        for s in range(self.b):
            if not seen[s]:
                count += 1
                while not seen[s]:
                    seen[s] = True
                    s = perm[s]
        return count

    def mirror(self) -> "BraidWord":
        out = []
        for x in self.letters:
            k = letter_kind(x)
            out.append(-x if k in "+-" else x)
        return BraidWord(self.b, tuple(out))

    def shifted(self, offset: int, b: int) -> "BraidWord":
        out = []
        for x in self.letters:
            out.append(make_letter(letter_kind(x), letter_col(x) + offset))
        return BraidWord(b, tuple(out))

    def __str__(self) -> str:
        return format_braid(self)


def format_braid(w: BraidWord) -> str:
    toks = []
    for x in w.letters:
        if isinstance(x, tuple):
            toks.append(f"{x[0]}{x[1]}")
        else:
            toks.append(str(x))
    return f"b={w.b}; w={' '.join(toks)}".rstrip()


_BRAID_RE = re.compile(r"^\s*b\s*=\s*(\d+)\s*(?:;\s*(?:w\s*=\s*(.*?))?)?\s*;?\s*$")


def parse_braid(text: str) -> BraidWord:
    """Parse ``b=<int>; w=<tokens>``; tokens are signed ints or ``s<k>``."""
    m = _BRAID_RE.match(text)
    if not m:
        raise BraidParseError(f"cannot parse braid {text!r}; expected 'b=<int>; w=<letters>'")
    b = int(m.group(1))
    body = (m.group(2) or "").replace(",", " ").strip()
    letters: List[Letter] = []
    for tok in body.split():
        if tok[0] in "sr" and tok[1:].isdigit():
            letters.append((tok[0], int(tok[1:])))
        else:
            try:
                letters.append(int(tok))
            except ValueError:
                raise BraidParseError(f"bad braid letter {tok!r}") from None
    try:
        return BraidWord(b, tuple(letters))
    except ValueError as exc:
        raise BraidParseError(str(exc)) from None


# ---------------------------------------------------------------------------
# Tangle diagrams
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Vertex:
    """A mark (one in, one out) or a crossing (two in, two out)."""

    kind: str  # "mark" or "crossing"
    sign: Optional[str]  # for crossings: "+", "-", "s" (singular) or "r" (split)
    ins: Tuple[int, ...]
    outs: Tuple[int, ...]

    def __post_init__(self):
        if self.kind == "mark":
            if len(self.ins) != 1 or len(self.outs) != 1:
                raise ValueError("a mark has one incoming and one outgoing edge")
        elif self.kind == "crossing":
            if len(self.ins) != 2 or len(self.outs) != 2:
                raise ValueError("a crossing has two incoming and two outgoing edges")
            if self.sign not in CROSSING_KINDS:
                raise ValueError(f"bad crossing sign {self.sign!r}")
        else:
            raise ValueError(f"bad vertex kind {self.kind!r}")

    @property
    def edges4(self) -> Tuple[int, int, int, int]:
        """(i, j, k, l) for a crossing."""
        return (self.ins[0], self.ins[1], self.outs[0], self.outs[1])


@dataclass(frozen=True)
class TangleDiagram:
    edges: Tuple[int, ...]
    vertices: Tuple[Vertex, ...]
    strands: Optional[int] = None
    word: Optional[BraidWord] = None

    def __post_init__(self):
        heads: Dict[int, int] = {}
        tails: Dict[int, int] = {}
        eset = set(self.edges)
        for vi, v in enumerate(self.vertices):
            for e in v.ins:
                if e not in eset:
                    raise ValueError(f"vertex uses unknown edge {e}")
                if e in heads:
                    raise ValueError(f"edge {e} enters two vertices")
                heads[e] = vi
            for e in v.outs:
                if e not in eset:
                    raise ValueError(f"vertex uses unknown edge {e}")
                if e in tails:
                    raise ValueError(f"edge {e} leaves two vertices")
                tails[e] = vi

    # -- incidence ------------------------------------------------------------
    def head(self, e: int) -> Optional[int]:
        for vi, v in enumerate(self.vertices):
            if e in v.ins:
                return vi
        return None

    def tail(self, e: int) -> Optional[int]:
        for vi, v in enumerate(self.vertices):
            if e in v.outs:
                return vi
        return None

    def free_ends(self) -> Dict[int, int]:
        """Map free edge -> epsilon (+1 outgoing end, -1 incoming end).

        An edge with no head leaves the diagram (outgoing end); an edge with
        no tail enters it (incoming end).  An edge with neither is both.
        """
        heads = {e for v in self.vertices for e in v.ins}
        tails = {e for v in self.vertices for e in v.outs}
        out: Dict[int, int] = {}
        for e in self.edges:
            if e not in heads and e not in tails:
                raise ValueError(f"edge {e} has no endpoints; insert a mark first")
            if e not in heads:
                out[e] = 1
            elif e not in tails:
                out[e] = -1
        return out

    def is_closed(self) -> bool:
        return not self.free_ends()

    @property
    def crossings(self) -> List[Tuple[int, Vertex]]:
        return [(i, v) for i, v in enumerate(self.vertices) if v.kind == "crossing"]

    @property
    def marks(self) -> List[Tuple[int, Vertex]]:
        return [(i, v) for i, v in enumerate(self.vertices) if v.kind == "mark"]

    @property
    def writhe(self) -> int:
        return sum(1 if v.sign == "+" else -1 for _, v in self.crossings if v.sign in "+-")

    def graph_components(self) -> List[List[int]]:
        """Connected components of the underlying graph (lists of edges)."""
        parent = {e: e for e in self.edges}

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for v in self.vertices:
            es = list(v.ins) + list(v.outs)
            for e in es[1:]:
                ra, rb = find(es[0]), find(e)
                if ra != rb:
                    parent[ra] = rb
        comps: Dict[int, List[int]] = {}
        for e in self.edges:
            comps.setdefault(find(e), []).append(e)
        return sorted((sorted(c) for c in comps.values()), key=lambda c: c[0])

    def link_components(self) -> List[List[int]]:
        """Strand components through marks and ordinary crossings."""
        nxt: Dict[int, int] = {}
        for v in self.vertices:
            if v.kind == "mark":
                nxt[v.ins[0]] = v.outs[0]
            elif v.sign in "+-":
                i, j, k, l = v.edges4
                nxt[i] = l
                nxt[j] = k
            else:
                raise ValueError("link components need ordinary crossings only")
        seen = set()
        comps = []
        for e in self.edges:
            if e in seen:
                continue
            comp = []
            x = e
            while x is not None and x not in seen:
                seen.add(x)
                comp.append(x)
                x = nxt.get(x)
            comps.append(sorted(comp))
        return comps

    def component_of(self, e: int) -> List[int]:
        for c in self.link_components():
            if e in c:
                return c
        raise KeyError(e)

    def to_dict(self) -> dict:
        return {
            "edges": list(self.edges),
            "vertices": [
                {"kind": v.kind, "sign": v.sign, "in": list(v.ins), "out": list(v.outs)} for v in self.vertices
            ],
            "strands": self.strands,
            "word": None if self.word is None else format_braid(self.word),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    def relabeled(self, mapping: Dict[int, int]) -> "TangleDiagram":
        edges = tuple(sorted({mapping.get(e, e) for e in self.edges}))
        verts = tuple(
            Vertex(v.kind, v.sign, tuple(mapping.get(e, e) for e in v.ins), tuple(mapping.get(e, e) for e in v.outs))
            for v in self.vertices
        )
        return TangleDiagram(edges, verts, self.strands, self.word)


def close_braid(w: BraidWord) -> TangleDiagram:
    """Closed diagram of a braid word with one mark per closure arc."""
    cur = list(range(1, w.b + 1))
    nxt_label = w.b + 1
    verts: List[Vertex] = []
    for x in w.letters:
        c = letter_col(x) - 1
        i, j = cur[c], cur[c + 1]
        k, l = nxt_label, nxt_label + 1
        nxt_label += 2
        verts.append(Vertex("crossing", letter_kind(x), (i, j), (k, l)))
        cur[c], cur[c + 1] = k, l
    for p in range(w.b):
        verts.append(Vertex("mark", None, (cur[p],), (p + 1,)))
    edges = tuple(range(1, nxt_label))
    return TangleDiagram(edges, tuple(verts), w.b, w)


def single_crossing(kind: str) -> TangleDiagram:
    """Open diagram with one crossing on edges (1, 2) -> (3, 4)."""
    return TangleDiagram((1, 2, 3, 4), (Vertex("crossing", kind, (1, 2), (3, 4)),))


# -- surgeries ---------------------------------------------------------------


def disjoint_union(d1: TangleDiagram, d2: TangleDiagram) -> TangleDiagram:
    off = max(d1.edges, default=0)
    d2r = d2.relabeled({e: e + off for e in d2.edges})
    return TangleDiagram(tuple(d1.edges) + tuple(d2r.edges), d1.vertices + d2r.vertices)


def identify_ends(d: TangleDiagram, i: int, j: int) -> TangleDiagram:
    """Join the outgoing free end ``i`` to the incoming free end ``j``."""
    ends = d.free_ends()
    if i == j:
        raise ValueError("cannot identify an edge with itself")
    if ends.get(i) != 1 or ends.get(j) != -1:
        raise ValueError("identify_ends needs an outgoing end and an incoming end")
    out = d.relabeled({j: i})
    return TangleDiagram(tuple(e for e in out.edges), out.vertices)


def insert_mark(d: TangleDiagram, e: int) -> TangleDiagram:
    """Split edge ``e`` by a new mark; the new edge takes over e's head."""
    new = max(d.edges) + 1
    verts = []
    for v in d.vertices:
        if e in v.ins:
            v = Vertex(v.kind, v.sign, tuple(new if x == e else x for x in v.ins), v.outs)
        verts.append(v)
    verts.append(Vertex("mark", None, (e,), (new,)))
    return TangleDiagram(tuple(d.edges) + (new,), tuple(verts), d.strands, d.word)


def remove_mark(d: TangleDiagram, vertex_index: int) -> TangleDiagram:
    v = d.vertices[vertex_index]
    if v.kind != "mark":
        raise ValueError("not a mark")
    a, b = v.ins[0], v.outs[0]
    if a == b:
        raise ValueError("removing this mark would leave a bare circle")
    rest = tuple(x for k, x in enumerate(d.vertices) if k != vertex_index)
    tmp = TangleDiagram(tuple(e for e in d.edges), rest)
    out = tmp.relabeled({b: a})
    return TangleDiagram(out.edges, out.vertices, d.strands, d.word)


def mirror(d: TangleDiagram) -> TangleDiagram:
    flip = {"+": "-", "-": "+"}
    verts = tuple(Vertex(v.kind, flip.get(v.sign, v.sign), v.ins, v.outs) for v in d.vertices)
    return TangleDiagram(d.edges, verts, d.strands, None if d.word is None else d.word.mirror())


def connected_sum_words(w1: BraidWord, w2: BraidWord) -> BraidWord:
    """Braid for the connected sum along the last strand of ``w1`` and the
    first strand of ``w2``: ``b1 + b2 - 1`` strands."""
    b = w1.b + w2.b - 1
    return BraidWord(b, tuple(w1.letters) + w2.shifted(w1.b - 1, b).letters)


def connected_sum(d1: TangleDiagram, d2: TangleDiagram) -> TangleDiagram:
    if d1.word is None or d2.word is None:
        raise ValueError("connected_sum needs braid closures")
    return close_braid(connected_sum_words(d1.word, d2.word))


# ---------------------------------------------------------------------------
# Edge ring
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EdgeRingPresentation:
    """Free edge variables and linear expressions for the dependent ones.

    ``elimination`` maps every dependent edge (and, in a reduced
    presentation, the marked edge) to a linear MultiPoly over ``free``.
    """

    free: Tuple[int, ...]
    elimination: Dict[int, MultiPoly] = field(default_factory=dict)
    edges: Tuple[int, ...] = ()
    zeroed: Tuple[int, ...] = ()

    @property
    def variables(self) -> Tuple[int, ...]:
        return self.free

    def edge_poly(self, e: int) -> MultiPoly:
        if e in self.elimination:
            return self.elimination[e]
        return MultiPoly.var(self.free, e)

    def reduced(self, e: int) -> "EdgeRingPresentation":
        """Presentation of the quotient by ``X_e``."""
        target = self.edge_poly(e)
        coeffs = target.linear_coefficients()
        if not coeffs:
            raise ValueError(f"X_{e} is already zero")
        # pivot on the highest-numbered free variable, preferring unit coefficients
        units = [v for v, c in coeffs.items() if c in (1, -1)]
        pivot = max(units) if units else max(coeffs)
        cp = coeffs[pivot]
        rest = {v: Fraction(-c) / cp for v, c in coeffs.items() if v != pivot}
        new_free = tuple(v for v in self.free if v != pivot)
        expr = MultiPoly.linear(new_free, rest)
        elim = {}
        for d in self.edges:
            p = self.edge_poly(d).substitute({pivot: expr.with_variables(self.free)})
            elim_p = p.with_variables(self.free)
            # drop the pivot from the universe
            elim[d] = MultiPoly(new_free, {tuple(x for v, x in zip(self.free, ex) if v != pivot): c for ex, c in elim_p.terms.items()})
        elim = {d: p for d, p in elim.items() if d not in new_free}
        return EdgeRingPresentation(new_free, elim, self.edges, self.zeroed + (e,))

    def relators_vanish(self, d: TangleDiagram) -> bool:
        for v in d.vertices:
            s = MultiPoly.zero(self.free)
            for e in v.outs:
                s = s + self.edge_poly(e)
            for e in v.ins:
                s = s - self.edge_poly(e)
            if not s.is_zero():
                return False
        for z in self.zeroed:
            if not self.edge_poly(z).is_zero():
                return False
        return True


def edge_ring(d: TangleDiagram) -> EdgeRingPresentation:
    """Eliminate edge variables using the vertex relators.

    Each relator is reduced against the earlier ones and pivots on its
    highest-numbered edge, so presentations are deterministic.
    """
    edges = tuple(sorted(d.edges))
    rows: Dict[int, Dict[int, Fraction]] = {}  # pivot edge -> relator
    for v in d.vertices:
        rel: Dict[int, Fraction] = {}
        for e in v.outs:
            rel[e] = rel.get(e, 0) + 1
        for e in v.ins:
            rel[e] = rel.get(e, 0) - 1
        rel = {e: Fraction(c) for e, c in rel.items() if c != 0}
        changed = True
        while changed and rel:
            changed = False
            for p in sorted(rel, reverse=True):
                if p in rows:
                    f = rel[p] / rows[p][p]
                    for e, c in rows[p].items():
                        nv = rel.get(e, 0) - f * c
                        if nv:
                            rel[e] = nv
                        else:
                            rel.pop(e, None)
                    changed = True
                    break
        if rel:
            rows[max(rel)] = rel
    # back substitution: express pivots in terms of free edges
    free = tuple(e for e in edges if e not in rows)
    solved: Dict[int, Dict[int, Fraction]] = {}
    for p in sorted(rows):
        rel = rows[p]
        cp = rel[p]
        expr: Dict[int, Fraction] = {}
        for e, c in rel.items():
            if e == p:
                continue
            if e in solved:
                for f, cf in solved[e].items():
                    expr[f] = expr.get(f, 0) - c * cf / cp
            else:
                expr[e] = expr.get(e, 0) - c / cp
        solved[p] = {e: c for e, c in expr.items() if c != 0}
    # pivots are eliminated in increasing order, so later pivots may refer to
    # earlier ones only; resolve fully.
    for p in sorted(solved):
        expr = solved[p]
        while any(e in solved for e in expr):
            new: Dict[int, Fraction] = {}
            for e, c in expr.items():
                if e in solved:
                    for f, cf in solved[e].items():
                        new[f] = new.get(f, 0) + c * cf
                else:
                    new[e] = new.get(e, 0) + c
            expr = {e: c for e, c in new.items() if c != 0}
        solved[p] = expr
    elim = {p: MultiPoly.linear(free, expr) for p, expr in solved.items()}
    return EdgeRingPresentation(free, elim, edges)


# ---------------------------------------------------------------------------
# MOY states and braid graphs
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MoyState:
    choices: Tuple[str, ...]  # per crossing, in word order: "oriented" | "singular"
    weight: int
    resolved: BraidWord


def moy_states(w: BraidWord) -> List[MoyState]:
    """All 2^n resolutions of a braid word with ordinary crossings."""
    if not w.is_ordinary():
        raise ValueError("MOY states need ordinary crossings")
    n = len(w.letters)
    out = []
    for mask in range(1 << n):
        choices = []
        letters = []
        mu = 0
        for t, x in enumerate(w.letters):
            if mask >> t & 1:
                choices.append("singular")
                letters.append(("s", letter_col(x)))
                mu += 1 if letter_kind(x) == "+" else -1
            else:
                choices.append("oriented")
        out.append(MoyState(tuple(choices), mu, BraidWord(w.b, tuple(letters))))
    return out


@dataclass(frozen=True)
class BraidGraph:
    """Closed braid graph: ``b`` strands, singular crossings in ``cols``
    (cyclic word of column indices)."""

    b: int
    cols: Tuple[int, ...] = ()

    def __post_init__(self):
        for c in self.cols:
            if not 1 <= c <= self.b - 1:
                raise ValueError(f"column {c} out of range for b={self.b}")

    @classmethod
    def from_word(cls, w: BraidWord) -> "BraidGraph":
        if not w.is_graph():
            raise ValueError("not a braid graph: all letters must be singular")
        return cls(w.b, tuple(letter_col(x) for x in w.letters))

    def to_word(self) -> BraidWord:
        return BraidWord(self.b, tuple(("s", c) for c in self.cols))

    def canonical(self) -> "BraidGraph":
        cols = self.cols
        if not cols:
            return self
        best = min(cols[i:] + cols[:i] for i in range(len(cols)))
        return BraidGraph(self.b, best)


def wu_complexity(g: Union[BraidGraph, BraidWord]) -> int:
    if isinstance(g, BraidWord):
        g = BraidGraph.from_word(g)
    if g.b == 0:
        return 0
    return g.b + sum(g.cols)


@dataclass(frozen=True)
class MoyMove:
    """A MOY move.  ``strand`` for O; ``positions`` index the cyclic word."""

    kind: str  # "O", "I", "II", "III"
    strand: int = 0
    col: int = 0
    positions: Tuple[int, ...] = ()


def _between(n: int, p1: int, p2: int) -> List[int]:
    """Positions strictly between p1 and p2 going forward cyclically."""
    out = []
    k = (p1 + 1) % n
    while k != p2:
        out.append(k)
        k = (k + 1) % n
    return out


def candidate_moves(g: BraidGraph) -> List[MoyMove]:
    moves: List[MoyMove] = []
    if g.b == 0:
        return moves
    cols = g.cols
    n = len(cols)
    used = set(cols)
    for p in range(1, g.b + 1):
        if (p - 1) not in used and p not in used:
            moves.append(MoyMove("O", strand=p))
    if g.b >= 2:
        top = [t for t, c in enumerate(cols) if c == g.b - 1]
        if len(top) == 1:
            moves.append(MoyMove("I", strand=g.b, col=g.b - 1, positions=(top[0],)))
    for j in range(1, g.b):
        pos = [t for t, c in enumerate(cols) if c == j]
        if len(pos) < 2:
            continue
        for a in range(len(pos)):
            p1, p2 = pos[a], pos[(a + 1) % len(pos)]
            if len(pos) == 2 and a == 1 and p1 == p2:
                continue
            mid = _between(n, p1, p2)
            if any(cols[t] == j + 1 for t in mid):
                continue
            lower = [t for t in mid if cols[t] == j - 1]
            if not lower:
                moves.append(MoyMove("II", col=j, positions=(p1, p2)))
            elif len(lower) == 1:
                moves.append(MoyMove("III", col=j, positions=(p1, lower[0], p2)))
    return moves


def move_outputs(g: BraidGraph, m: MoyMove) -> List[Tuple[str, BraidGraph]]:
    """Graphs produced by a move, tagged with their role in the relation.

    O -> [("O'", g')]; I -> [("I'", g')]; II -> [("II'", g')];
    III -> [("IIIa'", ...), ("IIIb'", ...), ("IIIb", ...)].
    """
    cols = list(g.cols)
    n = len(cols)
    if m.kind == "O":
        p = m.strand
        new = tuple(c - 1 if c > p else c for c in cols)
        return [("O'", BraidGraph(g.b - 1, new))]
    if m.kind == "I":
        (t,) = m.positions
        new = tuple(c for k, c in enumerate(cols) if k != t)
        return [("I'", BraidGraph(g.b - 1, new))]
    if m.kind == "II":
        p1, p2 = m.positions
        new = tuple(c for k, c in enumerate(cols) if k != p2)
        return [("II'", BraidGraph(g.b, new))]
    if m.kind == "III":
        p1, r, p2 = m.positions
        j = m.col
        # rotate so p1 is first, then gather: stuff1 s_j s_{j-1} s_j stuff2
        order = [(p1 + k) % n for k in range(n)]
        seq = [cols[k] for k in order]
        i_r = order.index(r)
        i_2 = order.index(p2)
        stuff1 = seq[1:i_r]
        stuff2 = seq[i_r + 1 : i_2]
        tail = seq[i_2 + 1 :]

        def build(middle: Sequence[int]) -> BraidGraph:
            return BraidGraph(g.b, tuple(stuff1 + list(middle) + stuff2 + tail))

        return [
            ("IIIa'", build([j - 1, j, j - 1])),
            ("IIIb'", build([j])),
            ("IIIb", build([j - 1])),
        ]
    raise ValueError(m.kind)


def move_reduction(g: BraidGraph, m: MoyMove) -> int:
    base = wu_complexity(g)
    return base - max(wu_complexity(h) for _, h in move_outputs(g, m))


def find_moy_move(g: Union[BraidGraph, BraidWord], policy: str = "greedy", rng=None) -> Optional[MoyMove]:
    """Pick a MOY move; ``None`` for the empty graph.

    ``greedy``: largest complexity reduction, ties to the smallest strand or
    position.  ``random``: uniform choice among candidates (used to check that
    the answer does not depend on the choice).
    """
    if isinstance(g, BraidWord):
        g = BraidGraph.from_word(g)
    if g.b == 0:
        return None
    moves = candidate_moves(g)
    if not moves:
        raise RuntimeError(f"no MOY move found for {g}")
    if policy == "random":
        return rng.choice(moves)
    return max(moves, key=lambda m: (move_reduction(g, m), -m.strand, tuple(-x for x in m.positions)))
