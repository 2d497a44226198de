"""Reference computations that share no code with the package."""

from __future__ import annotations

from fractions import Fraction
from itertools import product
from typing import Dict, List, Sequence, Tuple


def _find(parent: List[int], x: int) -> int:
    while parent[x] != x:
        parent[x] = parent[parent[x]]
        x = parent[x]
    return x


def _loops(b: int, letters: Sequence[int], horizontal: Sequence[bool]) -> int:
    """Number of circles after smoothing every crossing of the closed braid."""
    n = len(letters)
    # node (t, s) is strand s just below level t; level n is glued to level 0
    idx = lambda t, s: (t % n if n else 0) * b + s
    size = max(n, 1) * b
    parent = list(range(size))

    def join(x, y):
        rx, ry = _find(parent, x), _find(parent, y)
        if rx != ry:
            parent[rx] = ry

    for t, (x, hz) in enumerate(zip(letters, horizontal)):
        c = abs(x)
        for s in range(b):
            if s not in (c - 1, c):
                join(idx(t, s), idx(t + 1, s))
        if hz:
            join(idx(t, c - 1), idx(t, c))
            join(idx(t + 1, c - 1), idx(t + 1, c))
        else:
            join(idx(t, c - 1), idx(t + 1, c - 1))
            join(idx(t, c), idx(t + 1, c))
    return len({_find(parent, x) for x in range(size)})


def _mul(p: Dict[int, int], r: Dict[int, int]) -> Dict[int, int]:
    out: Dict[int, int] = {}
    for e1, c1 in p.items():
        for e2, c2 in r.items():
            out[e1 + e2] = out.get(e1 + e2, 0) + c1 * c2
    return {e: c for e, c in out.items() if c}


def kauffman_bracket(b: int, letters: Sequence[int]) -> Dict[int, int]:
    """<L> as {A-exponent: coefficient}, normalized so that one circle is 1."""
    delta = {2: -1, -2: -1}
    total: Dict[int, int] = {}
    for choice in product((0, 1), repeat=len(letters)):
        # choice 1 = A-smoothing; for a positive letter it is the vertical one
        hz = [(c == 1) != (x > 0) for c, x in zip(choice, letters)]
        a_exp = sum(1 if c else -1 for c in choice)
        term = {a_exp: 1}
        for _ in range(_loops(b, letters, hz) - 1):
            term = _mul(term, delta)
        for e, c in term.items():
            total[e] = total.get(e, 0) + c
    return {e: c for e, c in total.items() if c}


def jones_q(b: int, letters: Sequence[int]) -> Dict[int, int]:
    """Jones polynomial with t = q^2 as {q-exponent: coefficient}.

    V = (-A^3)^(-w) <L> and t = A^-4, so q = A^-2.
    """
    w = sum(1 if x > 0 else -1 for x in letters)
    f = _mul(kauffman_bracket(b, letters), {-3 * w: (-1) ** (w % 2)})
    out: Dict[int, int] = {}
    for e, c in f.items():
        assert e % 2 == 0
        out[-e // 2] = out.get(-e // 2, 0) + c
    return {e: c for e, c in out.items() if c}


def thin_prediction(P_terms: Dict[Tuple[int, int], int], sigma: int) -> Dict[Tuple[int, int, int], int]:
    """Homology of a delta-thin knot: every monomial c a^j q^i of P gives |c|
    classes at (i, j, sigma - i - j)."""
    return {(i, j, sigma - i - j): abs(c) for (j, i), c in P_terms.items() if c}


def alexander_from_seifert(V: Sequence[Sequence[int]], t: int) -> Fraction:
    """det(V - t V^T) at an integer t, by exact elimination."""
    n = len(V)
    A = [[Fraction(V[i][j] - t * V[j][i]) for j in range(n)] for i in range(n)]
    det = Fraction(1)
    for c in range(n):
        p = next((r for r in range(c, n) if A[r][c]), None)
        if p is None:
            return Fraction(0)
        if p != c:
            A[c], A[p] = A[p], A[c]
            det = -det
        det *= A[c][c]
        for r in range(c + 1, n):
            f = A[r][c] / A[c][c]
            for k in range(c, n):
                A[r][k] -= f * A[c][k]
    return det


def laurent_eval(p: Dict[int, int], x: Fraction) -> Fraction:
    return sum((Fraction(c) * Fraction(x) ** e for e, c in p.items()), Fraction(0))
