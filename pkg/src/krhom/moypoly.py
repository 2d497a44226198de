"""HOMFLY polynomials.

Normalization: ``a P(D_-) - a^-1 P(D_+) = (q - q^-1) P(D_0)`` with
P(unknot) = 1.  The unreduced polynomial is ``P~ = delta * P`` with
``delta = (a - a^-1)/(q - q^-1)``.

Three independent routes:

* :func:`graph_homfly` evaluates closed braid graphs through the MOY
  relations O, I, II, III, recursing on Wu complexity.
* :func:`link_homfly_moy` sums graph polynomials over MOY states.
* :func:`link_homfly_skein` switches crossings towards a descending diagram
  (an unlink) and smooths, never touching graphs.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple, Union

from .diagram import (
    BraidGraph,
    BraidWord,
    find_moy_move,
    letter_col,
    letter_kind,
    moy_states,
    move_outputs,
)
from .exactalg import ExactDivisionError, Laurent2, Laurent2Frac

A = Laurent2.monomial(1, 0)
A_INV = Laurent2.monomial(-1, 0)
Q = Laurent2.monomial(0, 1)
Q_INV = Laurent2.monomial(0, -1)

DELTA = Laurent2Frac(A - A_INV, 1)  # (a - a^-1)/(q - q^-1)
CURL = Laurent2Frac(A * Q_INV - A_INV * Q, 1)  # (a q^-1 - a^-1 q)/(q - q^-1)
BUBBLE = Laurent2Frac(Q + Q_INV)  # q + q^-1


@dataclass(frozen=True)
class GraphPoly:
    value: Laurent2Frac
    b: int


class _Memo:
    """Memo table safe for concurrent readers and idempotent writers."""

    def __init__(self):
        self._data: Dict = {}
        self._lock = threading.Lock()

    def get(self, key):
        return self._data.get(key)

    def put(self, key, value):
        with self._lock:
            self._data.setdefault(key, value)
        return self._data[key]

    def clear(self):
        with self._lock:
            self._data.clear()

    def __len__(self):
        return len(self._data)


_GRAPH_MEMO = _Memo()


def graph_homfly(g: Union[BraidGraph, BraidWord], policy: str = "greedy", rng=None) -> GraphPoly:
    """Unreduced HOMFLY polynomial of a closed braid graph."""
    if isinstance(g, BraidWord):
        g = BraidGraph.from_word(g)
    return GraphPoly(_graph_value(g, policy, rng), g.b)


def _graph_value(g: BraidGraph, policy: str, rng) -> Laurent2Frac:
    key = g.canonical()
    use_memo = policy == "greedy"
    if use_memo:
        hit = _GRAPH_MEMO.get(key)
        if hit is not None:
            return hit
    if key.b == 0:
        val = Laurent2Frac.const(1)
    else:
        move = find_moy_move(key, policy, rng)
        outs = move_outputs(key, move)
        if move.kind == "O":
            val = DELTA * _graph_value(outs[0][1], policy, rng)
        elif move.kind == "I":
            val = CURL * _graph_value(outs[0][1], policy, rng)
        elif move.kind == "II":
            val = BUBBLE * _graph_value(outs[0][1], policy, rng)
        else:
            parts = {tag: _graph_value(h, policy, rng) for tag, h in outs}
            val = parts["IIIa'"] + parts["IIIb'"] - parts["IIIb"]
    if use_memo:
        return _GRAPH_MEMO.put(key, val)
    return val


def link_homfly_moy(w: BraidWord) -> Tuple[Laurent2Frac, Laurent2Frac]:
    """(unreduced, reduced) HOMFLY of a braid closure via the MOY state sum."""
    total = Laurent2Frac.const(0)
    minus_q = Laurent2.monomial(0, 1, -1)
    for st in moy_states(w):
        gv = graph_homfly(BraidGraph.from_word(st.resolved)).value
        mu = st.weight
        if mu >= 0:
            factor = minus_q ** mu
        else:
            factor = Laurent2.monomial(0, mu, (-1) ** (-mu))
        total = total + gv * Laurent2Frac(factor)
    wr = w.writhe
    pref = Laurent2.monomial(wr, -wr)
    unreduced = total * Laurent2Frac(pref)
    try:
        reduced = unreduced.exact_div(DELTA)
    except ExactDivisionError as exc:
        raise ExactDivisionError("unreduced polynomial not divisible by the unknot value") from exc
    return unreduced, reduced


# ---------------------------------------------------------------------------
# Skein oracle
# ---------------------------------------------------------------------------


class SkeinDepthError(RuntimeError):
    pass


_SKEIN_MEMO = _Memo()


def _traversal(w: BraidWord) -> Tuple[List[List[Tuple[int, int]]], int]:
    """Walk each component from its base point (top of its lowest position).

    Returns, per component, the sequence of (letter index, over?) encounters
    and the number of components.  For a positive letter the strand moving
    from column c to c + 1 passes over; for a negative letter the other one.
    """
    b = w.b
    visited = [False] * b
    comps = []
    for start in range(b):
        if visited[start]:
            continue
        enc: List[Tuple[int, int]] = []
        p = start
        while not visited[p]:
            visited[p] = True
            pos = p
            for t, x in enumerate(w.letters):
                c = letter_col(x) - 1
                if pos == c:
                    moving_right = True
                elif pos == c + 1:
                    moving_right = False
                else:
                    continue
                over = moving_right if letter_kind(x) == "+" else not moving_right
                enc.append((t, over))
                pos = c + 1 if moving_right else c
            p = pos
        comps.append(enc)
    return comps, len(comps)


def _first_bad_crossing(w: BraidWord) -> Tuple[Optional[int], int]:
    comps, ncomp = _traversal(w)
    seen = set()
    for enc in comps:
        for t, over in enc:
            if t in seen:
                continue
            seen.add(t)
            if not over:
                return t, ncomp
    return None, ncomp


def link_homfly_skein(w: BraidWord, max_depth: int = 64) -> Laurent2Frac:
    """Reduced HOMFLY polynomial by crossing changes towards a descending
    diagram and smoothings.  Exact; independent of the MOY engine."""
    if not w.is_ordinary():
        raise ValueError("skein oracle needs ordinary crossings")
    return _skein(w, max_depth)


def _skein(w: BraidWord, depth: int) -> Laurent2Frac:
    if depth < 0:
        raise SkeinDepthError("skein recursion depth exceeded")
    key = (w.b, w.letters)
    hit = _SKEIN_MEMO.get(key)
    if hit is not None:
        return hit
    t, ncomp = _first_bad_crossing(w)
    if t is None:
        val = Laurent2Frac.const(1)
        for _ in range(ncomp - 1):
            val = val * DELTA
        return _SKEIN_MEMO.put(key, val)
    x = w.letters[t]
    switched = BraidWord(w.b, w.letters[:t] + (-x,) + w.letters[t + 1 :])
    smoothed = BraidWord(w.b, w.letters[:t] + w.letters[t + 1 :])
    ps = _skein(switched, depth - 1)
    p0 = _skein(smoothed, depth - 1)
    z = Laurent2Frac(Q - Q_INV)
    if x > 0:
        # P(+) = a^2 P(-) - a z P(0)
        val = Laurent2Frac(A * A) * ps - Laurent2Frac(A) * z * p0
    else:
        # P(-) = a^-2 P(+) + a^-1 z P(0)
        val = Laurent2Frac(A_INV * A_INV) * ps + Laurent2Frac(A_INV) * z * p0
    return _SKEIN_MEMO.put(key, val)


def graph_homfly_via_skein(g: BraidGraph) -> Laurent2Frac:
    """Unreduced graph polynomial from singular = q^-1 * id - a^-1 * sigma,
    evaluated with the skein oracle.  Independent check of the MOY relations."""
    n = len(g.cols)
    total = Laurent2Frac.const(0)
    for mask in range(1 << n):
        letters = []
        coeff = Laurent2.const(1)
        for t, c in enumerate(g.cols):
            if mask >> t & 1:
                letters.append(c)
                coeff = coeff * Laurent2.monomial(-1, 0, -1)
            else:
                coeff = coeff * Q_INV
        total = total + Laurent2Frac(coeff) * link_homfly_skein(BraidWord(g.b, tuple(letters))) * DELTA
    return total


def unreduced_from_reduced(p: Laurent2Frac, n_diagram_components: int = 1) -> Laurent2Frac:
    return p * DELTA


def q_support_window(P: Union[Laurent2, Laurent2Frac], pad: int = 0) -> Tuple[int, int]:
    """[min q - 2 pad, max q + 2 pad] over the support of a polynomial."""
    if isinstance(P, Laurent2Frac):
        P = P.as_polynomial()
    if not P.terms:
        raise ValueError("zero polynomial has no support")
    qs = [q for (_, q) in P.terms]
    return min(qs) - 2 * pad, max(qs) + 2 * pad


def homfly(w: BraidWord) -> Laurent2Frac:
    """Reduced HOMFLY polynomial (MOY route), checked against the skein oracle
    by callers that need certainty."""
    return link_homfly_moy(w)[1]
