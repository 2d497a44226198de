"""Acceptance suite: one PASS/FAIL line per criterion.

Run with ``pytest tests/test_acceptance.py`` (lines are printed even when
output is captured) or ``python3 tests/test_acceptance.py``.  All
comparisons are exact; the only tolerances are wall-clock budgets.
"""

import random
import sys
import time
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

import expected as X  # noqa: E402
from krhom.diagram import close_braid, parse_braid  # noqa: E402
from krhom.exactalg import MultiPoly  # noqa: E402
from krhom.invariants import (  # noqa: E402
    CORPUS,
    d1_check,
    delta_thinness,
    graph_check,
    homfly_homology,
    homfly_polynomials,
    euler_check,
    middle_and_unreduced,
    regrade,
    signature,
    skein_triple,
    skein_triple_check,
    sln_homology,
    spectral_pages,
    state_decomposition_check,
    total_homology_minus1,
)
from krhom.matfact import KoszulMatrix, Potential, assemble, row_operation, twist, verify_mf  # noqa: E402
from krhom.moypoly import graph_homfly, link_homfly_skein  # noqa: E402

# wall-clock budgets in seconds
BUDGET_UNKNOT = 1.0
BUDGET_EULER_EACH = 120.0
BUDGET_THIN_EACH = 300.0
BUDGET_MOY_TOTAL = 600.0
BUDGET_CONNECTED_SUM = 900.0

N_RANDOM_GRAPHS = 24
GRAPH_SEED = 7
GRAPH_WINDOW = 8  # q-degrees scanned above the lowest term
KOSZUL_SEED = 11
N_KOSZUL = 25
SLN_VERIFY_MAX_CROSSINGS = 4

_write = print


def report(n, name, ok, detail=""):
    _write(f"{'PASS' if ok else 'FAIL'} criterion {n}: {name}" + (f" ({detail})" if detail else ""))
    return ok


@pytest.fixture(autouse=True)
def _visible(request):
    # print through the terminal reporter so lines appear under output capture
    global _write
    tr = request.config.pluginmanager.getplugin("terminalreporter")
    if tr is not None:
        _write = lambda line: tr.write_line(line)  # noqa: E731
    yield
    _write = print


def _timed(f, *a, **k):
    t = time.perf_counter()
    r = f(*a, **k)
    return r, time.perf_counter() - t


# 1 -----------------------------------------------------------------------


def check_unknot():
    t = time.perf_counter()
    ok = homfly_homology(X.UNKNOT).dims == {(0, 0, 0): 1}
    middle, unreduced = middle_and_unreduced(X.UNKNOT)
    hi = middle.window[1]
    ok &= middle.dims == {(i, 0, 0): 1 for i in range(1, hi + 1, 2)}
    ok &= unreduced.dims == {(i, j, -1): 1 for i in range(1, hi + 1, 2) for j in (-1, 1)}
    for N in (1, 2, 3, 4):
        ok &= sln_homology(X.UNKNOT, N).dims == {(0, 0): 1}
        un = sln_homology(X.UNKNOT, N, reduced=False).dims
        ok &= un == X.unknot_unreduced_sln(N) and min(I for I, _ in un) == 1 - N
    dt = time.perf_counter() - t
    return report(1, "unknot suite", ok and dt < BUDGET_UNKNOT, f"{dt:.2f}s < {BUDGET_UNKNOT}s")


def test_criterion_1_unknot_suite():
    assert check_unknot()


# 2 -----------------------------------------------------------------------

EULER_CASES = {"3_1": X.TREFOIL, "4_1": X.FIGURE_EIGHT, "5_1": X.CINQUEFOIL, "5_2": X.THREE_TWIST}


def check_euler():
    ok_all = True
    notes = []
    for name, w in EULER_CASES.items():
        t = time.perf_counter()
        P_moy = homfly_polynomials(w)[1]
        ok = link_homfly_skein(parse_braid(w)) == P_moy
        H = homfly_homology(w)
        ok &= not H.truncated and euler_check(H, P_moy)
        dt = time.perf_counter() - t
        ok_all &= ok and dt < BUDGET_EULER_EACH
        notes.append(f"{name} {dt:.1f}s")
    t = time.perf_counter()
    _, unreduced = middle_and_unreduced(X.HOPF)
    ok = euler_check(unreduced, homfly_polynomials(X.HOPF)[0])
    dt = time.perf_counter() - t
    ok_all &= ok and dt < BUDGET_EULER_EACH
    notes.append(f"hopf unreduced {dt:.1f}s")
    return report(2, "chi = P_skein = P_moy", ok_all, ", ".join(notes))


def test_criterion_2_euler_characteristic():
    assert check_euler()


# 3 -----------------------------------------------------------------------


def check_thin():
    ok_all = True
    notes = []
    for name, w in (("3_1", X.TREFOIL), ("4_1", X.FIGURE_EIGHT)):
        H, dt = _timed(homfly_homology, w)
        sigma = signature(w)
        verdict = delta_thinness(H, sigma)
        P = homfly_polynomials(w)[1].as_polynomial()
        coeffs = {(i, j): abs(c) for (j, i), c in P.terms.items()}
        dims = {(i, j): n for (i, j, _), n in H.dims.items()}
        ok = verdict.thin and dims == coeffs and all(n == 1 for n in H.dims.values())
        ok_all &= ok and dt < BUDGET_THIN_EACH
        notes.append(f"{name} delta=sigma={sigma} {dt:.1f}s")
    return report(3, "two-bridge thinness", ok_all, ", ".join(notes))


def test_criterion_3_two_bridge_thinness():
    assert check_thin()


# 4 -----------------------------------------------------------------------


def check_stabilization():
    ok = True
    notes = []
    for name, w in (("3_1", X.TREFOIL), ("4_1", X.FIGURE_EIGHT)):
        H = homfly_homology(w)
        S, dt = _timed(sln_homology, w, 2)
        ok &= S.dims == regrade(H, 2)
        notes.append(f"{name} {dt:.1f}s")
    return report(4, "H_2 = regraded HOMFLY homology", ok, ", ".join(notes))


def test_criterion_4_stabilization():
    assert check_stabilization()


# 5 -----------------------------------------------------------------------


def unlink_display_prediction(hi):
    """((1 + t^-1)/(1 - q))^(l-1) at l = 2, keyed (gr_+, gr'_-1), q-exponents <= hi."""
    return {(t, j): 1 for t in (0, -1) for j in range(0, hi + 1)}


def check_spectral():
    H = homfly_homology(X.TREFOIL).dims
    ok = True
    for N in (1, 2, 3):
        ok &= spectral_pages(X.TREFOIL, N).pages[1].dims.dims == H
    ok &= spectral_pages(X.TREFOIL, 1).final().total() == 1
    ok &= total_homology_minus1(spectral_pages(X.TREFOIL, "minus1")) == {(0, 0): 1}
    return report(5, "E_1(N) = HOMFLY homology, E_inf(1) = Q, E(-1) of 3_1 = Q at (0, 0)", ok)


def check_unlink_display():
    got = total_homology_minus1(spectral_pages(X.UNLINK2, "minus1"))
    hi = max(j for _, j in got) - 2  # drop the top q-degree, which the window may cut
    got = {k: v for k, v in got.items() if k[1] <= hi}
    want = unlink_display_prediction(hi)
    detail = f"computed {sorted(got)[:4]}..., displayed formula predicts {sorted(want)[:4]}..."
    return report(5, "2-unlink total homology against the displayed Poincare series", got == want, detail)


def test_criterion_5_spectral_sequences():
    assert check_spectral()


@pytest.mark.xfail(strict=True, reason="computed series is (1 + t^-1 q^2)/(1 - q^2); see notes/decisions.md")
def test_criterion_5_unlink_display():
    assert check_unlink_display()


# 6 -----------------------------------------------------------------------


def random_graphs(n=N_RANDOM_GRAPHS, seed=GRAPH_SEED):
    rng = random.Random(seed)
    out = []
    for _ in range(n):
        b = rng.randint(2, 4)
        k = rng.randint(1, 6)
        out.append(f"b={b}; w=" + " ".join(f"s{rng.randint(1, b - 1)}" for _ in range(k)))
    return out


def check_moy():
    t = time.perf_counter()
    ok = True
    graphs = random_graphs()
    for g in graphs:
        lo = graph_homfly(parse_braid(g)).value.min_q_exponent() - parse_braid(g).b
        ok &= graph_check(g, q_max=lo + GRAPH_WINDOW)[0]
    for w in (X.TREFOIL, X.FIGURE_EIGHT, X.HOPF):
        ok &= state_decomposition_check(w, -6, 8)[0]
    dt = time.perf_counter() - t
    return report(6, f"graph homology vs MOY on {len(graphs)} random graphs, state decomposition", ok and dt < BUDGET_MOY_TOTAL, f"{dt:.1f}s < {BUDGET_MOY_TOTAL:.0f}s")


def test_criterion_6_moy_layer():
    assert check_moy()


# 7 -----------------------------------------------------------------------


def _random_poly(rng, V=(0, 1, 2)):
    terms = {}
    for _ in range(rng.randint(0, 3)):
        terms[tuple(rng.randint(0, 2) for _ in V)] = rng.randint(-2, 2)
    return MultiPoly(V, terms)


def check_algebra():
    ok = True
    notes = []
    t = time.perf_counter()
    for name, w in CORPUS.items():
        D = close_braid(parse_braid(w))
        ok &= verify_mf(assemble(D, None, "reduced_edge")).ok
        if len(parse_braid(w).letters) <= SLN_VERIFY_MAX_CROSSINGS:
            ok &= verify_mf(assemble(D, Potential.sl(2), "reduced_edge")).ok
            ok &= verify_mf(assemble(D, None, "unreduced")).ok
    notes.append(f"verify_mf {time.perf_counter() - t:.0f}s")
    for w in (X.TREFOIL, X.FIGURE_EIGHT):
        ok &= d1_check(w).ok
    rng = random.Random(KOSZUL_SEED)
    for _ in range(N_KOSZUL):
        K = KoszulMatrix(tuple((_random_poly(rng), _random_poly(rng)) for _ in range(2)))
        ok &= row_operation(K, 0, 1, _random_poly(rng)).potential == K.potential
        C = K.to_complex()
        hs = sorted({s.h for s in C.shifts})
        H = [dict() for _ in range(C.rank)]
        tops = [g for g, s in enumerate(C.shifts) if s.h == hs[0] + 2]
        bottoms = [g for g, s in enumerate(C.shifts) if s.h == hs[0]]
        if len(hs) == 3:
            H[tops[0]][bottoms[0]] = _random_poly(rng)
        T = twist(C, H)
        r = verify_mf(T, vertical="commute")
        ok &= r.checks["potential"] and r.checks["d_plus_squared"] and T.potential == C.potential
    notes.append(f"{N_KOSZUL} random Koszul matrices")
    return report(7, "factorizations, d_1 linearity and anticommutation, twist and row operations", ok, ", ".join(notes))


def test_criterion_7_algebra():
    assert check_algebra()


# 8 -----------------------------------------------------------------------


def check_connected_sum():
    H1 = homfly_homology(X.TREFOIL).dims
    H2, dt = _timed(homfly_homology, CORPUS["3_1#3_1"])
    product = {}
    for a, m in H1.items():
        for b, n in H1.items():
            key = tuple(x + y for x, y in zip(a, b))
            product[key] = product.get(key, 0) + m * n
    ok = H2.dims == product and H2.total() == 9
    return report(8, "H(3_1 # 3_1) = H(3_1) (x) H(3_1)", ok and dt < BUDGET_CONNECTED_SUM, f"total {H2.total()}, {dt:.1f}s")


def test_criterion_8_connected_sum():
    assert check_connected_sum()


# 9 -----------------------------------------------------------------------


def check_skein():
    plus, minus, zero = skein_triple(X.TREFOIL, 0)
    rep = skein_triple_check(plus, minus, zero, 2)
    ok = minus.n_components() == 1 and zero.n_components() == 2
    ok = ok and rep.closes and rep.determinants == (3, 1, 2)
    return report(9, "skein exact sequence for (3_1, unknot, Hopf) at N = 2", ok)


def test_criterion_9_skein_sequence():
    assert check_skein()


# 10 ----------------------------------------------------------------------


def test_criterion_10_not_reproducible():
    _write("SKIP criterion 10: 8 and 9 crossing classification is out of scope at desk scale")
    pytest.skip("declared not reproducible")


if __name__ == "__main__":
    checks = [check_unknot, check_euler, check_thin, check_stabilization, check_spectral,
              check_unlink_display, check_moy, check_algebra, check_connected_sum, check_skein]
    results = [c() for c in checks]
    print("SKIP criterion 10: 8 and 9 crossing classification is out of scope at desk scale")
    sys.exit(0 if all(r or c is check_unlink_display for r, c in zip(results, checks)) else 1)
