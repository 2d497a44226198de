import pytest
from hypothesis import given

from conftest import braid_texts
from krhom.diagram import (
    BraidGraph,
    BraidParseError,
    candidate_moves,
    close_braid,
    connected_sum_words,
    edge_ring,
    find_moy_move,
    format_braid,
    moy_states,
    move_outputs,
    parse_braid,
    wu_complexity,
)


@given(braid_texts(singular=2))
def test_parse_format_round_trip(text):
    w = parse_braid(text)
    assert parse_braid(format_braid(w)) == w


@pytest.mark.parametrize("text", ["", "b=x; w=1", "b=2; w=1 q", "b=2; w=3", "b=2; w=0", "w=1 1"])
def test_parse_errors(text):
    with pytest.raises(BraidParseError):
        parse_braid(text)


def test_singular_tokens_and_empty_word():
    assert parse_braid("b=3; w=s1 -2 s2").letters == (("s", 1), -2, ("s", 2))
    assert parse_braid("b=1;").letters == ()


@pytest.mark.parametrize(
    "text, writhe, comps",
    [("b=1;", 0, 1), ("b=2; w=1 1 1", 3, 1), ("b=2; w=1 1", 2, 2), ("b=2;", 0, 2), ("b=3; w=1 -2 1 -2", 0, 1)],
)
def test_writhe_and_components(text, writhe, comps):
    w = parse_braid(text)
    assert w.writhe == writhe
    assert w.n_components() == comps
    assert len(close_braid(w).link_components()) == comps


@given(braid_texts(singular=2))
def test_closure_is_closed_and_relators_vanish(text):
    D = close_braid(parse_braid(text))
    assert D.is_closed()
    R = edge_ring(D)
    assert R.relators_vanish(D)
    e = D.edges[0]
    assert R.reduced(e).relators_vanish(D)


@given(braid_texts())
def test_mirror_negates_writhe(text):
    w = parse_braid(text)
    assert w.mirror().writhe == -w.writhe
    assert w.mirror().mirror() == w


def test_connected_sum_word():
    t = parse_braid("b=2; w=1 1 1")
    s = connected_sum_words(t, t)
    assert format_braid(s) == "b=3; w=1 1 1 2 2 2"
    assert s.n_components() == 1


def test_moy_states_weights():
    states = moy_states(parse_braid("b=2; w=1 -1"))
    assert len(states) == 4
    assert sorted(st.weight for st in states) == [-1, 0, 0, 1]


@given(braid_texts(max_b=4, max_len=6, ordinary=False, singular=6))
def test_moy_moves_lower_wu_complexity(text):
    g = BraidGraph.from_word(parse_braid(text))
    while g.b:
        m = find_moy_move(g)
        outs = move_outputs(g, m)
        assert all(wu_complexity(h) < wu_complexity(g) for _, h in outs)
        g = outs[0][1]


def test_every_nonempty_graph_has_a_move():
    assert candidate_moves(BraidGraph(2, (1, 1)))
    assert candidate_moves(BraidGraph(3, (1, 2, 1, 2)))
