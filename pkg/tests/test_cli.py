import io
import json
import shutil
from pathlib import Path

import pytest

from krhom.cli import DEFAULT_CORPUS_DIR, HOLLOW, SOLID, render_dots, run
from krhom.homology import TripleGradedDims


def call(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = run(list(argv), out, err)
    return code, out.getvalue(), err.getvalue()


def test_homfly_table_for_trefoil():
    code, out, _ = call("homfly", "--braid", "b=2; w=1 1 1")
    assert code == 0
    rows = [l for l in out.splitlines() if l.strip() and l.split()[0].lstrip("-").isdigit()]
    assert len(rows) == 3
    assert "chi = a^2*q^-2 + a^2*q^2 - a^4" in out
    assert "euler check: ok" in out


def test_poly_unknot():
    code, out, _ = call("poly", "--braid", "b=1;")
    assert code == 0
    assert out.splitlines()[0] == "P  = 1"
    assert "skein oracle: agrees" in out


def test_pages_minus1_trefoil():
    code, out, _ = call("pages", "--seq", "minus1", "--braid", "b=2; w=1 1 1", "--format", "json")
    assert code == 0
    d = json.loads(out)
    assert d["pages"][-1]["total"] == 1
    assert d["total_homology"] == [[0, 0, 1]]


@pytest.mark.parametrize(
    "argv",
    [
        ("homfly", "--braid", "b=2; w=1 x"),
        ("homfly", "--braid", "b=2; w=5"),
        ("sln", "--knot", "3_1", "--N", "0"),
        ("homfly", "--knot", "no_such_knot"),
        ("pages", "--knot", "3_1", "--seq", "zero"),
        ("homfly", "--knot", "3_1", "--pad", "-1"),
        ("skein", "--knot", "3_1", "--crossing", "9"),
        ("frobnicate",),
    ],
)
def test_usage_errors_exit_2(argv):
    code, _, err = call(*argv)
    assert code == 2
    assert "usage" in err


@pytest.mark.parametrize(
    "argv",
    [
        ("homfly", "--knot", "3_1", "--format", "json"),
        ("sln", "--knot", "3_1", "--N", "2", "--format", "json"),
        ("poly", "--knot", "4_1", "--format", "json"),
        ("thin", "--knot", "3_1", "--format", "json"),
        ("skein", "--knot", "3_1", "--format", "json"),
    ],
)
def test_json_output_round_trips(argv):
    code, out, _ = call(*argv)
    assert code == 0
    assert json.dumps(json.loads(out), sort_keys=True, indent=2) + "\n" == out
    assert call(*argv)[1] == out


def test_thin_and_skein_text():
    code, out, _ = call("thin", "--knot", "4_1")
    assert code == 0 and "thin at delta = 0" in out
    code, out, _ = call("skein", "--knot", "3_1", "--crossing", "0")
    assert code == 0 and "exact sequence ranks close: True" in out


def test_render_dots_unknot():
    text = render_dots(TripleGradedDims({(0, 0, 0): 1}))
    assert text.count(SOLID) == 2  # grid + legend
    assert HOLLOW not in text
    assert "j=  0 |" in text and "delta=0" in text


def test_render_dots_trefoil():
    text = render_dots(TripleGradedDims({(-2, 2, 2): 1, (2, 2, -2): 1, (0, 4, -2): 1}))
    grid = text.split("legend")[0]
    assert grid.count(SOLID) == 3 and HOLLOW not in grid
    assert text.splitlines()[0].startswith("j=  4")


def test_render_dots_two_deltas():
    text = render_dots(TripleGradedDims({(0, 0, 0): 1, (2, 0, 0): 1}))
    grid = text.split("legend")[0]
    assert grid.count(SOLID) == 1 and grid.count(HOLLOW) == 1
    assert f"{SOLID} delta=2" in text and f"{HOLLOW} delta=0" in text


@pytest.fixture
def small_corpus(tmp_path):
    for name in ("unknot", "3_1", "hopf"):
        shutil.copy(DEFAULT_CORPUS_DIR / f"{name}.json", tmp_path / f"{name}.json")
    return tmp_path


def test_corpus_verify_passes(small_corpus):
    code, out, _ = call("corpus", "verify", "unknot", "3_1", "hopf", "--dir", str(small_corpus))
    assert code == 0, out
    assert out.count(": ok") == 3


def test_corpus_verify_detects_faults(small_corpus):
    p = small_corpus / "3_1.json"
    d = json.loads(p.read_text())
    d["homfly_dims"][0][3] += 1
    p.write_text(json.dumps(d))
    (small_corpus / "hopf.json").unlink()
    code, out, _ = call("corpus", "verify", "unknot", "3_1", "hopf", "--dir", str(small_corpus))
    assert code == 1
    assert "3_1: MISMATCH in homfly_dims" in out
    assert "hopf: MISSING" in out
    assert "unknot: ok" in out


def test_corpus_unknown_name():
    code, _, err = call("corpus", "verify", "nope")
    assert code == 2


def test_corpus_files_exist():
    names = {p.stem for p in Path(DEFAULT_CORPUS_DIR).glob("*.json")}
    assert {"unknot", "3_1", "4_1", "5_1", "5_2", "hopf", "unlink2", "3_1#3_1", "3_1#4_1"} <= names
