"""Command-line interface.

Exit codes: 0 success, 1 a computed check failed, 2 bad usage or input.
"""

from __future__ import annotations

import argparse
import contextlib
import json
import os
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Mapping, Optional, Sequence, TextIO, Tuple

from .diagram import BraidParseError, BraidWord, format_braid, parse_braid
from .exactalg import format_laurent2
from .homology import TripleGradedDims
from .invariants import (
    CORPUS,
    DEFAULT_N_MAX,
    DEFAULT_PAD,
    EulerMismatch,
    InvariantError,
    delta_grading,
    delta_thinness,
    euler_characteristic,
    euler_check,
    homfly_homology,
    homfly_polynomials,
    invariant_report,
    laurent_to_json,
    middle_and_unreduced,
    signature,
    skein_triple,
    skein_triple_check,
    sln_euler,
    sln_homology,
    sln_polynomial,
    spectral_pages,
    stabilization,
    total_homology_minus1,
)
from .moypoly import link_homfly_skein

SOLID = "●"
HOLLOW = "○"

DEFAULT_CORPUS_DIR = Path(__file__).resolve().parents[2] / "corpus"


class UsageError(Exception):
    pass


@dataclass
class CliConfig:
    command: str
    braid: Optional[BraidWord]
    name: Optional[str]
    N: Optional[int]
    variant: str
    pad: int
    fmt: str
    workers: int

    def __post_init__(self):
        if self.pad < 0:
            raise UsageError("--pad must be non-negative")
        if self.N is not None and self.N < 1:
            raise UsageError("--N must be at least 1")
        if self.workers < 1:
            raise UsageError("--workers must be at least 1")


# ---------------------------------------------------------------------------
# Rendering
# ---------------------------------------------------------------------------


def render_table(dims: TripleGradedDims) -> str:
    lines = [f"{'i':>4} {'j':>4} {'k':>4} {'delta':>6} {'dim':>4}"]
    for (i, j, k), n in sorted(dims.dims.items()):
        lines.append(f"{i:>4} {j:>4} {k:>4} {i + j + k:>6} {n:>4}")
    return "\n".join(lines)


def render_pairs(dims: Mapping[Tuple[int, int], int], names: Tuple[str, str]) -> str:
    lines = [f"{names[0]:>6} {names[1]:>6} {'dim':>4}"]
    for (a, b), n in sorted(dims.items()):
        lines.append(f"{a:>6} {b:>6} {n:>4}")
    return "\n".join(lines)


def render_dots(dims: TripleGradedDims) -> str:
    """Grid with i horizontal and j vertical, one glyph per generator.

    The largest delta present is drawn solid, every other delta hollow.
    """
    d = dims.dims if isinstance(dims, TripleGradedDims) else dict(dims)
    if not d:
        return "(empty)"
    deltas = sorted({delta_grading(t) for t in d}, reverse=True)
    glyph = {dl: (SOLID if n == 0 else HOLLOW) for n, dl in enumerate(deltas)}
    cells: Dict[Tuple[int, int], str] = {}
    for (i, j, k), n in sorted(d.items(), key=lambda kv: (-delta_grading(kv[0]), kv[0])):
        cells[(i, j)] = cells.get((i, j), "") + glyph[i + j + k] * n
    i_vals = [t[0] for t in d]
    j_vals = [t[1] for t in d]
    i_lo, i_hi = min(i_vals), max(i_vals)
    j_lo, j_hi = min(j_vals), max(j_vals)
    width = max(3, max(len(c) for c in cells.values()) + 1)
    step = 2 if all((x - i_lo) % 2 == 0 for x in i_vals) and all((y - j_lo) % 2 == 0 for y in j_vals) else 1
    lines = []
    for j in range(j_hi, j_lo - 1, -step):
        row = "".join(cells.get((i, j), ".").center(width) for i in range(i_lo, i_hi + 1, step))
        lines.append(f"j={j:>3} |{row}")
    # last digit of each label sits under the glyph column
    axis = "".join(str(i).rjust(width // 2 + 1).ljust(width) for i in range(i_lo, i_hi + 1, step))
    lines.append("      +" + "-" * len(axis))
    lines.append("   i:  " + axis)
    legend = ", ".join(f"{glyph[dl]} delta={dl}" for dl in deltas)
    lines.append(f"legend: {legend}")
    return "\n".join(lines)


def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2)


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def _cmd_homfly(cfg: CliConfig, out: TextIO) -> int:
    w = cfg.braid
    unred, red = homfly_polynomials(w)
    if cfg.variant == "reduced":
        dims = homfly_homology(w, pad=cfg.pad, workers=cfg.workers)
        P = red
    else:
        middle, unreduced = middle_and_unreduced(w, pad=cfg.pad, workers=cfg.workers)
        dims = middle if cfg.variant == "middle" else unreduced
        P = unred if cfg.variant == "unreduced" else None
    ok = True if P is None else euler_check(dims, P)
    if cfg.fmt == "json":
        if cfg.variant == "reduced":
            rep = invariant_report(w, cfg.name, pad=cfg.pad, workers=cfg.workers)
            out.write(rep.to_json() + "\n")
        else:
            out.write(_dump({"braid": format_braid(w), "variant": cfg.variant, "dims": dims.to_list(), "window": list(dims.window), "window_truncated": dims.truncated}) + "\n")
    elif cfg.fmt == "dots":
        out.write(render_dots(dims) + "\n")
    else:
        out.write(render_table(dims) + "\n")
        out.write(f"chi = {format_laurent2(euler_characteristic(dims))}\n")
        if P is not None:
            out.write(f"P   = {_fmt_frac(P)}\n")
            out.write(f"euler check: {'ok' if ok else 'FAILED'}\n")
        out.write(f"window = {list(dims.window)}{' (truncated)' if dims.truncated else ''}\n")
    return 0 if ok else 1


def _fmt_frac(P) -> str:
    if P.denom_power == 0:
        return format_laurent2(P.numerator)
    return f"({format_laurent2(P.numerator)}) / (q - q^-1)^{P.denom_power}"


def _cmd_sln(cfg: CliConfig, out: TextIO) -> int:
    N = cfg.N or 2
    reduced = cfg.variant != "unreduced"
    try:
        dims = sln_homology(cfg.braid, N, reduced=reduced, pad=cfg.pad)
        ok = True
    except EulerMismatch as exc:
        out.write(f"euler check FAILED: {exc}\n")
        return 1
    target = sln_polynomial(cfg.braid, N, reduced)
    if cfg.fmt == "json":
        out.write(_dump({"braid": format_braid(cfg.braid), "N": N, "reduced": reduced, "dims": dims.to_list(), "window": list(dims.window), "window_truncated": dims.truncated, "polynomial": {str(k): str(v) for k, v in sorted(target.items())}}) + "\n")
    else:
        out.write(render_pairs(dims.dims, ("gr_N", "gr_v")) + "\n")
        out.write(f"chi = {_fmt_q(sln_euler(dims.dims))}\n")
        out.write(f"P_N = {_fmt_q(target)}\n")
        out.write(f"window = {list(dims.window)}{' (truncated)' if dims.truncated else ''}\n")
    return 0 if ok else 1


def _fmt_q(d: Mapping[int, int]) -> str:
    if not d:
        return "0"
    parts = []
    for e, c in sorted(d.items()):
        mag = "" if abs(c) == 1 else f"{abs(c)}*"
        parts.append(("- " if c < 0 else "+ ") + f"{mag}q^{e}")
    text = " ".join(parts)
    return text[2:] if text.startswith("+ ") else "-" + text[2:]


def _cmd_poly(cfg: CliConfig, out: TextIO) -> int:
    w = cfg.braid
    unred, red = homfly_polynomials(w)
    ok = True
    skein = None
    if w.is_ordinary():
        skein = link_homfly_skein(w)
        ok = skein == red
    if cfg.fmt == "json":
        out.write(_dump({"braid": format_braid(w), "reduced": laurent_to_json(red), "unreduced": laurent_to_json(unred), "skein_agrees": ok}) + "\n")
    else:
        out.write(f"P  = {_fmt_frac(red)}\n")
        out.write(f"P~ = {_fmt_frac(unred)}\n")
        if skein is not None:
            out.write(f"skein oracle: {'agrees' if ok else 'DISAGREES: ' + _fmt_frac(skein)}\n")
    return 0 if ok else 1


def _cmd_pages(cfg: CliConfig, out: TextIO, seq: str) -> int:
    res = spectral_pages(cfg.braid, seq, pad=cfg.pad, workers=cfg.workers)
    if cfg.fmt == "json":
        d = res.to_dict()
        if res.kind == "E(-1)":
            d["total_homology"] = [[a, b, n] for (a, b), n in sorted(total_homology_minus1(res).items())]
        out.write(_dump(d) + "\n")
        return 0
    out.write(f"{res.kind}: converged={res.converged} window_truncated={res.truncated}\n")
    for p in res.pages:
        out.write(f"page {p.page}: total {p.total()}, differential rank {p.rank}\n")
    out.write("final page:\n")
    if cfg.fmt == "dots":
        out.write(render_dots(res.final().dims) + "\n")
    else:
        out.write(render_table(res.final().dims) + "\n")
    if res.kind == "E(-1)":
        out.write("total homology in (gr_+, gr'_-1):\n")
        out.write(render_pairs(total_homology_minus1(res), ("gr_+", "gr'-1")) + "\n")
    return 0


def _cmd_thin(cfg: CliConfig, out: TextIO) -> int:
    w = cfg.braid
    if w.n_components() != 1:
        raise UsageError("thin needs a knot")
    dims = homfly_homology(w, pad=cfg.pad, workers=cfg.workers)
    sigma = signature(w)
    v = delta_thinness(dims, sigma)
    if cfg.fmt == "json":
        out.write(_dump(v.to_dict()) + "\n")
    else:
        verdict = f"thin at delta = {sigma}" if v.thin else "not thin"
        out.write(f"sigma = {sigma}; {verdict}\n")
        for dl, n in sorted(v.histogram.items()):
            out.write(f"  delta {dl:>3}: {n}\n")
    return 0


def _cmd_skein(cfg: CliConfig, out: TextIO, crossing: int) -> int:
    N = cfg.N or 2
    w = cfg.braid
    if not 0 <= crossing < len(w.letters):
        raise UsageError("--crossing is out of range")
    plus, minus, zero = skein_triple(w, crossing)
    rep = skein_triple_check(plus, minus, zero, N, pad=cfg.pad)
    if cfg.fmt == "json":
        d = rep.to_dict()
        d.update({"plus": format_braid(plus), "minus": format_braid(minus), "zero": format_braid(zero)})
        out.write(_dump(d) + "\n")
    else:
        out.write(f"L+ = {format_braid(plus)}\nL- = {format_braid(minus)}\nL0 = {format_braid(zero)}\n")
        out.write(f"exact sequence ranks close: {rep.closes}\n")
        dp, dm, d0 = rep.determinants
        out.write(f"det L+ = {dp}, det L- = {dm}, det L0 = {d0}; det L- + 2 det L0 = det L+: {rep.det_criterion}\n")
    return 0 if rep.closes else 1


# sl(N) works on the full complex, whose rank is 4^crossings
CORPUS_SLN_MAX_CROSSINGS = 4


def corpus_golden(name: str, pad: int = DEFAULT_PAD, workers: int = 1) -> dict:
    w = parse_braid(CORPUS[name])
    small = w.n_components() == 1 and w.n_crossings <= CORPUS_SLN_MAX_CROSSINGS
    rep = invariant_report(w, name, sln=(2,) if small else (), pad=pad, workers=workers)
    return rep.to_dict()


def _cmd_corpus(cfg: CliConfig, out: TextIO, action: str, directory: Path, names: Sequence[str]) -> int:
    names = list(names) or list(CORPUS)
    unknown = [n for n in names if n not in CORPUS]
    if unknown:
        raise UsageError(f"unknown corpus entries: {', '.join(unknown)}")
    failures = 0
    for name in names:
        path = directory / f"{name}.json"
        got = corpus_golden(name, workers=cfg.workers)
        if action == "write":
            directory.mkdir(parents=True, exist_ok=True)
            path.write_text(_dump(got) + "\n", encoding="utf-8")
            out.write(f"wrote {path}\n")
            continue
        if not path.exists():
            out.write(f"{name}: MISSING golden file {path}\n")
            failures += 1
            continue
        want = json.loads(path.read_text(encoding="utf-8"))
        if want == got:
            out.write(f"{name}: ok\n")
        else:
            diff = sorted(k for k in set(want) | set(got) if want.get(k) != got.get(k))
            out.write(f"{name}: MISMATCH in {', '.join(diff)}\n")
            failures += 1
    return 1 if failures else 0


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------


def _add_common(p: argparse.ArgumentParser, braid_required: bool = True):
    src = p.add_mutually_exclusive_group(required=braid_required)
    src.add_argument("--braid", help='braid word, e.g. "b=2; w=1 1 1"')
    src.add_argument("--knot", help="corpus entry name (" + ", ".join(CORPUS) + ")")
    p.add_argument("--pad", type=int, default=DEFAULT_PAD, help="window padding in steps of 2 q-units")
    p.add_argument("--format", dest="fmt", choices=("table", "json", "dots"), default="table")
    p.add_argument("--workers", type=int, default=None, help="threads for slice evaluation (default: logical cores)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="krhom", description="HOMFLY and sl(N) homology of braid closures.")
    sub = ap.add_subparsers(dest="command", required=True)
    p = sub.add_parser("homfly", help="triply graded homology and Euler characteristic check")
    _add_common(p)
    p.add_argument("--variant", choices=("reduced", "middle", "unreduced"), default="reduced")
    p = sub.add_parser("sln", help="sl(N) homology")
    _add_common(p)
    p.add_argument("--N", type=int, default=2)
    p.add_argument("--unreduced", action="store_true")
    p = sub.add_parser("poly", help="HOMFLY polynomial, MOY and skein routes")
    _add_common(p)
    p = sub.add_parser("pages", help="spectral sequence pages")
    _add_common(p)
    p.add_argument("--seq", required=True, help="N >= 1 or 'minus1'")
    p = sub.add_parser("thin", help="delta-thinness against the signature")
    _add_common(p)
    p = sub.add_parser("skein", help="skein exact sequence at one crossing")
    _add_common(p)
    p.add_argument("--crossing", type=int, default=0, help="letter index of the crossing (0-based)")
    p.add_argument("--N", type=int, default=2)
    p = sub.add_parser("stabilize", help="smallest N from which sl(N) homology is the regraded HOMFLY homology")
    _add_common(p)
    p.add_argument("--N-max", dest="N_max", type=int, default=DEFAULT_N_MAX)
    p = sub.add_parser("corpus", help="golden files of the built-in corpus")
    p.add_argument("action", choices=("verify", "write"))
    p.add_argument("names", nargs="*")
    p.add_argument("--dir", type=Path, default=DEFAULT_CORPUS_DIR)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--format", dest="fmt", choices=("table", "json", "dots"), default="table")
    return ap


def _config(args: argparse.Namespace) -> CliConfig:
    braid = None
    name = getattr(args, "knot", None)
    if getattr(args, "braid", None):
        braid = parse_braid(args.braid)
    elif name:
        if name not in CORPUS:
            raise UsageError(f"unknown corpus entry {name!r}")
        braid = parse_braid(CORPUS[name])
    workers = args.workers if args.workers is not None else max(1, os.cpu_count() or 1)
    variant = getattr(args, "variant", "reduced")
    if getattr(args, "unreduced", False):
        variant = "unreduced"
    return CliConfig(args.command, braid, name, getattr(args, "N", None), variant, getattr(args, "pad", DEFAULT_PAD), args.fmt, workers)


def run(argv: Optional[Sequence[str]] = None, out: TextIO = None, err: TextIO = None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    ap = build_parser()
    try:
        with contextlib.redirect_stdout(out), contextlib.redirect_stderr(err):
            args = ap.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = _config(args)
        if args.command == "homfly":
            return _cmd_homfly(cfg, out)
        if args.command == "sln":
            return _cmd_sln(cfg, out)
        if args.command == "poly":
            return _cmd_poly(cfg, out)
        if args.command == "pages":
            seq = args.seq
            if seq != "minus1" and not (seq.isdigit() and int(seq) >= 1):
                raise UsageError("--seq must be a positive integer or 'minus1'")
            return _cmd_pages(cfg, out, seq)
        if args.command == "thin":
            return _cmd_thin(cfg, out)
        if args.command == "skein":
            return _cmd_skein(cfg, out, args.crossing)
        if args.command == "stabilize":
            N0, match = stabilization(cfg.braid, N_max=args.N_max, pad=cfg.pad)
            if cfg.fmt == "json":
                out.write(_dump({"N0": N0, "matches": {str(k): v for k, v in match.items()}}) + "\n")
            else:
                out.write(f"N0 = {N0 if N0 is not None else 'none <= ' + str(args.N_max)}\n")
            return 0
        if args.command == "corpus":
            return _cmd_corpus(cfg, out, args.action, args.dir, args.names)
    except (BraidParseError, UsageError, ValueError) as exc:
        err.write(f"error: {exc}\n")
        ap.print_usage(err)
        return 2
    except InvariantError as exc:
        err.write(f"check failed: {exc}\n")
        return 1
    return 2


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
