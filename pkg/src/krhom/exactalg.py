"""Exact arithmetic layer.

Rationals are :class:`fractions.Fraction`; integral values are kept as plain
``int`` wherever possible because most coefficients in the KR complexes are
integers and ``int`` arithmetic is several times faster.

Contents:

* :class:`MultiPoly` -- multivariate polynomials over Q on a named variable
  universe, with substitution and exact division.
* :class:`Laurent2` / :class:`Laurent2Frac` -- Laurent polynomials in (a, q)
  and quotients by a power of (q - q^-1).
* :class:`SparseMatQ`, :class:`Echelon`, :func:`rank_kernel_image` --
  fraction-free sparse elimination.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from fractions import Fraction
from math import gcd
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

Rational = Fraction
Coeff = Union[int, Fraction]
Exps = Tuple[int, ...]


def clean(c: Coeff) -> Coeff:
    """Return ``c`` as an ``int`` when it is integral."""
    if isinstance(c, Fraction) and c.denominator == 1:
        return c.numerator
    return c


def as_rational(c: Coeff) -> Fraction:
    return c if isinstance(c, Fraction) else Fraction(c)


class ExactDivisionError(ArithmeticError):
    """Raised when a division that must be exact leaves a remainder."""


class SubstitutionCycleError(ValueError):
    """Raised when substitution assignments refer to each other cyclically."""


# ---------------------------------------------------------------------------
# Multivariate polynomials
# ---------------------------------------------------------------------------


class MultiPoly:
    """Polynomial over Q in a fixed, ordered variable universe.

    Terms are stored as ``{exponent tuple: coefficient}``.  The exponent tuple
    is dense over the universe; universes are small (one variable per free
    edge of a diagram), so this is both compact and fast to hash.

    Each variable has q-degree 2, so ``q_degree`` is twice the total degree.
    """

    __slots__ = ("variables", "terms", "_hash")

    def __init__(self, variables: Sequence, terms: Optional[Mapping[Exps, Coeff]] = None):
        self.variables: Tuple = tuple(variables)
        n = len(self.variables)
        clean_terms: Dict[Exps, Coeff] = {}
        if terms:
            for e, c in terms.items():
                if c != 0:
                    e = tuple(e)
                    if len(e) != n:
                        raise ValueError(f"exponent {e} does not match {n} variables")
                    clean_terms[e] = clean(c)
        self.terms: Dict[Exps, Coeff] = clean_terms
        self._hash: Optional[int] = None

    # -- constructors -------------------------------------------------------
    @classmethod
    def _raw(cls, variables: Tuple, terms: Dict[Exps, Coeff]) -> "MultiPoly":
        p = cls.__new__(cls)
        p.variables = variables
        p.terms = terms
        p._hash = None
        return p

    @classmethod
    def zero(cls, variables: Sequence) -> "MultiPoly":
        return cls._raw(tuple(variables), {})

    @classmethod
    def const(cls, variables: Sequence, c: Coeff) -> "MultiPoly":
        variables = tuple(variables)
        if c == 0:
            return cls._raw(variables, {})
        return cls._raw(variables, {(0,) * len(variables): clean(c)})

    @classmethod
    def one(cls, variables: Sequence) -> "MultiPoly":
        return cls.const(variables, 1)

    @classmethod
    def var(cls, variables: Sequence, name) -> "MultiPoly":
        variables = tuple(variables)
        idx = variables.index(name)
        e = [0] * len(variables)
        e[idx] = 1
        return cls._raw(variables, {tuple(e): 1})

    @classmethod
    def linear(cls, variables: Sequence, coeffs: Mapping, constant: Coeff = 0) -> "MultiPoly":
        """Build ``constant + sum coeffs[v] * v``."""
        variables = tuple(variables)
        n = len(variables)
        terms: Dict[Exps, Coeff] = {}
        if constant != 0:
            terms[(0,) * n] = clean(constant)
        for name, c in coeffs.items():
            if c == 0:
                continue
            e = [0] * n
            e[variables.index(name)] = 1
            terms[tuple(e)] = clean(c)
        return cls._raw(variables, terms)

    # -- basic protocol -----------------------------------------------------
    def __bool__(self) -> bool:
        return bool(self.terms)

    def is_zero(self) -> bool:
        return not self.terms

    def __eq__(self, other) -> bool:
        if isinstance(other, (int, Fraction)):
            other = MultiPoly.const(self.variables, other)
        if not isinstance(other, MultiPoly):
            return NotImplemented
        if self.variables != other.variables:
            a, b = unify(self, other)
            return a.terms == b.terms
        return self.terms == other.terms

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self.variables, frozenset(self.terms.items())))
        return self._hash

    def __repr__(self) -> str:
        return f"MultiPoly({self})"

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for e in sorted(self.terms, reverse=True):
            c = self.terms[e]
            mono = "*".join(
                (f"X{v}" if k == 1 else f"X{v}^{k}") for v, k in zip(self.variables, e) if k
            )
            if not mono:
                parts.append(str(c))
            elif c == 1:
                parts.append(mono)
            elif c == -1:
                parts.append("-" + mono)
            else:
                parts.append(f"{c}*{mono}")
        return " + ".join(parts).replace("+ -", "- ")

    # -- arithmetic ---------------------------------------------------------
    def _coerce(self, other) -> "MultiPoly":
        if isinstance(other, MultiPoly):
            if other.variables != self.variables:
                raise ValueError("variable universes differ; use unify()")
            return other
        if isinstance(other, (int, Fraction)):
            return MultiPoly.const(self.variables, other)
        raise TypeError(f"cannot combine MultiPoly with {type(other).__name__}")

    def __add__(self, other) -> "MultiPoly":
        if isinstance(other, MultiPoly) and other.variables != self.variables:
            a, b = unify(self, other)
            return a + b
        other = self._coerce(other)
        terms = dict(self.terms)
        for e, c in other.terms.items():
            v = terms.get(e, 0) + c
            if v == 0:
                terms.pop(e, None)
            else:
                terms[e] = clean(v)
        return MultiPoly._raw(self.variables, terms)

    __radd__ = __add__

    def __neg__(self) -> "MultiPoly":
        return MultiPoly._raw(self.variables, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other) -> "MultiPoly":
        if isinstance(other, MultiPoly) and other.variables != self.variables:
            a, b = unify(self, other)
            return a - b
        return self + (-self._coerce(other))

    def __rsub__(self, other) -> "MultiPoly":
        return (-self) + other

    def __mul__(self, other) -> "MultiPoly":
        if isinstance(other, (int, Fraction)):
            if other == 0:
                return MultiPoly._raw(self.variables, {})
            return MultiPoly._raw(self.variables, {e: clean(c * other) for e, c in self.terms.items()})
        if isinstance(other, MultiPoly) and other.variables != self.variables:
            a, b = unify(self, other)
            return a * b
        other = self._coerce(other)
        terms: Dict[Exps, Coeff] = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(x + y for x, y in zip(e1, e2))
                v = terms.get(e, 0) + c1 * c2
                if v == 0:
                    terms.pop(e, None)
                else:
                    terms[e] = v
        return MultiPoly._raw(self.variables, {e: clean(c) for e, c in terms.items()})

    __rmul__ = __mul__

    def __pow__(self, k: int) -> "MultiPoly":
        if k < 0:
            raise ValueError("negative power")
        result = MultiPoly.one(self.variables)
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    # -- structure ------------------------------------------------------------
    def total_degree(self) -> int:
        if not self.terms:
            return -1
        return max(sum(e) for e in self.terms)

    def q_degree(self) -> int:
        """q-degree of a homogeneous polynomial (every variable has degree 2)."""
        if not self.is_homogeneous():
            raise ValueError("polynomial is not homogeneous")
        return 2 * self.total_degree()

    def is_homogeneous(self) -> bool:
        degs = {sum(e) for e in self.terms}
        return len(degs) <= 1

    def homogeneous_parts(self) -> Dict[int, "MultiPoly"]:
        parts: Dict[int, Dict[Exps, Coeff]] = {}
        for e, c in self.terms.items():
            parts.setdefault(sum(e), {})[e] = c
        return {d: MultiPoly._raw(self.variables, t) for d, t in parts.items()}

    def constant_term(self) -> Coeff:
        return self.terms.get((0,) * len(self.variables), 0)

    def is_constant(self) -> bool:
        return all(not any(e) for e in self.terms)

    def used_variables(self) -> set:
        used = set()
        for e in self.terms:
            for v, k in zip(self.variables, e):
                if k:
                    used.add(v)
        return used

    def linear_coefficients(self) -> Dict:
        """Coefficients of a polynomial of degree at most one."""
        out = {}
        for e, c in self.terms.items():
            s = sum(e)
            if s > 1:
                raise ValueError("polynomial is not linear")
            if s == 1:
                out[self.variables[e.index(1)]] = c
        return out

    def with_variables(self, variables: Sequence) -> "MultiPoly":
        """Re-express on a larger (or reordered) universe."""
        variables = tuple(variables)
        if variables == self.variables:
            return self
        pos = {v: i for i, v in enumerate(variables)}
        n = len(variables)
        terms = {}
        for e, c in self.terms.items():
            ne = [0] * n
            for v, k in zip(self.variables, e):
                if k:
                    if v not in pos:
                        raise ValueError(f"variable {v!r} missing from target universe")
                    ne[pos[v]] = k
            terms[tuple(ne)] = c
        return MultiPoly._raw(variables, terms)

    def evaluate(self, values: Mapping) -> Coeff:
        total: Coeff = 0
        for e, c in self.terms.items():
            t = c
            for v, k in zip(self.variables, e):
                if k:
                    t = t * values[v] ** k
            total += t
        return clean(total)

    def substitute(self, assignments: Mapping) -> "MultiPoly":
        return poly_substitute(self, assignments)

    def exact_divide(self, d: "MultiPoly") -> "MultiPoly":
        return poly_exact_divide(self, d)


def unify(p: MultiPoly, q: MultiPoly) -> Tuple[MultiPoly, MultiPoly]:
    """Bring two polynomials onto the union of their universes."""
    if p.variables == q.variables:
        return p, q
    extra = [v for v in q.variables if v not in p.variables]
    universe = p.variables + tuple(extra)
    return p.with_variables(universe), q.with_variables(universe)


def poly_arith(p: MultiPoly, q: MultiPoly, op: str) -> MultiPoly:
    if op == "add":
        return p + q
    if op == "sub":
        return p - q
    if op == "mul":
        return p * q
    raise ValueError(f"unknown op {op!r}")


def _resolve_assignments(assignments: Mapping) -> Dict:
    """Substitute assignments into each other until no assigned variable
    appears on a right-hand side.  Raises on cycles."""
    resolved: Dict = {}
    state: Dict = {}

    def visit(v):
        if state.get(v) == 2:
            return resolved[v]
        if state.get(v) == 1:
            raise SubstitutionCycleError(f"cyclic substitution through {v!r}")
        state[v] = 1
        rhs = assignments[v]
        deps = [u for u in rhs.used_variables() if u in assignments]
        if deps:
            sub = {u: visit(u) for u in deps}
            rhs = _substitute_resolved(rhs, sub)
        resolved[v] = rhs
        state[v] = 2
        return rhs

    for v in assignments:
        visit(v)
    return resolved


def _substitute_resolved(p: MultiPoly, assignments: Mapping) -> MultiPoly:
    variables = p.variables
    # targets may live on a different universe; unify everything.
    universe = list(variables)
    for rhs in assignments.values():
        for v in rhs.variables:
            if v not in universe:
                universe.append(v)
    universe = tuple(universe)
    reps = {v: rhs.with_variables(universe) for v, rhs in assignments.items()}
    idx_assigned = [(i, reps[v]) for i, v in enumerate(variables) if v in reps]
    if not idx_assigned:
        return p.with_variables(universe)
    assigned_idx = {i for i, _ in idx_assigned}
    pos = [universe.index(v) for v in variables]
    power_cache: Dict[Tuple[int, int], MultiPoly] = {}

    def power(i: int, rhs: MultiPoly, k: int) -> MultiPoly:
        key = (i, k)
        if key not in power_cache:
            power_cache[key] = rhs ** k
        return power_cache[key]

    n = len(universe)
    total: Dict[Exps, Coeff] = {}
    for e, c in p.terms.items():
        base = [0] * n
        for i, k in enumerate(e):
            if k and i not in assigned_idx:
                base[pos[i]] += k
        term = MultiPoly._raw(universe, {tuple(base): c})
        for i, rhs in idx_assigned:
            k = e[i]
            if k:
                term = term * power(i, rhs, k)
        for te, tc in term.terms.items():
            v = total.get(te, 0) + tc
            if v == 0:
                total.pop(te, None)
            else:
                total[te] = v
    return MultiPoly._raw(universe, {e: clean(c) for e, c in total.items()})


def poly_substitute(p: MultiPoly, assignments: Mapping) -> MultiPoly:
    """Replace each assigned variable by its polynomial.

    Assignments may refer to one another as long as there is no cycle; the
    result keeps the universe of ``p`` (extended by any new variables).
    """
    if not assignments:
        return p
    resolved = _resolve_assignments(assignments)
    return _substitute_resolved(p, resolved)


def _lex_leading(terms: Mapping[Exps, Coeff]) -> Exps:
    return max(terms)


def poly_exact_divide(p: MultiPoly, d: MultiPoly) -> MultiPoly:
    """Quotient of an exact division ``p / d``; raises if a remainder is left."""
    if d.is_zero():
        raise ZeroDivisionError("division by the zero polynomial")
    if p.variables != d.variables:
        p, d = unify(p, d)
    if p.is_zero():
        return MultiPoly.zero(p.variables)
    lead_d = _lex_leading(d.terms)
    lc_d = d.terms[lead_d]
    rem = dict(p.terms)
    quot: Dict[Exps, Coeff] = {}
    d_items = list(d.terms.items())
    while rem:
        lead = max(rem)
        diff = tuple(a - b for a, b in zip(lead, lead_d))
        if any(x < 0 for x in diff):
            raise ExactDivisionError(f"{d} does not divide {p}")
        c = rem[lead]
        qc = clean(Fraction(c) / lc_d) if not (isinstance(c, int) and isinstance(lc_d, int) and c % lc_d == 0) else c // lc_d
        quot[diff] = qc
        for e, dc in d_items:
            t = tuple(a + b for a, b in zip(diff, e))
            v = rem.get(t, 0) - qc * dc
            if v == 0:
                rem.pop(t, None)
            else:
                rem[t] = v
    return MultiPoly._raw(p.variables, {e: clean(c) for e, c in quot.items()})


def monomials_of_degree(nvars: int, degree: int, allowed: Optional[Sequence[int]] = None) -> List[Exps]:
    """All exponent vectors of the given total degree, in lex-descending order.

    ``allowed`` restricts the support to a subset of variable positions.
    """
    if degree < 0:
        return []
    positions = list(range(nvars)) if allowed is None else list(allowed)
    out: List[Exps] = []

    def rec(idx: int, remaining: int, cur: List[int]):
        if idx == len(positions) - 1:
            cur[positions[idx]] = remaining
            out.append(tuple(cur))
            cur[positions[idx]] = 0
            return
        for k in range(remaining, -1, -1):
            cur[positions[idx]] = k
            rec(idx + 1, remaining - k, cur)
        cur[positions[idx]] = 0

    if not positions:
        return [tuple([0] * nvars)] if degree == 0 else []
    rec(0, degree, [0] * nvars)
    return out


# ---------------------------------------------------------------------------
# Laurent polynomials in (a, q)
# ---------------------------------------------------------------------------


class Laurent2:
    """Laurent polynomial in two variables, keyed by (a-exponent, q-exponent)."""

    __slots__ = ("terms",)

    def __init__(self, terms: Optional[Mapping[Tuple[int, int], Coeff]] = None):
        self.terms: Dict[Tuple[int, int], Coeff] = {}
        if terms:
            for k, c in terms.items():
                if c != 0:
                    self.terms[(int(k[0]), int(k[1]))] = clean(c)

    @classmethod
    def monomial(cls, a: int, q: int, c: Coeff = 1) -> "Laurent2":
        return cls({(a, q): c})

    @classmethod
    def const(cls, c: Coeff) -> "Laurent2":
        return cls({(0, 0): c})

    def __bool__(self) -> bool:
        return bool(self.terms)

    def __eq__(self, other) -> bool:
        if isinstance(other, (int, Fraction)):
            other = Laurent2.const(other)
        if isinstance(other, Laurent2Frac):
            return other == self
        if not isinstance(other, Laurent2):
            return NotImplemented
        return self.terms == other.terms

    def __hash__(self) -> int:
        return hash(frozenset(self.terms.items()))

    def __add__(self, other) -> "Laurent2":
        if isinstance(other, (int, Fraction)):
            other = Laurent2.const(other)
        t = dict(self.terms)
        for k, c in other.terms.items():
            v = t.get(k, 0) + c
            if v == 0:
                t.pop(k, None)
            else:
                t[k] = v
        return Laurent2(t)

    __radd__ = __add__

    def __neg__(self) -> "Laurent2":
        return Laurent2({k: -c for k, c in self.terms.items()})

    def __sub__(self, other) -> "Laurent2":
        if isinstance(other, (int, Fraction)):
            other = Laurent2.const(other)
        return self + (-other)

    def __rsub__(self, other) -> "Laurent2":
        return (-self) + other

    def __mul__(self, other) -> "Laurent2":
        if isinstance(other, (int, Fraction)):
            return Laurent2({k: c * other for k, c in self.terms.items()})
        if isinstance(other, Laurent2Frac):
            return other * self
        t: Dict[Tuple[int, int], Coeff] = {}
        for (a1, q1), c1 in self.terms.items():
            for (a2, q2), c2 in other.terms.items():
                k = (a1 + a2, q1 + q2)
                t[k] = t.get(k, 0) + c1 * c2
        return Laurent2(t)

    __rmul__ = __mul__

    def __pow__(self, k: int) -> "Laurent2":
        if k < 0:
            if len(self.terms) != 1:
                raise ValueError("only monomials can be inverted")
            ((a, q), c), = self.terms.items()
            return Laurent2({(-a * -k, -q * -k): Fraction(1) / Fraction(c) ** -k})
        out = Laurent2.const(1)
        for _ in range(k):
            out = out * self
        return out

    def shift(self, a: int = 0, q: int = 0) -> "Laurent2":
        return Laurent2({(x + a, y + q): c for (x, y), c in self.terms.items()})

    def q_exponents(self) -> List[int]:
        return sorted({q for (_, q) in self.terms})

    def a_slices(self) -> Dict[int, Dict[int, Coeff]]:
        out: Dict[int, Dict[int, Coeff]] = {}
        for (a, q), c in self.terms.items():
            out.setdefault(a, {})[q] = c
        return out

    def substitute_a(self, a_to_q: int) -> Dict[int, Coeff]:
        """Specialize a = q^a_to_q; returns a one-variable Laurent dict."""
        out: Dict[int, Coeff] = {}
        for (a, q), c in self.terms.items():
            e = q + a * a_to_q
            out[e] = out.get(e, 0) + c
        return {e: clean(c) for e, c in out.items() if c != 0}

    def __repr__(self) -> str:
        return f"Laurent2({format_laurent2(self)})"

    def __str__(self) -> str:
        return format_laurent2(self)


def format_laurent2(p: Laurent2) -> str:
    if not p.terms:
        return "0"
    parts = []
    for (a, q) in sorted(p.terms, key=lambda k: (k[0], k[1])):
        c = p.terms[(a, q)]
        mono = ""
        if a:
            mono += "a" if a == 1 else f"a^{a}"
        if q:
            mono += ("*" if mono else "") + ("q" if q == 1 else f"q^{q}")
        if not mono:
            parts.append(str(c))
        elif c == 1:
            parts.append(mono)
        elif c == -1:
            parts.append("-" + mono)
        else:
            parts.append(f"{c}*{mono}")
    return " + ".join(parts).replace("+ -", "- ")


def _divide_by_z(num: Laurent2) -> Optional[Laurent2]:
    """Exact division by (q - q^-1); ``None`` when not divisible.

    Per a-slice, q * N(q) / (q^2 - 1) is computed by synthetic division.
    """
    out: Dict[Tuple[int, int], Coeff] = {}
    for a, sl in num.a_slices().items():
        lo = min(sl)
        hi = max(sl)
        # f(q) = q^{1-lo} * N(q) is an ordinary polynomial; divide by q^2 - 1.
        coeffs = [sl.get(lo + i, 0) for i in range(hi - lo + 1)]  # degree ascending
        # polynomial division by (q^2 - 1) from the top.
        rem = list(coeffs)
        deg = len(rem) - 1
        quot = [0] * max(deg - 1, 0)
        for d in range(deg, 1, -1):
            c = rem[d]
            if c:
                quot[d - 2] = c
                rem[d] = 0
                rem[d - 2] += c
        if any(rem[: min(2, len(rem))]) or (deg < 2 and any(rem)):
            return None
        # quotient Q with N * q^{-lo} = Q * (q^2 - 1); so N/(q - q^-1) = q^{lo+1} Q.
        for i, c in enumerate(quot):
            if c:
                out[(a, lo + 1 + i)] = c
    return Laurent2(out)


Z = Laurent2({(0, 1): 1, (0, -1): -1})  # q - q^-1


class Laurent2Frac:
    """``numerator / (q - q^-1)^denom_power`` with minimal denominator."""

    __slots__ = ("numerator", "denom_power")

    def __init__(self, numerator: Laurent2, denom_power: int = 0):
        if denom_power < 0:
            numerator = numerator * (Z ** (-denom_power))
            denom_power = 0
        while denom_power > 0 and numerator.terms:
            quot = _divide_by_z(numerator)
            if quot is None:
                break
            numerator, denom_power = quot, denom_power - 1
        if not numerator.terms:
            denom_power = 0
        self.numerator = numerator
        self.denom_power = denom_power

    @classmethod
    def const(cls, c: Coeff) -> "Laurent2Frac":
        return cls(Laurent2.const(c))

    @classmethod
    def from_poly(cls, p: Laurent2) -> "Laurent2Frac":
        return cls(p, 0)

    def _aligned(self, other: "Laurent2Frac") -> Tuple[Laurent2, Laurent2, int]:
        k = max(self.denom_power, other.denom_power)
        a = self.numerator * (Z ** (k - self.denom_power))
        b = other.numerator * (Z ** (k - other.denom_power))
        return a, b, k

    @staticmethod
    def _coerce(x) -> "Laurent2Frac":
        if isinstance(x, Laurent2Frac):
            return x
        if isinstance(x, Laurent2):
            return Laurent2Frac(x)
        if isinstance(x, (int, Fraction)):
            return Laurent2Frac.const(x)
        raise TypeError(type(x).__name__)

    def __add__(self, other) -> "Laurent2Frac":
        other = self._coerce(other)
        a, b, k = self._aligned(other)
        return Laurent2Frac(a + b, k)

    __radd__ = __add__

    def __neg__(self) -> "Laurent2Frac":
        return Laurent2Frac(-self.numerator, self.denom_power)

    def __sub__(self, other) -> "Laurent2Frac":
        return self + (-self._coerce(other))

    def __rsub__(self, other) -> "Laurent2Frac":
        return (-self) + other

    def __mul__(self, other) -> "Laurent2Frac":
        other = self._coerce(other)
        return Laurent2Frac(self.numerator * other.numerator, self.denom_power + other.denom_power)

    __rmul__ = __mul__

    def divide_by_z(self, k: int = 1) -> "Laurent2Frac":
        return Laurent2Frac(self.numerator, self.denom_power + k)

    def __eq__(self, other) -> bool:
        if isinstance(other, (int, Fraction, Laurent2)):
            other = self._coerce(other)
        if not isinstance(other, Laurent2Frac):
            return NotImplemented
        a, b, _ = self._aligned(other)
        return a == b

    def __hash__(self) -> int:
        return hash((frozenset(self.numerator.terms.items()), self.denom_power))

    def is_polynomial(self) -> bool:
        return self.denom_power == 0

    def as_polynomial(self) -> Laurent2:
        if self.denom_power:
            raise ExactDivisionError("value is not a Laurent polynomial")
        return self.numerator

    def exact_div(self, other: "Laurent2Frac") -> "Laurent2Frac":
        """Divide by ``other`` when the quotient is a Laurent2Frac.

        Only divisors whose numerator is a product of a monomial and powers of
        (a - a^-1) or (q - q^-1) are needed here; general exact division is
        done by multivariate long division on shifted polynomials.
        """
        other = self._coerce(other)
        num = _laurent2_exact_divide(self.numerator, other.numerator)
        return Laurent2Frac(num, self.denom_power - other.denom_power)

    def series_coefficients(self, q_max: int) -> Dict[Tuple[int, int], Coeff]:
        """Expand in ascending powers of q up to ``q_max`` (inclusive).

        Uses 1/(q - q^-1) = -q * sum_{m >= 0} q^{2m}.
        """
        out: Dict[Tuple[int, int], Coeff] = {}
        k = self.denom_power
        # coefficients of (-q/(1-q^2))^k = (-1)^k q^k sum_m C(m+k-1, k-1) q^{2m}
        for (a, q), c in self.numerator.terms.items():
            if k == 0:
                if q <= q_max:
                    out[(a, q)] = out.get((a, q), 0) + c
                continue
            m = 0
            while q + k + 2 * m <= q_max:
                mult = _binom(m + k - 1, k - 1)
                key = (a, q + k + 2 * m)
                out[key] = out.get(key, 0) + c * mult * (-1) ** k
                m += 1
        return {key: clean(c) for key, c in out.items() if c != 0}

    def min_q_exponent(self) -> int:
        """Lowest q-power of the ascending series expansion."""
        return min(q for (_, q) in self.numerator.terms) + self.denom_power

    def __repr__(self) -> str:
        if self.denom_power == 0:
            return f"Laurent2Frac({self.numerator})"
        return f"Laurent2Frac(({self.numerator}) / (q - q^-1)^{self.denom_power})"

    __str__ = __repr__


def _binom(n: int, k: int) -> int:
    from math import comb

    return comb(n, k)


def _laurent2_exact_divide(p: Laurent2, d: Laurent2) -> Laurent2:
    if not d.terms:
        raise ZeroDivisionError("division by zero Laurent polynomial")
    if not p.terms:
        return Laurent2()
    amin = min(a for a, _ in list(p.terms) + list(d.terms))
    qmin = min(q for _, q in list(p.terms) + list(d.terms))
    names = ("a", "q")
    P = MultiPoly(names, {(a - amin, q - qmin): c for (a, q), c in p.terms.items()})
    da = min(a for a, _ in d.terms)
    dq = min(q for _, q in d.terms)
    D = MultiPoly(names, {(a - da, q - dq): c for (a, q), c in d.terms.items()})
    Q = poly_exact_divide(P, D)
    return Laurent2({(e[0] + amin - da, e[1] + qmin - dq): c for e, c in Q.terms.items()})


def laurent2_specialize(P: Union[Laurent2, Laurent2Frac], N: int):
    """Set a = q^N.

    Returns a one-variable Laurent dict ``{q-exponent: coefficient}`` when the
    result is a Laurent polynomial, otherwise a pair ``(numerator dict,
    denom_power)`` over (q - q^-1).
    """
    if isinstance(P, Laurent2):
        return P.substitute_a(N)
    num = P.numerator.substitute_a(N)
    k = P.denom_power
    as2 = Laurent2({(0, e): c for e, c in num.items()})
    while k > 0 and as2.terms:
        quot = _divide_by_z(as2)
        if quot is None:
            break
        as2, k = quot, k - 1
    flat = {q: c for (_, q), c in as2.terms.items()}
    if k == 0:
        return flat
    return flat, k


# ---------------------------------------------------------------------------
# Sparse linear algebra
# ---------------------------------------------------------------------------


@dataclass
class SparseMatQ:
    """Sparse rational matrix; entries keyed by (row, col)."""

    rows: int
    cols: int
    entries: Dict[Tuple[int, int], Coeff] = field(default_factory=dict)

    def __post_init__(self):
        clean_entries = {}
        for (r, c), v in self.entries.items():
            if not (0 <= r < self.rows and 0 <= c < self.cols):
                raise IndexError(f"entry {(r, c)} outside {self.rows}x{self.cols}")
            if v != 0:
                clean_entries[(r, c)] = clean(v)
        self.entries = clean_entries

    @classmethod
    def from_dense(cls, rows: Sequence[Sequence[Coeff]]) -> "SparseMatQ":
        m = len(rows)
        n = len(rows[0]) if m else 0
        return cls(m, n, {(i, j): v for i, r in enumerate(rows) for j, v in enumerate(r) if v != 0})

    def column_vectors(self) -> List[Dict[int, Coeff]]:
        cols: List[Dict[int, Coeff]] = [dict() for _ in range(self.cols)]
        for (r, c), v in self.entries.items():
            cols[c][r] = v
        return cols

    def row_vectors(self) -> List[Dict[int, Coeff]]:
        rows: List[Dict[int, Coeff]] = [dict() for _ in range(self.rows)]
        for (r, c), v in self.entries.items():
            rows[r][c] = v
        return rows

    def apply(self, vec: Mapping[int, Coeff]) -> Dict[int, Coeff]:
        out: Dict[int, Coeff] = {}
        cols = self.column_vectors()
        for c, x in vec.items():
            for r, v in cols[c].items():
                out[r] = out.get(r, 0) + v * x
        return {r: clean(v) for r, v in out.items() if v != 0}


def _integerize(vec: Mapping[int, Coeff]) -> Tuple[Dict[int, int], int]:
    """Scale a rational vector to a primitive integer vector.

    Returns ``(ivec, den)`` with ``vec == ivec / den``.
    """
    den = 1
    for v in vec.values():
        if isinstance(v, Fraction) and v.denominator != 1:
            den = den * v.denominator // gcd(den, v.denominator)
    out = {}
    for k, v in vec.items():
        if v:
            out[k] = int(v * den) if isinstance(v, Fraction) else v * den
    return out, den


def _content(vec: Mapping[int, int]) -> int:
    g = 0
    for v in vec.values():
        g = gcd(g, v)
        if g == 1:
            return 1
    return g


class Echelon:
    """Incremental fraction-free row echelon form over Z (hence Q).

    Rows are primitive integer vectors (dict col -> int).  A new row is first
    reduced against all existing rows in insertion order, so row ``t`` is
    zero at the pivots of rows ``1..t-1``; its pivot is then chosen among its
    columns below ``pivot_limit`` (a unit entry if available, else the
    smallest column).  Columns at or above the limit are bookkeeping columns
    that are carried along but never pivoted on, which is how kernels are
    tracked.

    ``reduce`` returns ``(vector, scale)`` meaning the exact reduced vector is
    ``vector / scale``.
    """

    __slots__ = ("rows", "order", "pivot_limit")

    def __init__(self, pivot_limit: Optional[int] = None):
        self.rows: Dict[int, Dict[int, int]] = {}
        self.order: Dict[int, int] = {}
        self.pivot_limit = pivot_limit

    def __len__(self) -> int:
        return len(self.rows)

    @property
    def pivots(self) -> List[int]:
        return sorted(self.rows)

    def _is_real(self, c: int) -> bool:
        return self.pivot_limit is None or c < self.pivot_limit

    def reduce(self, vec: Mapping[int, Coeff]) -> Tuple[Dict[int, int], int]:
        v, scale = _integerize(vec)
        rows = self.rows
        order = self.order
        heap = [(order[c], c) for c in v if c in rows]
        heapq.heapify(heap)
        while heap:
            _, c = heapq.heappop(heap)
            x = v.get(c)
            if not x:
                continue
            row = rows[c]
            p = row[c]
            g = gcd(p, x)
            mp, mx = p // g, x // g
            if mp < 0:
                mp, mx = -mp, -mx
            if mp != 1:
                for k in v:
                    v[k] *= mp
                scale *= mp
            for k, rv in row.items():
                nv = v.get(k, 0) - mx * rv
                if nv:
                    if k not in v and k in rows:
                        heapq.heappush(heap, (order[k], k))
                    v[k] = nv
                else:
                    v.pop(k, None)
        if v:
            g = gcd(_content(v), scale)
            if g > 1:
                v = {k: x // g for k, x in v.items()}
                scale //= g
        return v, scale

    def add(self, vec: Mapping[int, Coeff]) -> Tuple[Optional[int], Dict[int, int], int]:
        """Reduce and insert.  Returns (pivot or None, reduced vector, scale)."""
        v, scale = self.reduce(vec)
        real = [c for c in v if self._is_real(c)]
        if not real:
            return None, v, scale
        units = [c for c in real if v[c] in (1, -1)]
        p = min(units) if units else min(real)
        g = _content(v)
        row = {k: x // g for k, x in v.items()} if g > 1 else dict(v)
        if row[p] < 0:
            row = {k: -x for k, x in row.items()}
        self.order[p] = len(self.rows)
        self.rows[p] = row
        return p, v, scale

    def rank(self) -> int:
        return len(self.rows)

    def reduced_rows(self) -> Dict[int, Dict[int, Fraction]]:
        """Fully reduced echelon form over Q with unit pivots."""
        out: Dict[int, Dict[int, Fraction]] = {}
        for p in sorted(self.rows, key=lambda c: -self.order[c]):
            row = {k: Fraction(x) for k, x in self.rows[p].items()}
            for q in list(row):
                if q != p and q in out and row.get(q):
                    f = row[q]
                    for k, x in out[q].items():
                        nv = row.get(k, 0) - f * x
                        if nv:
                            row[k] = nv
                        else:
                            row.pop(k, None)
            piv = row[p]
            out[p] = {k: x / piv for k, x in row.items() if x != 0}
        return out


def rank_kernel_image(M: SparseMatQ):
    """Rank, kernel basis, image basis and pivot columns of ``M``.

    Kernel vectors are dict col -> Fraction, one per free column, with a 1 in
    that free column.  Image basis vectors are columns of ``M`` at pivot
    positions (dict row -> value).
    """
    ech = Echelon()
    for r in M.row_vectors():
        if r:
            ech.add(r)
    rref = ech.reduced_rows()
    pivots = sorted(rref)
    pivset = set(pivots)
    free = [c for c in range(M.cols) if c not in pivset]
    kernel = []
    for f in free:
        vec: Dict[int, Fraction] = {f: Fraction(1)}
        for p in pivots:
            x = rref[p].get(f)
            if x:
                vec[p] = -x
        kernel.append(vec)
    cols = M.column_vectors()
    image = [dict(cols[p]) for p in pivots]
    return {
        "rank": len(pivots),
        "kernel": kernel,
        "image": image,
        "pivots": pivots,
    }


def matrix_rank(vectors: Iterable[Mapping[int, Coeff]]) -> int:
    ech = Echelon()
    for v in vectors:
        if v:
            ech.add(v)
    return ech.rank()
