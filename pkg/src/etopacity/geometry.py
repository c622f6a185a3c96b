"""Exact rational convex polyhedra and finite unions of them.

A :class:`Polyhedron` is a conjunction of rows ``sum(c_i * v_i) + const REL 0``
with ``REL`` one of ``<``, ``<=``, ``=``.  Every variable is implicitly
non-negative; those rows are materialized on construction so that the stored
constraint is exactly the set it denotes.  Variable elimination is
Fourier-Motzkin with Gaussian substitution for equalities.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import product
from math import gcd, lcm
from typing import Iterable, Mapping

LT, LE, EQ = "<", "<=", "="
_RELS = (LT, LE, EQ)


def _frac(v) -> Fraction:
    return v if isinstance(v, Fraction) else Fraction(v)


@dataclass(frozen=True, order=True)
class Row:
    """``sum(coeffs) + const rel 0``; coeffs is a sorted tuple without zeros."""

    coeffs: tuple[tuple[str, Fraction], ...]
    const: Fraction
    rel: str

    @staticmethod
    def make(coeffs: Mapping[str, object], const=0, rel: str = LE) -> "Row":
        if rel not in _RELS:
            raise ValueError(f"unknown relation {rel!r}")
        items = tuple(sorted((k, _frac(v)) for k, v in coeffs.items() if v != 0))
        return Row(items, _frac(const), rel).normalized()

    @property
    def cmap(self) -> dict[str, Fraction]:
        return dict(self.coeffs)

    def coeff(self, var: str) -> Fraction:
        for k, v in self.coeffs:
            if k == var:
                return v
        return Fraction(0)

    def variables(self) -> set[str]:
        return {k for k, _ in self.coeffs}

    def normalized(self) -> "Row":
        """Scale to primitive integer coefficients (sign kept for inequalities)."""
        values = [v for _, v in self.coeffs] + [self.const]
        den = 1
        for v in values:
            den = lcm(den, v.denominator)
        nums = [int(v * den) for v in values]
        g = 0
        for n in nums:
            g = gcd(g, n)
        if g == 0:
            return self
        scale = Fraction(den, g)
        if self.rel == EQ and self.coeffs and self.coeffs[0][1] < 0:
            scale = -scale
        if scale == 1:
            return self
        return Row(tuple((k, v * scale) for k, v in self.coeffs), self.const * scale, self.rel)

    def is_trivial(self) -> bool:
        return not self.coeffs

    def trivially_true(self) -> bool:
        c = self.const
        return {LT: c < 0, LE: c <= 0, EQ: c == 0}[self.rel]

    def holds(self, point: Mapping[str, object]) -> bool:
        val = self.const + sum(v * _frac(point[k]) for k, v in self.coeffs)
        return {LT: val < 0, LE: val <= 0, EQ: val == 0}[self.rel]

    def substitute(self, var: str, expr: Mapping[str, Fraction], expr_const: Fraction) -> "Row":
        """Replace ``var`` by ``sum(expr) + expr_const``."""
        a = self.coeff(var)
        if a == 0:
            return self
        cm = self.cmap
        del cm[var]
        for k, v in expr.items():
            cm[k] = cm.get(k, Fraction(0)) + a * v
        return Row.make(cm, self.const + a * expr_const, self.rel)

    def negations(self) -> list["Row"]:
        """Rows whose disjunction is the complement of this row."""
        neg = {k: -v for k, v in self.coeffs}
        if self.rel == LE:
            return [Row.make(neg, -self.const, LT)]
        if self.rel == LT:
            return [Row.make(neg, -self.const, LE)]
        return [Row.make(self.cmap, self.const, LT), Row.make(neg, -self.const, LT)]

    def as_inequalities(self) -> list["Row"]:
        if self.rel != EQ:
            return [self]
        neg = {k: -v for k, v in self.coeffs}
        return [Row.make(self.cmap, self.const, LE), Row.make(neg, -self.const, LE)]

    def to_json(self) -> dict:
        return {
            "coeffs": {k: f"{v.numerator}/{v.denominator}" for k, v in self.coeffs},
            "const": f"{self.const.numerator}/{self.const.denominator}",
            "rel": self.rel,
        }

    @staticmethod
    def from_json(obj: Mapping) -> "Row":
        return Row.make({k: Fraction(v) for k, v in obj["coeffs"].items()},
                        Fraction(obj["const"]), obj["rel"])

    def pretty(self) -> str:
        left, right = [], []
        for k, v in self.coeffs:
            (left if v > 0 else right).append((k, abs(v)))
        c = self.const
        if c < 0:
            right.append(("", -c))
        elif c > 0:
            left.append(("", c))
        op = {LT: "<", LE: "<=", EQ: "="}[self.rel]
        return f"{_side(left)} {op} {_side(right)}"


def _side(terms) -> str:
    if not terms:
        return "0"
    out = []
    for k, v in terms:
        if not k:
            out.append(str(v))
        elif v == 1:
            out.append(k)
        else:
            out.append(f"{v}*{k}")
    return " + ".join(out)


FALSE_ROW = Row((), Fraction(1), LE)


# Fourier-Motzkin core -------------------------------------------------------

def _simplify(rows: Iterable[Row]) -> tuple[Row, ...] | None:
    """Drop trivial rows and keep only the tightest row per direction.

    Returns None when a trivially false row is present.
    """
    best: dict[tuple, Row] = {}
    eqs: set[Row] = set()
    for r in rows:
        if r.is_trivial():
            if not r.trivially_true():
                return None
            continue
        if r.rel == EQ:
            eqs.add(r)
            continue
        key = r.coeffs
        old = best.get(key)
        # larger const (or strict at equal const) is tighter
        if old is None or (r.const, r.rel == LT) > (old.const, old.rel == LT):
            best[key] = r
    return tuple(sorted(eqs)) + tuple(sorted(best.values()))


def _eliminate(rows: tuple[Row, ...], var: str) -> tuple[Row, ...] | None:
    for r in rows:
        if r.rel == EQ and r.coeff(var) != 0:
            a = r.coeff(var)
            expr = {k: -v / a for k, v in r.coeffs if k != var}
            const = -r.const / a
            return _simplify(o.substitute(var, expr, const) for o in rows if o is not r)
    pos, neg, rest = [], [], []
    for r in rows:
        a = r.coeff(var)
        (pos if a > 0 else neg if a < 0 else rest).append(r)
    out = list(rest)
    for p, n in product(pos, neg):
        ap, an = p.coeff(var), -n.coeff(var)
        cm: dict[str, Fraction] = {}
        for k, v in p.coeffs:
            cm[k] = cm.get(k, Fraction(0)) + v / ap
        for k, v in n.coeffs:
            cm[k] = cm.get(k, Fraction(0)) + v / an
        cm.pop(var, None)
        rel = LT if LT in (p.rel, n.rel) else LE
        out.append(Row.make(cm, p.const / ap + n.const / an, rel))
    return _simplify(out)


def _pick(rows: tuple[Row, ...], candidates: set[str]) -> str:
    best, score = None, None
    for v in sorted(candidates):
        if any(r.rel == EQ and r.coeff(v) != 0 for r in rows):
            return v
        p = sum(1 for r in rows if r.coeff(v) > 0)
        n = sum(1 for r in rows if r.coeff(v) < 0)
        s = p * n - p - n
        if score is None or s < score:
            best, score = v, s
    return best


def _project_rows(rows: tuple[Row, ...], drop: set[str]) -> tuple[Row, ...] | None:
    cur = _simplify(rows)
    drop = set(drop)
    while cur is not None and drop:
        present = set().union(*(r.variables() for r in cur)) if cur else set()
        drop &= present
        if not drop:
            break
        v = _pick(cur, drop)
        cur = _eliminate(cur, v)
        drop.discard(v)
    return cur


@lru_cache(maxsize=200_000)
def _feasible(rows: tuple[Row, ...]) -> bool:
    cur = _simplify(rows)
    if cur is None:
        return False
    allv = set().union(*(r.variables() for r in cur)) if cur else set()
    return _project_rows(cur, allv) is not None


def _nonneg(variables: Iterable[str]) -> list[Row]:
    return [Row.make({v: -1}, 0, LE) for v in variables]


@lru_cache(maxsize=100_000)
def _canonical(rows: tuple[Row, ...]) -> tuple[Row, ...]:
    cur = _simplify(rows)
    if cur is None or not _feasible(cur):
        return (FALSE_ROW,)
    rows_l = list(cur)
    # turn implied equalities into explicit ones
    for i, r in enumerate(rows_l):
        if r.rel == LE:
            strict = Row.make(r.cmap, r.const, LT)
            if not _feasible(tuple(rows_l[:i] + [strict] + rows_l[i + 1:])):
                rows_l[i] = Row.make(r.cmap, r.const, EQ)
    rows_l = list(_simplify(rows_l))
    eqs, ineqs = _reduce_equalities([r for r in rows_l if r.rel == EQ], [r for r in rows_l if r.rel != EQ])
    # drop redundant inequalities one at a time
    i = 0
    while i < len(ineqs):
        r = ineqs[i]
        others = ineqs[:i] + ineqs[i + 1:]
        if all(not _feasible(tuple(eqs + others + [n])) for n in r.negations()):
            ineqs = others
        else:
            i += 1
    return tuple(sorted(eqs + ineqs))


def _reduce_equalities(eqs: list[Row], ineqs: list[Row]) -> tuple[list[Row], list[Row]]:
    """Reduced echelon form of the equalities (pivots on the last variables in name order).

    Pivot variables are substituted out of the inequalities so that the
    representation of the affine hull, and hence the whole canonical form, is unique.
    """
    pivots: list[tuple[str, Row]] = []
    pending = list(eqs)
    allv = sorted(set().union(*(r.variables() for r in eqs)) if eqs else set(), reverse=True)
    for var in allv:
        row = next((r for r in pending if r.coeff(var) != 0), None)
        if row is None:
            continue
        pending.remove(row)
        a = row.coeff(var)
        expr = {k: -v / a for k, v in row.coeffs if k != var}
        const = -row.const / a

        def sub(r: Row) -> Row:
            return r.substitute(var, expr, const) if r.coeff(var) != 0 else r

        pending = [s for s in map(sub, pending) if not s.is_trivial()]
        pivots = [(v, sub(r)) for v, r in pivots]
        ineqs = [sub(r) for r in ineqs]
        pivots.append((var, row))
    out = _simplify(ineqs)
    return sorted(r for _, r in pivots), list(out or ())


# Polyhedron ------------------------------------------------------------------

@dataclass(frozen=True)
class Polyhedron:
    variables: tuple[str, ...]
    rows: tuple[Row, ...]

    def __post_init__(self):
        bad = set().union(*(r.variables() for r in self.rows)) - set(self.variables) if self.rows else set()
        if bad:
            raise ValueError(f"rows mention undeclared variables {sorted(bad)}")

    @staticmethod
    def make(variables: Iterable[str], rows: Iterable[Row] = ()) -> "Polyhedron":
        vs = tuple(sorted(set(variables)))
        rows = tuple(rows)
        return Polyhedron(vs, _canonical(tuple(rows) + tuple(_nonneg(vs))))

    @staticmethod
    def universe(variables: Iterable[str]) -> "Polyhedron":
        return Polyhedron.make(variables)

    @staticmethod
    def empty(variables: Iterable[str]) -> "Polyhedron":
        return Polyhedron(tuple(sorted(set(variables))), (FALSE_ROW,))

    def is_empty(self) -> bool:
        return self.rows == (FALSE_ROW,)

    def contains_point(self, point: Mapping[str, object]) -> bool:
        if self.is_empty():
            return False
        return all(r.holds(point) for r in self.rows)

    def includes(self, other: "Polyhedron") -> bool:
        """other is a subset of self"""
        _same_vars(self, other)
        if other.is_empty():
            return True
        if self.is_empty():
            return False
        for r in self.rows:
            for n in r.negations():
                if _feasible(other.rows + (n,)):
                    return False
        return True

    def with_variables(self, variables: Iterable[str]) -> "Polyhedron":
        """Re-embed into a larger variable set (new variables only non-negative)."""
        vs = set(variables)
        if not set(self.variables) <= vs:
            raise ValueError("with_variables can only add variables")
        if self.is_empty():
            return Polyhedron.empty(vs)
        return Polyhedron.make(vs, self.rows)

    def constrain(self, rows: Iterable[Row]) -> "Polyhedron":
        return Polyhedron.make(self.variables, self.rows + tuple(rows))

    def to_json(self) -> dict:
        return {"rows": [r.to_json() for r in self.rows]}

    def pretty(self) -> str:
        if self.is_empty():
            return "false"
        if not self.rows:
            return "true"
        return " && ".join(r.pretty() for r in self.rows)

    def __str__(self) -> str:
        return self.pretty()


def _same_vars(a: Polyhedron, b: Polyhedron) -> None:
    if a.variables != b.variables:
        raise ValueError(f"variable mismatch: {a.variables} vs {b.variables}")


def intersect(a: Polyhedron, b: Polyhedron) -> Polyhedron:
    _same_vars(a, b)
    if a.is_empty() or b.is_empty():
        return Polyhedron.empty(a.variables)
    return Polyhedron(a.variables, _canonical(a.rows + b.rows))


def is_satisfiable(a: Polyhedron) -> bool:
    return not a.is_empty()


def project(a: Polyhedron, keep: Iterable[str]) -> Polyhedron:
    keep = set(keep)
    if not keep <= set(a.variables):
        raise ValueError(f"cannot keep unknown variables {sorted(keep - set(a.variables))}")
    if a.is_empty():
        return Polyhedron.empty(keep)
    rows = _project_rows(a.rows, set(a.variables) - keep)
    if rows is None:
        return Polyhedron.empty(keep)
    return Polyhedron.make(keep, rows)


def time_elapse(a: Polyhedron, clocks: Iterable[str]) -> Polyhedron:
    """All points reachable by letting the given clocks grow in lockstep."""
    clocks = set(clocks)
    if not clocks <= set(a.variables):
        raise ValueError("time_elapse on unknown clocks")
    if a.is_empty() or not clocks:
        return a
    delay = "__delay"
    while delay in a.variables:
        delay += "_"
    shifted = []
    for r in a.rows:
        for c in clocks:
            r = r.substitute(c, {c: Fraction(1), delay: Fraction(-1)}, Fraction(0))
        shifted.append(r)
    shifted.append(Row.make({delay: -1}, 0, LE))
    rows = _project_rows(tuple(shifted), {delay})
    if rows is None:
        return Polyhedron.empty(a.variables)
    return Polyhedron.make(a.variables, rows)


def reset_clocks(a: Polyhedron, clocks: Iterable[str]) -> Polyhedron:
    clocks = set(clocks)
    if not clocks <= set(a.variables):
        raise ValueError("reset of unknown clocks")
    if a.is_empty() or not clocks:
        return a
    rows = _project_rows(a.rows, clocks)
    if rows is None:
        return Polyhedron.empty(a.variables)
    return Polyhedron.make(a.variables, rows + tuple(Row.make({c: 1}, 0, EQ) for c in clocks))


# PolySet ---------------------------------------------------------------------

@dataclass(frozen=True)
class PolySet:
    """Finite union of polyhedra over a common variable set."""

    variables: tuple[str, ...]
    disjuncts: tuple[Polyhedron, ...]

    @staticmethod
    def make(variables: Iterable[str], disjuncts: Iterable[Polyhedron] = ()) -> "PolySet":
        vs = tuple(sorted(set(variables)))
        kept: list[Polyhedron] = []
        for p in disjuncts:
            if p.variables != vs:
                raise ValueError(f"variable mismatch: {p.variables} vs {vs}")
            if p.is_empty():
                continue
            if any(k.includes(p) for k in kept):
                continue
            kept = [k for k in kept if not p.includes(k)]
            kept.append(p)
        kept.sort(key=lambda p: p.rows)
        return PolySet(vs, tuple(kept))

    @staticmethod
    def empty(variables: Iterable[str]) -> "PolySet":
        return PolySet(tuple(sorted(set(variables))), ())

    @staticmethod
    def of(*polys: Polyhedron) -> "PolySet":
        return PolySet.make(polys[0].variables, polys)

    def is_empty(self) -> bool:
        return not self.disjuncts

    def contains_point(self, point: Mapping[str, object]) -> bool:
        return any(p.contains_point(point) for p in self.disjuncts)

    def __iter__(self):
        return iter(self.disjuncts)

    def __len__(self):
        return len(self.disjuncts)

    def to_json(self) -> list:
        return [p.to_json() for p in self.disjuncts]

    @staticmethod
    def from_json(variables: Iterable[str], obj) -> "PolySet":
        if isinstance(obj, str):
            obj = json.loads(obj)
        return PolySet.make(variables, [Polyhedron.make(variables, [Row.from_json(r) for r in d["rows"]])
                                        for d in obj])

    def pretty(self) -> str:
        if not self.disjuncts:
            return "false"
        if len(self.disjuncts) == 1:
            return self.disjuncts[0].pretty()
        return " || ".join(f"({p.pretty()})" for p in self.disjuncts)

    def __str__(self) -> str:
        return self.pretty()


def polyset_union(a: PolySet, b: PolySet) -> PolySet:
    _same_set_vars(a, b)
    return PolySet.make(a.variables, a.disjuncts + b.disjuncts)


def polyset_intersect(a: PolySet, b: PolySet) -> PolySet:
    _same_set_vars(a, b)
    return PolySet.make(a.variables, [intersect(p, q) for p in a for q in b])


def _poly_minus(p: Polyhedron, q: Polyhedron) -> list[Polyhedron]:
    """p \\ q as disjoint pieces: p & r1 & ... & r_{i-1} & not r_i."""
    if q.is_empty():
        return [p]
    pieces = []
    prefix: tuple[Row, ...] = ()
    for r in q.rows:
        for n in r.negations():
            piece = p.constrain(prefix + (n,))
            if not piece.is_empty():
                pieces.append(piece)
        prefix += (r,)
    return pieces


def polyset_difference(a: PolySet, b: PolySet) -> PolySet:
    _same_set_vars(a, b)
    current = list(a.disjuncts)
    for q in b:
        nxt = []
        for p in current:
            nxt.extend(_poly_minus(p, q))
        current = nxt
    return PolySet.make(a.variables, current)


def polyset_equal(a: PolySet, b: PolySet) -> bool:
    return polyset_difference(a, b).is_empty() and polyset_difference(b, a).is_empty()


def polyset_includes(a: PolySet, b: PolySet) -> bool:
    """b is a subset of a"""
    return polyset_difference(b, a).is_empty()


def polyset_project(a: PolySet, keep: Iterable[str]) -> PolySet:
    keep = set(keep)
    return PolySet.make(keep, [project(p, keep) for p in a])


def polyset_lift(a: PolySet, variables: Iterable[str]) -> PolySet:
    return PolySet.make(variables, [p.with_variables(variables) for p in a])


def _same_set_vars(a: PolySet, b: PolySet) -> None:
    if a.variables != b.variables:
        raise ValueError(f"variable mismatch: {a.variables} vs {b.variables}")


# small constructors used all over the package and its tests

def le(lhs: Mapping[str, object] | str, rhs: Mapping[str, object] | str | int = 0, rel: str = LE) -> Row:
    """Row for ``lhs REL rhs`` where each side is a var name, int, or {var: coeff} (key '' = const)."""
    cm: dict[str, Fraction] = {}
    const = Fraction(0)
    for side, sign in ((lhs, 1), (rhs, -1)):
        if isinstance(side, str):
            side = {side: 1}
        elif not isinstance(side, Mapping):
            side = {"": side}
        for k, v in side.items():
            if k == "":
                const += sign * _frac(v)
            else:
                cm[k] = cm.get(k, Fraction(0)) + sign * _frac(v)
    return Row.make(cm, const, rel)


def parse_constraint(text: str, variables: Iterable[str]) -> Polyhedron:
    """Parse ``a <= b < c && e = f`` style chains into a polyhedron."""
    import re

    variables = tuple(variables)
    rows: list[Row] = []
    if text.strip() in ("", "true"):
        return Polyhedron.make(variables)
    for part in text.split("&&"):
        tokens = re.split(r"(<=|>=|<|>|=)", part)
        exprs = [_parse_linear(t) for t in tokens[0::2]]
        ops = tokens[1::2]
        for (l, op, r) in zip(exprs, ops, exprs[1:]):
            if op in (">", ">="):
                l, r, op = r, l, "<" if op == ">" else "<="
            rows.append(le(l, r, op))
    return Polyhedron.make(variables, rows)


def _parse_linear(text: str) -> dict[str, Fraction]:
    import re

    out: dict[str, Fraction] = {}
    s = text.replace(" ", "")
    if not s:
        raise ValueError("empty linear expression")
    for sign, coef, var in re.findall(r"([+-]?)(\d+(?:/\d+)?)?\*?([A-Za-z_][\w']*)?", s):
        if not coef and not var:
            continue
        c = Fraction(coef) if coef else Fraction(1)
        if sign == "-":
            c = -c
        key = var or ""
        out[key] = out.get(key, Fraction(0)) + c
    return out
