"""Integer duration sets: eventually periodic sets, LpSl encodings, Presburger formulas with divisibility."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import TYPE_CHECKING, Iterable, Mapping, Sequence

from .geometry import EQ, LE, LT, Row
from .model import LinearTerm

if TYPE_CHECKING:
    from .pet import NormalTerm


# eventually periodic sets -----------------------------------------------------

@dataclass(frozen=True)
class PeriodicSet:
    """Subset of the naturals: an explicit prefix below ``threshold``, then residues modulo ``period``.

    ``period == 0`` encodes a finite set (no residues).
    """

    prefix: tuple[int, ...] = ()
    threshold: int = 0
    period: int = 0
    residues: tuple[int, ...] = ()

    def __post_init__(self):
        if self.threshold < 0 or self.period < 0:
            raise ValueError("threshold and period must be natural")
        if any(x < 0 or x >= self.threshold for x in self.prefix):
            raise ValueError("prefix elements must lie below the threshold")
        if self.period == 0 and self.residues:
            raise ValueError("finite set with residues")
        if any(r < 0 or r >= self.period for r in self.residues):
            raise ValueError("residues must lie below the period")

    def __contains__(self, x: int) -> bool:
        if x < 0:
            return False
        if x < self.threshold:
            return x in self._prefix_set
        return self.period > 0 and x % self.period in self._residue_set

    @property
    def _prefix_set(self) -> frozenset:
        return frozenset(self.prefix)

    @property
    def _residue_set(self) -> frozenset:
        return frozenset(self.residues)

    @property
    def is_finite(self) -> bool:
        return self.period == 0

    def is_empty(self) -> bool:
        return not self.prefix and self.period == 0

    def minimum(self) -> int | None:
        if self.prefix:
            return self.prefix[0]
        if self.period == 0:
            return None
        t = self.threshold
        return min(t + ((r - t) % self.period) for r in self.residues)

    def members(self, upto: int) -> list[int]:
        """Elements ``<= upto``."""
        return [x for x in range(upto + 1) if x in self]

    def mask(self, n: int) -> int:
        """Bitmask of the elements below ``n``."""
        low = 0
        for x in self.prefix:
            if x < n:
                low |= 1 << x
        if not self.period or n <= self.threshold:
            return low
        block = 0
        for r in self.residues:
            block |= 1 << r
        periodic = 0
        for k in range(self.threshold // self.period, (n - 1) // self.period + 1):
            periodic |= block << (k * self.period)
        periodic &= ~((1 << self.threshold) - 1) & ((1 << n) - 1)
        return low | periodic

    def to_json(self) -> dict:
        return {"prefix": list(self.prefix), "threshold": self.threshold,
                "period": self.period, "residues": list(self.residues)}

    @staticmethod
    def from_json(obj: Mapping) -> "PeriodicSet":
        return canonical(PeriodicSet(tuple(obj["prefix"]), obj["threshold"], obj["period"],
                                     tuple(obj["residues"])))

    def pretty(self, scale: Fraction | int = 1) -> str:
        """Human-readable form; ``scale`` multiplies every element (e.g. 1/2 for doubled systems)."""
        if self.is_empty():
            return "{}"

        def fmt(x):
            v = Fraction(x) * Fraction(scale)
            return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"

        pieces = ["{" + ", ".join(fmt(x) for x in self.prefix) + "}"] if self.prefix else []
        if self.period:
            t = self.threshold
            if self.period == 1:
                pieces.append(f"[{fmt(t)}, inf)")
            else:
                res = ",".join(str(r) for r in self.residues)
                # residues are stated on the unscaled integers
                inv = 1 / Fraction(scale)
                x = "x" if inv == 1 else f"{inv}x"
                pieces.append(f"{{x >= {fmt(t)} : {x} mod {self.period} in {{{res}}}}}")
        return " u ".join(pieces)

    def __str__(self) -> str:
        return self.pretty()


EMPTY = PeriodicSet()
ZERO = PeriodicSet((0,), 1, 0, ())
NATURALS = PeriodicSet((), 0, 1, (0,))


def finite(elements: Iterable[int]) -> PeriodicSet:
    xs = sorted(set(int(x) for x in elements))
    if any(x < 0 for x in xs):
        raise ValueError("negative element")
    return PeriodicSet(tuple(xs), (xs[-1] + 1) if xs else 0, 0, ())


def interval(lo: int, hi: int | None) -> PeriodicSet:
    """Integers in ``[lo, hi]``; ``hi=None`` means unbounded."""
    lo = max(lo, 0)
    if hi is None:
        return canonical(PeriodicSet((), lo, 1, (0,)))
    if hi < lo:
        return EMPTY
    return finite(range(lo, hi + 1))


def from_mask(mask: int, threshold: int, period: int) -> PeriodicSet:
    """Build from membership known on ``[0, threshold + period)``; periodic from ``threshold`` on."""
    prefix = tuple(x for x in range(threshold) if mask >> x & 1)
    if period == 0:
        return canonical(PeriodicSet(prefix, threshold, 0, ()))
    residues = tuple(sorted({x % period for x in range(threshold, threshold + period) if mask >> x & 1}))
    return canonical(PeriodicSet(prefix, threshold, period, residues))


def canonical(s: PeriodicSet) -> PeriodicSet:
    """Minimal period, then minimal threshold."""
    if s.period == 0 or not s.residues:
        xs = tuple(sorted(x for x in s.prefix))
        return PeriodicSet(xs, (xs[-1] + 1) if xs else 0, 0, ())
    period, res = s.period, set(s.residues)
    for q in sorted(_divisors(period)):
        if all(((r + q) % period in res) == (r in res) for r in range(period)):
            res = {r % q for r in res}
            period = q
            break
    t = s.threshold
    prefix = set(s.prefix)
    while t > 0 and ((t - 1) in prefix) == ((t - 1) % period in res):
        t -= 1
        prefix.discard(t)
    return PeriodicSet(tuple(sorted(prefix)), t, period, tuple(sorted(res)))


def _divisors(n: int) -> list[int]:
    out = []
    for k in range(1, math.isqrt(n) + 1):
        if n % k == 0:
            out.extend({k, n // k})
    return out


def _lcm(*ps: int) -> int:
    ps = [p for p in ps if p > 0]
    return math.lcm(*ps) if ps else 0


def ps_union(a: PeriodicSet, b: PeriodicSet) -> PeriodicSet:
    t = max(a.threshold, b.threshold)
    period = _lcm(a.period, b.period)
    n = t + period
    return from_mask(a.mask(n) | b.mask(n), t, period)


def ps_union_all(sets: Iterable[PeriodicSet]) -> PeriodicSet:
    out = EMPTY
    for s in sets:
        out = ps_union(out, s)
    return out


def ps_sum(a: PeriodicSet, b: PeriodicSet) -> PeriodicSet:
    """Minkowski sum ``{x + y : x in a, y in b}``."""
    if a.is_empty() or b.is_empty():
        return EMPTY
    period = _lcm(a.period, b.period)
    # minimal representatives of each residue class use summands below t + period on the periodic side
    t = a.threshold + b.threshold + (2 * period if period else 0)
    n = t + period
    full = (1 << n) - 1
    mb = b.mask(n)
    out = 0
    ma = a.mask(n)
    x = 0
    while ma:
        if ma & 1:
            out |= (mb << x) & full
        ma >>= 1
        x += 1
    return from_mask(out, t, period)


def interval_star(b: int, c: int) -> PeriodicSet:
    """``union over k >= 0 of [k*b, k*c]``."""
    if b > c or (b == 0 and c == 0):
        return ZERO
    if b == 0:
        return NATURALS
    if b == c:
        return canonical(PeriodicSet((), 0, b, (0,)))
    kstar = -(-(b - 1) // (c - b))
    prefix = {0}
    for k in range(1, kstar):
        prefix.update(range(k * b, k * c + 1))
    t = kstar * b
    return canonical(PeriodicSet(tuple(sorted(x for x in prefix if x < t)), t, 1, (0,)))


def ps_equal(a: PeriodicSet, b: PeriodicSet) -> bool:
    return canonical(a) == canonical(b)


def ps_intersect_nonempty(a: PeriodicSet, b: PeriodicSet) -> int | None:
    """Least common element, if any."""
    if a.is_empty() or b.is_empty():
        return None
    limit = max(a.threshold, b.threshold) + max(_lcm(a.period, b.period), 1)
    if a.is_finite:
        limit = min(limit, a.threshold)
    if b.is_finite:
        limit = min(limit, b.threshold)
    common = a.mask(limit) & b.mask(limit)
    if not common:
        return None
    return (common & -common).bit_length() - 1


def ps_intersect(a: PeriodicSet, b: PeriodicSet) -> PeriodicSet:
    t = max(a.threshold, b.threshold)
    period = 0 if a.is_finite or b.is_finite else _lcm(a.period, b.period)
    n = t + period
    return from_mask(a.mask(n) & b.mask(n), t, period)


def ps_difference(a: PeriodicSet, b: PeriodicSet) -> PeriodicSet:
    t = max(a.threshold, b.threshold)
    period = 0 if a.is_finite else _lcm(a.period, b.period)
    n = t + period
    return from_mask(a.mask(n) & ~b.mask(n), t, period)


# symbolic bounds over one parameter -------------------------------------------

class LpSlError(ValueError):
    pass


@dataclass(frozen=True)
class LpSlTerm:
    base_lower: LinearTerm
    base_upper: LinearTerm
    loops: tuple[tuple[LinearTerm, LinearTerm], ...] = ()

    def to_json(self) -> dict:
        return {"base": [self.base_lower.render(), self.base_upper.render()],
                "loops": [[lo.render(), hi.render()] for lo, hi in self.loops]}


@dataclass(frozen=True)
class LpSlSet:
    """Union of terms ``[b0, c0] + [b1, c1]* + ...`` with bounds linear in ``param - shift``.

    Valid for parameter values ``>= shift``.
    """

    param: str
    shift: int
    terms: tuple[LpSlTerm, ...] = ()

    def evaluate(self, p: int) -> PeriodicSet:
        if p < self.shift:
            raise ValueError(f"valuation {p} below threshold {self.shift}")
        v = {self.param: p - self.shift}
        out = EMPTY
        for t in self.terms:
            s = interval(t.base_lower.evaluate(v), t.base_upper.evaluate(v))
            for lo, hi in t.loops:
                s = ps_sum(s, interval_star(lo.evaluate(v), hi.evaluate(v)))
            out = ps_union(out, s)
        return out

    def enumerate(self, p: int, kmax: int, upto: int) -> set[int]:
        """Direct enumeration of the defining sum with loop counts ``<= kmax``."""
        v = {self.param: p - self.shift}
        out: set[int] = set()
        for t in self.terms:
            sums = set(range(t.base_lower.evaluate(v), t.base_upper.evaluate(v) + 1))
            for lo, hi in t.loops:
                b, c = lo.evaluate(v), hi.evaluate(v)
                star = {0}
                for k in range(1, kmax + 1):
                    star.update(range(k * b, k * c + 1))
                sums = {x + y for x in sums for y in star if x + y <= upto}
            out |= {x for x in sums if x <= upto}
        return out

    def in_original_parameter(self) -> "LpSlSet":
        """Same set with bounds written over the unshifted parameter (coefficients may turn negative)."""
        def unshift(t: LinearTerm) -> LinearTerm:
            a = t.cmap.get(self.param, 0)
            return LinearTerm.make({self.param: a}, t.constant - a * self.shift)
        return LpSlSet(self.param, 0, tuple(
            LpSlTerm(unshift(t.base_lower), unshift(t.base_upper),
                     tuple((unshift(lo), unshift(hi)) for lo, hi in t.loops)) for t in self.terms))

    def to_json(self) -> dict:
        return {"parameter": self.param, "shift": self.shift, "terms": [t.to_json() for t in self.terms]}


@dataclass(frozen=True)
class _Affine:
    slope: Fraction
    const: Fraction

    def at(self, p) -> Fraction:
        return self.slope * p + self.const

    def integral(self) -> bool:
        return self.slope.denominator == 1 and self.const.denominator == 1


def _crossing(a: _Affine, b: _Affine) -> Fraction | None:
    if a.slope == b.slope:
        return None
    return (b.const - a.const) / (a.slope - b.slope)


def _d_bounds(rows: Iterable[Row], param: str) -> tuple[list[_Affine], list[_Affine]]:
    """Lower and upper bounds on d as affine functions of the parameter (strict rows tightened)."""
    lows, ups = [], []
    for r in rows:
        a = r.coeff("d")
        if a == 0:
            continue
        extra = set(r.variables()) - {"d", param}
        if extra:
            raise LpSlError(f"row {r.pretty()} mentions {sorted(extra)}")
        bound = _Affine(-r.coeff(param) / a, -r.const / a)
        if not bound.integral():
            raise LpSlError(f"row {r.pretty()} has a fractional bound on d")
        if r.rel == EQ:
            lows.append(bound)
            ups.append(bound)
        elif a > 0:
            ups.append(_Affine(bound.slope, bound.const - (1 if r.rel == LT else 0)))
        else:
            lows.append(_Affine(bound.slope, bound.const + (1 if r.rel == LT else 0)))
    return lows, ups


def _eventual(bounds: list[_Affine], upper: bool) -> _Affine | None:
    if not bounds:
        return None
    key = (lambda b: (-b.slope, -b.const)) if upper else (lambda b: (b.slope, b.const))
    return max(bounds, key=key)


def _from(x: Fraction | None, inclusive: bool) -> int:
    """Least natural n with n >= x (``inclusive``) or n > x."""
    if x is None or x < 0:
        return 0
    return math.ceil(x) if inclusive else math.floor(x) + 1


def _row_threshold(r: Row, param: str) -> int:
    """Least natural from which the truth value of a parameter-only row no longer changes."""
    a = r.coeff(param)
    if a == 0:
        return 0
    x0 = -r.const / a
    if r.rel == EQ:
        return _from(x0, False)
    # a < 0 reads p >= x0 (or p > x0); a > 0 reads p <= x0 (or p < x0)
    holds_at_x0 = r.rel == LE
    return _from(x0, holds_at_x0 == (a < 0))


def to_lpsl(terms: Sequence["NormalTerm"], param: str) -> tuple[LpSlSet, int, dict[int, PeriodicSet]]:
    """LpSl encoding valid from a threshold M on, plus explicit sets for the valuations below M."""
    from .pet import evaluate_at

    for t in terms:
        others = set(t.base.variables) - {"d", param}
        if others:
            raise LpSlError(f"expected the single parameter {param}, found {sorted(others)}")

    zero = _Affine(Fraction(0), Fraction(0))
    M = 1
    prepared = []
    for t in terms:
        prow = [r for r in t.params_constraint.rows if r.variables()]
        for r in prow:
            M = max(M, _row_threshold(r, param))
        prow += [r for r in t.base.rows if "d" not in r.variables() and r.variables()]
        for r in prow:
            M = max(M, _row_threshold(r, param))
        bl, bu = _d_bounds(t.base.rows, param)
        bl.append(zero)
        loops = []
        for lp in t.loops:
            ll, lu = _d_bounds(lp.rows, param)
            ll.append(zero)
            loops.append((ll, lu))
        for lows, ups in [(bl, bu)] + loops:
            group = lows + ups
            for a, b in itertools.combinations(group, 2):
                M = max(M, _from(_crossing(a, b), True))
        prepared.append((t, prow, bl, bu, loops))

    out_terms = []
    for t, prow, bl, bu, loops in prepared:
        if not all(r.holds({param: M}) for r in prow):
            continue
        lo, hi = _eventual(bl, False), _eventual(bu, True)
        if hi is not None and hi.at(M) < lo.at(M):
            continue
        new_loops = []
        if hi is None:
            hi = lo
            new_loops.append((_Affine(Fraction(0), Fraction(1)), _Affine(Fraction(0), Fraction(1))))
        for ll, lu in loops:
            llo, lhi = _eventual(ll, False), _eventual(lu, True)
            if lhi is None:
                # [b, inf)* equals [b, 2b + 1]*
                lhi = _Affine(2 * llo.slope, 2 * llo.const + 1)
            if lhi.at(M) < llo.at(M) or (lhi.at(M) == 0 and lhi.slope == 0):
                continue
            new_loops.append((llo, lhi))

        def lin(b: _Affine) -> LinearTerm:
            shifted = _Affine(b.slope, b.const + b.slope * M)
            if shifted.slope < 0 or shifted.const < 0:
                raise LpSlError("bound with a negative coefficient after shifting")
            return LinearTerm.make({param: int(shifted.slope)}, int(shifted.const))

        out_terms.append(LpSlTerm(lin(lo), lin(hi), tuple((lin(a), lin(b)) for a, b in new_loops)))
    low = {p: evaluate_at(terms, {param: p}) for p in range(M)}
    return LpSlSet(param, M, tuple(out_terms)), M, low


# Presburger arithmetic with divisibility -------------------------------------

class Formula:
    pass


@dataclass(frozen=True)
class Const(Formula):
    value: bool


TRUE = Const(True)
FALSE = Const(False)


@dataclass(frozen=True)
class Lin(Formula):
    """``sum(coeffs) + const REL 0`` with REL in ``<=`` or ``=``."""

    coeffs: tuple[tuple[str, int], ...]
    const: int
    rel: str

    @staticmethod
    def make(coeffs: Mapping[str, int], const: int = 0, rel: str = LE) -> "Lin":
        if rel not in (LE, EQ):
            raise ValueError("only <= and = atoms")
        return Lin(tuple(sorted((k, int(v)) for k, v in coeffs.items() if v)), int(const), rel)

    def value(self, env: Mapping[str, int]) -> int:
        return self.const + sum(c * env[v] for v, c in self.coeffs)


@dataclass(frozen=True)
class Div(Formula):
    """``y`` divides ``z`` (``0 | z`` iff ``z = 0``)."""

    y: str
    z: str


@dataclass(frozen=True)
class And(Formula):
    items: tuple[Formula, ...]


@dataclass(frozen=True)
class Or(Formula):
    items: tuple[Formula, ...]


@dataclass(frozen=True)
class Exists(Formula):
    variables: tuple[str, ...]
    body: Formula


DivFormula = Formula


def conj(*fs: Formula) -> Formula:
    items = []
    for f in fs:
        if f == FALSE:
            return FALSE
        if f == TRUE:
            continue
        items.extend(f.items if isinstance(f, And) else (f,))
    if not items:
        return TRUE
    return items[0] if len(items) == 1 else And(tuple(items))


def disj(*fs: Formula) -> Formula:
    items = []
    for f in fs:
        if f == TRUE:
            return TRUE
        if f == FALSE:
            continue
        items.extend(f.items if isinstance(f, Or) else (f,))
    if not items:
        return FALSE
    return items[0] if len(items) == 1 else Or(tuple(items))


def free_variables(f: Formula) -> set[str]:
    if isinstance(f, Lin):
        return {v for v, _ in f.coeffs}
    if isinstance(f, Div):
        return {f.y, f.z}
    if isinstance(f, (And, Or)):
        return set().union(*(free_variables(g) for g in f.items)) if f.items else set()
    if isinstance(f, Exists):
        return free_variables(f.body) - set(f.variables)
    return set()


def _int_row(r: Row) -> tuple[dict[str, int], int, str]:
    n = r.normalized()
    den = math.lcm(*(c.denominator for _, c in n.coeffs), n.const.denominator)
    return {k: int(c * den) for k, c in n.coeffs}, int(n.const * den), n.rel


def _row_atom(r: Row, rename: Mapping[str, str]) -> Formula:
    if r.rel == LT:
        raise ValueError(f"strict row {r.pretty()} left in the formula; double the system first")
    cm, const, rel = _int_row(r)
    if not cm:
        return TRUE if r.trivially_true() else FALSE
    return Lin.make({rename.get(k, k): v for k, v in cm.items()}, const, rel)


def _rows_on(rows: Iterable[Row], var: str) -> Formula:
    return conj(*(_row_atom(r, {"d": var}) for r in rows))


def build_div_formula(terms: Sequence["NormalTerm"], prefix: str = "") -> Formula:
    """Membership of ``(d, parameters)`` in the union of the normal-form terms."""
    disjuncts = []
    for i, t in enumerate(terms):
        xs = [f"{prefix}x{i}_{j}" for j in range(len(t.loops) + 1)]
        parts = [Lin.make({"d": 1, **{x: -1 for x in xs}}, 0, EQ)]
        parts += [_row_atom(r, {}) for r in t.params_constraint.rows]
        parts.append(_rows_on(t.base.rows, xs[0]))
        for j, lp in enumerate(t.loops, 1):
            y1, y2, y3, z1, z2 = (f"{prefix}{n}{i}_{j}" for n in ("ya", "yb", "yc", "za", "zb"))
            block = Exists((y1, y2, y3, z1, z2), conj(
                _rows_on(lp.rows, y1), _rows_on(lp.rows, y2), _rows_on(lp.rows, y3),
                disj(Lin.make({z1: 1}, 0, EQ), Div(y1, z1)),
                disj(Lin.make({z2: 1}, 0, EQ), Div(y2, z2)),
                Lin.make({xs[j]: 1, z1: -1, z2: -1, y3: -1}, 0, EQ)))
            # zero iterations of the loop
            parts.append(disj(Lin.make({xs[j]: 1}, 0, EQ), block))
        disjuncts.append(Exists(tuple(xs), conj(*parts)))
    return disj(*disjuncts)


def eoe_query(priv_terms: Sequence["NormalTerm"], pub_terms: Sequence["NormalTerm"]) -> Formula:
    """Some duration is both private and public (shared d and parameters)."""
    return conj(build_div_formula(priv_terms, "priv_"), build_div_formula(pub_terms, "pub_"))


# ground evaluation ------------------------------------------------------------

def _hoist(f: Formula, counter: list[int], rename: Mapping[str, str]) -> Formula:
    """Prenex form for a positive existential formula (bound variables renamed apart)."""
    if isinstance(f, Lin):
        return Lin.make({rename.get(v, v): c for v, c in f.coeffs}, f.const, f.rel)
    if isinstance(f, Div):
        return Div(rename.get(f.y, f.y), rename.get(f.z, f.z))
    if isinstance(f, And):
        return conj(*(_hoist(g, counter, rename) for g in f.items))
    if isinstance(f, Or):
        return disj(*(_hoist(g, counter, rename) for g in f.items))
    if isinstance(f, Exists):
        inner = dict(rename)
        for v in f.variables:
            counter[0] += 1
            inner[v] = f"{v}#{counter[0]}"
        return _hoist(f.body, counter, inner)
    return f


class _Search:
    def __init__(self, bound: int):
        self.bound = bound

    def bounds(self, atoms, env, dom):
        """Interval propagation over the linear atoms; None on conflict."""
        dom = dict(dom)

        def rng(v):
            return (env[v], env[v]) if v in env else dom[v]

        lins = [a for a in atoms if isinstance(a, Lin)]
        for _ in range(64):
            changed = False
            for a in lins:
                for v, c in a.coeffs:
                    if v in env:
                        continue
                    rl = rh = a.const
                    for u, cu in a.coeffs:
                        if u == v:
                            continue
                        lo, hi = rng(u)
                        rl += cu * (lo if cu > 0 else hi)
                        rh += cu * (hi if cu > 0 else lo)
                    lo, hi = dom[v]
                    # c*v + rest <= 0 (and >= 0 for equalities)
                    if c > 0:
                        nhi = min(hi, (-rl) // c)
                        nlo = max(lo, -((rh) // c)) if a.rel == EQ else lo
                    else:
                        nlo = max(lo, -((-rl) // -c))
                        nhi = min(hi, rh // -c) if a.rel == EQ else hi
                    if nlo > nhi:
                        return None
                    if (nlo, nhi) != (lo, hi):
                        dom[v] = (nlo, nhi)
                        changed = True
            if not changed:
                break
        return dom

    def check(self, f, env, dom) -> bool | None:
        """Truth value if decided by the current domains, else None."""
        if isinstance(f, Const):
            return f.value
        if isinstance(f, Lin):
            lo_sum = hi_sum = f.const
            for v, c in f.coeffs:
                lo, hi = (env[v], env[v]) if v in env else dom[v]
                lo_sum += c * (lo if c > 0 else hi)
                hi_sum += c * (hi if c > 0 else lo)
            if f.rel == LE:
                return True if hi_sum <= 0 else (False if lo_sum > 0 else None)
            if lo_sum == hi_sum == 0:
                return True
            return False if lo_sum > 0 or hi_sum < 0 else None
        if isinstance(f, Div):
            if f.y in env and f.z in env:
                y, z = env[f.y], env[f.z]
                return z == 0 if y == 0 else z % y == 0
            return None
        if isinstance(f, And):
            vals = [self.check(g, env, dom) for g in f.items]
            if False in vals:
                return False
            return True if all(v is True for v in vals) else None
        if isinstance(f, Or):
            vals = [self.check(g, env, dom) for g in f.items]
            if True in vals:
                return True
            return False if all(v is False for v in vals) else None
        raise TypeError(f)

    def solve(self, pending: list, env: dict, dom: dict) -> bool:
        atoms = []
        choices = []
        stack = list(pending)
        while stack:
            f = stack.pop()
            if isinstance(f, And):
                stack.extend(f.items)
            elif isinstance(f, Or):
                choices.append(f)
            elif f == FALSE:
                return False
            elif f != TRUE:
                atoms.append(f)
        dom = self.bounds(atoms, env, dom)
        if dom is None:
            return False
        # fix variables whose domain collapsed
        env = dict(env)
        for v, (lo, hi) in dom.items():
            if v not in env and lo == hi:
                env[v] = lo
        for a in atoms:
            if self.check(a, env, dom) is False:
                return False
        live = []
        for c in choices:
            opts = [g for g in c.items if self.check(g, env, dom) is not False]
            if not opts:
                return False
            if any(self.check(g, env, dom) is True for g in opts):
                continue
            live.append(opts)
        if live:
            live.sort(key=len)
            first, rest = live[0], live[1:]
            rest_f = [disj(*o) for o in rest]
            return any(self.solve(atoms + rest_f + [g], env, dom) for g in first)
        free = [v for v in dom if v not in env]
        if not free:
            return all(self.check(a, env, dom) for a in atoms)
        var = self._pick(free, atoms, env, dom)
        for val in self._values(var, atoms, env, dom):
            env2 = dict(env)
            env2[var] = val
            if self.solve(atoms, env2, dom):
                return True
        return False

    def _pick(self, free, atoms, env, dom):
        # prefer divisors whose multiple is still open, then the smallest domain
        for a in atoms:
            if isinstance(a, Div) and a.y in free:
                return a.y
        return min(free, key=lambda v: (dom[v][1] - dom[v][0], v))

    def _values(self, var, atoms, env, dom):
        lo, hi = dom[var]
        for a in atoms:
            if isinstance(a, Div) and a.z == var and a.y in env:
                y = env[a.y]
                if y == 0:
                    return [0] if lo == 0 else []
                start = -(-lo // y) * y
                return range(start, hi + 1, y)
        return range(lo, hi + 1)


def eval_div_formula(f: Formula, assignment: Mapping[str, int], witness_bound: int | None = None) -> bool:
    """Decide a ground existential formula by bounded witness search.

    Every bound variable is a summand or a factor of a summand of a decomposition
    of ``d``, so witnesses never need to exceed the largest assigned value.
    """
    missing = free_variables(f) - set(assignment)
    if missing:
        raise ValueError(f"unassigned free variables {sorted(missing)}")
    bound = witness_bound if witness_bound is not None else max([0, *assignment.values()])
    g = _hoist(f, [0], {})
    env = {k: int(v) for k, v in assignment.items()}
    allvars = free_variables(g)
    dom = {v: (0, bound) for v in allvars if v not in env}
    return _Search(bound).solve([g], env, dom)


# SMT-LIB export ---------------------------------------------------------------

def _smt_sum(coeffs, const) -> str:
    terms = []
    for v, c in coeffs:
        terms.append(v if c == 1 else f"(* {c} {v})" if c > 0 else f"(* (- {-c}) {v})")
    if const or not terms:
        terms.append(str(const) if const >= 0 else f"(- {-const})")
    return terms[0] if len(terms) == 1 else "(+ " + " ".join(terms) + ")"


def _smt(f: Formula, counter: list[int]) -> str:
    if isinstance(f, Const):
        return "true" if f.value else "false"
    if isinstance(f, Lin):
        op = "<=" if f.rel == LE else "="
        return f"({op} {_smt_sum(f.coeffs, f.const)} 0)"
    if isinstance(f, Div):
        counter[0] += 1
        k = f"k!{counter[0]}"
        return f"(exists (({k} Int)) (and (>= {k} 0) (= {f.z} (* {k} {f.y}))))"
    if isinstance(f, And):
        return "(and " + " ".join(_smt(g, counter) for g in f.items) + ")"
    if isinstance(f, Or):
        return "(or " + " ".join(_smt(g, counter) for g in f.items) + ")"
    if isinstance(f, Exists):
        decls = " ".join(f"({v} Int)" for v in f.variables)
        nonneg = " ".join(f"(>= {v} 0)" for v in f.variables)
        return f"(exists ({decls}) (and {nonneg} {_smt(f.body, counter)}))"
    raise TypeError(f)


def emit_smt(f: Formula) -> str:
    lines = ["(set-logic ALL)"]
    for v in sorted(free_variables(f)):
        lines.append(f"(declare-const {v} Int)")
        lines.append(f"(assert (>= {v} 0))")
    lines.append(f"(assert {_smt(f, [0])})")
    lines.append("(check-sat)")
    lines.append("(get-model)")
    return "\n".join(lines) + "\n"


def formula_to_json(f: Formula):
    if isinstance(f, Const):
        return f.value
    if isinstance(f, Lin):
        return {"lin": dict(f.coeffs), "const": f.const, "rel": f.rel}
    if isinstance(f, Div):
        return {"div": [f.y, f.z]}
    if isinstance(f, And):
        return {"and": [formula_to_json(g) for g in f.items]}
    if isinstance(f, Or):
        return {"or": [formula_to_json(g) for g in f.items]}
    if isinstance(f, Exists):
        return {"exists": list(f.variables), "body": formula_to_json(f.body)}
    raise TypeError(f)
