"""Parametric execution times: the generic semi-algorithm and the exact one-clock construction."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from . import arith
from .arith import PeriodicSet
from .geometry import EQ, LE, LT, Polyhedron, PolySet, Row, intersect, polyset_union, project
from .model import DURATION, PTA, build_pet_target, build_resetfree, compute_frp
from .zonegraph import BUDGET_EXHAUSTED, ExplorationBudget, SynthResult, ef_synth


class ZoneAutomatonError(RuntimeError):
    """A reset-free sub-synthesis did not terminate within its budget."""


def pet_semialg(pta: PTA, budget: ExplorationBudget | None = None) -> SynthResult:
    target = build_pet_target(pta)
    res = ef_synth(target, {target.final}, budget)
    return res


def pet_variables(pta: PTA) -> tuple[str, ...]:
    return tuple(sorted(set(pta.params) | {DURATION}))


# automaton of the zones -------------------------------------------------------

@dataclass(frozen=True)
class ZoneAutomaton:
    states: tuple[str, ...]
    initial: str
    final: str
    variables: tuple[str, ...]
    transitions: tuple[tuple[tuple[str, str], PolySet], ...]

    @property
    def labels(self) -> dict[tuple[str, str], PolySet]:
        return dict(self.transitions)

    def to_dot(self) -> str:
        lines = ["digraph zones {", "  rankdir=LR;", '  __start [shape=point];',
                 f'  __start -> "{self.initial}";']
        for s in self.states:
            shape = "doublecircle" if s == self.final else "circle"
            lines.append(f'  "{s}" [shape={shape}];')
        for (a, b), z in self.transitions:
            label = z.pretty().replace('"', '\\"')
            lines.append(f'  "{a}" -> "{b}" [label="{label}"];')
        lines.append("}")
        return "\n".join(lines) + "\n"

    def to_json(self) -> dict:
        return {"initial": self.initial, "final": self.final, "variables": list(self.variables),
                "transitions": [{"from": a, "to": b, "label": z.to_json()} for (a, b), z in self.transitions]}


def build_zone_automaton(pta: PTA, budget: ExplorationBudget | None = None) -> ZoneAutomaton:
    variables = pet_variables(pta)
    trans = []
    for li, lj in sorted(compute_frp(pta)):
        sub = build_resetfree(pta, li, lj)
        res = ef_synth(sub, {lj}, budget)
        if res.status == BUDGET_EXHAUSTED:
            raise ZoneAutomatonError(f"synthesis for the pair ({li}, {lj}) exhausted its budget")
        if not res.result.is_empty():
            trans.append(((li, lj), res.result))
    return ZoneAutomaton(tuple(l.name for l in pta.locations), pta.init, pta.final, variables, tuple(trans))


# expressions ----------------------------------------------------------------

class ZoneExpr:
    pass


@dataclass(frozen=True)
class Atom(ZoneExpr):
    zones: PolySet


@dataclass(frozen=True)
class Concat(ZoneExpr):
    left: ZoneExpr
    right: ZoneExpr


@dataclass(frozen=True)
class Star(ZoneExpr):
    inner: ZoneExpr


@dataclass(frozen=True)
class Union(ZoneExpr):
    left: ZoneExpr
    right: ZoneExpr


@dataclass(frozen=True)
class One(ZoneExpr):
    pass


def _is_empty(e: ZoneExpr) -> bool:
    return isinstance(e, Atom) and e.zones.is_empty()


def concat(a: ZoneExpr, b: ZoneExpr) -> ZoneExpr:
    if _is_empty(a):
        return a
    if _is_empty(b):
        return b
    if isinstance(a, One):
        return b
    if isinstance(b, One):
        return a
    return Concat(a, b)


def union(a: ZoneExpr | None, b: ZoneExpr | None) -> ZoneExpr | None:
    if a is None or _is_empty(a):
        return b
    if b is None or _is_empty(b):
        return a
    if a == b:
        return a
    return Union(a, b)


def star(a: ZoneExpr) -> ZoneExpr:
    if _is_empty(a) or isinstance(a, One):
        return One()
    if isinstance(a, Star):
        return a
    return Star(a)


def expr_to_text(e: ZoneExpr) -> str:
    if isinstance(e, Atom):
        return json.dumps(e.zones.to_json(), separators=(",", ":"))
    if isinstance(e, One):
        return "1"
    if isinstance(e, Star):
        return f"({expr_to_text(e.inner)})*"
    if isinstance(e, Concat):
        return f"({expr_to_text(e.left)} . {expr_to_text(e.right)})"
    return f"({expr_to_text(e.left)} + {expr_to_text(e.right)})"


def expr_pretty(e: ZoneExpr) -> str:
    if isinstance(e, Atom):
        return "{" + e.zones.pretty() + "}"
    if isinstance(e, One):
        return "1"
    if isinstance(e, Star):
        return f"({expr_pretty(e.inner)})*"
    if isinstance(e, Concat):
        return f"{expr_pretty(e.left)} . {expr_pretty(e.right)}"
    return f"({expr_pretty(e.left)} + {expr_pretty(e.right)})"


def regex_extract(za: ZoneAutomaton) -> ZoneExpr:
    """State elimination; states go in ascending out-degree order, ties broken by name."""
    start, end = object(), object()
    arcs: dict[tuple, ZoneExpr] = {}

    def add(a, b, e):
        arcs[(a, b)] = union(arcs.get((a, b)), e)

    add(start, za.initial, One())
    add(za.final, end, One())
    for (a, b), z in za.transitions:
        add(a, b, Atom(z))
    outdeg = {s: sum(1 for (a, _), _z in za.transitions if a == s) for s in za.states}
    for q in sorted(za.states, key=lambda s: (outdeg[s], s)):
        loop = arcs.pop((q, q), None)
        ins = [(a, e) for (a, b), e in arcs.items() if _same(b, q)]
        outs = [(b, e) for (a, b), e in arcs.items() if _same(a, q)]
        for a, _ in ins:
            del arcs[(a, q)]
        for b, _ in outs:
            del arcs[(q, b)]
        mid = star(loop) if loop is not None else One()
        for a, ea in ins:
            for b, eb in outs:
                add(a, b, concat(concat(ea, mid), eb))
    return arcs.get((start, end), Atom(PolySet.empty(za.variables)))


def _same(a, b) -> bool:
    return isinstance(a, str) and isinstance(b, str) and a == b


# bar operators ----------------------------------------------------------------

def _concat_poly(a: Polyhedron, b: Polyhedron) -> Polyhedron:
    """Durations d1 + d2 with d1 in a, d2 in b under a shared parameter valuation."""
    d = DURATION
    d1, d2 = "__d1", "__d2"
    vs = set(a.variables) | {d1, d2}
    ra = [r.substitute(d, {d1: Fraction(1)}, Fraction(0)) for r in a.rows]
    rb = [r.substitute(d, {d2: Fraction(1)}, Fraction(0)) for r in b.rows]
    link = Row.make({d: 1, d1: -1, d2: -1}, 0, EQ)
    joint = Polyhedron.make(vs, ra + rb + [link])
    return project(joint, a.variables)


def bar_concat(a: PolySet, b: PolySet) -> PolySet:
    if a.variables != b.variables:
        raise ValueError("variable mismatch")
    if DURATION not in a.variables:
        raise ValueError("bar operators need the duration variable")
    return PolySet.make(a.variables, (_concat_poly(x, y) for x in a for y in b))


def bar_union(a: PolySet, b: PolySet) -> PolySet:
    return polyset_union(a, b)


def zero_duration(variables: Iterable[str]) -> PolySet:
    return PolySet.of(Polyhedron.make(variables, [Row.make({DURATION: 1}, 0, EQ)]))


# normal form ----------------------------------------------------------------

@dataclass(frozen=True)
class NormalTerm:
    """``params_constraint`` and ``base`` and a product of stars of ``loops``."""

    params_constraint: Polyhedron
    base: Polyhedron
    loops: tuple[Polyhedron, ...] = ()

    def pretty(self) -> str:
        out = f"[{self.params_constraint.pretty()}] {{{self.base.pretty()}}}"
        for lp in self.loops:
            out += f" . {{{lp.pretty()}}}*"
        return out

    def to_json(self) -> dict:
        return {"params": self.params_constraint.to_json(), "base": self.base.to_json(),
                "loops": [lp.to_json() for lp in self.loops]}


def _d_part(p: Polyhedron) -> Polyhedron:
    """Keep the rows involving d."""
    return Polyhedron(p.variables, tuple(r for r in p.rows if r.coeff(DURATION) != 0))


def _is_zero_loop(p: Polyhedron) -> bool:
    return any(r.rel == EQ and r.cmap == {DURATION: 1} and r.const == 0 for r in p.rows)


def _term(params: Polyhedron, base: Polyhedron, loops: Iterable[Polyhedron]) -> NormalTerm | None:
    pvars = params.variables
    params = intersect(params, project(base, pvars))
    if params.is_empty():
        return None
    base = intersect(base, params.with_variables(base.variables))
    if base.is_empty():
        return None
    kept = []
    for lp in loops:
        lp = _d_part(lp)
        if _is_zero_loop(lp) or lp in kept:
            continue
        kept.append(lp)
    kept.sort(key=lambda p: json.dumps(p.to_json(), sort_keys=True))
    return NormalTerm(params, base, tuple(kept))


def _dedupe(terms: Iterable[NormalTerm]) -> list[NormalTerm]:
    out = []
    for t in terms:
        if t is not None and t not in out:
            out.append(t)
    return out


def normalize(e: ZoneExpr, variables: Sequence[str]) -> list[NormalTerm]:
    """Sum-of-products form ``C^P and C0 . C1* ... Cm*`` of an expression."""
    variables = tuple(sorted(variables))
    pvars = tuple(v for v in variables if v != DURATION)
    one = _term(Polyhedron.universe(pvars), zero_duration(variables).disjuncts[0], ())

    def go(x: ZoneExpr) -> list[NormalTerm]:
        if isinstance(x, One):
            return [one]
        if isinstance(x, Atom):
            return _dedupe(_term(Polyhedron.universe(pvars), p, ()) for p in x.zones)
        if isinstance(x, Union):
            return _dedupe(go(x.left) + go(x.right))
        if isinstance(x, Concat):
            out = []
            for a in go(x.left):
                for b in go(x.right):
                    out.append(_term(intersect(a.params_constraint, b.params_constraint),
                                     _concat_poly(a.base, b.base), a.loops + b.loops))
            return _dedupe(out)
        if isinstance(x, Star):
            # durations commute: (T1 + ... + Tn)* = T1* ... Tn*, and (B . L*)* = 1 + B . B* . L*
            out = [one]
            for t in go(x.inner):
                grown = []
                for acc in out:
                    grown.append(acc)
                    grown.append(_term(intersect(acc.params_constraint, t.params_constraint),
                                       _concat_poly(acc.base, t.base),
                                       acc.loops + t.loops + (t.base,)))
                out = _dedupe(grown)
            return out
        raise TypeError(x)

    return go(e)


# evaluation at a valuation ----------------------------------------------------

def d_interval(p: Polyhedron, v: Mapping[str, int]) -> tuple[int, int | None] | None:
    """Integer range of d allowed by the rows of ``p`` at the valuation; None if some parameter row fails."""
    lo: Fraction = Fraction(0)
    hi: Fraction | None = None
    lo_strict = hi_strict = False
    for r in p.rows:
        a = r.coeff(DURATION)
        rest = r.const + sum(c * v[k] for k, c in r.coeffs if k != DURATION)
        if a == 0:
            if not {LT: rest < 0, LE: rest <= 0, EQ: rest == 0}[r.rel]:
                return None
            continue
        bound = -rest / a
        strict = r.rel == LT
        if r.rel == EQ or a > 0:
            if hi is None or bound < hi or (bound == hi and strict):
                hi, hi_strict = bound, strict
        if r.rel == EQ or a < 0:
            if bound > lo or (bound == lo and strict):
                lo, lo_strict = bound, strict
    ilo = math.floor(lo) + 1 if lo_strict and lo.denominator == 1 else math.ceil(lo)
    if hi is None:
        return ilo, None
    ihi = math.ceil(hi) - 1 if hi_strict and hi.denominator == 1 else math.floor(hi)
    return ilo, ihi


def evaluate_at(terms: Sequence[NormalTerm], v: Mapping[str, int]) -> PeriodicSet:
    """Integer durations denoted by the terms at a parameter valuation."""
    out = arith.EMPTY
    for t in terms:
        if not t.params_constraint.contains_point(v):
            continue
        rng = d_interval(t.base, v)
        if rng is None or (rng[1] is not None and rng[1] < rng[0]):
            continue
        s = arith.interval(*rng)
        for lp in t.loops:
            lrng = d_interval(lp, v)
            if lrng is None:
                continue
            lo, hi = lrng
            if hi is None:
                s = arith.ps_sum(s, arith.ps_union(arith.ZERO, arith.interval(lo, None)))
            else:
                s = arith.ps_sum(s, arith.interval_star(lo, hi))
        out = arith.ps_union(out, s)
    return out


def expr_durations(e: ZoneExpr, v: Mapping[str, int], bound: int) -> set[int]:
    """Integer durations ``<= bound`` denoted by an expression (direct semantics, no normal form)."""
    if isinstance(e, One):
        return {0}
    if isinstance(e, Atom):
        out = set()
        for p in e.zones:
            rng = d_interval(p, v)
            if rng is None:
                continue
            hi = bound if rng[1] is None else min(rng[1], bound)
            out.update(range(max(rng[0], 0), hi + 1))
        return out
    if isinstance(e, Union):
        return expr_durations(e.left, v, bound) | expr_durations(e.right, v, bound)
    if isinstance(e, Concat):
        a = expr_durations(e.left, v, bound)
        b = expr_durations(e.right, v, bound)
        return {x + y for x in a for y in b if x + y <= bound}
    if isinstance(e, Star):
        inner = expr_durations(e.inner, v, bound)
        reach = {0}
        frontier = {0}
        while frontier:
            nxt = {x + y for x in frontier for y in inner if x + y <= bound} - reach
            reach |= nxt
            frontier = nxt
        return reach
    raise TypeError(e)


def exact_pet_terms(pta: PTA, budget: ExplorationBudget | None = None) -> list[NormalTerm]:
    """Normal-form terms of the execution times of a one-clock model."""
    za = build_zone_automaton(pta, budget)
    return normalize(regex_extract(za), za.variables)
