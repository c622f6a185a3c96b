"""Parametric timed automata: data model, text format and model rewrites."""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping

from .geometry import EQ, LE, LT, Row

EPSILON = "eps"
RELATIONS = ("<", "<=", "=", ">=", ">")
PET_CLOCK = "x_abs"
DURATION = "d"


class ModelError(Exception):
    pass


class ModelSyntaxError(ModelError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


class ModelSemanticError(ModelError):
    pass


@dataclass(frozen=True)
class LinearTerm:
    """``sum(coefficients[p] * p) + constant`` over parameters."""

    coefficients: tuple[tuple[str, int], ...] = ()
    constant: int = 0

    @staticmethod
    def make(coefficients: Mapping[str, int] | None = None, constant: int = 0) -> "LinearTerm":
        items = tuple(sorted((k, int(v)) for k, v in (coefficients or {}).items() if v != 0))
        return LinearTerm(items, int(constant))

    @property
    def cmap(self) -> dict[str, int]:
        return dict(self.coefficients)

    def __add__(self, other: "LinearTerm") -> "LinearTerm":
        cm = self.cmap
        for k, v in other.coefficients:
            cm[k] = cm.get(k, 0) + v
        return LinearTerm.make(cm, self.constant + other.constant)

    def scale(self, k: int) -> "LinearTerm":
        return LinearTerm.make({p: k * c for p, c in self.coefficients}, k * self.constant)

    def evaluate(self, v: Mapping[str, int]) -> int:
        return self.constant + sum(c * v[p] for p, c in self.coefficients)

    def substitute(self, v: Mapping[str, int]) -> "LinearTerm":
        const = self.constant
        cm = {}
        for p, c in self.coefficients:
            if p in v:
                const += c * v[p]
            else:
                cm[p] = c
        return LinearTerm.make(cm, const)

    def render(self) -> str:
        parts = []
        for p, c in self.coefficients:
            if c == 1:
                parts.append(("+", p))
            elif c == -1:
                parts.append(("-", p))
            else:
                parts.append(("+" if c > 0 else "-", f"{abs(c)}*{p}"))
        if self.constant or not parts:
            parts.append(("+" if self.constant >= 0 else "-", str(abs(self.constant))))
        out = ("-" if parts[0][0] == "-" else "") + parts[0][1]
        for sign, text in parts[1:]:
            out += f" {sign} {text}"
        return out


@dataclass(frozen=True)
class Inequality:
    """``clock_coefficient * clock REL term``; a coefficient of 0 means no clock."""

    clock: str | None
    clock_coefficient: int
    term: LinearTerm
    relation: str

    def __post_init__(self):
        if self.relation not in RELATIONS:
            raise ValueError(f"bad relation {self.relation!r}")
        if (self.clock is None) != (self.clock_coefficient == 0):
            raise ValueError("clock and clock_coefficient disagree")

    def to_row(self) -> Row:
        cm: dict[str, int] = {p: -c for p, c in self.term.coefficients}
        if self.clock is not None:
            cm[self.clock] = cm.get(self.clock, 0) + self.clock_coefficient
        const = -self.term.constant
        rel = self.relation
        if rel in (">", ">="):
            cm = {k: -v for k, v in cm.items()}
            const = -const
            rel = "<" if rel == ">" else "<="
        return Row.make(cm, const, {"<": LT, "<=": LE, "=": EQ}[rel])

    def holds(self, clocks: Mapping[str, int], v: Mapping[str, int]) -> bool:
        lhs = self.clock_coefficient * clocks[self.clock] if self.clock else 0
        rhs = self.term.evaluate(v)
        return {"<": lhs < rhs, "<=": lhs <= rhs, "=": lhs == rhs,
                ">=": lhs >= rhs, ">": lhs > rhs}[self.relation]

    def render(self) -> str:
        if self.clock is None:
            lhs = "0"
        elif self.clock_coefficient == 1:
            lhs = self.clock
        else:
            lhs = f"{self.clock_coefficient}*{self.clock}"
        return f"{lhs} {self.relation} {self.term.render()}"

    def is_upper_bound(self) -> bool:
        return self.clock is not None and (
            (self.relation in ("<", "<=", "=") and self.clock_coefficient > 0)
            or (self.relation in (">", ">=", "=") and self.clock_coefficient < 0))


Guard = tuple  # tuple[Inequality, ...]; empty means True


def render_guard(g: Guard) -> str:
    return " && ".join(i.render() for i in g) if g else "true"


@dataclass(frozen=True)
class Location:
    name: str
    invariant: Guard = ()
    urgent: bool = False
    init: bool = False
    private: bool = False
    final: bool = False


@dataclass(frozen=True)
class Edge:
    source: str
    target: str
    guard: Guard = ()
    action: str = EPSILON
    resets: frozenset = frozenset()


@dataclass(frozen=True)
class PTA:
    name: str
    locations: tuple[Location, ...]
    clocks: tuple[str, ...]
    params: tuple[str, ...]
    edges: tuple[Edge, ...] = field(default=())

    def __post_init__(self):
        names = [l.name for l in self.locations]
        if len(set(names)) != len(names):
            raise ModelSemanticError("duplicate location names")
        if set(self.clocks) & set(self.params):
            raise ModelSemanticError("clock and parameter identifiers overlap")
        inits = [l for l in self.locations if l.init]
        finals = [l for l in self.locations if l.final]
        privs = [l for l in self.locations if l.private]
        if not inits:
            raise ModelSemanticError("no init location")
        if len(inits) > 1:
            raise ModelSemanticError("duplicate role: more than one init location")
        if not finals:
            raise ModelSemanticError("no final location")
        if len(finals) > 1:
            raise ModelSemanticError("duplicate role: more than one final location")
        if len(privs) > 1:
            raise ModelSemanticError("duplicate role: more than one private location")
        known = set(names)
        for l in self.locations:
            self._check_guard(l.invariant, f"invariant of {l.name}")
        for e in self.edges:
            if e.source not in known or e.target not in known:
                raise ModelSemanticError(f"edge {e.source} -> {e.target} uses an unknown location")
            unknown = set(e.resets) - set(self.clocks)
            if unknown:
                raise ModelSemanticError(f"reset of unknown clock {sorted(unknown)[0]}")
            self._check_guard(e.guard, f"guard of {e.source} -> {e.target}")

    def _check_guard(self, g: Guard, where: str) -> None:
        for ineq in g:
            if ineq.clock is not None and ineq.clock not in self.clocks:
                raise ModelSemanticError(f"unknown clock {ineq.clock} in {where}")
            for p, _ in ineq.term.coefficients:
                if p not in self.params:
                    raise ModelSemanticError(f"unknown parameter {p} in {where}")

    # convenience -----------------------------------------------------------
    @property
    def actions(self) -> frozenset:
        return frozenset(e.action for e in self.edges)

    def loc(self, name: str) -> Location:
        for l in self.locations:
            if l.name == name:
                return l
        raise KeyError(name)

    @property
    def init(self) -> str:
        return next(l.name for l in self.locations if l.init)

    @property
    def final(self) -> str:
        return next(l.name for l in self.locations if l.final)

    @property
    def private(self) -> str | None:
        return next((l.name for l in self.locations if l.private), None)

    def incoming(self, name: str) -> list[Edge]:
        return [e for e in self.edges if e.target == name]

    def outgoing(self, name: str) -> list[Edge]:
        return [e for e in self.edges if e.source == name]


Valuation = Mapping[str, int]


# text format -----------------------------------------------------------------

_IDENT = r"[A-Za-z_][\w'.~]*"
_TOKEN = re.compile(rf"\s*(->|<=|>=|&&|[<>=*+\-]|\d+|{_IDENT})")
_KEYWORDS = {"pta", "params", "clocks", "loc", "edge", "init", "private", "final", "urgent",
             "invariant", "when", "act", "reset", "true"}


def _tokenize(line: str, lineno: int) -> list[tuple[str, int]]:
    out = []
    pos = 0
    line = line.split("#", 1)[0].rstrip()
    while pos < len(line):
        m = _TOKEN.match(line, pos)
        if not m:
            if line[pos:].strip() == "":
                break
            col = pos + len(line[pos:]) - len(line[pos:].lstrip()) + 1
            raise ModelSyntaxError(f"unexpected character {line[col - 1]!r}", lineno, col)
        out.append((m.group(1), m.start(1) + 1))
        pos = m.end()
    return out


class _Line:
    def __init__(self, tokens, lineno):
        self.tokens = tokens
        self.i = 0
        self.lineno = lineno

    def peek(self):
        return self.tokens[self.i][0] if self.i < len(self.tokens) else None

    def col(self):
        if self.i < len(self.tokens):
            return self.tokens[self.i][1]
        return (self.tokens[-1][1] + len(self.tokens[-1][0])) if self.tokens else 1

    def error(self, msg):
        raise ModelSyntaxError(msg, self.lineno, self.col())

    def next(self, what="token"):
        if self.i >= len(self.tokens):
            self.error(f"expected {what}, found end of line")
        tok = self.tokens[self.i][0]
        self.i += 1
        return tok

    def ident(self, what="identifier"):
        tok = self.peek()
        if tok is None or not re.fullmatch(_IDENT, tok) or tok in _KEYWORDS:
            self.error(f"expected {what}")
        return self.next()

    def done(self):
        return self.i >= len(self.tokens)


def _parse_term(ln: _Line, params: set, clocks: set, allow_clock: bool):
    """Returns (clock, clock_coeff, LinearTerm)."""
    coeffs: dict[str, int] = {}
    const = 0
    clock = None
    ccoef = 0
    sign = 1
    first = True
    while True:
        tok = ln.peek()
        if tok in ("+", "-"):
            ln.next()
            sign = 1 if tok == "+" else -1
        elif not first:
            break
        tok = ln.peek()
        if tok is None:
            ln.error("expected a term")
        if tok.isdigit():
            n = int(ln.next())
            if ln.peek() == "*":
                ln.next()
                name = ln.ident("identifier after '*'")
            elif ln.peek() is not None and re.fullmatch(_IDENT, ln.peek()) and ln.peek() not in _KEYWORDS:
                name = ln.next()
            else:
                const += sign * n
                name = None
                n = None
            if name is not None:
                if name in clocks:
                    if not allow_clock or clock not in (None, name):
                        ln.error(f"clock {name} not allowed here")
                    clock = name
                    ccoef += sign * n
                else:
                    coeffs[name] = coeffs.get(name, 0) + sign * n
        else:
            name = ln.ident("parameter, clock or integer")
            if name in clocks:
                if not allow_clock or clock not in (None, name):
                    ln.i -= 1
                    ln.error(f"clock {name} not allowed here")
                clock = name
                ccoef += sign
            elif name in params:
                coeffs[name] = coeffs.get(name, 0) + sign
            else:
                ln.i -= 1
                raise ModelSemanticError(
                    f"line {ln.lineno}, column {ln.col()}: unknown identifier {name}")
        first = False
        sign = 1
        if ln.peek() not in ("+", "-"):
            break
    if ccoef == 0:
        clock = None
    return clock, ccoef, LinearTerm.make(coeffs, const)


def _parse_guard(ln: _Line, params: set, clocks: set) -> Guard:
    if ln.peek() == "true":
        ln.next()
        return ()
    out = []
    while True:
        clock, ccoef, lhs = _parse_term(ln, params, clocks, allow_clock=True)
        rel = ln.next("relation")
        if rel not in RELATIONS:
            ln.i -= 1
            ln.error(f"expected one of {' '.join(RELATIONS)}")
        _, _, rhs = _parse_term(ln, params, clocks, allow_clock=False)
        out.append(Inequality(clock, ccoef, rhs + lhs.scale(-1), rel))
        if ln.peek() != "&&":
            break
        ln.next()
    return tuple(out)


def parse_model(text: str) -> PTA:
    name = None
    params: list[str] = []
    clocks: list[str] = []
    locations: list[Location] = []
    edges: list[Edge] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        toks = _tokenize(raw, lineno)
        if not toks:
            continue
        ln = _Line(toks, lineno)
        kw = ln.next()
        if kw == "pta":
            name = ln.ident("model name")
        elif kw == "params":
            while not ln.done():
                params.append(ln.ident("parameter name"))
        elif kw == "clocks":
            while not ln.done():
                clocks.append(ln.ident("clock name"))
        elif kw == "loc":
            lname = ln.ident("location name")
            flags = {"init": False, "private": False, "final": False, "urgent": False}
            inv: Guard = ()
            while not ln.done():
                tok = ln.next()
                if tok in flags:
                    flags[tok] = True
                elif tok == "invariant":
                    inv = _parse_guard(ln, set(params), set(clocks))
                else:
                    ln.i -= 1
                    ln.error(f"unexpected {tok!r} in location declaration")
            locations.append(Location(lname, inv, **flags))
        elif kw == "edge":
            src = ln.ident("source location")
            if ln.next("'->'") != "->":
                ln.i -= 1
                ln.error("expected '->'")
            dst = ln.ident("target location")
            guard: Guard = ()
            action = EPSILON
            resets: set[str] = set()
            while not ln.done():
                tok = ln.next()
                if tok == "when":
                    guard = _parse_guard(ln, set(params), set(clocks))
                elif tok == "act":
                    action = ln.ident("action name")
                elif tok == "reset":
                    resets.add(ln.ident("clock name"))
                    while not ln.done() and ln.peek() not in ("when", "act", "reset"):
                        resets.add(ln.ident("clock name"))
                else:
                    ln.i -= 1
                    ln.error(f"unexpected {tok!r} in edge declaration")
            edges.append(Edge(src, dst, guard, action, frozenset(resets)))
        else:
            ln.i -= 1
            ln.error(f"unknown declaration {kw!r}")
    return PTA(name or "model", tuple(locations), tuple(clocks), tuple(params), tuple(edges))


def render(pta: PTA) -> str:
    lines = [f"pta {pta.name}"]
    if pta.params:
        lines.append("params " + " ".join(pta.params))
    if pta.clocks:
        lines.append("clocks " + " ".join(pta.clocks))
    for l in pta.locations:
        parts = ["loc", l.name]
        parts += [flag for flag in ("init", "private", "final", "urgent") if getattr(l, flag)]
        if l.invariant:
            parts += ["invariant", render_guard(l.invariant)]
        lines.append(" ".join(parts))
    for e in pta.edges:
        parts = ["edge", e.source, "->", e.target]
        if e.guard:
            parts += ["when", render_guard(e.guard)]
        if e.action != EPSILON:
            parts += ["act", e.action]
        if e.resets:
            parts += ["reset"] + sorted(e.resets)
        lines.append(" ".join(parts))
    return "\n".join(lines) + "\n"


def load_model(path) -> PTA:
    with open(path, encoding="utf-8") as fh:
        return parse_model(fh.read())


# diagnostics -----------------------------------------------------------------

@dataclass(frozen=True)
class Diagnostics:
    clocks: int
    parametric_clocks: int
    nonparametric_clocks: int
    parameters: int
    reset_free: bool
    exact_pet: bool
    messages: tuple[str, ...]

    @property
    def pta_class(self) -> tuple[int, int, int]:
        return (self.parametric_clocks, self.nonparametric_clocks, self.parameters)


def validate(pta: PTA) -> Diagnostics:
    parametric = set()
    for g in [l.invariant for l in pta.locations] + [e.guard for e in pta.edges]:
        for ineq in g:
            if ineq.clock is not None and ineq.term.coefficients:
                parametric.add(ineq.clock)
    reset_free = all(not e.resets for e in pta.edges)
    msgs = []
    exact = len(pta.clocks) == 1
    if not exact:
        msgs.append(f"warning: exact PET method unavailable ({len(pta.clocks)} clocks, needs exactly 1)")
    if pta.private is None:
        msgs.append("warning: no private location; opacity problems are undefined")
    reachable = _untimed_reachable(pta, pta.init)
    if pta.final not in reachable:
        msgs.append(f"warning: final location {pta.final} is not reachable in the untimed graph")
    return Diagnostics(len(pta.clocks), len(parametric), len(pta.clocks) - len(parametric),
                       len(pta.params), reset_free, exact, tuple(msgs))


def _untimed_reachable(pta: PTA, start: str, stop_at: Iterable[str] = ()) -> set[str]:
    seen = {start}
    todo = [start]
    stop = set(stop_at)
    while todo:
        cur = todo.pop()
        if cur in stop:
            continue
        for e in pta.outgoing(cur):
            if e.target not in seen:
                seen.add(e.target)
                todo.append(e.target)
    return seen


# rewrites --------------------------------------------------------------------

def _subst_guard(g: Guard, v: Valuation) -> Guard:
    return tuple(replace(i, term=i.term.substitute(v)) for i in g)


def substitute(pta: PTA, v: Valuation) -> PTA:
    """Replace every parameter by its value; the result has no parameters."""
    missing = [p for p in pta.params if p not in v]
    if missing:
        raise ValueError(f"valuation misses parameter {missing[0]}")
    return PTA(pta.name, tuple(replace(l, invariant=_subst_guard(l.invariant, v)) for l in pta.locations),
               pta.clocks, (), tuple(replace(e, guard=_subst_guard(e.guard, v)) for e in pta.edges))


def fix_parameters(pta: PTA, v: Valuation) -> PTA:
    """Substitute only the given parameters, keeping the others symbolic."""
    keep = tuple(p for p in pta.params if p not in v)
    return PTA(pta.name, tuple(replace(l, invariant=_subst_guard(l.invariant, v)) for l in pta.locations),
               pta.clocks, keep, tuple(replace(e, guard=_subst_guard(e.guard, v)) for e in pta.edges))


def _eq(clock: str, param: str) -> Inequality:
    return Inequality(clock, 1, LinearTerm.make({param: 1}), "=")


def build_pet_target(pta: PTA) -> PTA:
    """Add a never-reset clock and a duration parameter that measures arrival at the final location."""
    if PET_CLOCK in pta.clocks or PET_CLOCK in pta.params:
        raise ModelSemanticError(f"identifier {PET_CLOCK} already used")
    if DURATION in pta.clocks or DURATION in pta.params:
        raise ModelSemanticError(f"identifier {DURATION} already used")
    fin = pta.final
    locs = tuple(replace(l, urgent=True) if l.name == fin else l for l in pta.locations)
    edges = []
    for e in pta.edges:
        if e.source == fin:
            continue
        if e.target == fin:
            e = replace(e, guard=e.guard + (_eq(PET_CLOCK, DURATION),))
        edges.append(e)
    return PTA(pta.name, locs, pta.clocks + (PET_CLOCK,), pta.params + (DURATION,), tuple(edges))


def _private_names(name: str) -> tuple[str, str]:
    return f"{name}.b0", f"{name}.b1"


def build_private_projection(pta: PTA) -> PTA:
    """Keep exactly the runs that visit the private location before the final one.

    Each location is doubled according to a Boolean flag that is raised on
    entering the private location; the final location is entered only from
    flagged copies.
    """
    priv = pta.private
    if priv is None:
        raise ModelSemanticError("no private location")
    fin = pta.final
    start_flag = pta.init == priv
    locs = []
    for l in pta.locations:
        for flag in (False, True):
            locs.append(Location(_private_names(l.name)[flag], l.invariant, l.urgent,
                                 init=(l.init and flag == start_flag),
                                 private=(l.private and flag),
                                 final=(l.final and flag)))
    edges = []
    for e in pta.edges:
        for flag in (False, True):
            new_flag = flag or e.target == priv
            if e.target == fin and not new_flag:
                continue
            edges.append(replace(e, source=_private_names(e.source)[flag],
                                 target=_private_names(e.target)[new_flag]))
    out = PTA(pta.name + "_priv", tuple(locs), pta.clocks, pta.params, tuple(edges))
    return prune_unreachable(out)


def build_public_projection(pta: PTA) -> PTA:
    """Remove the private location and every edge touching it."""
    priv = pta.private
    if priv is None:
        raise ModelSemanticError("no private location")
    if priv == pta.init or priv == pta.final:
        # removing it would leave no init/final: keep the location, drop all its edges
        locs = tuple(replace(l, private=False) for l in pta.locations)
        edges = tuple(e for e in pta.edges if priv not in (e.source, e.target))
        locs = tuple(l for l in locs if l.name != priv or l.init or l.final)
        unreach = PTA(pta.name + "_pub", locs, pta.clocks, pta.params, edges)
        if priv == pta.init:
            # every run starts in the private location, none is public
            return PTA(unreach.name, unreach.locations, pta.clocks, pta.params, ())
        return unreach
    locs = tuple(l for l in pta.locations if l.name != priv)
    edges = tuple(e for e in pta.edges if priv not in (e.source, e.target))
    return PTA(pta.name + "_pub", locs, pta.clocks, pta.params, edges)


def prune_unreachable(pta: PTA) -> PTA:
    """Drop locations not reachable in the untimed graph (init/final always kept)."""
    reach = _untimed_reachable(pta, pta.init)
    keep = {l.name for l in pta.locations if l.name in reach or l.init or l.final}
    return PTA(pta.name, tuple(l for l in pta.locations if l.name in keep), pta.clocks, pta.params,
               tuple(e for e in pta.edges if e.source in keep and e.target in keep))


def _single_clock(pta: PTA) -> str:
    if len(pta.clocks) != 1:
        raise ModelSemanticError(f"expected exactly one clock, found {len(pta.clocks)}")
    return pta.clocks[0]


def compute_frp(pta: PTA) -> set[tuple[str, str]]:
    """Pairs of locations delimiting reset-free path segments."""
    _single_clock(pta)
    fin = pta.final
    reset_in = {e.target for e in pta.edges if e.resets}
    starts = [l.name for l in pta.locations
              if l.name == pta.init or (l.name != fin and l.name in reset_in)]
    ends = [l.name for l in pta.locations if l.name == fin or l.name in reset_in]
    return {(a, b) for a in starts for b in ends}


def _fresh(name: str, taken: set[str]) -> str:
    cand = name + "'"
    while cand in taken:
        cand += "'"
    return cand


def _trivially_true(ineq: Inequality) -> bool:
    """Parameter-only inequality that holds for all non-negative valuations."""
    row = ineq.to_row()
    if row.variables():
        return row.rel != EQ and all(c <= 0 for _, c in row.coeffs) and row.const <= 0
    return row.trivially_true()


def build_resetfree(pta: PTA, li: str, lj: str) -> PTA:
    """Reset-free automaton of the runs from ``li`` (clock at 0) to ``lj`` with a reset only on the last edge."""
    x = _single_clock(pta)
    if (li, lj) not in compute_frp(pta):
        raise ModelSemanticError(f"({li}, {lj}) is not a final-reset pair")
    if DURATION in pta.params or DURATION in pta.clocks:
        raise ModelSemanticError(f"identifier {DURATION} already used")
    fin = pta.final
    names = {l.name for l in pta.locations}
    lj2 = _fresh(lj, names)
    orig = pta.loc(lj)
    # lj is only entered at the very end; its invariant is checked at clock 0 on formerly-resetting edges
    inv_at_zero = tuple(Inequality(None, 0, i.term, i.relation) for i in orig.invariant)
    inv_at_zero = tuple(i for i in inv_at_zero if not _trivially_true(i))

    locs = []
    for l in pta.locations:
        if l.name == lj:
            locs.append(Location(lj, (), True, init=False, private=l.private, final=l.final))
            locs.append(Location(lj2, l.invariant, l.urgent or lj == fin, init=False))
        else:
            locs.append(replace(l, init=False))
    init_name = li if li != lj else lj2
    locs = [replace(l, init=(l.name == init_name)) for l in locs]

    dur = _eq(x, DURATION)
    edges = []
    for e in pta.edges:
        src, dst = e.source, e.target
        if dst == lj and not e.resets:
            dst = lj2
        if src == lj and lj != fin:
            src = lj2
        if src == fin:
            continue
        if e.resets and e.target != lj:
            continue
        guard = e.guard
        if dst == lj:
            guard = guard + inv_at_zero + (dur,)
        edges.append(Edge(src, dst, guard, e.action, frozenset()))
    if lj == fin:
        edges.append(Edge(lj2, lj, (dur,), EPSILON, frozenset()))
    return PTA(f"{pta.name}_{li}_{lj}", tuple(locs), pta.clocks, pta.params + (DURATION,), tuple(edges))


def double_system(pta: PTA) -> PTA:
    """Scale every constant and coefficient by 2 and make strict constraints non-strict."""

    def dbl(i: Inequality) -> Inequality:
        t = i.term.scale(2)
        rel = i.relation
        c = i.clock_coefficient
        # strict bounds tightened by one unit of the doubled (integer) grid
        if rel == "<":
            t, rel = t + LinearTerm.make({}, -1), "<="
        elif rel == ">":
            t, rel = t + LinearTerm.make({}, 1), ">="
        return Inequality(i.clock, c, t, rel)

    return PTA(pta.name, tuple(replace(l, invariant=tuple(dbl(i) for i in l.invariant)) for l in pta.locations),
               pta.clocks, pta.params,
               tuple(replace(e, guard=tuple(dbl(i) for i in e.guard)) for e in pta.edges))


SYNC = "sync_final"


def _rename_guard(g: Guard, mapping: Mapping[str, str]) -> Guard:
    return tuple(replace(i, clock=mapping.get(i.clock, i.clock)) for i in g)


def build_self_composition(pta: PTA) -> PTA:
    """Product of a private-run copy and a public-run copy sharing the parameter.

    The two copies synchronize on entering the final location; the product's
    final location is reachable iff some duration is both private and public.
    """
    if len(pta.params) > 1:
        raise ModelSemanticError("self-composition needs at most one parameter")
    priv = build_private_projection(pta)
    pub = build_public_projection(pta)
    c1 = {c: f"{c}_1" for c in pta.clocks}
    c2 = {c: f"{c}_2" for c in pta.clocks}
    target = "opaque"
    locs = []
    for a in priv.locations:
        if a.final:
            continue
        for b in pub.locations:
            if b.final:
                continue
            locs.append(Location(f"{a.name}~{b.name}",
                                 _rename_guard(a.invariant, c1) + _rename_guard(b.invariant, c2),
                                 a.urgent or b.urgent, init=a.init and b.init))
    if priv.init == priv.final and pub.init == pub.final:
        locs.append(Location(target, (), True, init=True, final=True))
    else:
        locs.append(Location(target, (), True, final=True))
    if not any(l.init for l in locs):
        # one side starts in its final location: only the other side may move, nothing synchronizes
        locs = [Location("start", (), True, init=True)] + locs
    names = {l.name for l in locs}
    edges = []
    for a in priv.locations:
        if a.final:
            continue
        for b in pub.locations:
            if b.final:
                continue
            here = f"{a.name}~{b.name}"
            for e in priv.outgoing(a.name):
                if e.target == priv.final:
                    continue
                edges.append(Edge(here, f"{e.target}~{b.name}", _rename_guard(e.guard, c1), e.action,
                                  frozenset(c1[c] for c in e.resets)))
            for e in pub.outgoing(b.name):
                if e.target == pub.final:
                    continue
                edges.append(Edge(here, f"{a.name}~{e.target}", _rename_guard(e.guard, c2), e.action,
                                  frozenset(c2[c] for c in e.resets)))
            for e1 in priv.outgoing(a.name):
                if e1.target != priv.final:
                    continue
                for e2 in pub.outgoing(b.name):
                    if e2.target != pub.final:
                        continue
                    inv = _rename_guard(priv.loc(priv.final).invariant, c1) + \
                        _rename_guard(pub.loc(pub.final).invariant, c2)
                    edges.append(Edge(here, target, _rename_guard(e1.guard, c1) + _rename_guard(e2.guard, c2)
                                      + _after_reset(inv, e1.resets, c1) + _after_reset((), e2.resets, c2),
                                      SYNC, frozenset()))
    edges = [e for e in edges if e.source in names and e.target in names]
    out = PTA(pta.name + "_selfcomp", tuple(locs), tuple(c1.values()) + tuple(c2.values()),
              pta.params, tuple(edges))
    return prune_unreachable(out)


def _after_reset(inv: Guard, resets, mapping) -> Guard:
    """Target invariants are checked on the synchronized edge; reset clocks read 0 there."""
    zeroed = {mapping[c] for c in resets}
    out = []
    for i in inv:
        if i.clock in zeroed:
            out.append(Inequality(None, 0, i.term, i.relation))
        else:
            out.append(i)
    return tuple(out)
