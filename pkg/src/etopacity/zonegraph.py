"""Parametric zone graph exploration and reachability synthesis."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple

from .geometry import EQ, Polyhedron, PolySet, Row, intersect, project, reset_clocks, time_elapse
from .model import PTA, Edge, Guard

COMPLETE = "complete"
BUDGET_EXHAUSTED = "budget_exhausted"


@dataclass(frozen=True)
class ExplorationBudget:
    max_states: int = 10000
    max_depth: int = 256

    def __post_init__(self):
        if self.max_states < 1 or self.max_depth < 1:
            raise ValueError("budget limits must be at least 1")


@dataclass(frozen=True)
class SymbolicState:
    location: str
    zone: Polyhedron


class SynthResult(NamedTuple):
    result: PolySet
    status: str

    @property
    def complete(self) -> bool:
        return self.status == COMPLETE


def variables_of(pta: PTA) -> tuple[str, ...]:
    return tuple(sorted(set(pta.clocks) | set(pta.params)))


def guard_poly(pta: PTA, g: Guard) -> Polyhedron:
    return Polyhedron.make(variables_of(pta), (i.to_row() for i in g))


def _enter(pta: PTA, zone: Polyhedron, target: str) -> Polyhedron:
    loc = pta.loc(target)
    inv = guard_poly(pta, loc.invariant)
    zone = intersect(zone, inv)
    if loc.urgent or zone.is_empty():
        return zone
    return intersect(time_elapse(zone, pta.clocks), inv)


def initial_state(pta: PTA) -> SymbolicState:
    vs = variables_of(pta)
    zero = Polyhedron.make(vs, [Row.make({c: 1}, 0, EQ) for c in pta.clocks])
    zone = _enter(pta, zero, pta.init)
    if zone.is_empty():
        raise ValueError(f"initial zone is empty (inconsistent invariant at {pta.init})")
    return SymbolicState(pta.init, zone)


def successors(pta: PTA, s: SymbolicState) -> list[tuple[Edge, SymbolicState]]:
    out = []
    for e in pta.outgoing(s.location):
        z = intersect(s.zone, guard_poly(pta, e.guard))
        if z.is_empty():
            continue
        z = _enter(pta, reset_clocks(z, e.resets), e.target)
        if not z.is_empty():
            out.append((e, SymbolicState(e.target, z)))
    return out


@dataclass
class ZoneGraph:
    """Explored part of the parametric zone graph."""

    states: list[SymbolicState] = field(default_factory=list)
    transitions: list[tuple[int, int, int]] = field(default_factory=list)  # (src, edge index, dst)
    status: str = COMPLETE

    def to_dot(self, pta: PTA) -> str:
        lines = ["digraph zonegraph {", "  node [shape=box];"]
        for i, s in enumerate(self.states):
            label = f"{s.location}\\n{s.zone.pretty()}".replace('"', '\\"')
            lines.append(f'  s{i} [label="{label}"];')
        for src, ei, dst in self.transitions:
            lines.append(f'  s{src} -> s{dst} [label="e{ei}"];')
        lines.append("}")
        return "\n".join(lines) + "\n"


def explore(pta: PTA, targets: Iterable[str] = (), budget: ExplorationBudget | None = None,
            subsumption: bool = True) -> ZoneGraph:
    """Breadth-first exploration; target states are recorded but not expanded."""
    budget = budget or ExplorationBudget()
    targets = set(targets)
    unknown = targets - {l.name for l in pta.locations}
    if unknown:
        raise ValueError(f"unknown target locations {sorted(unknown)}")
    edge_index = {e: i for i, e in enumerate(pta.edges)}
    graph = ZoneGraph()
    seen: dict[str, list[int]] = {}

    def add(s: SymbolicState) -> int | None:
        bucket = seen.setdefault(s.location, [])
        for j in bucket:
            old = graph.states[j].zone
            if old == s.zone or (subsumption and old.includes(s.zone)):
                return j
        graph.states.append(s)
        bucket.append(len(graph.states) - 1)
        return None

    init = initial_state(pta)
    add(init)
    queue = deque([(0, 0)])
    while queue:
        idx, depth = queue.popleft()
        s = graph.states[idx]
        if s.location in targets:
            continue
        succ = successors(pta, s)
        if succ and depth >= budget.max_depth:
            graph.status = BUDGET_EXHAUSTED
            continue
        for e, t in succ:
            if len(graph.states) >= budget.max_states:
                graph.status = BUDGET_EXHAUSTED
                queue.clear()
                break
            old = add(t)
            if old is None:
                new = len(graph.states) - 1
                graph.transitions.append((idx, edge_index[e], new))
                queue.append((new, depth + 1))
            else:
                graph.transitions.append((idx, edge_index[e], old))
    return graph


def ef_synth(pta: PTA, targets: Iterable[str], budget: ExplorationBudget | None = None,
             subsumption: bool = True) -> SynthResult:
    """Parameter valuations (over all parameters) for which some target location is reachable."""
    targets = set(targets)
    graph = explore(pta, targets, budget, subsumption)
    params = tuple(sorted(pta.params))
    found = [project(s.zone, params) for s in graph.states if s.location in targets]
    return SynthResult(PolySet.make(params, found), graph.status)
