"""Brute-force discrete-time semantics used as ground truth."""

from __future__ import annotations

import csv
import io
from collections import deque
from dataclasses import dataclass
from typing import NamedTuple

from .model import PTA

BOTH = "both"
PRIVATE_ONLY = "private-only"
PUBLIC_ONLY = "public-only"
NEITHER = "neither"


@dataclass(frozen=True)
class Configuration:
    location: str
    clocks: tuple[int, ...]
    elapsed: int
    visited_private: bool


class Durations(NamedTuple):
    private: frozenset
    public: frozenset


def _max_constant(ta: PTA) -> int:
    consts = [abs(i.term.constant) for l in ta.locations for i in l.invariant]
    consts += [abs(i.term.constant) for e in ta.edges for i in e.guard]
    return max(consts, default=0)


def _holds(guard, env) -> bool:
    return all(i.holds(env, {}) for i in guard)


def enumerate_durations(ta: PTA, T: int, cap: int | None = None) -> Durations:
    """Durations (``<= T``) of runs first reaching the final location, split by visits to the private location."""
    if ta.params:
        raise ValueError("substitute the parameters first")
    cap = (_max_constant(ta) + 1) if cap is None else cap
    clocks = ta.clocks
    priv, fin = ta.private, ta.final
    locs = {l.name: l for l in ta.locations}
    out = {True: set(), False: set()}

    def env(c):
        return dict(zip(clocks, c))

    start = Configuration(ta.init, tuple(0 for _ in clocks), 0, ta.init == priv)
    if not _holds(locs[ta.init].invariant, env(start.clocks)):
        return Durations(frozenset(), frozenset())
    if ta.init == fin:
        out[start.visited_private].add(0)
        return Durations(frozenset(out[True]), frozenset(out[False]))
    seen = {start}
    queue = deque([start])
    while queue:
        c = queue.popleft()
        nexts = []
        loc = locs[c.location]
        if not loc.urgent and c.elapsed < T:
            nc = tuple(min(v + 1, cap) for v in c.clocks)
            if _holds(loc.invariant, env(nc)):
                nexts.append(Configuration(c.location, nc, c.elapsed + 1, c.visited_private))
        cur = env(c.clocks)
        for e in ta.outgoing(c.location):
            if not _holds(e.guard, cur):
                continue
            nc = tuple(0 if x in e.resets else v for x, v in zip(clocks, c.clocks))
            if not _holds(locs[e.target].invariant, env(nc)):
                continue
            visited = c.visited_private or e.target == priv
            if e.target == fin:
                out[visited].add(c.elapsed)
                continue
            nexts.append(Configuration(e.target, nc, c.elapsed, visited))
        for n in nexts:
            if n not in seen:
                seen.add(n)
                queue.append(n)
    return Durations(frozenset(out[True]), frozenset(out[False]))


def check_opacity_concrete(ta: PTA, T: int) -> dict[int, str]:
    priv, pub = enumerate_durations(ta, T)
    table = {}
    for d in range(T + 1):
        a, b = d in priv, d in pub
        table[d] = BOTH if a and b else PRIVATE_ONLY if a else PUBLIC_ONLY if b else NEITHER
    return table


def table_to_csv(table: dict[int, str], scale=1) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["duration", "visibility"])
    for d in sorted(table):
        w.writerow([d * scale, table[d]])
    return buf.getvalue()
