"""Execution-time opacity: synthesis by set operations on execution times, and per-valuation checks."""

from __future__ import annotations

import itertools
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Any, Mapping

from . import arith
from .arith import PeriodicSet
from .geometry import (PolySet, polyset_difference, polyset_intersect, polyset_lift, polyset_project,
                       polyset_union)
from .model import DURATION, PTA, build_private_projection, build_public_projection, double_system
from .pet import d_interval, evaluate_at, exact_pet_terms, pet_semialg
from .zonegraph import BUDGET_EXHAUSTED, COMPLETE, ExplorationBudget, SynthResult


@dataclass
class OpacityReport:
    problem: str
    status: str
    result: Any
    timings: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        res = self.result
        if isinstance(res, PolySet):
            res = {"variables": list(res.variables), "disjuncts": res.to_json()}
        elif hasattr(res, "to_json"):
            res = res.to_json()
        return {"problem": self.problem, "status": self.status, "result": res, "timings": self.timings}


def _status(*rs: SynthResult) -> str:
    return COMPLETE if all(r.status == COMPLETE for r in rs) else BUDGET_EXHAUSTED


def projection_pets(pta: PTA, budget: ExplorationBudget | None = None) -> tuple[SynthResult, SynthResult]:
    priv = pet_semialg(build_private_projection(pta), budget)
    pub = pet_semialg(build_public_projection(pta), budget)
    return priv, pub


# set-level operations, usable on any pair of execution-time sets

def eos_from(priv: PolySet, pub: PolySet) -> PolySet:
    return polyset_intersect(priv, pub)


def diff_from(priv: PolySet, pub: PolySet) -> PolySet:
    return polyset_difference(polyset_union(priv, pub), polyset_intersect(priv, pub))


def fos_from(priv: PolySet, pub: PolySet) -> PolySet:
    params = [v for v in priv.variables if v != DURATION]
    bad = polyset_lift(polyset_project(diff_from(priv, pub), params), priv.variables)
    return polyset_difference(eos_from(priv, pub), bad)


def d_eos(pta: PTA, budget: ExplorationBudget | None = None) -> SynthResult:
    priv, pub = projection_pets(pta, budget)
    return SynthResult(eos_from(priv.result, pub.result), _status(priv, pub))


def diff_set(pta: PTA, budget: ExplorationBudget | None = None) -> SynthResult:
    priv, pub = projection_pets(pta, budget)
    return SynthResult(diff_from(priv.result, pub.result), _status(priv, pub))


def d_fos(pta: PTA, budget: ExplorationBudget | None = None) -> SynthResult:
    priv, pub = projection_pets(pta, budget)
    return SynthResult(fos_from(priv.result, pub.result), _status(priv, pub))


def eos_synth(pta: PTA, budget: ExplorationBudget | None = None) -> SynthResult:
    r = d_eos(pta, budget)
    return SynthResult(polyset_project(r.result, pta.params), r.status)


def fos_synth(pta: PTA, budget: ExplorationBudget | None = None) -> SynthResult:
    r = d_fos(pta, budget)
    return SynthResult(polyset_project(r.result, pta.params), r.status)


# per-valuation checks -------------------------------------------------------

@dataclass(frozen=True)
class ValuationVerdict:
    mode: str
    opaque: bool
    witness: Fraction | None
    private_only: Fraction | None
    public_only: Fraction | None
    private: PeriodicSet
    public: PeriodicSet
    route: str

    def to_json(self) -> dict:
        def q(x):
            return None if x is None else str(x)
        return {"mode": self.mode, "opaque": self.opaque, "witness": q(self.witness),
                "private_only": q(self.private_only), "public_only": q(self.public_only),
                "private_doubled": self.private.to_json(), "public_doubled": self.public.to_json(),
                "private": self.private.pretty(Fraction(1, 2)), "public": self.public.pretty(Fraction(1, 2)),
                "route": self.route}


@lru_cache(maxsize=64)
def doubled_projection_terms(pta: PTA, budget: ExplorationBudget | None = None):
    """Normal-form execution times of the doubled private and public projections."""
    doubled = double_system(pta)
    return (exact_pet_terms(build_private_projection(doubled), budget),
            exact_pet_terms(build_public_projection(doubled), budget))


@lru_cache(maxsize=64)
def _doubled_semialg(pta: PTA, budget: ExplorationBudget | None = None):
    doubled = double_system(pta)
    priv, pub = projection_pets(doubled, budget)
    if priv.status != COMPLETE or pub.status != COMPLETE:
        raise RuntimeError("execution-time synthesis did not complete within the budget")
    return priv.result, pub.result


def _polyset_durations(ps: PolySet, v: Mapping[str, int]) -> PeriodicSet:
    out = arith.EMPTY
    for p in ps:
        rng = d_interval(p, v)
        if rng is not None:
            out = arith.ps_union(out, arith.interval(*rng))
    return out


def duration_sets(pta: PTA, v: Mapping[str, int], budget: ExplorationBudget | None = None):
    """Private and public integer durations of the doubled system at ``v``."""
    v = {p: int(v[p]) for p in pta.params}
    if len(pta.clocks) == 1:
        priv_terms, pub_terms = doubled_projection_terms(pta, budget)
        return evaluate_at(priv_terms, v), evaluate_at(pub_terms, v), "zones"
    priv, pub = _doubled_semialg(pta, budget)
    return _polyset_durations(priv, v), _polyset_durations(pub, v), "semialg"


def check_valuation(pta: PTA, v: Mapping[str, int], mode: str = "exist",
                    budget: ExplorationBudget | None = None) -> ValuationVerdict:
    if mode not in ("exist", "full"):
        raise ValueError(f"unknown mode {mode!r}")
    missing = [p for p in pta.params if p not in v]
    if missing:
        raise ValueError(f"valuation misses parameter {missing[0]}")
    priv, pub, route = duration_sets(pta, v, budget)
    half = Fraction(1, 2)
    w = arith.ps_intersect_nonempty(priv, pub)
    po = arith.ps_difference(priv, pub).minimum()
    uo = arith.ps_difference(pub, priv).minimum()
    witness = None if w is None else w * half
    if mode == "exist":
        opaque = w is not None
    else:
        opaque = arith.ps_equal(priv, pub)
    return ValuationVerdict(mode, opaque, witness,
                            None if po is None else po * half, None if uo is None else uo * half,
                            priv, pub, route)


@dataclass(frozen=True)
class BoundedVerdict:
    problem: str
    nonempty: bool
    witness: dict | None
    pmax: int
    threshold: int | None = None

    @property
    def verdict(self) -> str:
        return "non-empty" if self.nonempty else f"empty up to {self.pmax}"

    def to_json(self) -> dict:
        out = {"verdict": self.verdict, "witness": self.witness, "bound": self.pmax}
        if self.threshold is not None:
            out["threshold"] = self.threshold
        return out


def _check_one(args):
    pta, v, mode = args
    return check_valuation(pta, v, mode).opaque


def _bounded(pta: PTA, pmax: int, mode: str, jobs: int) -> tuple[bool, dict | None]:
    params = tuple(pta.params)
    grid = [dict(zip(params, vals)) for vals in itertools.product(range(pmax + 1), repeat=len(params))]
    if jobs <= 1:
        for v in grid:
            if check_valuation(pta, v, mode).opaque:
                return True, v
        return False, None
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        for v, ok in zip(grid, ex.map(_check_one, [(pta, v, mode) for v in grid], chunksize=8)):
            if ok:
                return True, v
    return False, None


def foe_bounded(pta: PTA, pmax: int, jobs: int = 1) -> BoundedVerdict:
    """Search for a fully opaque valuation with every parameter ``<= pmax``."""
    found, w = _bounded(pta, pmax, "full", jobs)
    threshold = None
    if len(pta.params) == 1 and len(pta.clocks) == 1:
        threshold = lpsl_threshold(pta)
    return BoundedVerdict("foe", found, w, pmax, threshold)


def eoe_bounded(pta: PTA, pmax: int, jobs: int = 1) -> BoundedVerdict:
    found, w = _bounded(pta, pmax, "exist", jobs)
    return BoundedVerdict("eoe", found, w, pmax)


def lpsl_threshold(pta: PTA) -> int:
    """Parameter value beyond which both duration families have a fixed LpSl shape."""
    priv_terms, pub_terms = doubled_projection_terms(pta)
    (p,) = pta.params
    _, m1, _ = arith.to_lpsl(priv_terms, p)
    _, m2, _ = arith.to_lpsl(pub_terms, p)
    return max(m1, m2)


def timed(problem: str, fn, *args, **kwargs) -> OpacityReport:
    t0 = time.perf_counter()
    out = fn(*args, **kwargs)
    dt = round(time.perf_counter() - t0, 6)
    if isinstance(out, SynthResult):
        return OpacityReport(problem, out.status, out.result, {"seconds": dt})
    if isinstance(out, BoundedVerdict):
        return OpacityReport(problem, f"bounded({out.pmax})", out, {"seconds": dt})
    return OpacityReport(problem, COMPLETE, out, {"seconds": dt})
