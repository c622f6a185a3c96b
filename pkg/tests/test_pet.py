import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import CORPUS
from etopacity import arith
from etopacity.geometry import Polyhedron, PolySet, parse_constraint, polyset_equal
from etopacity.model import build_private_projection, build_public_projection, double_system, load_model, parse_model
from etopacity.opacity import _polyset_durations
from etopacity.pet import (Atom, Concat, One, Star, Union, ZoneAutomaton, ZoneAutomatonError, bar_concat, bar_union,
                           build_zone_automaton, d_interval, evaluate_at, exact_pet_terms, expr_durations, expr_pretty,
                           expr_to_text, normalize, pet_semialg, regex_extract, zero_duration)
from etopacity.zonegraph import BUDGET_EXHAUSTED, COMPLETE, ExplorationBudget

VS = ("d", "p", "q")


def Z(*texts, vs=VS):
    return PolySet.make(vs, [parse_constraint(t, vs) for t in texts])


# bar operators -------------------------------------------------------------------

def test_bar_concat_periodic_loop():
    assert polyset_equal(bar_concat(Z("d = p"), Z("q <= d <= p")), Z("p + q <= d <= 2*p"))


def test_bar_concat_neutral():
    z = Z("q <= d <= p", "d = 2*q")
    assert polyset_equal(bar_concat(zero_duration(VS), z), z)
    assert polyset_equal(bar_concat(z, zero_duration(VS)), z)


def test_bar_concat_strict():
    assert polyset_equal(bar_concat(Z("d <= 3"), Z("d < 2")), Z("d < 5"))


def test_bar_concat_empty():
    assert bar_concat(PolySet.empty(VS), Z("d <= 3")).is_empty()


def test_bar_concat_checks_variables():
    with pytest.raises(ValueError):
        bar_concat(Z("p <= 1", vs=("p",)), Z("p <= 1", vs=("p",)))


def test_bar_union():
    z = Z("q <= d <= p")
    assert polyset_equal(bar_union(PolySet.empty(VS), z), z)
    assert bar_union(z, z) == z
    u = bar_union(Z("d = p"), z)
    assert len(u) == 2


small = st.builds(lambda lo, w, k: f"{lo} <= d <= {lo + w} + {k}*p", st.integers(0, 3), st.integers(0, 3),
                  st.integers(0, 1))


@settings(max_examples=40, deadline=None)
@given(small, small, small)
def test_bar_concat_associative_and_commutative(a, b, c):
    A, B, C = Z(a), Z(b), Z(c)
    assert polyset_equal(bar_concat(bar_concat(A, B), C), bar_concat(A, bar_concat(B, C)))
    assert polyset_equal(bar_concat(A, B), bar_concat(B, A))


@settings(max_examples=40, deadline=None)
@given(small, small)
def test_bar_concat_integer_sums(a, b):
    # at integer valuations the integer points of the sum are the sums of integer points
    A, B = Z(a), Z(b)
    AB = bar_concat(A, B)
    for p in range(4):
        v = {"p": p, "q": 0}
        sa = _polyset_durations(A, v).members(30)
        sb = _polyset_durations(B, v).members(30)
        assert set(_polyset_durations(AB, v).members(30)) == {x + y for x in sa for y in sb if x + y <= 30}


# zone automaton and expression ----------------------------------------------------

def test_zone_automaton_two_param(two_param):
    za = build_zone_automaton(two_param)
    assert set(za.labels) == {("l0", "lf")}
    assert polyset_equal(za.labels[("l0", "lf")], pet_semialg(two_param).result)


def test_zone_automaton_unsat_loop():
    a = parse_model("pta a\nparams p\nclocks x\nloc l0 init invariant x <= 2\nloc lf final\n"
                    "edge l0 -> l0 when x >= 3 reset x\nedge l0 -> lf when x >= p\n")
    za = build_zone_automaton(a)
    assert ("l0", "l0") not in za.labels


def test_zone_automaton_budget(periodic_loop):
    with pytest.raises(ZoneAutomatonError):
        build_zone_automaton(periodic_loop, ExplorationBudget(max_states=1))


def test_zone_automaton_exports(periodic_loop):
    za = build_zone_automaton(periodic_loop)
    assert za.to_dot().count("->") == 3
    assert [t["from"] for t in za.to_json()["transitions"]] == ["l0", "l0"]


def test_regex_loop_exit(periodic_loop):
    za = build_zone_automaton(periodic_loop)
    e = regex_extract(za)
    assert isinstance(e, Concat) and isinstance(e.left, Star)
    assert polyset_equal(e.left.inner.zones, Z("d = p"))
    assert polyset_equal(e.right.zones, Z("q <= d <= p"))
    assert expr_pretty(e).startswith("(")
    assert expr_to_text(e).endswith(")")


def _za(transitions, states=("a", "b", "c"), final="c"):
    return ZoneAutomaton(states, "a", final, VS, tuple(((s, t), Z(z)) for s, t, z in transitions))


def test_regex_single_edge():
    e = regex_extract(_za([("a", "c", "d <= 3")]))
    assert e == Atom(Z("d <= 3"))


def test_regex_parallel_paths():
    e = regex_extract(_za([("a", "b", "d = 1"), ("b", "c", "d = 2"), ("a", "c", "d = 3")], final="c"))
    assert isinstance(e, Union)
    assert {type(e.left), type(e.right)} == {Atom, Concat}
    e = regex_extract(ZoneAutomaton(("a", "b", "c", "f"), "a", "f", VS, tuple(
        ((s, t), Z(z)) for s, t, z in [("a", "b", "d = 1"), ("b", "f", "d = 2"), ("a", "c", "d = 3"),
                                        ("c", "f", "d = 4")])))
    assert isinstance(e, Union) and isinstance(e.left, Concat) and isinstance(e.right, Concat)


def test_regex_unreachable_final():
    e = regex_extract(_za([("a", "b", "d = 1")]))
    assert isinstance(e, Atom) and e.zones.is_empty()


# normal form and evaluation ------------------------------------------------------

def test_normalize_periodic_loop(periodic_loop):
    terms = exact_pet_terms(periodic_loop)
    assert len(terms) == 2
    by_loops = sorted(terms, key=lambda t: len(t.loops))
    assert not by_loops[0].loops
    assert by_loops[0].base == parse_constraint("q <= d <= p", VS)
    assert by_loops[1].base == parse_constraint("p + q <= d <= 2*p", VS)
    # loops keep only their duration rows
    (loop,) = by_loops[1].loops
    assert Polyhedron.make(VS, loop.rows) == parse_constraint("d = p", VS)


def test_normalize_atom():
    terms = normalize(Atom(Z("d <= 3")), VS)
    assert len(terms) == 1 and not terms[0].loops


def test_normalize_zero_star():
    terms = normalize(Star(Atom(zero_duration(VS))), VS)
    assert len(terms) == 1 and not terms[0].loops
    assert terms[0].base == zero_duration(VS).disjuncts[0]


def test_evaluate_periodic_loop(periodic_loop):
    terms = exact_pet_terms(periodic_loop)
    s = evaluate_at(terms, {"p": 3, "q": 2})
    assert s.members(30) == [d for d in range(31) if d >= 2 and d % 3 in (0, 2)]
    assert evaluate_at(terms, {"p": 1, "q": 5}).is_empty()


def test_evaluate_base_only():
    terms = normalize(Atom(Z("0 <= d <= 3")), VS)
    for p in range(4):
        assert evaluate_at(terms, {"p": p, "q": 1}).members(50) == [0, 1, 2, 3]


def test_d_interval_strict():
    p = parse_constraint("p < d < 2*p", VS)
    assert d_interval(p, {"p": 2, "q": 0}) == (3, 3)
    assert d_interval(parse_constraint("q <= 1 && d >= p", VS), {"p": 2, "q": 3}) is None


atoms = st.sampled_from(["d = p", "q <= d <= p", "d <= 2", "1 <= d <= q + 1", "d = 0", "d = 2*q + 1"])


def exprs():
    leaf = atoms.map(lambda t: Atom(Z(t)))
    return st.recursive(leaf, lambda sub: st.one_of(
        st.builds(Concat, sub, sub), st.builds(Union, sub, sub), st.builds(Star, sub), st.just(One())),
        max_leaves=5)


@settings(max_examples=60, deadline=None)
@given(exprs())
def test_normalize_preserves_denotation(e):
    terms = normalize(e, VS)
    for p, q in itertools.product(range(4), repeat=2):
        v = {"p": p, "q": q}
        assert set(evaluate_at(terms, v).members(24)) == expr_durations(e, v, 24), (p, q)


# semi-algorithm vs exact construction ----------------------------------------------

def test_semialg_diverges_on_periodic_loop(periodic_loop):
    assert pet_semialg(periodic_loop, ExplorationBudget(max_states=25)).status == BUDGET_EXHAUSTED


@pytest.mark.parametrize("path", CORPUS)
def test_semialg_agrees_with_zones(path):
    a = load_model(path)
    for build in (build_private_projection, build_public_projection):
        sub = double_system(build(a))
        semi = pet_semialg(sub, ExplorationBudget(max_states=60, max_depth=12))
        if semi.status != COMPLETE:
            continue
        terms = exact_pet_terms(sub)
        for vals in itertools.product(range(5), repeat=len(a.params)):
            v = dict(zip(a.params, vals))
            assert arith.ps_equal(_polyset_durations(semi.result, v), evaluate_at(terms, v)), (path, v)
