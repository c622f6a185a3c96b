import itertools
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import linprog

from etopacity.geometry import (EQ, LE, LT, Polyhedron, PolySet, Row, intersect, is_satisfiable, le,
                                parse_constraint, polyset_difference, polyset_equal, polyset_includes,
                                polyset_intersect, polyset_lift, polyset_project, polyset_union, project,
                                reset_clocks, time_elapse)

N = 500
HALF = [Fraction(k, 2) for k in range(17)]  # [0, 8] step 1/2


def rand_poly(rng, variables, nrows=None, box=8):
    rows = [Row.make({v: 1}, -box, LE) for v in variables]
    for _ in range(nrows if nrows is not None else rng.randint(1, 4)):
        cm = {v: rng.choice([-1, 0, 0, 1]) for v in variables}
        if not any(cm.values()):
            cm[rng.choice(variables)] = 1
        rel = rng.choice([LE, LE, LT, EQ])
        rows.append(Row.make(cm, rng.randint(-8, 8), rel))
    return Polyhedron.make(variables, rows)


def raw_holds(rows, point):
    return all(r.holds(point) for r in rows)


def fiber(rows, point, var):
    """Exact set of values of ``var`` (>= 0) completing ``point`` inside the rows: (lo, lo_strict, hi, hi_strict) or None."""
    lo, lo_s, hi, hi_s = Fraction(0), False, None, False
    for r in rows:
        a = r.coeff(var)
        rest = r.const + sum(c * point[k] for k, c in r.coeffs if k != var)
        if a == 0:
            if not {LT: rest < 0, LE: rest <= 0, EQ: rest == 0}[r.rel]:
                return None
            continue
        b = -rest / a
        strict = r.rel == LT
        if r.rel == EQ or a > 0:
            if hi is None or b < hi or (b == hi and strict):
                hi, hi_s = b, strict
        if r.rel == EQ or a < 0:
            if b > lo or (b == lo and strict):
                lo, lo_s = b, strict
    if hi is not None and (hi < lo or (hi == lo and (lo_s or hi_s))):
        return None
    return lo


def lp_feasible(poly_rows, variables):
    """Independent floating-point check (maximize slack of strict rows)."""
    vs = list(variables)
    n = len(vs)
    A_ub, b_ub, A_eq, b_eq = [], [], [], []
    for r in poly_rows:
        vec = [float(r.coeff(v)) for v in vs]
        if r.rel == EQ:
            A_eq.append(vec + [0.0])
            b_eq.append(-float(r.const))
        else:
            A_ub.append(vec + [1.0 if r.rel == LT else 0.0])
            b_ub.append(-float(r.const))
    c = [0.0] * n + [-1.0]
    res = linprog(c, A_ub=A_ub or None, b_ub=b_ub or None, A_eq=A_eq or None, b_eq=b_eq or None,
                  bounds=[(0, None)] * n + [(0, 1)], method="highs")
    if res.status != 0:
        return False
    has_strict = any(r.rel == LT for r in poly_rows)
    return (not has_strict) or -res.fun > 1e-9


def grid(variables):
    for vals in itertools.product(HALF, repeat=len(variables)):
        yield dict(zip(variables, vals))


# examples -------------------------------------------------------------------

def test_parse_and_pretty():
    p = parse_constraint("p1 <= d <= p2 && p1 <= 3", ["d", "p1", "p2"])
    assert p.contains_point({"d": 2, "p1": 1, "p2": 4})
    assert not p.contains_point({"d": 5, "p1": 1, "p2": 4})
    assert "p1 <= d" in p.pretty()


def test_projection_example():
    p = parse_constraint("p1 <= d <= p2 && p1 <= 3", ["d", "p1", "p2"])
    q = project(p, ["p1", "p2"])
    assert q == parse_constraint("0 <= p1 <= 3 && p1 <= p2", ["p1", "p2"])


def test_strict_projection():
    p = parse_constraint("0 <= p1 <= 3 < d <= p2", ["d", "p1", "p2"])
    assert project(p, ["p1", "p2"]) == parse_constraint("0 <= p1 <= 3 && 3 < p2", ["p1", "p2"])


def test_time_elapse_and_reset():
    z = Polyhedron.make(["x", "p"], [le("x", 0, EQ)])
    assert time_elapse(z, ["x"]) == Polyhedron.make(["x", "p"])
    w = parse_constraint("p <= x <= 3", ["x", "p"])
    assert reset_clocks(w, ["x"]) == parse_constraint("p <= 3 && x = 0", ["x", "p"])


def test_unsat_and_empty():
    assert not is_satisfiable(parse_constraint("x < 1 && x > 1", ["x"]))
    assert Polyhedron.empty(["x"]).is_empty()
    assert PolySet.make(["x"], [Polyhedron.empty(["x"])]).is_empty()


def test_equality_detection():
    p = parse_constraint("x <= 2 && x >= 2 && y <= x", ["x", "y"])
    assert any(r.rel == EQ for r in p.rows)


def test_polyset_json_roundtrip():
    ps = PolySet.of(parse_constraint("x < 3 && y = 1", ["x", "y"]), parse_constraint("x >= 5", ["x", "y"]))
    assert PolySet.from_json(["x", "y"], ps.to_json()) == ps


def test_difference_is_disjoint_pieces():
    a = PolySet.of(parse_constraint("x <= 4", ["x"]))
    b = PolySet.of(parse_constraint("1 <= x <= 2", ["x"]))
    d = polyset_difference(a, b)
    for x in HALF:
        assert d.contains_point({"x": x}) == (x <= 4 and not (1 <= x <= 2))


# 500-instance agreement suites ----------------------------------------------

@pytest.mark.criterion("4 geometry vs grid sampling")
def test_intersect_grid():
    rng = random.Random(41)
    vs = ("x", "y")
    for _ in range(N):
        a, b = rand_poly(rng, vs), rand_poly(rng, vs)
        c = intersect(a, b)
        for pt in grid(vs):
            assert c.contains_point(pt) == (raw_holds(a.rows, pt) and raw_holds(b.rows, pt))


@pytest.mark.criterion("4 geometry vs grid sampling")
def test_canonical_form_preserves_points():
    rng = random.Random(42)
    vs = ("x", "y")
    for _ in range(N):
        rows = rand_poly(rng, vs, nrows=rng.randint(1, 5)).rows
        raw = [Row.make({v: 1}, -8, LE) for v in vs] + [Row.make({"x": rng.choice([-1, 1]), "y": rng.choice([-1, 0, 1])},
                                                                  rng.randint(-6, 6), rng.choice([LE, LT, EQ]))
                                                         for _ in range(3)]
        p = Polyhedron.make(vs, list(rows) + raw)
        for pt in grid(vs):
            assert p.contains_point(pt) == (raw_holds(rows, pt) and raw_holds(raw, pt))


@pytest.mark.criterion("4 geometry vs grid sampling")
def test_project_grid():
    rng = random.Random(43)
    vs = ("x", "y", "z")
    for _ in range(N):
        a = rand_poly(rng, vs)
        q = project(a, ("x", "y"))
        for pt in grid(("x", "y")):
            assert q.contains_point(pt) == (fiber(a.rows, pt, "z") is not None), (a, pt)


@pytest.mark.criterion("4 geometry vs grid sampling")
def test_time_elapse_grid():
    rng = random.Random(44)
    vs = ("x", "p")
    for _ in range(N):
        a = rand_poly(rng, vs)
        e = time_elapse(a, ["x"])
        # pt = q + t with q in a, t >= 0  <=>  some t in [0, x] puts (x - t, p) in a
        shifted = [r.substitute("x", {"x": Fraction(1), "t": Fraction(-1)}, Fraction(0)) for r in a.rows]
        shifted.append(Row.make({"t": 1, "x": -1}, 0, LE))
        for pt in grid(vs):
            assert e.contains_point(pt) == (fiber(shifted, pt, "t") is not None), (a, pt)


@pytest.mark.criterion("4 geometry vs grid sampling")
def test_reset_grid():
    rng = random.Random(45)
    vs = ("x", "p")
    for _ in range(N):
        a = rand_poly(rng, vs)
        r = reset_clocks(a, ["x"])
        for pt in grid(vs):
            expect = pt["x"] == 0 and fiber(a.rows, pt, "x") is not None
            assert r.contains_point(pt) == expect


@pytest.mark.criterion("4 geometry vs grid sampling")
def test_polyset_ops_grid():
    rng = random.Random(46)
    vs = ("x", "y")
    for _ in range(N):
        A = PolySet.make(vs, [rand_poly(rng, vs) for _ in range(rng.randint(0, 2))])
        B = PolySet.make(vs, [rand_poly(rng, vs) for _ in range(rng.randint(0, 2))])
        U, I, D = polyset_union(A, B), polyset_intersect(A, B), polyset_difference(A, B)
        for pt in grid(vs):
            a, b = A.contains_point(pt), B.contains_point(pt)
            assert U.contains_point(pt) == (a or b)
            assert I.contains_point(pt) == (a and b)
            assert D.contains_point(pt) == (a and not b)


@pytest.mark.criterion("4 geometry vs grid sampling")
def test_satisfiability_vs_lp():
    rng = random.Random(47)
    vs = ("x", "y", "z")
    for _ in range(N):
        rows = rand_poly(rng, vs, nrows=rng.randint(2, 6)).rows
        raw = list(rows)
        p = Polyhedron.make(vs, raw)
        assert is_satisfiable(p) == lp_feasible(raw, vs)
        if any(raw_holds(raw, pt) for pt in grid(("x", "y", "z")) if pt["z"] == 0):
            assert is_satisfiable(p)


@pytest.mark.criterion("4 geometry vs grid sampling")
def test_includes_vs_sampling():
    rng = random.Random(48)
    vs = ("x", "y")
    for _ in range(N):
        a = rand_poly(rng, vs, nrows=rng.randint(0, 2))
        b = intersect(a, rand_poly(rng, vs)) if rng.random() < 0.5 else rand_poly(rng, vs)
        inc = a.includes(b)
        if inc:
            assert all(a.contains_point(pt) for pt in grid(vs) if b.contains_point(pt))
        else:
            assert not polyset_difference(PolySet.of(b), PolySet.of(a)).is_empty()


@pytest.mark.criterion("4 FM idempotence and monotonicity")
def test_projection_idempotent_and_monotone():
    rng = random.Random(49)
    vs = ("x", "y", "z")
    for _ in range(N):
        a = rand_poly(rng, vs, nrows=rng.randint(1, 5))
        keep = rng.sample(vs, rng.randint(1, 2))
        once = project(a, keep)
        assert project(once, keep) == once
        # monotone: a subset projects inside the projection
        sub = intersect(a, rand_poly(rng, vs))
        assert once.includes(project(sub, keep))


# hypothesis properties --------------------------------------------------------

coef = st.integers(-2, 2)
row_st = st.builds(lambda a, b, c, rel: Row.make({"x": a, "y": b}, c, rel), coef, coef, st.integers(-6, 6),
                   st.sampled_from([LE, LT, EQ]))


@settings(max_examples=60, deadline=None)
@given(st.lists(row_st, min_size=0, max_size=4), st.lists(row_st, min_size=0, max_size=4))
def test_intersection_commutes(r1, r2):
    a, b = Polyhedron.make(["x", "y"], r1), Polyhedron.make(["x", "y"], r2)
    assert intersect(a, b) == intersect(b, a)


@settings(max_examples=60, deadline=None)
@given(st.lists(row_st, min_size=0, max_size=4))
def test_lift_of_projection_includes(rows):
    a = Polyhedron.make(["x", "y"], rows)
    lifted = polyset_lift(polyset_project(PolySet.of(a), ["x"]), ["x", "y"])
    assert polyset_includes(lifted, PolySet.of(a))


@settings(max_examples=60, deadline=None)
@given(st.lists(row_st, min_size=0, max_size=3), st.lists(row_st, min_size=0, max_size=3))
def test_difference_union_recovers(r1, r2):
    A, B = PolySet.of(Polyhedron.make(["x", "y"], r1)), PolySet.of(Polyhedron.make(["x", "y"], r2))
    assert polyset_equal(polyset_union(polyset_difference(A, B), polyset_intersect(A, B)), A)


@settings(max_examples=150, deadline=None)
@given(st.lists(row_st, min_size=0, max_size=4), st.lists(row_st, min_size=0, max_size=4))
def test_canonical_form_is_unique(r1, r2):
    a, b = Polyhedron.make(["x", "y"], r1), Polyhedron.make(["x", "y"], r2)
    if a.includes(b) and b.includes(a):
        assert a == b


def test_equal_sets_compare_equal():
    vs = ["d", "p", "q", "x", "x_abs"]
    a = parse_constraint("q <= x <= p && x_abs = x && d = x_abs", vs)
    b = parse_constraint("q <= d <= p && x = d && x_abs = d", vs)
    assert a == b
