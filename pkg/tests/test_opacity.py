import functools
import itertools

import pytest

from conftest import CORPUS
from etopacity.geometry import PolySet, parse_constraint, polyset_difference, polyset_equal, polyset_project
from etopacity.model import double_system, load_model, parse_model, substitute
from etopacity.opacity import (OpacityReport, check_valuation, d_eos, d_fos, diff_from, diff_set, eoe_bounded,
                               eos_from, eos_synth, foe_bounded, fos_from, fos_synth, projection_pets, timed)
from etopacity.oracle import enumerate_durations
from etopacity.zonegraph import COMPLETE

VS = ("d", "p")


def Z(*texts, vs=VS):
    return PolySet.make(vs, [parse_constraint(t, vs) for t in texts])


# three-valuation example given directly as execution-time sets
PRIV = Z("p = 1 && 0 <= d <= 3", "p = 2 && 0 <= d <= 5", "p = 3 && 0 <= d <= 5")
PUB = Z("p = 1 && 5 <= d <= 10", "p = 2 && 3 <= d <= 10", "p = 3 && 0 <= d <= 5")


def test_set_level_eos():
    assert polyset_equal(eos_from(PRIV, PUB), Z("p = 2 && 3 <= d <= 5", "p = 3 && 0 <= d <= 5"))


def test_set_level_diff():
    expect = Z("p = 1 && 0 <= d <= 3", "p = 1 && 5 <= d <= 10", "p = 2 && 0 <= d < 3", "p = 2 && 5 < d <= 10")
    assert polyset_equal(diff_from(PRIV, PUB), expect)


def test_set_level_fos():
    assert polyset_equal(fos_from(PRIV, PUB), Z("p = 3 && 0 <= d <= 5"))


def test_identical_sets():
    assert diff_from(PRIV, PRIV).is_empty()
    assert polyset_equal(fos_from(PRIV, PRIV), eos_from(PRIV, PRIV))


UNREACHABLE_PRIV = """pta hidden
params p
clocks x
loc l0 init invariant x <= p
loc lpriv private
loc lf final
edge l0 -> lf when x >= 1
edge lpriv -> lf
"""


def test_unreachable_private():
    a = parse_model(UNREACHABLE_PRIV)
    assert d_eos(a).result.is_empty()
    assert eos_synth(a).result.is_empty()
    assert d_fos(a).result.is_empty()
    assert not diff_set(a).result.is_empty()


def test_fos_within_eos(two_param):
    assert polyset_difference(fos_synth(two_param).result, eos_synth(two_param).result).is_empty()


def acyclic(a):
    succ = {l.name: {e.target for e in a.outgoing(l.name)} for l in a.locations}
    seen, done = set(), set()

    def visit(n):
        if n in seen:
            return n in done
        seen.add(n)
        ok = all(visit(m) for m in succ[n])
        done.add(n)
        return ok
    return all(visit(n) for n in succ)


# the semi-algorithm terminates on models without cycles
ACYCLIC = [p for p in CORPUS if acyclic(load_model(p))]


@functools.lru_cache(maxsize=None)
def corpus_pets(path):
    a = load_model(path)
    priv, pub = projection_pets(a)
    assert priv.status == COMPLETE and pub.status == COMPLETE
    return a, priv.result, pub.result


@pytest.mark.parametrize("path", ACYCLIC)
def test_fos_within_eos_corpus(path):
    a, priv, pub = corpus_pets(path)
    eos = polyset_project(eos_from(priv, pub), a.params)
    fos = polyset_project(fos_from(priv, pub), a.params)
    assert polyset_difference(fos, eos).is_empty()


def test_statuses_complete(two_param):
    for fn in (d_eos, diff_set, d_fos, eos_synth, fos_synth):
        assert fn(two_param).status == COMPLETE


@pytest.mark.parametrize("path", ACYCLIC)
def test_d_eos_per_valuation(path):
    # d_eos works in original units, so only integer durations are compared
    a, priv, pub = corpus_pets(path)
    eos = eos_from(priv, pub)
    for vals in itertools.product(range(4), repeat=len(a.params)):
        v = dict(zip(a.params, vals))
        o = enumerate_durations(double_system(substitute(a, v)), 30)
        both = {d // 2 for d in o.private & o.public if d % 2 == 0}
        got = {d for d in range(16) if eos.contains_point({**v, "d": d})}
        assert got == both, v


def test_check_valuation_errors(two_param):
    with pytest.raises(ValueError):
        check_valuation(two_param, {"p1": 1, "p2": 4}, "sometimes")
    with pytest.raises(ValueError):
        check_valuation(two_param, {"p1": 1}, "exist")


def test_check_valuation_json(two_param):
    j = check_valuation(two_param, {"p1": 1, "p2": 4}, "full").to_json()
    assert j["opaque"] is False
    assert j["public_only"] == "0" and j["private_only"] == "7/2"
    assert j["route"] == "zones"


def test_check_valuation_two_clocks():
    a = parse_model("pta two\nparams p\nclocks x y\nloc l0 init invariant x <= 2\nloc lpriv private\n"
                    "loc lf final\nedge l0 -> lpriv when x >= p reset y\nedge lpriv -> lf when y <= 0\n"
                    "edge l0 -> lf when x >= 2\n")
    v = check_valuation(a, {"p": 1}, "exist")
    assert v.route == "semialg"
    assert v.opaque and v.witness == 2
    assert not check_valuation(a, {"p": 1}, "full").opaque


def test_foe_bounded_two_param(two_param):
    r = foe_bounded(two_param, 5)
    assert r.nonempty and r.witness == {"p1": 0, "p2": 3}
    assert r.verdict == "non-empty"
    # two parameters: no LpSl threshold
    assert r.threshold is None


def test_eoe_bounded_two_param(two_param):
    r = eoe_bounded(two_param, 5)
    assert r.nonempty and r.witness == {"p1": 0, "p2": 0}


def test_bounded_empty():
    a = parse_model("pta apart\nparams p\nclocks x\nloc l0 init\nloc lpriv private\nloc lf final\n"
                    "edge l0 -> lpriv when x <= 0\nedge lpriv -> lf when x >= p + 1\nedge l0 -> lf when x <= p\n")
    r = eoe_bounded(a, 4)
    assert not r.nonempty and r.verdict == "empty up to 4"
    r = foe_bounded(a, 4)
    assert not r.nonempty and r.threshold is not None
    assert r.to_json()["bound"] == 4


def test_bounded_parallel_agrees(two_param):
    assert foe_bounded(two_param, 4, jobs=2) == foe_bounded(two_param, 4)
    assert eoe_bounded(two_param, 3, jobs=2) == eoe_bounded(two_param, 3)


def test_report_json(two_param):
    rep = timed("fos", fos_synth, two_param)
    assert isinstance(rep, OpacityReport)
    j = rep.to_json()
    assert j["problem"] == "fos" and j["status"] == COMPLETE
    assert j["result"]["variables"] == ["p1", "p2"]
    assert "seconds" in j["timings"]
    b = timed("foe", foe_bounded, two_param, 3).to_json()
    assert b["status"] == "bounded(3)" and b["result"]["witness"] == {"p1": 0, "p2": 3}
