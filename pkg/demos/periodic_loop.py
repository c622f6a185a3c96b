# coding: utf-8

# # Infinitely many execution times
#
# models/periodic_loop.pta loops on l0 every p time units before leaving for l1 once
# the clock reaches q. Plain zone exploration never stops on it, because
# each loop iteration shifts the absolute time by p.

import os

from etopacity.arith import build_div_formula, eval_div_formula, to_lpsl
from etopacity.model import fix_parameters, load_model
from etopacity.pet import build_zone_automaton, evaluate_at, expr_pretty, normalize, pet_semialg, regex_extract
from etopacity.zonegraph import ExplorationBudget

HERE = os.path.dirname(os.path.abspath(__file__))
pta = load_model(os.path.join(HERE, "..", "models", "periodic_loop.pta"))

print(pet_semialg(pta, ExplorationBudget(max_states=50)).status)

# ## Zones between resets
#
# Cutting runs at clock resets gives a finite automaton whose edges carry
# the durations of reset-free segments.

za = build_zone_automaton(pta)
for (a, b), z in za.transitions:
    print(f"{a} -> {b}: {z.pretty()}")

# State elimination turns it into a regular expression over those zones,
# which normalizes to a base plus starred loops.

expr = regex_extract(za)
print(expr_pretty(expr))
terms = normalize(expr, za.variables)
for t in terms:
    print(t.pretty())

# ## Evaluating at a valuation
#
# At p=3, q=2 the durations are 2, 3, 5, 6, 8, 9, ... : an eventually periodic
# set of period 3.

s = evaluate_at(terms, {"p": 3, "q": 2})
print(s.pretty())
print(s.members(20))

# ## Presburger view
#
# The same set as a formula with divisibility, checked pointwise.

f = build_div_formula(terms)
print([d for d in range(21) if eval_div_formula(f, {"d": d, "p": 3, "q": 2})])

# Fixing q leaves one parameter. Above a threshold M the family has a fixed
# shape in p.

lp, m, low = to_lpsl(normalize(regex_extract(build_zone_automaton(fix_parameters(pta, {"q": 2}))),
                               ("d", "p")), "p")
print("threshold", m)
print(lp.in_original_parameter().to_json())
