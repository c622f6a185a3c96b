# coding: utf-8

# # Execution-time opacity on a two-parameter automaton
#
# The model in models/two_param.pta has one clock, two parameters and a private
# location. An attacker only sees how long a run takes to reach the final
# location. We ask for which parameter values that duration leaks whether
# the private location was visited.

import os

from etopacity.model import build_private_projection, build_public_projection, load_model, render, substitute
from etopacity.opacity import check_valuation, d_eos, d_fos, diff_set, eos_synth, fos_synth
from etopacity.oracle import check_opacity_concrete
from etopacity.pet import pet_semialg

HERE = os.path.dirname(os.path.abspath(__file__))
pta = load_model(os.path.join(HERE, "..", "models", "two_param.pta"))
print(render(pta))

# ## Execution times
#
# The private projection only keeps runs through the private location, the
# public one only those avoiding it. Each gets its own set of
# (valuation, duration) pairs.

priv = pet_semialg(build_private_projection(pta)).result
pub = pet_semialg(build_public_projection(pta)).result
print("private:", priv.pretty())
print("public: ", pub.pretty())

# ## Synthesis
#
# Durations shared by both sides are opaque. Full opacity also needs every
# duration of one side to appear on the other.

print("d-eos:", d_eos(pta).result.pretty())
print("diff: ", diff_set(pta).result.pretty())
print("d-fos:", d_fos(pta).result.pretty())
print("eos:  ", eos_synth(pta).result.pretty())
print("fos:  ", fos_synth(pta).result.pretty())

# ## One valuation at a time
#
# With p1=1 and p2=4 some durations are shared, but a run of length 0 can
# only be public and a run of length 4 only private.

v = {"p1": 1, "p2": 4}
for mode in ("exist", "full"):
    r = check_valuation(pta, v, mode)
    print(mode, r.opaque, "witness", r.witness, "public-only", r.public_only, "private-only", r.private_only)

table = check_opacity_concrete(substitute(pta, v), 6)
for d, kind in table.items():
    print(d, kind)
