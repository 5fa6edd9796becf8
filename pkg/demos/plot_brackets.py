"""
Bracket schedules
=================

How many configurations each bracket starts with, and how the resource per
configuration grows rung by rung.
"""

from hyperband import HyperbandParams, compute_brackets

params = HyperbandParams(R=81, eta=3)
print("s_max =", params.s_max, " budget per bracket =", params.B)

for plan in compute_brackets(params):
    print(f"s={plan.s}: n={plan.n:>3}  cost={plan.cost:>4}  rungs={plan.schedule.as_pairs()}")

##############################################################################
# The most aggressive bracket starts 81 configurations at one unit each; the
# last one is plain random search over 5 configurations at the full 81.
#
# A cap on the number of configurations drops the aggressive brackets.

capped = HyperbandParams(R=81, eta=3, n_max=9)
print([plan.s for plan in compute_brackets(capped)])
