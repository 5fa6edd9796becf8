"""
When uniform allocation is not enough
======================================

Arms whose limits fall in a narrow band above a quantile are mirrored inside
the band until the envelope shrinks below it. With the budget at the
threshold, uniform allocation often keeps a mirrored arm.
"""

import numpy as np

from hyperband import ArmFactory, BudgetLedger, SimulatorOracle, make_adversarial_instance
from hyperband import uniform_allocation

n, delta = 50, 0.2
misses = 0
for seed in range(300):
    adv = make_adversarial_instance(n, delta, 1.0, 1.0, np.random.default_rng(seed))
    res = uniform_allocation(ArmFactory().make(adv.arms), adv.threshold_budget, None,
                             SimulatorOracle(), BudgetLedger())
    misses += res.best_arm.config.limit - adv.nu_star >= adv.target

print("threshold budget:", adv.threshold_budget)
print(f"missed the target in {misses / 300:.0%} of runs")

##############################################################################
# With ten times the threshold the band is too narrow to hide anything. What
# is left are draws where no arm at all lies below the target.

misses = hopeless = 0
for seed in range(300):
    adv = make_adversarial_instance(n, delta, 1.0, 1.0, np.random.default_rng(seed))
    res = uniform_allocation(ArmFactory().make(adv.arms), 10 * adv.threshold_budget, None,
                             SimulatorOracle(), BudgetLedger())
    misses += res.best_arm.config.limit - adv.nu_star >= adv.target
    hopeless += min(a.limit for a in adv.arms) - adv.nu_star >= adv.target
print(f"with 10x the budget: {misses / 300:.0%} (no arm below target: {hopeless / 300:.0%})")
