"""
Budget needed to reach a target regret
=======================================

Synthetic arms with limits drawn from ``F(x) = x**beta`` and loss envelopes
``j**(-1/alpha)``. For a shrinking target ``Delta`` we search for the smallest
budget at which uniform allocation and halving return an arm within
``Delta`` of the optimum, then fit the log-log slope.
"""

import math

import numpy as np

from hyperband import (
    ArmFactory,
    BudgetLedger,
    SimulatorOracle,
    TheoryInstance,
    make_envelope_arm,
    sha_infinite,
    uniform_allocation,
)
from hyperband.sha import infinite_rounds
from hyperband.theory import scaling_predictions

alpha, beta = 2.0, 2.0


def smallest(ok, lo):
    if ok(lo):
        return lo
    hi = 2 * lo
    while not ok(hi):
        lo, hi = hi, 2 * hi
    while hi - lo > 1:
        mid = (lo + hi) // 2
        lo, hi = (lo, mid) if ok(mid) else (mid, hi)
    return hi


def budgets(Delta, seed):
    n = math.ceil(Delta**-beta * math.log(100))
    N = 1 << (n - 1).bit_length()
    inst = TheoryInstance(alpha=alpha, beta=beta, envelope_sign="adversarial", pivot=Delta,
                          band=Delta)
    limits = inst.draw_limits(seed, N)
    if limits[:n].min() > Delta:
        return math.inf, math.inf
    arms = [make_envelope_arm(inst, float(v)) for v in limits]

    def uni(j):
        res = uniform_allocation(ArmFactory().make(arms[:n]), j * n, None, SimulatorOracle(),
                                 BudgetLedger())
        return res.best_arm.config.limit <= Delta

    def sha(B):
        res = sha_infinite(ArmFactory().make(arms), B, SimulatorOracle(),
                           BudgetLedger(accounting="delta"))
        return res.best_arm.config.limit <= Delta

    return n * smallest(uni, 1), smallest(sha, N * infinite_rounds(N))


deltas = [0.4, 0.3, 0.2, 0.15]
med = np.array([np.median([budgets(D, s) for s in range(15)], axis=0) for D in deltas])
for D, (u, s) in zip(deltas, med):
    print(f"Delta={D:<5} uniform={u:>9.0f}  halving={s:>9.0f}")

##############################################################################
# Fitted exponents against the predicted ones.

x = np.log(deltas)
pred = scaling_predictions(alpha, beta, 0.1, 0.01)
print("uniform slope", round(np.polyfit(x, np.log(med[:, 0]), 1)[0], 2),
      "predicted", pred["uniform_exponent"])
print("halving slope", round(np.polyfit(x, np.log(med[:, 1]), 1)[0], 2),
      "predicted", pred["sha_exponent"])
