"""
Tuning against recorded learning curves
========================================

A replay table stands in for a trainer: each arm id maps to a tabulated loss
curve. Early and late rankings disagree, which is what the brackets trade off.
"""

import numpy as np

from hyperband import BudgetLedger, HyperbandParams, TrialLog, hyperband_practical, load_replay

rng = np.random.default_rng(0)
n_curves, R = 300, 81
final = rng.uniform(0.1, 0.9, n_curves)
speed = rng.uniform(0.2, 3.0, n_curves)
table = {i: {r: float(final[i] + 0.5 * r ** -speed[i]) for r in range(1, R + 1)}
         for i in range(n_curves)}
oracle = load_replay({str(k): {str(r): v for r, v in c.items()} for k, c in table.items()})


class Ids:
    def sample(self, rng, n):
        return [{} for _ in range(n)]


##############################################################################
# One outer loop, every bracket in turn.

log = TrialLog()
ledger = BudgetLedger()
traj = hyperband_practical(HyperbandParams(R, 3), Ids(), oracle, ledger, 1, log=log)
for p in traj.points:
    print(f"after {p.ledger_consumed:>5} units: loss {p.loss:.4f} (arm {p.arm_id}, bracket {p.bracket})")

##############################################################################
# Compare with the best final loss among every arm that was sampled.

seen = {r["arm_id"] for r in log.trials()}
print("best sampled final loss:", min(table[i][R] for i in seen))
print("total resource:", ledger.consumed)
