import math

import numpy as np
import pytest

from hyperband.baselines import random_2x_ledger, random_search, uniform_allocation, uniform_level
from hyperband.evaluator import ArmFactory, BudgetLedger
from hyperband.niab import SimulatorOracle, TheoryInstance, make_envelope_arm
from hyperband.theory import uniform_budget


class Const:
    resumable = True

    def __init__(self):
        self.levels = []

    def evaluate(self, arm, resource, trial_id=""):
        self.levels.append(resource)
        return arm.config


def test_uniform_level():
    assert uniform_level(4, 40) == 10
    assert uniform_level(4, 43, R=8) == 8
    with pytest.raises(ValueError):
        uniform_level(5, 4)
    with pytest.raises(ValueError):
        uniform_level(0, 4)


def test_uniform_each_arm_at_level():
    oracle = Const()
    ledger = BudgetLedger()
    res = uniform_allocation(ArmFactory().make([0.4, 0.2, 0.3, 0.9]), 40, None, oracle, ledger)
    assert oracle.levels == [10] * 4
    assert res.best_arm.config == 0.2 and res.loss_resource_level == 10
    assert ledger.consumed == 40


@pytest.mark.parametrize("n, B, R", [(3, 100, None), (7, 50, 5), (5, 1000, 81), (1, 9, None)])
def test_uniform_ledger_exact(n, B, R):
    ledger = BudgetLedger()
    uniform_allocation(ArmFactory().make([0.5] * n), B, R, Const(), ledger)
    assert ledger.consumed == n * min(B // n, R or math.inf)


def test_random_search_single_arm():
    oracle = Const()
    res = random_search(ArmFactory().make([0.3]), 81, oracle, BudgetLedger())
    assert oracle.levels == [81] and res.best_loss == 0.3


def test_random_2x_ledger():
    led = random_2x_ledger(405)
    assert led.cap == 810 and led.accounting == "full"


def test_uniform_guarantee_frequency():
    # with B at the sufficient budget, regret <= 2 (F^-1(log(1/d)/n) - nu*) w.p. >= 1 - d
    inst = TheoryInstance(alpha=1, beta=1)
    n, delta = 100, 0.1
    B = uniform_budget(inst, n, delta)
    target = 2 * inst.ppf(math.log(1 / delta) / n)
    ok = 0
    for seed in range(300):
        cfgs = [make_envelope_arm(inst, float(v)) for v in inst.draw_limits(seed, n)]
        res = uniform_allocation(ArmFactory().make(cfgs), B, None, SimulatorOracle(),
                                 BudgetLedger())
        ok += res.best_arm.config.limit <= target
    assert ok / 300 >= 1 - delta
