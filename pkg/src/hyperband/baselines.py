"""Non-adaptive comparators: uniform allocation and random search."""

from __future__ import annotations

from typing import Sequence

from hyperband.evaluator import ArmState, BudgetLedger, LossOracle, TrialLog, evaluate_rung, top_k
from hyperband.sha import RungOutcome, ShaResult, _pending_cost


def uniform_level(n: int, B: int, R: int | None = None) -> int:
    """``min(floor(B/n), R)``; the remainder of ``B`` is left unspent."""
    if n < 1:
        raise ValueError("n must be >= 1")
    j = B // n
    if j < 1:
        raise ValueError(f"budget {B} is below one unit per arm for n={n}")
    return j if R is None else min(j, R)


def uniform_allocation(
    arms: Sequence[ArmState],
    B: int,
    R: int | None,
    oracle: LossOracle,
    ledger: BudgetLedger,
    *,
    max_parallel: int = 1,
    log: TrialLog | None = None,
) -> ShaResult:
    """Train every arm to the same level ``j = min(floor(B/n), R)`` and return the best."""
    j = uniform_level(len(arms), B, R)
    cost = _pending_cost(arms, j, ledger)
    losses = evaluate_rung(arms, j, oracle, ledger, max_parallel, log, 0, 0)
    (best,) = top_k(arms, losses, 1)
    out = RungOutcome(0, j, [a.arm_id for a in arms], list(losses), [best.arm_id])
    return ShaResult(best, best.loss_at[j], j, cost, [out])


def random_search(
    arms: Sequence[ArmState],
    R: int,
    oracle: LossOracle,
    ledger: BudgetLedger,
    *,
    max_parallel: int = 1,
    log: TrialLog | None = None,
) -> ShaResult:
    """Every arm trained to ``R``; same oracle calls as a Hyperband ``s=0`` bracket."""
    if R < 1:
        raise ValueError("R must be >= 1")
    return uniform_allocation(arms, len(arms) * R, R, oracle, ledger,
                              max_parallel=max_parallel, log=log)


def random_2x_ledger(ledger_cap: int, accounting: str = "full") -> BudgetLedger:
    """Ledger for random search given twice the competitor's budget."""
    return BudgetLedger(cap=2 * ledger_cap, accounting=accounting)
