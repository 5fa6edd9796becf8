"""
SuccessiveHalving.

Three variants share one rung loop:

* :func:`sha_practical` -- the inner loop of finite-horizon Hyperband: run a
  precomputed :class:`RungSchedule`, keeping ``floor(n_i / eta)`` arms after
  each rung and exactly one after the last.
* :func:`sha_infinite` -- doubling-style halving with a total pull budget
  ``B``: ``ceil(log2 n)`` rounds, each round spends about ``B / ceil(log2 n)``
  pulls split evenly over the survivors, and keeps the better half.
* :func:`sha_finite_theoretical` -- the budgeted finite-horizon variant that
  picks the number of rounds ``s`` from ``(n, B, R, eta)`` and ends with the
  survivors trained to ``R``.

Resource levels are cumulative. In :func:`sha_infinite` an arm that survives
round ``k`` has been pulled ``r_0 + ... + r_k`` times and is ranked by the
loss at that cumulative count.

Schedules are computed in exact rational arithmetic so that, e.g.,
``floor(81 * 3**-4 * 3**4)`` is 81 and not 80.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Real
from typing import Literal, Sequence

from hyperband.evaluator import (
    FAILED,
    ArmState,
    BudgetLedger,
    HyperbandError,
    LossOracle,
    RungFailed,
    TrialLog,
    evaluate_rung,
    top_k,
)

IncumbentPolicy = Literal["max_resource", "paper"]


class InadmissibleBudget(HyperbandError, ValueError):
    """No legal rung schedule exists for the requested (n, B, R, eta)."""


def _frac(x: Real | Fraction) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(x)


@dataclass(frozen=True)
class Rung:
    i: int
    n: int
    r: int


@dataclass(frozen=True)
class RungSchedule:
    entries: tuple[Rung, ...]

    def __post_init__(self) -> None:
        es = self.entries
        if not es:
            raise ValueError("a schedule needs at least one rung")
        for a, b in zip(es, es[1:]):
            if not (b.n < a.n and b.r > a.r):
                raise ValueError(f"rung counts must decrease and levels increase: {a} -> {b}")
        if es[-1].n < 1 or es[0].r < 1:
            raise ValueError("every rung needs n_i >= 1 and r_i >= 1")

    def __iter__(self):
        return iter(self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def counts(self) -> list[int]:
        return [e.n for e in self.entries]

    @property
    def levels(self) -> list[int]:
        return [e.r for e in self.entries]

    @property
    def cost(self) -> int:
        """Total units under full-level accounting, ``sum(n_i * r_i)``."""
        return sum(e.n * e.r for e in self.entries)

    def as_pairs(self) -> list[tuple[int, int]]:
        return [(e.n, e.r) for e in self.entries]


def rung_schedule(n: int, r: Real, s: int, eta: Real, R: int | None = None) -> RungSchedule:
    """Rungs ``i = 0..s`` with ``n_i = floor(n eta^-i)`` and ``r_i = floor(r eta^i)``.

    When ``R`` is given the last level is set to exactly ``R``.
    """
    if s < 0:
        raise ValueError("s must be non-negative")
    if eta < 2:
        raise ValueError("eta must be >= 2")
    eta_f, r_f = _frac(eta), _frac(r)
    entries = []
    for i in range(s + 1):
        n_i = math.floor(Fraction(n) / eta_f**i)
        r_i = math.floor(r_f * eta_f**i)
        if i == s and R is not None:
            r_i = int(R)
        if n_i < 1 or r_i < 1:
            raise ValueError(f"schedule (n={n}, r={r}, s={s}, eta={eta}) has an empty rung "
                             f"at i={i} (n_i={n_i}, r_i={r_i})")
        entries.append(Rung(i, n_i, r_i))
    return RungSchedule(tuple(entries))


@dataclass
class RungOutcome:
    i: int
    resource: int
    arm_ids: list[int]
    losses: list[float]
    kept: list[int]


@dataclass
class ShaResult:
    best_arm: ArmState
    best_loss: float
    loss_resource_level: int
    ledger_consumed: int
    rungs: list[RungOutcome] = field(default_factory=list)

    @property
    def evaluated_arms(self) -> list[int]:
        return self.rungs[0].arm_ids if self.rungs else []


def pick_incumbent(arms: Sequence[ArmState], policy: IncumbentPolicy = "max_resource"
                   ) -> tuple[ArmState, float, int] | None:
    """Best (arm, loss, level) among ``arms``' finite evaluations.

    ``max_resource`` compares only evaluations at the highest level any arm
    reached; ``paper`` takes the smallest loss seen at any level.
    """
    evals = [(a, lvl, loss) for a in arms for lvl, loss in a.loss_at.items() if loss != FAILED]
    if not evals:
        return None
    if policy == "max_resource":
        top = max(lvl for _, lvl, _ in evals)
        evals = [e for e in evals if e[1] == top]
    elif policy != "paper":
        raise ValueError(f"unknown incumbent policy {policy!r}")
    a, lvl, loss = min(evals, key=lambda e: (e[2], -e[1], e[0].arm_id))
    return a, loss, lvl


def _pending_cost(arms: Sequence[ArmState], level: int, ledger: BudgetLedger) -> int:
    return sum(ledger.cost(a, level) for a in arms if level not in a.loss_at)


def _rung(
    survivors: list[ArmState], i: int, level: int, keep: int, oracle: LossOracle,
    ledger: BudgetLedger, max_parallel: int, log: TrialLog | None, bracket_s: int | None,
) -> tuple[list[ArmState], RungOutcome, int]:
    cost = _pending_cost(survivors, level, ledger)
    losses = evaluate_rung(survivors, level, oracle, ledger, max_parallel, log, bracket_s, i)
    kept = [a for a in top_k(survivors, losses, min(keep, len(survivors))) if a.status != "failed"]
    if not kept:
        raise RungFailed(f"no finite-loss arm left after rung {i}")
    kept_ids = {a.arm_id for a in kept}
    for a in survivors:
        if a.arm_id not in kept_ids and a.status == "active":
            a.status = "eliminated"
    # keep arm-id order for the next rung
    kept = sorted(kept, key=lambda a: a.arm_id)
    out = RungOutcome(i, level, [a.arm_id for a in survivors], list(losses),
                      [a.arm_id for a in kept])
    return kept, out, cost


def sha_practical(
    arms: Sequence[ArmState],
    schedule: RungSchedule,
    eta: Real,
    oracle: LossOracle,
    ledger: BudgetLedger,
    *,
    incumbent: IncumbentPolicy = "max_resource",
    max_parallel: int = 1,
    log: TrialLog | None = None,
    bracket_s: int | None = None,
) -> ShaResult:
    """Run one bracket: evaluate survivors at ``r_i``, keep ``floor(n_i/eta)``.

    The last rung keeps exactly one arm. The returned incumbent follows
    ``incumbent`` (see :func:`pick_incumbent`) over every arm of the bracket.
    """
    if len(arms) != schedule.entries[0].n:
        raise ValueError(f"bracket expects {schedule.entries[0].n} arms, got {len(arms)}")
    eta_f = _frac(eta)
    survivors = sorted(arms, key=lambda a: a.arm_id)
    rungs, spent = [], 0
    last = len(schedule) - 1
    for e in schedule:
        keep = 1 if e.i == last else max(1, math.floor(Fraction(e.n) / eta_f))
        survivors, out, cost = _rung(survivors, e.i, e.r, keep, oracle, ledger,
                                     max_parallel, log, bracket_s)
        rungs.append(out)
        spent += cost
    best = pick_incumbent(arms, incumbent)
    assert best is not None
    return ShaResult(best[0], best[1], best[2], spent, rungs)


def infinite_rounds(n: int) -> int:
    return max(1, math.ceil(math.log2(n))) if n > 1 else 0


def sha_infinite(
    arms: Sequence[ArmState],
    B: int,
    oracle: LossOracle,
    ledger: BudgetLedger,
    *,
    max_parallel: int = 1,
    log: TrialLog | None = None,
    bracket_s: int | None = None,
) -> ShaResult:
    """Halving with a total pull budget ``B`` and no maximum resource.

    Round ``k`` pulls every survivor ``floor(B / (|S_k| * ceil(log2 n)))``
    more times and keeps the better half. The result reports the winner's
    loss at its final cumulative level, which is never below
    ``floor((B/2) / ceil(log2 n))``; if it were, the winner is pulled up to
    that level (and charged).

    Use a ``delta``-accounting ledger to count pulls: then the total charged
    never exceeds ``B``.
    """
    n = len(arms)
    if n < 2 or n & (n - 1):
        raise ValueError(f"n must be a power of two >= 2, got {n}")
    L = infinite_rounds(n)
    if B < n * L:
        raise InadmissibleBudget(f"budget {B} gives no pull per arm in the first round "
                                 f"(need at least n*ceil(log2 n) = {n * L})")
    survivors = sorted(arms, key=lambda a: a.arm_id)
    rungs, spent, level = [], 0, 0
    for k in range(L):
        if len(survivors) == 1:
            break
        r_k = B // (len(survivors) * L)
        level += r_k
        survivors, out, cost = _rung(survivors, k, level, len(survivors) // 2, oracle,
                                     ledger, max_parallel, log, bracket_s)
        rungs.append(out)
        spent += cost
    (winner,) = survivors[:1]
    out_level = B // (2 * L)
    if winner.max_observed_resource < out_level:
        spent += _pending_cost([winner], out_level, ledger)
        evaluate_rung([winner], out_level, oracle, ledger, max_parallel, log, bracket_s, L)
    lvl = winner.max_observed_resource
    return ShaResult(winner, winner.loss_at[lvl], lvl, spent, rungs)


def finite_rounds(n: int, B: int, R: int, eta: Real) -> int:
    """Smallest ``t >= 0`` with ``n R (t+1) eta^-t <= B`` and ``eta^t <= min(R, n)``."""
    eta_f = _frac(eta)
    cap = min(R, n)
    t = 0
    while eta_f**t <= cap:
        if n * R * (t + 1) <= B * eta_f**t:
            return t
        t += 1
    raise InadmissibleBudget(f"no admissible round count for n={n}, B={B}, R={R}, eta={eta}")


def finite_schedule(n: int, B: int, R: int, eta: Real) -> RungSchedule:
    s = finite_rounds(n, B, R, eta)
    return rung_schedule(n, Fraction(R) / _frac(eta)**s, s, eta)


def sha_finite_theoretical(
    arms: Sequence[ArmState],
    B: int,
    R: int,
    eta: Real,
    oracle: LossOracle,
    ledger: BudgetLedger,
    *,
    max_parallel: int = 1,
    log: TrialLog | None = None,
    bracket_s: int | None = None,
) -> ShaResult:
    """Budgeted finite-horizon halving; the winner is the best arm at level ``R``.

    Under full-level accounting the total charge is at most ``B``.
    """
    if eta < 2:
        raise ValueError("eta must be >= 2")
    if R < 1:
        raise ValueError("R must be >= 1")
    n = len(arms)
    schedule = finite_schedule(n, B, R, eta)
    survivors = sorted(arms, key=lambda a: a.arm_id)
    rungs, spent = [], 0
    entries = schedule.entries
    for k, e in enumerate(entries):
        keep = entries[k + 1].n if k + 1 < len(entries) else 1
        survivors, out, cost = _rung(survivors, e.i, e.r, keep, oracle, ledger,
                                     max_parallel, log, bracket_s)
        rungs.append(out)
        spent += cost
    winner = survivors[0]
    return ShaResult(winner, winner.loss_at[R], R, spent, rungs)
