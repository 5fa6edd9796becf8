"""
Hyperband outer loops.

``compute_brackets`` plans the finite-horizon brackets, ``hyperband_practical``
runs them against a configuration sampler, and the two theoretical drivers
(``hyperband_infinite``, ``hyperband_finite_theoretical``) wrap the
budgeted SuccessiveHalving variants in a doubling budget ``B = 2**k``.

All drivers return a :class:`Trajectory` of incumbents, one point per
finished bracket.
"""

from __future__ import annotations

import logging
import math
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Real
from typing import Any, Protocol, Sequence

import numpy as np

from hyperband._util import as_generator
from hyperband.evaluator import (
    ArmFactory,
    ArmState,
    BudgetExceeded,
    BudgetLedger,
    HyperbandError,
    LossOracle,
    TrialLog,
)
from hyperband.sha import (
    IncumbentPolicy,
    InadmissibleBudget,
    RungSchedule,
    ShaResult,
    finite_rounds,
    pick_incumbent,
    rung_schedule,
    sha_finite_theoretical,
    sha_infinite,
    sha_practical,
)

logger = logging.getLogger(__name__)


class Sampler(Protocol):
    def sample(self, rng: np.random.Generator, n: int) -> list[Any]: ...


def floor_log(x: Real, eta: Real) -> int:
    """Largest ``s`` with ``eta**s <= x`` (exact, no float log)."""
    if x < 1:
        raise ValueError("x must be >= 1")
    x, eta = Fraction(x), Fraction(eta)
    s = 0
    while eta ** (s + 1) <= x:
        s += 1
    return s


def default_n_max(R: int) -> int:
    """Cap on the most exploratory bracket for very large ``R``."""
    return max(9, R // 1000)


@dataclass(frozen=True)
class HyperbandParams:
    R: int
    eta: Real = 3
    n_max: int | None = None
    n_min: int | None = None
    outer_loops: int | None = 1  # None repeats until the ledger cap or a stop signal
    incumbent: IncumbentPolicy = "max_resource"

    def __post_init__(self) -> None:
        if int(self.R) != self.R or self.R < 1:
            raise ValueError(f"R must be a positive integer, got {self.R}")
        if self.eta < 2:
            raise ValueError(f"eta must be >= 2, got {self.eta}")
        for name in ("n_max", "n_min"):
            v = getattr(self, name)
            if v is not None and (int(v) != v or v < 1):
                raise ValueError(f"{name} must be a positive integer, got {v}")
        if self.n_max is not None and self.n_min is not None and self.n_min > self.n_max:
            raise ValueError("n_min must not exceed n_max")
        if self.outer_loops is not None and self.outer_loops < 1:
            raise ValueError("outer_loops must be >= 1 or None")
        if self.incumbent not in ("max_resource", "paper"):
            raise ValueError(f"unknown incumbent policy {self.incumbent!r}")

    @property
    def s_max(self) -> int:
        s = floor_log(self.R, self.eta)
        if self.n_max is not None:
            # a bracket wider than eta**floor_log(R) would start below one unit
            s = min(s, floor_log(self.n_max, self.eta))
        return s

    @property
    def s_min(self) -> int:
        return 0 if self.n_min is None else floor_log(self.n_min, self.eta)

    @property
    def B(self) -> int:
        return (self.s_max + 1) * self.R


@dataclass(frozen=True)
class BracketPlan:
    s: int
    n: int
    r: Fraction
    schedule: RungSchedule

    @property
    def cost(self) -> int:
        return self.schedule.cost


def compute_brackets(params: HyperbandParams) -> list[BracketPlan]:
    """Brackets ``s = s_max .. s_min`` with ``n = ceil(B/R * eta^s/(s+1))``, ``r = R eta^-s``."""
    s_max, s_lo = params.s_max, params.s_min
    if s_lo > s_max:
        raise ValueError(f"empty bracket range: s_min={s_lo} > s_max={s_max}")
    eta = Fraction(params.eta)
    R, B = params.R, params.B
    plans = []
    for s in range(s_max, s_lo - 1, -1):
        n = math.ceil(Fraction(B, R) * eta**s / (s + 1))
        r = Fraction(R) / eta**s
        plans.append(BracketPlan(s, n, r, rung_schedule(n, r, s, eta, R)))
    return plans


@dataclass
class IncumbentPoint:
    ledger_consumed: int
    loss: float
    level: int
    arm_id: int
    config: Any
    bracket: Any
    outer_loop: int = 0

    def to_record(self) -> dict:
        return {
            "kind": "incumbent", "ledger_consumed": self.ledger_consumed,
            "loss": self.loss, "resource": self.level, "arm_id": self.arm_id,
            "config": self.config, "bracket": self.bracket, "outer_loop": self.outer_loop,
        }


@dataclass
class Trajectory:
    points: list[IncumbentPoint] = field(default_factory=list)
    brackets: list[Any] = field(default_factory=list)
    results: list[ShaResult] = field(default_factory=list)
    truncated: bool = False

    @property
    def best(self) -> IncumbentPoint | None:
        return self.points[-1] if self.points else None

    def losses(self) -> list[float]:
        return [p.loss for p in self.points]


def _better(cand: tuple[ArmState, float, int], cur: tuple[ArmState, float, int] | None,
            policy: IncumbentPolicy) -> bool:
    if cur is None:
        return True
    (_, l1, r1), (_, l0, r0) = cand, cur
    if policy == "max_resource":
        return (-r1, l1) < (-r0, l0)
    return l1 < l0


class _Incumbent:
    def __init__(self, policy: IncumbentPolicy, traj: Trajectory, log: TrialLog | None):
        self.policy, self.traj, self.log = policy, traj, log
        self.current: tuple[ArmState, float, int] | None = None

    def offer(self, arms: Sequence[ArmState], consumed: int, bracket, loop: int) -> None:
        cand = pick_incumbent(arms, self.policy)
        if cand is not None and _better(cand, self.current, self.policy):
            self.current = cand
        if self.current is None:
            return
        arm, loss, lvl = self.current
        pt = IncumbentPoint(consumed, loss, lvl, arm.arm_id, arm.config, bracket, loop)
        self.traj.points.append(pt)
        if self.log is not None:
            self.log.append(pt.to_record())


def hyperband_practical(
    params: HyperbandParams,
    space: Sampler,
    oracle: LossOracle,
    ledger: BudgetLedger,
    rng: np.random.Generator | int | None = None,
    *,
    brackets: Sequence[int] | None = None,
    max_parallel: int = 1,
    parallel_brackets: bool = False,
    log: TrialLog | None = None,
    factory: ArmFactory | None = None,
    stop: threading.Event | None = None,
) -> Trajectory:
    """Run Hyperband: every outer loop plays each planned bracket in decreasing ``s``.

    Each bracket draws ``n`` fresh configurations from ``space``. When the
    ledger cap interrupts a bracket the trajectory is returned with
    ``truncated=True``; the interrupted bracket's completed rungs still count
    towards the incumbent.

    ``brackets`` restricts the run to the listed ``s`` values.
    ``parallel_brackets`` runs the brackets of one outer loop concurrently;
    configurations are drawn up front in bracket order and log records are
    buffered per bracket, so replay and simulator runs produce the same
    transcript as sequential execution.
    """
    if params.outer_loops is None and ledger.cap is None and stop is None:
        raise ValueError("unbounded outer loops need a ledger cap or a stop event")
    rng = as_generator(rng)
    factory = factory or ArmFactory()
    plans = compute_brackets(params)
    if brackets is not None:
        wanted = set(brackets)
        unknown = wanted - {p.s for p in plans}
        if unknown:
            raise ValueError(f"no bracket with s in {sorted(unknown)}")
        plans = [p for p in plans if p.s in wanted]

    traj = Trajectory()
    inc = _Incumbent(params.incumbent, traj, log)

    def run(plan: BracketPlan, arms: list[ArmState], sink: TrialLog | None) -> ShaResult:
        return sha_practical(arms, plan.schedule, params.eta, oracle, ledger,
                             incumbent=params.incumbent, max_parallel=max_parallel,
                             log=sink, bracket_s=plan.s)

    loop = 0
    while params.outer_loops is None or loop < params.outer_loops:
        if parallel_brackets and len(plans) > 1:
            batches = [factory.make(space.sample(rng, p.n)) for p in plans]
            sinks = [TrialLog() for _ in plans]
            consumed = ledger.consumed
            with ThreadPoolExecutor(max_workers=len(plans)) as pool:
                futures = [pool.submit(run, p, a, s) for p, a, s in zip(plans, batches, sinks)]
            for plan, arms, sink, fut in zip(plans, batches, sinks, futures):
                if log is not None:
                    log.extend(sink.records)
                try:
                    traj.results.append(fut.result())
                except BudgetExceeded:
                    traj.truncated = True
                traj.brackets.append((loop, plan.s))
                # report consumption as if the brackets had run one after another
                consumed += sum(r["charged"] for r in sink.records)
                inc.offer(arms, consumed, plan.s, loop)
        else:
            for plan in plans:
                if stop is not None and stop.is_set():
                    traj.truncated = True
                    break
                arms = factory.make(space.sample(rng, plan.n))
                traj.brackets.append((loop, plan.s))
                try:
                    traj.results.append(run(plan, arms, log))
                except BudgetExceeded:
                    traj.truncated = True
                inc.offer(arms, ledger.consumed, plan.s, loop)
                if traj.truncated:
                    break
        if traj.truncated or (stop is not None and stop.is_set()):
            traj.truncated = True
            break
        loop += 1
    return traj


def admissible_ls(k: int) -> list[int]:
    """``l >= 1`` with ``k - l >= log2(l)``, i.e. ``2**(k-l) >= l``."""
    return [l for l in range(1, k + 1) if 2 ** (k - l) >= l]


def hyperband_infinite(
    source: Sampler,
    oracle: LossOracle,
    max_k: int,
    ledger: BudgetLedger,
    rng: np.random.Generator | int | None = None,
    *,
    max_parallel: int = 1,
    log: TrialLog | None = None,
    factory: ArmFactory | None = None,
) -> Trajectory:
    """Doubling-budget Hyperband over infinite-horizon SuccessiveHalving.

    Round ``k`` runs one bracket per admissible ``l`` with ``B = 2**k`` and
    ``n = 2**l`` fresh arms. The incumbent is the output of the largest-``l``
    bracket of the most recent completed round; within round 1 it is the
    round's own output.
    """
    if max_k < 1:
        raise ValueError("max_k must be >= 1")
    rng = as_generator(rng)
    factory = factory or ArmFactory()
    traj = Trajectory()
    settled: ShaResult | None = None
    for k in range(1, max_k + 1):
        for l in admissible_ls(k):
            arms = factory.make(source.sample(rng, 2**l))
            try:
                res = sha_infinite(arms, 2**k, oracle, ledger, max_parallel=max_parallel,
                                   log=log, bracket_s=l)
            except BudgetExceeded:
                traj.truncated = True
                return traj
            traj.brackets.append((k, l))
            traj.results.append(res)
            # results of an unfinished round only stand in before round 1 completes
            show = settled or res
            pt = IncumbentPoint(ledger.consumed, show.best_loss, show.loss_resource_level,
                                show.best_arm.arm_id, show.best_arm.config, (k, l))
            traj.points.append(pt)
            if log is not None:
                log.append(pt.to_record())
        settled = traj.results[-1]
    return traj


def finite_bracket_n(k: int, s: int, R: int, eta: Real) -> int:
    return math.ceil(Fraction(2**k) * Fraction(eta) ** s / (R * (s + 1)))


def hyperband_finite_theoretical(
    R: int,
    eta: Real,
    source: Sampler,
    oracle: LossOracle,
    max_k: int,
    ledger: BudgetLedger,
    rng: np.random.Generator | int | None = None,
    *,
    max_parallel: int = 1,
    log: TrialLog | None = None,
    factory: ArmFactory | None = None,
) -> Trajectory:
    """Doubling-budget Hyperband over the budgeted finite-horizon halving.

    For ``k = 1..max_k`` and ``s = s_max..0`` run
    :func:`~hyperband.sha.sha_finite_theoretical` on
    ``ceil(2^k eta^s / (R (s+1)))`` fresh arms with budget ``2^k``. Brackets
    without a legal round count are skipped.
    """
    if max_k < 1:
        raise ValueError("max_k must be >= 1")
    if eta < 2 or R < 1:
        raise ValueError("need eta >= 2 and R >= 1")
    rng = as_generator(rng)
    factory = factory or ArmFactory()
    traj = Trajectory()
    inc = _Incumbent("max_resource", traj, log)
    s_max = floor_log(R, eta)
    for k in range(1, max_k + 1):
        for s in range(s_max, -1, -1):
            n = finite_bracket_n(k, s, R, eta)
            try:
                finite_rounds(n, 2**k, R, eta)
            except InadmissibleBudget:
                logger.info("skipping bracket k=%d s=%d: no legal schedule for n=%d, B=%d",
                            k, s, n, 2**k)
                continue
            arms = factory.make(source.sample(rng, n))
            try:
                res = sha_finite_theoretical(arms, 2**k, R, eta, oracle, ledger,
                                             max_parallel=max_parallel, log=log, bracket_s=s)
            except BudgetExceeded:
                traj.truncated = True
                return traj
            traj.brackets.append((k, s))
            traj.results.append(res)
            inc.offer([res.best_arm], ledger.consumed, (k, s), k)
    return traj


__all__ = [
    "BracketPlan", "HyperbandError", "HyperbandParams", "IncumbentPoint", "Trajectory",
    "admissible_ls", "compute_brackets", "default_n_max", "finite_bracket_n", "floor_log",
    "hyperband_finite_theoretical", "hyperband_infinite", "hyperband_practical",
]
