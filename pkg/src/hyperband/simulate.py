"""
Repeated-trial experiments on synthetic arm populations.

:func:`run_trial` plays one allocation strategy on fresh arms and reports the
simple regret ``limit(returned arm) - nu_star`` together with the budget the
ledger actually recorded. :func:`simulate` sweeps a budget grid and
:func:`summarize` reduces the rows to mean/min/max per budget.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from hyperband.baselines import random_search, uniform_allocation
from hyperband.evaluator import ArmFactory, BudgetLedger, HyperbandError
from hyperband.hyperband import (
    HyperbandParams,
    hyperband_infinite,
    hyperband_practical,
)
from hyperband.niab import SimulatorOracle, TheoryInstance, make_adversarial_instance
from hyperband.sha import sha_finite_theoretical, sha_infinite

ALGOS = ("hyperband", "hyperband_inf", "sha", "sha_inf", "uniform", "random")


@dataclass(frozen=True)
class SimConfig:
    algo: str
    R: int = 81
    eta: float = 3
    n: int | None = None
    delta: float = 0.1
    brackets: tuple[int, ...] | None = None

    def __post_init__(self) -> None:
        if self.algo not in ALGOS:
            raise ValueError(f"unknown algo {self.algo!r}; choose from {', '.join(ALGOS)}")


def check_combination(instance: TheoryInstance, cfg: SimConfig) -> None:
    if instance.family == "adversarial" and cfg.algo not in ("uniform", "random"):
        raise ValueError(f"algo {cfg.algo!r} is not defined on the adversarial reflection "
                         "instance; use uniform or random")
    if instance.family == "adversarial" and cfg.n is None:
        raise ValueError("the adversarial instance needs an explicit arm count n")
    if cfg.algo == "sha_inf" and cfg.n is not None and (cfg.n < 2 or cfg.n & (cfg.n - 1)):
        raise ValueError("sha_inf needs n to be a power of two")


def _default_n(algo: str, budget: int, R: int) -> int:
    if algo == "sha_inf":
        # widest power of two that still leaves one pull per arm per round
        n = 2
        while 2 * n * math.ceil(math.log2(2 * n)) <= budget:
            n *= 2
        return n
    return max(1, budget // R)


def run_trial(instance: TheoryInstance, cfg: SimConfig, budget: int,
              rng: np.random.Generator) -> dict:
    """One run; returns ``{"regret", "consumed", "limit", "truncated"}``."""
    oracle = SimulatorOracle()
    factory = ArmFactory()
    nu_star = instance.nu_star
    truncated = False
    if instance.family == "adversarial":
        adv = make_adversarial_instance(cfg.n, cfg.delta, instance.alpha, instance.beta, rng,
                                        instance.nu_star)
        arms = factory.make(adv.arms)
        ledger = BudgetLedger()
        if cfg.algo == "random":
            res = random_search(arms, cfg.R, oracle, ledger)
        else:
            res = uniform_allocation(arms, budget, None, oracle, ledger)
        limit = res.best_arm.config.limit
        return {"regret": limit - nu_star, "consumed": ledger.consumed, "limit": limit,
                "truncated": False}

    n = cfg.n or _default_n(cfg.algo, budget, cfg.R)
    if cfg.algo == "hyperband":
        params = HyperbandParams(cfg.R, cfg.eta, outer_loops=None)
        ledger = BudgetLedger(cap=budget)
        traj = hyperband_practical(params, instance, oracle, ledger, rng,
                                   brackets=cfg.brackets, factory=factory)
        truncated = traj.truncated
        best = traj.best
        limit = best.config.limit if best is not None else math.nan
    elif cfg.algo == "hyperband_inf":
        ledger = BudgetLedger(cap=budget, accounting="delta")
        traj = hyperband_infinite(instance, oracle, 64, ledger, rng, factory=factory)
        truncated = traj.truncated
        best = traj.best
        limit = best.config.limit if best is not None else math.nan
    else:
        arms = factory.make(instance.sample(rng, n))
        if cfg.algo == "sha_inf":
            ledger = BudgetLedger(accounting="delta")
            res = sha_infinite(arms, budget, oracle, ledger)
        elif cfg.algo == "sha":
            ledger = BudgetLedger()
            res = sha_finite_theoretical(arms, budget, cfg.R, cfg.eta, oracle, ledger)
        elif cfg.algo == "uniform":
            ledger = BudgetLedger()
            res = uniform_allocation(arms, budget, cfg.R, oracle, ledger)
        else:
            ledger = BudgetLedger()
            res = random_search(arms, cfg.R, oracle, ledger)
        limit = res.best_arm.config.limit
    return {"regret": limit - nu_star, "consumed": ledger.consumed, "limit": limit,
            "truncated": truncated}


def simulate(instance: TheoryInstance, cfg: SimConfig, budgets: Sequence[int], trials: int,
             seed: int = 0) -> list[dict]:
    """Rows ``{"algo", "budget", "trial", "regret", "consumed", "truncated"}``.

    Trial ``t`` uses the generator seeded with ``(seed, t)`` for every budget,
    so paired comparisons across algorithms see the same seeds.
    """
    if trials < 0:
        raise ValueError("trials must be >= 0")
    check_combination(instance, cfg)
    rows = []
    for budget in budgets:
        if budget < 1:
            raise ValueError("budgets must be positive")
        for t in range(trials):
            rng = np.random.default_rng([seed, t])
            try:
                out = run_trial(instance, cfg, int(budget), rng)
            except HyperbandError as exc:
                out = {"regret": math.nan, "consumed": 0, "limit": math.nan,
                       "truncated": False, "error": str(exc)}
            rows.append({"algo": cfg.algo, "budget": int(budget), "trial": t, **out})
    return rows


def summarize(rows: Iterable[dict]) -> list[dict]:
    by_budget: dict[int, list[dict]] = {}
    for r in rows:
        by_budget.setdefault(r["budget"], []).append(r)
    out = []
    for budget, rs in sorted(by_budget.items()):
        reg = np.array([r["regret"] for r in rs], dtype=float)
        ok = reg[np.isfinite(reg)]
        out.append({
            "algo": rs[0]["algo"], "budget": budget, "trials": len(rs),
            "mean_regret": float(ok.mean()) if ok.size else None,
            "min_regret": float(ok.min()) if ok.size else None,
            "max_regret": float(ok.max()) if ok.size else None,
            "mean_consumed": float(np.mean([r["consumed"] for r in rs])),
            "failed": int(reg.size - ok.size),
        })
    return out
