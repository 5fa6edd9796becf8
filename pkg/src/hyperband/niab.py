"""
Synthetic infinitely-armed bandit populations.

An arm is a loss sequence ``loss(j)`` over cumulative resource ``j >= 1``
with limit ``limit``. Limits are drawn i.i.d. from a distribution ``F``:

* ``beta_continuous``: ``F(x) = (x - nu_star)**beta`` on ``[nu_star, nu_star + 1]``
* ``discrete``: uniform over ``K`` sorted means ``mus``
* ``stochastic``: as ``beta_continuous``, but each pull returns a noisy
  observation and ``loss(j)`` is the running mean of the first ``j``

Deterministic arms sit inside the envelope ``gamma(j) = j**(-1/alpha)``. The
``envelope_sign`` decides how:

========== ===========================================================
plus       ``limit + gamma(j)`` (monotone decreasing curves)
alternating ``limit + gamma(j)`` on even ``j``, ``limit`` on odd ``j``
adversarial ``limit - gamma(j)`` when ``pivot < limit <= pivot + band``,
           else ``limit + gamma(j)``: arms just worse than the pivot look
           better than the good ones until the envelope closes
           (``band=None`` flips every arm above the pivot)
========== ===========================================================

``horizon`` makes the envelope vanish for ``j >= horizon``, so an arm
trained to ``R = horizon`` reports exactly its limit.

:func:`make_adversarial_instance` builds the reflection construction used
to show that uniform allocation needs a budget of order
``n * gamma^-1(2 (F^-1(p) - nu_star))``.
"""

from __future__ import annotations

import json
import math
import threading
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Literal, Sequence

import numpy as np

from hyperband._util import as_generator
from hyperband.evaluator import ArmState
from hyperband.theory import gamma_inv

Family = Literal["beta_continuous", "discrete", "stochastic", "adversarial"]
Noise = Literal["none", "bernoulli", "uniform_bounded"]
Sign = Literal["plus", "alternating", "adversarial"]

_MASK64 = (1 << 64) - 1


def envelope(alpha: float, j: int, horizon: int | None = None) -> float:
    if horizon is not None and j >= horizon:
        return 0.0
    return j ** (-1.0 / alpha)


@dataclass(frozen=True)
class EnvelopeArm:
    limit: float
    alpha: float
    sign: Sign = "plus"
    pivot: float | None = None
    horizon: int | None = None
    band: float | None = None

    def gamma(self, j: int) -> float:
        return envelope(self.alpha, j, self.horizon)

    def loss(self, j: int) -> float:
        if j < 1:
            raise ValueError("resource must be >= 1")
        g = self.gamma(j)
        if self.sign == "plus":
            return self.limit + g
        if self.sign == "alternating":
            return self.limit + g if j % 2 == 0 else self.limit
        if self.pivot is None:
            raise ValueError("adversarial envelope sign needs a pivot")
        fooled = self.limit > self.pivot and (self.band is None
                                              or self.limit <= self.pivot + self.band)
        return self.limit - g if fooled else self.limit + g

    def to_json(self) -> dict:
        return {"limit": self.limit}


def reflect(nu_hat: float, g: float, limit: float) -> float:
    """Mirror ``limit`` inside the band ``[nu_hat, nu_hat + g]``; identity outside it."""
    centre = nu_hat + g / 2
    if abs(centre - limit) <= g / 2:
        return 2 * centre - limit
    return limit


@dataclass(frozen=True)
class ReflectedArm:
    limit: float
    alpha: float
    nu_hat: float

    def loss(self, j: int) -> float:
        if j < 1:
            raise ValueError("resource must be >= 1")
        return reflect(self.nu_hat, envelope(self.alpha, j), self.limit)

    def to_json(self) -> dict:
        return {"limit": self.limit}


class StochasticArm:
    """Running mean of i.i.d. observations with mean ``limit``.

    Observations come from a Philox stream keyed on ``key``, so the value at
    level ``j`` does not depend on which smaller levels were queried first.
    Levels may only be requested in non-decreasing order.
    """

    def __init__(self, limit: float, key: tuple[int, int], noise: Noise = "bernoulli",
                 width: float = 0.5):
        if not 0.0 <= limit <= 1.0:
            raise ValueError(f"stochastic arm mean {limit} outside [0, 1]")
        if noise not in ("bernoulli", "uniform_bounded"):
            raise ValueError(f"stochastic arms need noise, got {noise!r}")
        self.limit, self.noise, self.width, self.key = limit, noise, width, key
        self._gen = np.random.Generator(np.random.Philox(
            key=np.array([key[0] & _MASK64, key[1] & _MASK64], dtype=np.uint64)))
        self._pulls = 0
        self._total = 0.0
        self._lock = threading.Lock()

    def _draw(self, m: int) -> float:
        u = self._gen.random(m)
        if self.noise == "bernoulli":
            return float(np.count_nonzero(u < self.limit))
        lo, hi = max(0.0, self.limit - self.width), min(1.0, self.limit + self.width)
        return float(np.sum(lo + (hi - lo) * u))

    def loss(self, j: int) -> float:
        if j < 1:
            raise ValueError("resource must be >= 1")
        with self._lock:
            if j < self._pulls:
                raise ValueError(f"non-monotone resource request: {j} after {self._pulls}")
            if j > self._pulls:
                self._total += self._draw(j - self._pulls)
                self._pulls = j
            return self._total / j

    def to_json(self) -> dict:
        return {"limit": self.limit, "key": list(self.key)}


@dataclass(frozen=True)
class TheoryInstance:
    family: Family = "beta_continuous"
    alpha: float = 1.0
    beta: float = 1.0
    nu_star: float = 0.0
    mus: tuple[float, ...] = ()
    noise: Noise = "none"
    width: float = 0.5
    seed: int = 0
    envelope_sign: Sign = "plus"
    pivot: float | None = None
    horizon: int | None = None
    band: float | None = None

    def __post_init__(self) -> None:
        if self.family not in ("beta_continuous", "discrete", "stochastic", "adversarial"):
            raise ValueError(f"unknown family {self.family!r}")
        if self.alpha <= 0 or self.beta <= 0:
            raise ValueError("alpha and beta must be positive")
        if self.envelope_sign not in ("plus", "alternating", "adversarial"):
            raise ValueError(f"unknown envelope sign {self.envelope_sign!r}")
        if self.envelope_sign == "adversarial" and self.pivot is None:
            raise ValueError("envelope_sign='adversarial' needs a pivot")
        if self.family == "discrete":
            mus = tuple(float(m) for m in self.mus)
            if not mus or any(b <= a for a, b in zip(mus, mus[1:])):
                raise ValueError("discrete family needs strictly increasing means")
            object.__setattr__(self, "mus", mus)
            object.__setattr__(self, "nu_star", mus[0])
        if self.family == "stochastic":
            if self.noise == "none":
                raise ValueError("stochastic family needs noise 'bernoulli' or 'uniform_bounded'")
            if self.nu_star != 0.0:
                raise ValueError("stochastic limits must lie in [0, 1]; use nu_star = 0")

    @property
    def K(self) -> int:
        return len(self.mus)

    def gamma(self, j: int) -> float:
        return envelope(self.alpha, j, self.horizon)

    def cdf(self, x: float) -> float:
        if self.family == "discrete":
            return float(np.searchsorted(self.mus, x, side="right")) / self.K
        if x <= self.nu_star:
            return 0.0
        return min(1.0, (x - self.nu_star) ** self.beta)

    def ppf(self, y: float) -> float:
        """Left-continuous inverse ``min{x : F(x) >= y}``."""
        if self.family == "discrete":
            idx = min(self.K, max(1, math.ceil(y * self.K - 1e-12)))
            return self.mus[idx - 1]
        return self.nu_star + min(1.0, max(0.0, y)) ** (1.0 / self.beta)

    def draw_limits(self, rng: np.random.Generator | int | None, n: int) -> np.ndarray:
        if n < 1:
            raise ValueError("n must be >= 1")
        if self.family == "adversarial":
            raise ValueError("adversarial limits are constructed; use make_adversarial_instance")
        rng = as_generator(rng)
        if self.family == "discrete":
            return np.asarray(self.mus)[rng.integers(0, self.K, size=n)]
        return self.nu_star + rng.random(n) ** (1.0 / self.beta)

    def sample(self, rng: np.random.Generator | int | None, n: int) -> list[Any]:
        """``n`` fresh arms (the sampler interface used by the Hyperband drivers)."""
        rng = as_generator(rng)
        limits = self.draw_limits(rng, n)
        if self.family == "stochastic":
            keys = rng.integers(0, 2**63, size=n)
            return [make_stochastic_arm(self, float(v), int(k)) for v, k in zip(limits, keys)]
        return [make_envelope_arm(self, float(v)) for v in limits]

    def to_dict(self) -> dict:
        d = asdict(self)
        d["mus"] = list(self.mus)
        return d


def make_envelope_arm(instance: TheoryInstance, limit: float) -> EnvelopeArm:
    if instance.family not in ("beta_continuous", "discrete"):
        raise ValueError(f"envelope arms need a deterministic family, got {instance.family!r}")
    return EnvelopeArm(limit, instance.alpha, instance.envelope_sign, instance.pivot,
                       instance.horizon, instance.band)


def make_stochastic_arm(instance: TheoryInstance, limit: float, arm_key: int) -> StochasticArm:
    return StochasticArm(limit, (instance.seed, arm_key), instance.noise, instance.width)


def load_instance(source: str | Path | dict) -> TheoryInstance:
    """Read an instance description (JSON object with :class:`TheoryInstance` fields)."""
    if isinstance(source, dict):
        raw = dict(source)
    else:
        text = Path(source).read_text()
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ValueError(f"{source}: not valid JSON ({exc})") from exc
    if not isinstance(raw, dict):
        raise ValueError("instance description must be a JSON object")
    known = set(TheoryInstance.__dataclass_fields__)
    extra = set(raw) - known - {"description"}
    if extra:
        raise ValueError(f"unknown instance fields: {sorted(extra)}")
    raw.pop("description", None)
    if "mus" in raw:
        raw["mus"] = tuple(raw["mus"])
    return TheoryInstance(**raw)


@dataclass
class AdversarialInstance:
    arms: list[ReflectedArm]
    nu_hat: float
    c: float
    threshold_budget: int
    nu_star: float = 0.0
    alpha: float = 1.0
    beta: float = 1.0
    extra: dict = field(default_factory=dict)

    @property
    def target(self) -> float:
        """Simple-regret level ``2 (nu_hat - nu_star)`` that a budget below threshold misses."""
        return 2 * (self.nu_hat - self.nu_star)


def lower_bound_quantile(n: int, delta: float, beta: float) -> tuple[float, float]:
    """``(c, p)`` with ``c = 1 - 2**-beta`` and ``p = log(c/delta) / (n + log(c/delta))``."""
    c = 1.0 - 2.0 ** (-beta)
    if c <= delta:
        raise ValueError(f"delta={delta} must be below c = 1 - 2^-beta = {c:.4g}")
    lg = math.log(c / delta)
    return c, lg / (n + lg)


def make_adversarial_instance(
    n: int, delta: float, alpha: float, beta: float,
    rng: np.random.Generator | int | None = None, nu_star: float = 0.0,
) -> AdversarialInstance:
    if n < 1:
        raise ValueError("n must be >= 1")
    if not 0 < delta < 1:
        raise ValueError("delta must be in (0, 1)")
    c, p = lower_bound_quantile(n, delta, beta)
    base = TheoryInstance("beta_continuous", alpha, beta, nu_star)
    nu_hat = base.ppf(p)
    if nu_hat - nu_star >= 1.0 or nu_hat >= 1.0:
        raise ValueError(f"nu_hat = {nu_hat:.4g} is not below 1")
    threshold = n * gamma_inv(alpha, 2 * (nu_hat - nu_star))
    limits = base.draw_limits(rng, n)
    arms = [ReflectedArm(float(v), alpha, nu_hat) for v in limits]
    return AdversarialInstance(arms, nu_hat, c, threshold, nu_star, alpha, beta)


class SimulatorOracle:
    """Loss oracle over synthetic arms stored as the arm configuration."""

    resumable = True

    def evaluate(self, arm: ArmState, resource: int, trial_id: str = "") -> float:
        return arm.config.loss(resource)


def limits_of(arms: Sequence[ArmState]) -> np.ndarray:
    return np.array([a.config.limit for a in arms])
