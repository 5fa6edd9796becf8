"""
Loss oracles, budget accounting and rung execution.

Every allocation algorithm in this package talks to the outside world through
:func:`evaluate_rung`: it asks a :class:`LossOracle` for the validation loss
of a set of arms at one cumulative resource level, charges a
:class:`BudgetLedger`, and appends one :class:`TrialRecord` per evaluation to
a :class:`TrialLog`.

A failed evaluation (oracle exception, non-finite loss) yields the
:data:`FAILED` sentinel, which ranks after every finite loss.
"""

from __future__ import annotations

import json
import math
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from itertools import count
from pathlib import Path
from typing import Any, Iterable, Literal, Protocol, Sequence, runtime_checkable

FAILED = math.inf

Accounting = Literal["full", "delta"]


class HyperbandError(Exception):
    """Base class for run-time errors raised by the allocation algorithms."""


class BudgetExceeded(HyperbandError):
    """The ledger cap cannot accommodate the next rung."""


class RungFailed(HyperbandError):
    """Every arm of a rung failed to evaluate."""


class TrialFailed(Exception):
    """Raised by oracles to report a failed evaluation."""


@dataclass
class ArmState:
    arm_id: int
    config: Any
    max_observed_resource: int = 0
    loss_at: dict[int, float] = field(default_factory=dict)
    status: Literal["active", "eliminated", "failed"] = "active"

    @property
    def last_loss(self) -> float:
        if not self.loss_at:
            return FAILED
        return self.loss_at[self.max_observed_resource]

    def record(self, resource: int, loss: float) -> None:
        if self.loss_at and resource <= self.max_observed_resource:
            raise ValueError(f"arm {self.arm_id}: resource levels must strictly increase "
                             f"({resource} after {self.max_observed_resource})")
        self.loss_at[resource] = loss
        self.max_observed_resource = resource
        if loss == FAILED:
            self.status = "failed"


class ArmFactory:
    """Hands out arms with monotonically increasing ids."""

    def __init__(self, start: int = 0):
        self._ids = count(start)
        self._lock = threading.Lock()

    def make(self, configs: Iterable[Any]) -> list[ArmState]:
        with self._lock:
            return [ArmState(next(self._ids), c) for c in configs]


class BudgetLedger:
    """Resource units consumed so far, with an optional cap.

    ``accounting="full"`` charges the whole cumulative level for every
    evaluation, so a bracket costs ``sum(n_i * r_i)``. ``"delta"`` charges only
    the increment over the arm's previous level (pull counting).
    """

    def __init__(self, cap: int | None = None, accounting: Accounting = "full"):
        if cap is not None and cap < 1:
            raise ValueError("cap must be a positive integer")
        if accounting not in ("full", "delta"):
            raise ValueError(f"unknown accounting mode {accounting!r}")
        self.cap = cap
        self.accounting = accounting
        self._consumed = 0
        self._lock = threading.Lock()

    @property
    def consumed(self) -> int:
        return self._consumed

    @property
    def remaining(self) -> int | None:
        return None if self.cap is None else self.cap - self._consumed

    def cost(self, arm: ArmState, resource: int) -> int:
        if self.accounting == "full":
            return resource
        return resource - arm.max_observed_resource

    def charge(self, units: int) -> None:
        """Atomically add ``units``; raise :class:`BudgetExceeded` if it would pass the cap."""
        if units < 0:
            raise ValueError("cannot charge a negative amount")
        with self._lock:
            if self.cap is not None and self._consumed + units > self.cap:
                raise BudgetExceeded(
                    f"charging {units} units would exceed the cap "
                    f"({self._consumed} of {self.cap} consumed)")
            self._consumed += units


@dataclass
class TrialRecord:
    trial_id: str
    arm_id: int
    bracket_s: int | None
    rung_i: int | None
    resource: int
    loss: float
    status: str
    charged: int
    wall_millis: float
    timestamp: str
    kind: str = "trial"

    def to_json(self) -> dict:
        d = asdict(self)
        d["loss"] = None if not math.isfinite(self.loss) else self.loss
        return d


# fields that vary between otherwise identical runs
TIMING_FIELDS = ("wall_millis", "timestamp")


def jsonable(obj: Any) -> Any:
    """``json.dumps`` fallback: objects may provide ``to_json()``."""
    if hasattr(obj, "to_json"):
        return obj.to_json()
    if hasattr(obj, "item"):  # numpy scalars
        return obj.item()
    return repr(obj)


def canonical_line(record: dict) -> str:
    """Serialize a log record with timing fields removed and keys sorted."""
    return json.dumps({k: v for k, v in record.items() if k not in TIMING_FIELDS},
                      sort_keys=True, separators=(",", ":"), default=jsonable)


class TrialLog:
    """Append-only record stream, optionally mirrored to a JSON-lines file.

    Appends are serialized through one lock, so concurrent rungs never
    interleave partial lines.
    """

    def __init__(self, path: str | Path | None = None):
        self.path = Path(path) if path is not None else None
        self.records: list[dict] = []
        self._lock = threading.Lock()
        if self.path is not None:
            self.path.parent.mkdir(parents=True, exist_ok=True)

    def append(self, record: TrialRecord | dict) -> None:
        d = record.to_json() if isinstance(record, TrialRecord) else dict(record)
        with self._lock:
            self.records.append(d)
            if self.path is not None:
                with self.path.open("a") as fh:
                    fh.write(json.dumps(d, sort_keys=True, default=jsonable) + "\n")

    def extend(self, records: Iterable[dict]) -> None:
        for r in records:
            self.append(r)

    def trials(self) -> list[dict]:
        return [r for r in self.records if r.get("kind", "trial") == "trial"]


@runtime_checkable
class LossOracle(Protocol):
    """Maps (arm, cumulative resource) to a validation loss.

    ``resource`` is a cumulative training level, never an increment. Oracles
    report failure by raising :class:`TrialFailed` (any exception counts) or
    by returning a non-finite value.
    """

    resumable: bool

    def evaluate(self, arm: ArmState, resource: int, trial_id: str) -> float: ...


class ReplayOracle:
    """Tabulated loss curves, one per arm id, read as step functions."""

    resumable = True

    def __init__(self, curves: dict[int, dict[int, float]]):
        self.curves = {}
        for arm_id, curve in curves.items():
            if not curve:
                raise ValueError(f"arm {arm_id}: empty loss curve")
            levels = sorted(curve)
            self.curves[arm_id] = (levels, [curve[k] for k in levels])

    def loss(self, arm_id: int, resource: int) -> float:
        if arm_id not in self.curves:
            raise TrialFailed(f"no replay curve for arm {arm_id}")
        levels, losses = self.curves[arm_id]
        if resource < levels[0]:
            raise TrialFailed(f"arm {arm_id}: resource {resource} below the smallest "
                              f"tabulated level {levels[0]}")
        # largest tabulated level <= resource
        lo, hi = 0, len(levels)
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if levels[mid] <= resource:
                lo = mid
            else:
                hi = mid
        return losses[lo]

    def evaluate(self, arm: ArmState, resource: int, trial_id: str = "") -> float:
        return self.loss(arm.arm_id, resource)


def load_replay(document: str | dict) -> ReplayOracle:
    """Build a :class:`ReplayOracle` from ``{arm_id: {level: loss}}`` JSON."""
    if isinstance(document, str):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as exc:
            raise ValueError(f"malformed replay document: {exc}") from exc
    if not isinstance(document, dict):
        raise ValueError("replay document must map arm ids to loss curves")
    curves: dict[int, dict[int, float]] = {}
    for key, curve in document.items():
        try:
            arm_id = int(key)
            if not isinstance(curve, dict):
                raise TypeError
            parsed = {int(level): float(loss) for level, loss in curve.items()}
        except (TypeError, ValueError) as exc:
            raise ValueError(f"malformed replay entry for arm {key!r}") from exc
        if any(level < 1 for level in parsed):
            raise ValueError(f"arm {key}: resource levels must be positive")
        curves[arm_id] = parsed
    return ReplayOracle(curves)


def trial_id_for(arm: ArmState, resource: int) -> str:
    # an arm is evaluated at most once per level, so this is unique and
    # known before dispatch regardless of scheduling
    return f"{arm.arm_id}:{resource}"


def _call(oracle: LossOracle, arm: ArmState, resource: int) -> tuple[float, float]:
    t0 = time.perf_counter()
    try:
        loss = float(oracle.evaluate(arm, resource, trial_id_for(arm, resource)))
    except Exception:
        loss = FAILED
    if not math.isfinite(loss):
        loss = FAILED
    return loss, (time.perf_counter() - t0) * 1000.0


def evaluate_rung(
    arms: Sequence[ArmState],
    resource: int,
    oracle: LossOracle,
    ledger: BudgetLedger,
    max_parallel: int = 1,
    log: TrialLog | None = None,
    bracket_s: int | None = None,
    rung_i: int | None = None,
) -> list[float]:
    """Evaluate every arm at cumulative level ``resource``.

    Returns losses aligned with ``arms``. The whole rung is charged to the
    ledger before any oracle call, so a rung that does not fit under the cap
    raises :class:`BudgetExceeded` without side effects. Failed arms get
    :data:`FAILED` and status ``failed``; if all arms fail, :class:`RungFailed`
    is raised after the records are written.
    """
    if not arms:
        return []
    if resource < 1:
        raise ValueError("resource must be a positive integer")
    if max_parallel < 1:
        raise ValueError("max_parallel must be >= 1")
    for arm in arms:
        if arm.status != "active":
            raise ValueError(f"arm {arm.arm_id} is {arm.status}, not active")
        if resource < arm.max_observed_resource:
            raise ValueError(f"arm {arm.arm_id}: resource {resource} below its observed "
                             f"level {arm.max_observed_resource}")

    todo = [a for a in arms if resource not in a.loss_at]
    charges = [ledger.cost(a, resource) for a in todo]
    ledger.charge(sum(charges))

    if max_parallel == 1 or len(todo) <= 1:
        results = [_call(oracle, a, resource) for a in todo]
    else:
        with ThreadPoolExecutor(max_workers=min(max_parallel, len(todo))) as pool:
            results = list(pool.map(lambda a: _call(oracle, a, resource), todo))

    stamp = datetime.now(timezone.utc).isoformat()
    for arm, charged, (loss, millis) in zip(todo, charges, results):
        arm.record(resource, loss)
        if log is not None:
            log.append(TrialRecord(
                trial_id=trial_id_for(arm, resource), arm_id=arm.arm_id,
                bracket_s=bracket_s, rung_i=rung_i, resource=resource, loss=loss,
                status="ok" if loss != FAILED else "failed", charged=charged,
                wall_millis=round(millis, 3), timestamp=stamp))

    losses = [a.loss_at[resource] for a in arms]
    if all(loss == FAILED for loss in losses):
        raise RungFailed(f"all {len(arms)} arms failed at resource {resource}")
    return losses


def rank_key(arm: ArmState, loss: float) -> tuple[bool, float, int]:
    return (loss == FAILED, loss, arm.arm_id)


def top_k(arms: Sequence[ArmState], losses: Sequence[float], k: int) -> list[ArmState]:
    """The ``k`` arms with the smallest losses; ties go to the smaller arm id."""
    if len(arms) != len(losses):
        raise ValueError("arms and losses must have the same length")
    if not 0 <= k <= len(arms):
        raise ValueError(f"k={k} outside [0, {len(arms)}]")
    order = sorted(range(len(arms)), key=lambda i: rank_key(arms[i], losses[i]))
    return [arms[i] for i in order[:k]]
