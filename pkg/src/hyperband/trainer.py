"""
External trainer backend.

For each evaluation the user command is started with one JSON line on
standard input::

    {"trial_id": "7:27", "arm_id": 7, "config": {...}, "resource": 27,
     "resource_unit": "epoch", "checkpoint_dir": "/run/checkpoints/arm_7"}

The trainer trains to the cumulative ``resource`` level (resuming from
``checkpoint_dir`` when it can) and prints ``{"loss": <number>}`` as the last
line of standard output. Exit status 0 means success; a nonzero status, an
unparsable last line, a non-finite loss or a timeout is a failed trial.
"""

from __future__ import annotations

import json
import logging
import math
import shlex
import subprocess
from pathlib import Path
from typing import Sequence

from hyperband.evaluator import ArmState, TrialFailed

log = logging.getLogger(__name__)


def parse_loss_line(stdout: str) -> float:
    lines = [ln for ln in stdout.splitlines() if ln.strip()]
    if not lines:
        raise TrialFailed("trainer printed nothing")
    try:
        payload = json.loads(lines[-1])
        loss = float(payload["loss"])
    except (ValueError, KeyError, TypeError) as exc:
        raise TrialFailed(f"unparsable trainer output: {lines[-1][:200]!r}") from exc
    if not math.isfinite(loss):
        raise TrialFailed(f"non-finite loss {loss}")
    return loss


class SubprocessOracle:
    resumable = True

    def __init__(
        self,
        command: str | Sequence[str],
        checkpoint_root: str | Path,
        resource_unit: str = "unit",
        timeout_secs: float | None = None,
        env: dict[str, str] | None = None,
    ):
        self.command = shlex.split(command) if isinstance(command, str) else list(command)
        if not self.command:
            raise ValueError("empty trainer command")
        self.checkpoint_root = Path(checkpoint_root)
        self.resource_unit = resource_unit
        self.timeout_secs = timeout_secs
        self.env = env

    def payload(self, arm: ArmState, resource: int, trial_id: str) -> dict:
        return {
            "trial_id": trial_id,
            "arm_id": arm.arm_id,
            "config": arm.config,
            "resource": int(resource),
            "resource_unit": self.resource_unit,
            "checkpoint_dir": str(self.checkpoint_root / f"arm_{arm.arm_id}"),
        }

    def evaluate(self, arm: ArmState, resource: int, trial_id: str = "") -> float:
        msg = self.payload(arm, resource, trial_id)
        Path(msg["checkpoint_dir"]).mkdir(parents=True, exist_ok=True)
        try:
            proc = subprocess.run(
                self.command, input=json.dumps(msg) + "\n", capture_output=True,
                text=True, timeout=self.timeout_secs, env=self.env)
        except subprocess.TimeoutExpired as exc:
            raise TrialFailed(f"trial {trial_id} timed out after {self.timeout_secs}s") from exc
        except OSError as exc:
            raise TrialFailed(f"cannot launch trainer: {exc}") from exc
        if proc.returncode != 0:
            log.warning("trial %s: trainer exited with %d: %s", trial_id, proc.returncode,
                        proc.stderr.strip()[-500:])
            raise TrialFailed(f"trainer exited with status {proc.returncode}")
        return parse_loss_line(proc.stdout)
