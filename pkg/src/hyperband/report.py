"""Summaries of JSON-lines trial logs."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path


@dataclass
class LogSummary:
    trials: int = 0
    failed: int = 0
    consumed: int = 0
    per_bracket: dict[str, int] = field(default_factory=dict)
    trajectory: list[dict] = field(default_factory=list)
    best: dict | None = None
    warnings: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "trials": self.trials, "failed": self.failed, "consumed": self.consumed,
            "per_bracket": self.per_bracket, "trajectory": self.trajectory,
            "best": self.best, "warnings": self.warnings,
        }


def summarize_log(path: str | Path) -> LogSummary:
    """Read a trial log, skipping (and reporting) lines that do not parse."""
    out = LogSummary()
    with Path(path).open() as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                if not isinstance(rec, dict):
                    raise ValueError("not an object")
                kind = rec.get("kind", "trial")
                if kind == "trial":
                    charged = int(rec["charged"])
                    bracket = str(rec.get("bracket_s"))
                    status = rec["status"]
                elif kind != "incumbent":
                    raise ValueError(f"unknown record kind {kind!r}")
            except (ValueError, KeyError, TypeError) as exc:
                out.warnings.append(f"line {lineno}: skipped corrupt record ({exc})")
                continue
            if kind == "incumbent":
                out.trajectory.append(rec)
                continue
            out.trials += 1
            out.failed += status != "ok"
            out.consumed += charged
            out.per_bracket[bracket] = out.per_bracket.get(bracket, 0) + charged
    if out.trajectory:
        out.best = out.trajectory[-1]
    return out


def render(summary: LogSummary) -> str:
    if summary.trials == 0 and not summary.trajectory:
        return "no trials"
    lines = [f"trials: {summary.trials} ({summary.failed} failed)",
             f"resource consumed: {summary.consumed}", "", "per bracket:"]
    for b, units in summary.per_bracket.items():
        lines.append(f"  s={b:<6} {units}")
    if summary.trajectory:
        lines += ["", "incumbent trajectory:", f"  {'consumed':>10}  {'loss':>12}  arm  bracket"]
        for p in summary.trajectory:
            loss = "failed" if p.get("loss") is None else f"{p['loss']:.6g}"
            lines.append(f"  {p.get('ledger_consumed', ''):>10}  {loss:>12}  "
                         f"{p.get('arm_id', '')!s:>3}  {p.get('bracket', '')}")
    if summary.best is not None:
        lines += ["", f"best configuration (arm {summary.best.get('arm_id')}):",
                  "  " + json.dumps(summary.best.get("config"), sort_keys=True)]
    return "\n".join(lines)
