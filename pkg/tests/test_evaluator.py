import json
import threading
import time

import pytest
from hypothesis import given, settings, strategies as st

from hyperband.evaluator import (
    FAILED,
    ArmFactory,
    BudgetExceeded,
    BudgetLedger,
    RungFailed,
    TrialFailed,
    TrialLog,
    canonical_line,
    evaluate_rung,
    load_replay,
    top_k,
)

CURVE = {"0": {"1": 0.9, "3": 0.5, "9": 0.4}}


class Table:
    """Loss = value tabulated by arm config; optionally slow and out of order."""

    resumable = True

    def __init__(self, fail=(), jitter=False):
        self.fail = set(fail)
        self.jitter = jitter

    def evaluate(self, arm, resource, trial_id=""):
        if self.jitter:
            time.sleep(0.002 * ((arm.arm_id * 7) % 5))
        if arm.arm_id in self.fail:
            raise RuntimeError("boom")
        return arm.config / resource


def arms(n, start=0):
    return ArmFactory(start).make([float(i + 1) for i in range(n)])


@pytest.mark.parametrize("query, expected", [(9, 0.4), (5, 0.5), (1, 0.9), (100, 0.4), (3, 0.5)])
def test_replay_step_lookup(query, expected):
    assert load_replay(json.dumps(CURVE)).loss(0, query) == expected


def test_replay_below_domain_fails_arm():
    oracle = load_replay(CURVE)
    a = arms(1)
    with pytest.raises(RungFailed):
        evaluate_rung(a, 1, load_replay({"0": {"2": 0.1}}), BudgetLedger())
    assert a[0].status == "failed"
    with pytest.raises(TrialFailed):
        oracle.loss(0, 0)


@pytest.mark.parametrize("doc", ["{", "[1, 2]", '{"x": {"1": 0.1}}', '{"0": 3}',
                                 '{"0": {"0": 0.1}}', '{"0": {}}'])
def test_replay_malformed(doc):
    with pytest.raises(ValueError):
        load_replay(doc)


def test_rung_charges_full_level():
    ledger = BudgetLedger(cap=405)
    losses = evaluate_rung(arms(81), 1, Table(), ledger)
    assert ledger.consumed == 81 and len(losses) == 81


def test_empty_rung():
    ledger = BudgetLedger()
    assert evaluate_rung([], 5, Table(), ledger) == []
    assert ledger.consumed == 0


def test_cap_checked_before_any_call():
    ledger = BudgetLedger(cap=10)
    a = arms(3)
    with pytest.raises(BudgetExceeded):
        evaluate_rung(a, 4, Table(), ledger)
    assert ledger.consumed == 0 and all(x.loss_at == {} for x in a)


def test_failure_sentinel_and_status():
    a = arms(3)
    log = TrialLog()
    losses = evaluate_rung(a, 2, Table(fail={1}), BudgetLedger(), log=log)
    assert losses[1] == FAILED and a[1].status == "failed"
    assert [r["status"] for r in log.records] == ["ok", "failed", "ok"]
    assert log.records[1]["loss"] is None and log.records[1]["charged"] == 2
    with pytest.raises(ValueError, match="not active"):
        evaluate_rung(a, 4, Table(), BudgetLedger())


def test_all_failed_raises_after_logging():
    log = TrialLog()
    with pytest.raises(RungFailed):
        evaluate_rung(arms(2), 1, Table(fail={0, 1}), BudgetLedger(), log=log)
    assert len(log.records) == 2


def test_non_finite_loss_is_failure():
    class NaN:
        resumable = True

        def evaluate(self, arm, resource, trial_id=""):
            return float("nan") if arm.arm_id == 0 else 1.0

    a = arms(2)
    assert evaluate_rung(a, 1, NaN(), BudgetLedger())[0] == FAILED


def test_delta_accounting():
    ledger = BudgetLedger(accounting="delta")
    a = arms(2)
    evaluate_rung(a, 3, Table(), ledger)
    evaluate_rung(a, 9, Table(), ledger)
    assert ledger.consumed == 2 * 9


def test_resource_levels_increase():
    a = arms(1)
    evaluate_rung(a, 5, Table(), BudgetLedger())
    with pytest.raises(ValueError):
        evaluate_rung(a, 3, Table(), BudgetLedger())


def test_parallel_matches_serial():
    serial_ledger, par_ledger = BudgetLedger(), BudgetLedger()
    s_log, p_log = TrialLog(), TrialLog()
    serial = evaluate_rung(arms(20), 3, Table(jitter=True), serial_ledger, 1, s_log)
    par = evaluate_rung(arms(20), 3, Table(jitter=True), par_ledger, 8, p_log)
    assert serial == par and serial_ledger.consumed == par_ledger.consumed
    assert [canonical_line(r) for r in s_log.records] == [canonical_line(r) for r in p_log.records]


def test_ledger_thread_safety():
    ledger = BudgetLedger(cap=10_000)
    threads = [threading.Thread(target=lambda: [ledger.charge(1) for _ in range(1000)])
               for _ in range(8)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert ledger.consumed == 8000


def test_ledger_rejects_bad_input():
    with pytest.raises(ValueError):
        BudgetLedger(cap=0)
    with pytest.raises(ValueError):
        BudgetLedger(accounting="other")
    with pytest.raises(ValueError):
        BudgetLedger().charge(-1)


def test_log_file_roundtrip(tmp_path):
    log = TrialLog(tmp_path / "sub" / "t.jsonl")
    evaluate_rung(arms(3), 1, Table(fail={2}), BudgetLedger(), log=log, bracket_s=4, rung_i=0)
    lines = [json.loads(x) for x in (tmp_path / "sub" / "t.jsonl").read_text().splitlines()]
    assert lines == log.records
    assert {r["trial_id"] for r in lines} == {"0:1", "1:1", "2:1"}
    assert all(r["bracket_s"] == 4 and r["rung_i"] == 0 for r in lines)


def test_canonical_line_drops_timing():
    rec = {"b": 1, "a": 2, "wall_millis": 3.0, "timestamp": "now"}
    assert canonical_line(rec) == '{"a":2,"b":1}'


@pytest.mark.parametrize("losses, k, expected", [
    ([0.3, 0.1, 0.2], 2, [1, 2]),
    ([0.5, 0.5, 0.5], 1, [0]),
    ([0.4, FAILED, 0.2], 2, [2, 0]),
    ([FAILED, FAILED, 0.9], 3, [2, 0, 1]),
    ([0.1], 0, []),
])
def test_top_k(losses, k, expected):
    a = arms(len(losses))
    assert [x.arm_id for x in top_k(a, losses, k)] == expected


def test_top_k_bad_k():
    with pytest.raises(ValueError):
        top_k(arms(2), [0.1, 0.2], 3)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.one_of(st.floats(-5, 5), st.just(FAILED)), min_size=1, max_size=30),
       st.data())
def test_top_k_matches_brute_force(losses, data):
    k = data.draw(st.integers(0, len(losses)))
    a = arms(len(losses))
    brute = sorted(range(len(losses)), key=lambda i: (losses[i] == FAILED, losses[i], i))[:k]
    assert [x.arm_id for x in top_k(a, losses, k)] == brute
