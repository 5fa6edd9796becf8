import json
import sys

import pytest

from hyperband.evaluator import FAILED, ArmFactory, BudgetLedger, TrialFailed, TrialLog, evaluate_rung
from hyperband.trainer import SubprocessOracle, parse_loss_line


@pytest.mark.parametrize("out, loss", [('{"loss": 0.25}', 0.25),
                                       ('log line\n{"loss": 3}\n\n', 3.0)])
def test_parse_ok(out, loss):
    assert parse_loss_line(out) == loss


@pytest.mark.parametrize("out", ["", "loss=1", '{"loss": "x"}', '{"loss": NaN}',
                                 '{"loss": Infinity}', '{"acc": 1}', "[0.1]"])
def test_parse_failures(out):
    with pytest.raises(TrialFailed):
        parse_loss_line(out)


def test_payload_and_checkpoint(tmp_path, stub_command):
    oracle = SubprocessOracle(stub_command, tmp_path / "ck", "epoch")
    arm = ArmFactory(7).make([{"base": 0.1}])[0]
    msg = oracle.payload(arm, 27, "7:27")
    assert msg == {"trial_id": "7:27", "arm_id": 7, "config": {"base": 0.1}, "resource": 27,
                   "resource_unit": "epoch", "checkpoint_dir": str(tmp_path / "ck" / "arm_7")}
    assert oracle.evaluate(arm, 4, "7:4") == pytest.approx(0.35)
    assert (tmp_path / "ck" / "arm_7" / "last_resource").read_text() == "4"


def test_string_command_is_split(tmp_path, stub_command):
    oracle = SubprocessOracle(" ".join(stub_command), tmp_path)
    assert oracle.command == stub_command


def test_missing_executable(tmp_path):
    oracle = SubprocessOracle(["/nonexistent/trainer"], tmp_path)
    with pytest.raises(TrialFailed, match="cannot launch"):
        oracle.evaluate(ArmFactory().make([{}])[0], 1)


def test_statuses_in_rung(tmp_path, stub_command):
    configs = [{"mode": "ok"}, {"mode": "fail"}, {"mode": "garbage"}, {"mode": "nan"},
               {"mode": "sleep"}]
    arms = ArmFactory().make(configs)
    ledger, log = BudgetLedger(), TrialLog()
    oracle = SubprocessOracle(stub_command, tmp_path, timeout_secs=1.0)
    losses = evaluate_rung(arms, 2, oracle, ledger, max_parallel=5, log=log)
    assert losses[0] == pytest.approx(1.0) and losses[1:] == [FAILED] * 4
    assert [a.status for a in arms] == ["active"] + ["failed"] * 4
    assert [r["status"] for r in log.records] == ["ok"] + ["failed"] * 4
    assert ledger.consumed == 10 == sum(r["charged"] for r in log.records)
    json.dumps(log.records)  # records stay serializable
