import json
import subprocess
import sys
from pathlib import Path

import pytest

from hyperband.cli import main
from hyperband.evaluator import canonical_line

STUBS = Path(__file__).parent / "stubs"


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_brackets_table(capsys):
    code, out, _ = run(capsys, "brackets", 81, 3)
    assert code == 0
    rows = out.splitlines()
    assert rows[0] == "R=81 eta=3 s_max=4 B=405"
    col = [line.split()[1:3] for line in rows[4:9]]
    assert col == [["81", "1"], ["27", "3"], ["9", "9"], ["3", "27"], ["1", "81"]]
    assert "total resource over all brackets: 1902" in out


def test_brackets_json(capsys):
    code, out, _ = run(capsys, "brackets", 81, 3, "--json")
    table = json.loads(out)
    assert code == 0 and table["brackets"][1]["n"] == 34
    assert json.loads(json.dumps(table)) == table


def test_brackets_single(capsys):
    _, out, _ = run(capsys, "brackets", 1, 3, "--json")
    (b,) = json.loads(out)["brackets"]
    assert [(r["n_i"], r["r_i"]) for r in b["rungs"]] == [(1, 1)]


def test_brackets_bad_input(capsys):
    code, _, err = run(capsys, "brackets", 0, 3)
    assert code == 2 and "error" in err


def test_entry_point():
    out = subprocess.run([sys.executable, "-m", "hyperband.cli", "brackets", "27"],
                         capture_output=True, text=True, check=True).stdout
    assert "B=108" in out


def test_tune_replay_deterministic(capsys, tmp_path, replay_file):
    logs = []
    for k in range(2):
        out_dir = tmp_path / f"run{k}"
        code, _, _ = run(capsys, "tune", "--replay", replay_file, "--R", 81, "--seed", 4,
                         "--out", out_dir)
        assert code == 0
        lines = (out_dir / "trials.jsonl").read_text().splitlines()
        logs.append([canonical_line(json.loads(x)) for x in lines])
    assert logs[0] == logs[1] and len(logs[0]) > 0
    best = json.loads((tmp_path / "run0" / "best.json").read_text())
    assert best["ledger_consumed"] == 1902 and not best["truncated"]


def test_tune_manifest_and_override(capsys, tmp_path, replay_file):
    manifest = tmp_path / "m.json"
    manifest.write_text(json.dumps({"R": 27, "eta": 3, "seed": 1, "replay": str(replay_file),
                                    "out": str(tmp_path / "o")}))
    code, _, _ = run(capsys, "tune", "--manifest", manifest, "--R", 9, "--json")
    assert code == 0
    saved = json.loads((tmp_path / "o" / "manifest.json").read_text())
    assert saved["params"]["R"] == 9


def test_tune_budget_truncates(capsys, tmp_path, replay_file):
    code, out, _ = run(capsys, "tune", "--replay", replay_file, "--R", 81, "--budget", 600,
                       "--outer-loops", 0, "--out", tmp_path, "--json")
    assert code == 3
    res = json.loads(out)
    assert res["truncated"] and res["ledger_consumed"] <= 600


def test_tune_trainer_finds_low_loss(capsys, tmp_path):
    space = tmp_path / "space.json"
    space.write_text(json.dumps({"params": [
        {"name": "x", "kind": "continuous", "min": 0, "max": 1},
        {"name": "y", "kind": "continuous", "min": 0, "max": 1}]}))
    code, out, _ = run(capsys, "tune", "--space", space, "--trainer",
                       f"{sys.executable} {STUBS / 'quadratic.py'}", "--R", 9, "--seed", 0,
                       "--max-parallel", 4, "--resource-unit", "100 mini-batch iterations",
                       "--out", tmp_path / "o", "--json")
    assert code == 0
    best = json.loads(out)["best"]
    assert best["resource"] == 9
    assert best["loss"] - 1 / 9 == pytest.approx(best["config"]["x"] + best["config"]["y"])
    assert best["config"]["x"] + best["config"]["y"] < 0.5
    assert (tmp_path / "o" / "checkpoints").is_dir()


def test_tune_missing_space(capsys, tmp_path):
    code, _, err = run(capsys, "tune", "--space", tmp_path / "nope.json", "--trainer", "true",
                       "--R", 9, "--out", tmp_path)
    assert code == 2 and "error" in err


def test_tune_unreachable_trainer(capsys, tmp_path):
    code, _, err = run(capsys, "tune", "--space", "lenet", "--trainer", "/no/such/trainer",
                       "--R", 9, "--out", tmp_path)
    assert code == 4 and "not executable" in err


def test_tune_all_failed(capsys, tmp_path):
    space = tmp_path / "s.json"
    space.write_text(json.dumps({"params": [
        {"name": "mode", "kind": "categorical", "choices": ["fail"]}]}))
    code, _, _ = run(capsys, "tune", "--space", space, "--trainer",
                     f"{sys.executable} {STUBS / 'trainer.py'}", "--R", 3, "--out", tmp_path)
    assert code == 4


def test_report_matches_ledger(capsys, tmp_path, replay_file):
    run(capsys, "tune", "--replay", replay_file, "--R", 27, "--out", tmp_path)
    code, out, _ = run(capsys, "report", tmp_path / "trials.jsonl", "--json")
    summary = json.loads(out)
    best = json.loads((tmp_path / "best.json").read_text())
    assert code == 0 and summary["consumed"] == best["ledger_consumed"]
    assert summary["best"]["arm_id"] == best["best"]["arm_id"]


def test_report_empty_and_corrupt(capsys, tmp_path):
    empty = tmp_path / "empty.jsonl"
    empty.write_text("")
    code, out, _ = run(capsys, "report", empty)
    assert code == 0 and out.strip() == "no trials"
    log = tmp_path / "log.jsonl"
    good = {"trial_id": "0:1", "arm_id": 0, "bracket_s": 0, "rung_i": 0, "resource": 1,
            "loss": 0.5, "status": "ok", "charged": 1, "kind": "trial"}
    log.write_text(json.dumps(good) + "\n{not json\n" + json.dumps(dict(good, arm_id=1)) + "\n")
    code, out, err = run(capsys, "report", log, "--json")
    assert code == 0 and json.loads(out)["trials"] == 2
    assert "line 2" in err


def test_report_missing_file(capsys, tmp_path):
    code, _, _ = run(capsys, "report", tmp_path / "missing.jsonl")
    assert code == 2


def test_simulate_zero_trials(capsys):
    code, out, _ = run(capsys, "simulate", "--algo", "uniform", "--trials", 0)
    assert code == 0 and out.strip() == "no trials"


def test_simulate_outputs(capsys, tmp_path):
    code, out, _ = run(capsys, "simulate", "--algo", "sha_inf", "--alpha", 2, "--beta", 2,
                       "--budget", "500,2000", "--budget", 4000, "--trials", 3,
                       "--out", tmp_path, "--json")
    assert code == 0
    payload = json.loads(out)
    assert [s["budget"] for s in payload["summary"]] == [500, 2000, 4000]
    assert (tmp_path / "results.csv").read_text().startswith("algo,budget,trial")
    assert json.loads((tmp_path / "results.json").read_text()) == payload


def test_simulate_bad_combo(capsys):
    code, _, err = run(capsys, "simulate", "--algo", "sha", "--family", "adversarial",
                       "--budget", 100)
    assert code == 2 and "adversarial" in err


@pytest.mark.parametrize("argv, value", [
    (["gamma_inv", "--alpha", "2", "--y", "0.1"], 100),
    (["gamma_inv", "--alpha", "2", "--y", "0", "--R", "81"], 81),
    (["z_sh_infinite", "--limits", "0.1,0.3,0.5,0.7", "--eps", "0.4"], {"z": 88, "z_sum": 92}),
    (["uniform_budget", "--n", "100", "--delta", "0.1"], 8700),
])
def test_oracle_values(capsys, argv, value):
    code, out, _ = run(capsys, "oracle", *argv)
    assert code == 0 and json.loads(out)["value"] == value


def test_oracle_scaling_and_h(capsys):
    _, out, _ = run(capsys, "oracle", "scaling", "--alpha", 1, "--beta", 3, "--Delta", 0.1,
                    "--delta", 0.1)
    v = json.loads(out)["value"]
    assert (v["uniform_exponent"], v["sha_exponent"]) == (-4, -3)
    code, out, _ = run(capsys, "oracle", "h_complexity", "--n", 100, "--delta", 0.1)
    assert code == 0 and json.loads(out)["value"] == pytest.approx(4245.626, rel=1e-5)


def test_oracle_missing_args(capsys):
    code, _, err = run(capsys, "oracle", "z_sh_finite", "--limits", "0.1,0.2")
    assert code == 2 and "--eps" in err and "--R" in err
