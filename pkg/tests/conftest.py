import json
import sys
from pathlib import Path

import numpy as np
import pytest

STUB = Path(__file__).parent / "stubs" / "trainer.py"


@pytest.fixture
def stub_command():
    return [sys.executable, str(STUB)]


def crossing_curves(n: int, R: int, seed: int = 0) -> dict:
    """Replay curves whose early ranking differs from the final one."""
    rng = np.random.default_rng(seed)
    final = rng.uniform(0.1, 0.9, n)
    speed = rng.uniform(0.2, 3.0, n)
    doc = {}
    for i in range(n):
        doc[str(i)] = {str(r): float(final[i] + 0.5 * r ** -speed[i]) for r in range(1, R + 1)}
    return doc


@pytest.fixture
def replay_doc():
    return crossing_curves(400, 81)


@pytest.fixture
def replay_file(tmp_path, replay_doc):
    p = tmp_path / "replay.json"
    p.write_text(json.dumps(replay_doc))
    return p


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
