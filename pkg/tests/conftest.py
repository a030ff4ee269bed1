from pathlib import Path

import pytest

from recserve.core import Task, TaskType, TierEvidence, TierTopology

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture
def golden_path() -> Path:
    return FIXTURES / "golden.jsonl"


@pytest.fixture
def topo3() -> TierTopology:
    return TierTopology.from_costs([1.0, 5.0, 20.0])


def make_task(confs, input_len=100, out_lens=20, quality=None, task_id="t", task_type=TaskType.SEQ2CLASS):
    n = len(confs)
    out_lens = [out_lens] * n if isinstance(out_lens, int) else out_lens
    quality = quality or [0.5] * n
    return Task(task_id, task_type, input_len, tuple(
        TierEvidence(tier=i + 1, output_len=out_lens[i], quality=quality[i], confidence=confs[i])
        for i in range(n)
    ))


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
