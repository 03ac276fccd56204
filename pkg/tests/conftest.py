import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from learnerdiag.data import ResponseMatrix, SkillMatrix  # noqa: E402


@pytest.fixture
def rng():
    return np.random.default_rng(0)


@pytest.fixture
def small_cls():
    """6 learners x 8 samples, ~80% observed, binary scores, 3 skills."""
    r = np.random.default_rng(7)
    dense = (r.random((6, 8)) < 0.6).astype(float)
    dense[r.random((6, 8)) < 0.2] = np.nan
    q = np.zeros((8, 3))
    q[np.arange(8), np.arange(8) % 3] = 1
    q[0, 2] = 1
    q[5, 0] = 1
    return ResponseMatrix.from_dense(dense), SkillMatrix(q)


@pytest.fixture
def small_reg():
    r = np.random.default_rng(11)
    dense = r.random((5, 7))
    dense[r.random((5, 7)) < 0.15] = np.nan
    q = np.eye(7, 2)
    q[2:, 1] = 1
    return ResponseMatrix.from_dense(dense, task_kind="regression"), SkillMatrix(q)


def pytest_terminal_summary(terminalreporter):
    import acceptance_log

    if acceptance_log.LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(acceptance_log.LINES):
            terminalreporter.write_line(line)
