import pytest

from wcdfp.dist import DiscreteDist
from wcdfp.taskset import Task, TaskSet


def dd(*pairs):
    return DiscreteDist.from_pairs(pairs)


def make_taskset(*specs):
    """``specs`` are ``(T, D, [(value, prob), ...])`` in priority order."""
    return TaskSet(tuple(Task(DiscreteDist.from_pairs(p), d, t) for t, d, p in specs))


@pytest.fixture
def two_task():
    # tau_1: T = D = 6, C in {2, 5}; tau_2: T = D = 5, C = 3
    return make_taskset((6, 6, [(2, 0.5), (5, 0.5)]), (5, 5, [(3, 1.0)]))


ACCEPTANCE_LINES = {}


def record(criterion, ok, detail):
    line = f"criterion {criterion}: {'PASS' if ok else 'FAIL'} - {detail}"
    ACCEPTANCE_LINES[criterion] = line
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for key in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[key])
