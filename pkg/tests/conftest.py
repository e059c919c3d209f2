import numpy as np
import pytest

from availcases.frame import NumericFrame
from availcases.io import load_pima, load_ucb_records, load_ucb_table


@pytest.fixture(scope="session")
def pima():
    return load_pima()


@pytest.fixture(scope="session")
def ucb_table():
    return load_ucb_table()


@pytest.fixture(scope="session")
def ucb_records():
    return load_ucb_records()


def adversarial_frame(m=60, r=-0.9, seed=3):
    """Three columns observed in disjoint pairs, each pair strongly anticorrelated.

    Block 1 sees columns (0, 1), block 2 (0, 2), block 3 (1, 2); the pairwise
    correlation matrix then has all off-diagonals near ``r`` and eigenvalue
    1 + 2r < 0.
    """
    rng = np.random.default_rng(seed)
    vals = np.zeros((3 * m, 3))
    pres = np.zeros((3 * m, 3), dtype=bool)
    for b, (i, j) in enumerate([(0, 1), (0, 2), (1, 2)]):
        z = rng.standard_normal(m)
        e = rng.standard_normal(m)
        rows = slice(b * m, (b + 1) * m)
        vals[rows, i] = z
        vals[rows, j] = r * z + np.sqrt(1 - r * r) * e
        pres[rows, i] = pres[rows, j] = True
    return NumericFrame(vals, pres, ["a", "b", "c"])


@pytest.fixture
def adversarial():
    return adversarial_frame()


@pytest.fixture
def report_criterion(request):
    results = request.config.stash.setdefault(_KEY, [])

    def report(label, ok, detail=""):
        line = f"[{'PASS' if ok else 'FAIL'}] {label}: {detail}"
        results.append(line)
        print(line)
        assert ok, line

    return report


_KEY = pytest.StashKey[list]()


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
