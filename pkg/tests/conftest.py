import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from imocp.priors import Regularizer, Triangular, TruncatedGaussian, Uniform  # noqa: E402

PRIORS = {
    "uniform": Uniform(1.0),
    "triangular": Triangular(mode=0.1, bound=1.0),
    "truncated_gaussian": TruncatedGaussian(loc=0.1, variance=2.0, bound=1.0),
}


@pytest.fixture(params=sorted(PRIORS))
def prior(request):
    return PRIORS[request.param]


@pytest.fixture
def regularizer(prior):
    return Regularizer(prior, alpha=0.1, sigma=0.5)


# Acceptance results, keyed by criterion number: (title, passed, detail).
ACCEPTANCE = {}
N_CRITERIA = 9


@pytest.fixture
def acceptance():
    def record(number, title, passed, detail):
        ACCEPTANCE[number] = (title, bool(passed), detail)
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n in range(1, N_CRITERIA + 1):
        if n in ACCEPTANCE:
            title, ok, detail = ACCEPTANCE[n]
            tr.write_line(f"[{'PASS' if ok else 'FAIL'}] {n}. {title}: {detail}")
        else:
            tr.write_line(f"[NOT RUN] {n}.")
