import random
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from moreau_lab import catalog  # noqa: E402
from moreau_lab.sampling import random_plq  # noqa: E402


@pytest.fixture
def rng():
    return random.Random(20240611)


@pytest.fixture(params=sorted(catalog.PLQ_CATALOG))
def catalog_plq(request):
    return catalog.get(request.param)


def random_instances(seed, count, **kw):
    r = random.Random(seed)
    return [random_plq(r, **kw) for _ in range(count)]


# -- acceptance reporting --------------------------------------------------------

ACCEPTANCE_RESULTS = {}


@pytest.fixture
def criterion(request):
    """Record the outcome of one acceptance criterion under ``number``."""
    def record(number, label):
        request.node.user_properties.append(("criterion", (number, label)))
    return record


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.failed):
        return
    for key, value in report.user_properties:
        if key == "criterion":
            ACCEPTANCE_RESULTS[value[0]] = (value[1], report.passed, report.duration)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_RESULTS):
        label, passed, duration = ACCEPTANCE_RESULTS[number]
        terminalreporter.write_line(
            f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {label} ({duration:.2f} s)")
