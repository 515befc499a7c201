import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

# criterion number -> (passed, detail), filled in by the acceptance tests
ACCEPTANCE_RESULTS: dict = {}


def pytest_addoption(parser):
    parser.addoption(
        "--refine4",
        action="store_true",
        default=False,
        help="also run the optional refine=4 tetrahedron reproduction (hours, several GB)",
    )


@pytest.fixture
def record_criterion():
    def record(number, passed, detail):
        line = f"ACCEPTANCE {number}: {'PASS' if passed else 'FAIL'} - {detail}"
        ACCEPTANCE_RESULTS[number] = (passed, line)
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_RESULTS):
        terminalreporter.write_line(ACCEPTANCE_RESULTS[number][1])
