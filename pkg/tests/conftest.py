import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

ACCEPTANCE = {}


@pytest.fixture(scope="session")
def heis1():
    from ncleray import models
    return models.heisenberg(1)


@pytest.fixture(scope="session")
def heis2():
    from ncleray import models
    return models.heisenberg(2)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, text = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k}: {'PASS' if ok else 'FAIL'}  {text}")
