import numpy as np
import pytest

from pkmopt.config import default_config


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def lambda_cfg():
    return default_config("lambda")


@pytest.fixture
def ups_cfg():
    return default_config("ups2")


_ACCEPTANCE = []


@pytest.fixture
def acceptance():
    """Record one PASS/FAIL line per acceptance criterion."""
    def record(number, title, ok, detail=""):
        line = f"{'PASS' if ok else 'FAIL'} criterion {number:>2}: {title}" + (f" ({detail})" if detail else "")
        _ACCEPTANCE.append((number, line))
        print(line)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(_ACCEPTANCE):
        terminalreporter.write_line(line)
