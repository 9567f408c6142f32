import numpy as np
import pytest

from photon_tpm.channel import FtadParams
from photon_tpm.tpm import SourceParams

REF_DELTA, REF_P, REF_ETA = 0.77, 0.19, 0.7

_acceptance_lines = []


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


@pytest.fixture
def ref_params():
    return SourceParams(REF_DELTA), FtadParams(REF_P, REF_ETA)


@pytest.fixture
def acceptance_log():
    """Collects one PASS/FAIL line per acceptance criterion for the terminal summary."""

    def log(name, ok, detail=""):
        _acceptance_lines.append(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
        return ok

    return log


def pytest_terminal_summary(terminalreporter):
    if _acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in _acceptance_lines:
            terminalreporter.write_line(line)
