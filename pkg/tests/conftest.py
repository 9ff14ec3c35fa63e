import numpy as np
import pytest

from qcorr.qmath import Layout, density_from_pure, partial_trace
from qcorr.scenarios import w_cnot_event

ACCEPTANCE_RESULTS: dict[str, tuple[bool, str]] = {}


@pytest.fixture
def rng():
    return np.random.default_rng(20091015)


@pytest.fixture(scope="session")
def acr():
    return Layout.qubits("A", "C", "R")


@pytest.fixture(scope="session")
def ac():
    return Layout.qubits("A", "C")


@pytest.fixture(scope="session")
def w_marginals():
    """(rho_AC before, rho_AC after) for the W-state CNOT event."""
    before, after = w_cnot_event()
    return (
        partial_trace(density_from_pure(before), {"A", "C"}),
        partial_trace(density_from_pure(after), {"A", "C"}),
    )


@pytest.fixture
def record_criterion():
    def record(key: str, ok: bool, detail: str):
        ACCEPTANCE_RESULTS[key] = (ok, detail)
        assert ok, f"{key}: {detail}"

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_RESULTS, key=lambda k: int(k.split()[1].rstrip(":"))):
        ok, detail = ACCEPTANCE_RESULTS[key]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {key} {detail}")
