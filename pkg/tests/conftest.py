import numpy as np
import pytest

_GATE: list[str] = []


class Gate:
    """Collects one PASS/FAIL line per acceptance criterion."""

    def record(self, label: str, ok: bool, detail: str) -> bool:
        line = f"{'PASS' if ok else 'FAIL'}  {label}: {detail}"
        _GATE.append(line)
        print(line)
        return ok


@pytest.fixture(scope="session")
def gate() -> Gate:
    return Gate()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if _GATE:
        terminalreporter.section("acceptance criteria")
        for line in _GATE:
            terminalreporter.write_line(line)
