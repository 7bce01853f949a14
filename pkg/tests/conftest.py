import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, max_examples=40, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def unit_vectors(rng, m):
    v = rng.standard_normal((m, 3))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


ACCEPTANCE: list[str] = []


@pytest.fixture
def record():
    """Append one PASS/FAIL line per acceptance criterion."""

    def _record(number: int, name: str, passed: bool, detail: str, runtime: float) -> None:
        status = "PASS" if passed else "FAIL"
        ACCEPTANCE.append(f"[{status}] criterion {number:2d}: {name}  ({detail}; {runtime:.1f} s)")

    return _record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split("criterion")[1].split(":")[0])):
            terminalreporter.write_line(line)
