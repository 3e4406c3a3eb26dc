import sys
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile(
    "default", max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def fig2_sweeps():
    """Both fig2 presets swept once per session (L = 9, 120 points each)."""
    import time

    from wingflap.experiment import preset, run_sweep

    start = time.perf_counter()
    sweeps = {name: run_sweep(preset(name)) for name in ("fig2-integrable", "fig2-ergodic")}
    sweeps["elapsed"] = time.perf_counter() - start
    return sweeps


@pytest.fixture
def acceptance():
    """Record one PASS/FAIL line per acceptance criterion."""

    def record(label: str, ok: bool, detail: str = "") -> bool:
        ACCEPTANCE_LINES.append(f"{'PASS' if ok else 'FAIL'}  {label}  {detail}".rstrip())
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
