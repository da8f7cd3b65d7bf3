from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

from empc.corpus import fig1_source
from empc.ir import parse_program

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

PROGRAMS = Path(__file__).parent / "programs"


def load(name: str):
    return parse_program((PROGRAMS / name).read_text())


@pytest.fixture
def fig1():
    return parse_program(fig1_source())


# criterion number -> "PASS ..." / "FAIL ..." line, filled by test_acceptance
ACCEPTANCE: dict[int, str] = {}


def record(n: int, ok: bool, detail: str) -> None:
    line = f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE[n] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[n])
