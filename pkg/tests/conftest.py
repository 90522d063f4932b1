from __future__ import annotations

import sys
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile("ci", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("ci")


@pytest.fixture
def nh():
    from qvsets.fixtures import non_hausdorff

    return non_hausdorff()


@pytest.fixture
def ctx2():
    from qvsets.fixtures import two_dim_context

    return two_dim_context()


@pytest.fixture
def ctx4():
    from qvsets.fixtures import four_dim_context

    return four_dim_context()


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)
