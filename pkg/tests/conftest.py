import os
import sys

import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, os.path.dirname(__file__))

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture
def rng():
    import numpy as np

    return np.random.default_rng(12345)


ACCEPTANCE: dict[int, tuple[bool, str]] = {}


@pytest.fixture
def criterion(request):
    """Record one acceptance criterion: ``check(label, ok)`` per sub-check.

    The criterion passes only if the test body finishes and every check held.
    """
    number = request.node.get_closest_marker("criterion").args[0]
    failed: list[str] = []
    notes: list[str] = []

    def check(label: str, ok: bool):
        (notes if ok else failed).append(label)
        return ok

    yield check
    rep = getattr(request.node, "rep_call", None)
    passed = not failed and rep is not None and rep.passed
    detail = "; ".join(failed) if failed else "; ".join(notes)
    if not passed and not failed:
        detail = "error before all checks ran"
    ACCEPTANCE[number] = (passed, detail)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call":
        item.rep_call = rep


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        passed, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number:>2}: {'PASS' if passed else 'FAIL'}  {detail}")
