import os
from collections import defaultdict

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow]
)
settings.register_profile("quick", deadline=None, max_examples=15)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

CRITERIA = tuple(str(k) for k in range(1, 11))
_outcomes: dict = defaultdict(list)


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(id): acceptance criterion this test belongs to")


@pytest.fixture
def rng(request):
    # stable per-test stream, independent of test order
    seed = sum(map(ord, request.node.name)) % (2**32)
    return np.random.default_rng(seed)


@pytest.hookimpl(wrapper=True)
def pytest_runtest_makereport(item, call):
    rep = yield
    mark = item.get_closest_marker("criterion")
    if mark is not None and (rep.when == "call" or (rep.when == "setup" and not rep.passed)):
        detail = dict(item.user_properties).get("detail", "")
        _outcomes[str(mark.args[0])].append((item.name, rep.passed, rep.duration, detail))
    return rep


def acceptance_lines() -> list:
    lines = []
    for cid in CRITERIA:
        entries = [e for key, es in _outcomes.items() if key.rstrip("abc") == cid for e in es]
        if not entries:
            continue
        ok = all(passed for _, passed, _, _ in entries)
        secs = sum(d for _, _, d, _ in entries)
        failed = [name for name, passed, _, _ in entries if not passed]
        details = "; ".join(d for _, _, _, d in entries if d)
        tail = f" failed: {', '.join(failed)}" if failed else ""
        lines.append(f"criterion {cid:>2}: {'PASS' if ok else 'FAIL'} ({secs:.2f} s){tail}"
                     + (f" | {details}" if details else ""))
    return lines


def pytest_terminal_summary(terminalreporter):
    lines = acceptance_lines()
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
