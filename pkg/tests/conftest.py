import os
from collections import OrderedDict
from pathlib import Path

import pytest

from indoornet.ingest import F1_SESSIONS, normalize_sessions

DATA_DIR = Path(__file__).resolve().parent.parent / "data"

_criteria = OrderedDict()  # number -> {"title": str, "outcomes": [(nodeid, outcome, message)]}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion this test checks")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    # The call phase decides; a setup error also counts as a failure.
    if report.when == "call" or (report.when == "setup" and not report.passed):
        number, title = marker.args
        entry = _criteria.setdefault(str(number), {"title": title, "outcomes": []})
        message = ""
        if report.failed:
            message = str(getattr(report.longrepr, "reprcrash", None) and report.longrepr.reprcrash.message or "")
        state = "passed" if report.passed else ("skipped" if report.skipped else "failed")
        entry["outcomes"].append((item.name, state, message.splitlines()[0] if message else ""))


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")

    def order(key):
        digits = "".join(c for c in key if c.isdigit())
        return (int(digits) if digits else 0, key)

    for number in sorted(_criteria, key=order):
        entry = _criteria[number]
        states = [s for _, s, _ in entry["outcomes"]]
        passed = sum(s == "passed" for s in states)
        verdict = "PASS" if states and passed == len(states) else "FAIL"
        tr.write_line(f"criterion {number:<3} {verdict}  ({passed}/{len(states)} checks)  {entry['title']}")
        if verdict == "FAIL":
            for name, state, message in entry["outcomes"]:
                if state != "passed":
                    tr.write_line(f"    {name}: {state} {message}")


@pytest.fixture
def f1_sessions():
    return normalize_sessions(F1_SESSIONS)


def dataset_path(env_var, *candidates):
    """Location of a public dataset: environment variable first, then ``data/``."""
    value = os.environ.get(env_var)
    if value:
        return Path(value)
    for name in candidates:
        p = DATA_DIR / name
        if p.exists():
            return p
    return None
