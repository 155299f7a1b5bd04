import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

ROOT = Path(__file__).resolve().parent.parent
STORIES = ROOT / "stories"

_outcomes: dict[str, list[bool]] = {}
_titles: dict[str, str] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(key, title): acceptance criterion covered by the test")


@pytest.fixture
def stories() -> Path:
    return STORIES


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    for key, title in getattr(report, "criteria", ()):
        _titles[key] = title
        _outcomes.setdefault(key, []).append(report.outcome == "passed")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    rep.criteria = [(m.args[0], m.args[1]) for m in item.iter_markers("criterion")]


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_outcomes, key=lambda k: int(k[2:])):
        results = _outcomes[key]
        status = "PASS" if all(results) else "FAIL"
        terminalreporter.write_line(
            f"{status} {key} {_titles[key]} ({sum(results)}/{len(results)} checks)"
        )
