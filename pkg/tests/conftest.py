"""Per-criterion pass/fail summary for the acceptance suite."""

from collections import defaultdict

import pytest

CRITERIA: dict[int, str] = {}
OUTCOMES: dict[int, list[str]] = defaultdict(list)
DETAILS: dict[int, list[str]] = defaultdict(list)


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.fixture
def detail(request):
    """Append a measured-value line to the criterion summary."""
    marker = request.node.get_closest_marker("criterion")
    return lambda text: DETAILS[marker.args[0]].append(text) if marker else None


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    number, title = marker.args
    CRITERIA[number] = title
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        OUTCOMES[number].append(rep.outcome)


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for number in sorted(CRITERIA):
        outs = OUTCOMES[number]
        if "failed" in outs:
            status = "FAIL"
        elif outs and all(o == "skipped" for o in outs):
            status = "SKIP"
        else:
            status = "PASS"
        tr.write_line(f"criterion {number:2d}: {status}  {CRITERIA[number]}")
        for line in DETAILS[number]:
            tr.write_line(f"              {line}")
