import pathlib

import pytest
from hypothesis import settings

settings.register_profile("default", deadline=None, max_examples=100)
settings.load_profile("default")

FIXTURES = pathlib.Path(__file__).parent / "fixtures"


@pytest.fixture
def fixtures_dir():
    return FIXTURES


# acceptance reporting: one PASS/FAIL line per criterion in the terminal summary

_criteria: dict[int, dict] = {}


@pytest.fixture
def note(request):
    """Attach a one-line detail to the criterion of the running test."""
    marker = request.node.get_closest_marker("criterion")

    def add(text):
        if marker is not None:
            _criteria[marker.args[0]]["notes"].append(text)

    return add


def pytest_collection_modifyitems(items):
    for item in items:
        marker = item.get_closest_marker("criterion")
        if marker is not None:
            number, title = marker.args
            _criteria.setdefault(number, {"title": title, "outcomes": [], "notes": []})


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    report = (yield).get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if report.when == "call" or (report.when == "setup" and not report.passed):
        _criteria[marker.args[0]]["outcomes"].append(report.passed)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        entry = _criteria[number]
        outcomes = entry["outcomes"]
        status = "PASS" if outcomes and all(outcomes) else ("NOT RUN" if not outcomes else "FAIL")
        detail = "; ".join(entry["notes"])
        terminalreporter.write_line(f"criterion {number} {status}: {entry['title']}" + (f" ({detail})" if detail else ""))
