import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

_RESULTS = {}


def pytest_runtest_makereport(item, call):
    marker = item.get_closest_marker("acceptance")
    if marker is None or call.when != "call":
        return
    criterion, title = marker.args
    passed = call.excinfo is None
    detail = ""
    if not passed:
        detail = str(call.excinfo.value).splitlines()[0] if str(call.excinfo.value) else call.excinfo.typename
    _RESULTS[criterion] = (passed, title, detail)


@pytest.fixture
def report_detail(request):
    """Attach a one-line measurement to the acceptance summary line."""

    def put(text):
        criterion = request.node.get_closest_marker("acceptance").args[0]
        request.node.user_properties.append(("detail", text))
        _DETAILS[criterion] = text

    return put


_DETAILS = {}


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for criterion in sorted(_RESULTS, key=lambda c: int(c[1:])):
        passed, title, failure = _RESULTS[criterion]
        info = _DETAILS.get(criterion, "")
        if failure:
            info = f"{info}; {failure}" if info else failure
        terminalreporter.write_line(f"{criterion} {'PASS' if passed else 'FAIL'} {title}: {info}")
