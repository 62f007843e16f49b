import numpy as np
import pytest

from pdtrace._backend import HAVE_NUMBA, use_backend

BACKENDS = ["numpy"] + (["numba"] if HAVE_NUMBA else [])


@pytest.fixture(params=BACKENDS)
def each_backend(request):
    with use_backend(request.param):
        yield request.param


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# acceptance criteria: every test marked with the same name must pass for the
# criterion to pass; the verdicts are listed at the end of the session
_criteria = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("acceptance")
    if mark is None or (rep.when != "call" and not rep.failed):
        return
    ok, details = _criteria.get(mark.args[0], (True, []))
    details += [v for k, v in item.user_properties if k == "detail" and v not in details]
    _criteria[mark.args[0]] = (ok and rep.passed, details)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for name, (ok, details) in _criteria.items():
        line = f"{'PASS' if ok else 'FAIL'}  {name}"
        if details:
            line += "  (" + "; ".join(details) + ")"
        terminalreporter.write_line(line)
