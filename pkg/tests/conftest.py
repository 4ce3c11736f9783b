import math

import pytest

from ddlpv.core import best_window, window
from ddlpv.plant import DiscParams, collect_dictionary, generate_excitation
from ddlpv.synthesis import DISC_L2_WEIGHTS, DISC_QP_WEIGHTS, synthesize

SEED, CUTOFF_HZ, HORIZON, N_D = 0, 40.0, 100, 7

_criteria = {}


@pytest.fixture(scope="session")
def disc_params():
    return DiscParams()


@pytest.fixture(scope="session")
def disc_record(disc_params):
    u = generate_excitation(SEED, HORIZON, CUTOFF_HZ)
    return collect_dictionary(disc_params, u).record


@pytest.fixture(scope="session")
def disc_dictionary(disc_record):
    return window(disc_record, best_window(disc_record, N_D), N_D)


@pytest.fixture(scope="session")
def qp_result(disc_dictionary):
    return synthesize("qp", disc_dictionary, DISC_QP_WEIGHTS)


@pytest.fixture(scope="session")
def l2_result(disc_dictionary):
    return synthesize("l2", disc_dictionary, DISC_L2_WEIGHTS)


@pytest.fixture(scope="session")
def hanging_start():
    return (math.pi, 0.0)


@pytest.fixture
def criterion(request):
    """Record a one-line verdict for an acceptance criterion."""
    def record(number, detail):
        _criteria[number] = {"nodeid": request.node.nodeid, "detail": detail}
    return record


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call":
        for num, entry in _criteria.items():
            if entry["nodeid"] == item.nodeid:
                entry["passed"] = rep.passed
    if rep.when == "call" and rep.failed:
        mark = item.get_closest_marker("criterion")
        if mark and mark.args[0] not in _criteria:
            _criteria[mark.args[0]] = {"nodeid": item.nodeid, "detail": "failed before recording",
                                       "passed": False}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number")


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_criteria):
        e = _criteria[num]
        verdict = "PASS" if e.get("passed") else "FAIL"
        terminalreporter.write_line(f"criterion {num:>2}: {verdict}  {e['detail']}")
