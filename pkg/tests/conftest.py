import pytest

from helpers import make_row, rows_to_csv, three_clusters

_acceptance_results = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(label): exit criterion, summarised at the end of the run")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    label = marker.args[0]
    if rep.when == "call" or (rep.when == "setup" and rep.outcome != "passed"):
        _acceptance_results[label] = rep.outcome


def pytest_terminal_summary(terminalreporter):
    if not _acceptance_results:
        return
    terminalreporter.section("acceptance criteria")
    for label in sorted(_acceptance_results, key=lambda s: int(s.split(".")[0])):
        status = "PASS" if _acceptance_results[label] == "passed" else "FAIL"
        terminalreporter.write_line(f"[{status}] {label}")


@pytest.fixture
def two_row_csv():
    return rows_to_csv([make_row(10), make_row(11, session="M2", condition="OC3")])


@pytest.fixture(scope="session")
def clusters():
    return three_clusters()
