import pytest

_acceptance = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(ident, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("acceptance")
    if mark is None:
        return
    ident, title = mark.args
    if rep.when == "call" or rep.failed:
        prev = _acceptance.get(ident, (title, True))[1]
        _acceptance[ident] = (title, prev and rep.passed)


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for ident in sorted(_acceptance, key=lambda k: int(k.split("-")[1])):
        title, ok = _acceptance[ident]
        terminalreporter.write_line(f"{ident:<6} {'PASS' if ok else 'FAIL'}  {title}")
