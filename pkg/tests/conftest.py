import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", deadline=None, suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large]
)
settings.load_profile("default")

_ACCEPTANCE = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    if report.when == "call" and item.module.__name__.endswith("test_acceptance"):
        doc = (item.function.__doc__ or item.name).strip().splitlines()[0]
        details = "; ".join(str(v) for k, v in item.user_properties if k == "detail")
        _ACCEPTANCE.append((item.name, report.outcome, doc, details))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome, doc, details in sorted(_ACCEPTANCE):
        mark = "PASS" if outcome == "passed" else "FAIL"
        line = f"[{mark}] {doc}"
        if details:
            line += f" | {details}"
        terminalreporter.write_line(line)
