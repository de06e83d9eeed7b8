import pytest

from ratchet_levy import LevyModel, Strategy

BASE_DELTA = 0.05


@pytest.fixture
def bm():
    return LevyModel.brownian(1.0, 2.0)


@pytest.fixture
def base_strategy():
    return Strategy(a=3.0, b=5.0, c1=0.0, c2=0.1, gamma=1.0)


@pytest.fixture
def cpe():
    # premium 1.5, claims at rate 1 with mean 0.5, small diffusion
    return LevyModel.compound_poisson_exp(1.5, 0.5, 1.0, 2.0)


# acceptance bookkeeping: criterion number -> {part: passed}
_CRITERIA: dict[int, dict[str, bool]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, part=''): acceptance criterion n (optionally one part of it)")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    n = mark.args[0]
    part = mark.kwargs.get("part", "")
    parts = _CRITERIA.setdefault(n, {})
    if rep.when == "call" or (rep.when == "setup" and rep.failed):
        parts[part] = parts.get(part, True) and rep.passed


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        parts = _CRITERIA[n]
        ok = all(parts.values())
        failed = [p for p, v in parts.items() if not v and p]
        note = f" (failed: {', '.join(failed)})" if failed else ""
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}{note}")
