"""Collects acceptance results and prints one PASS/FAIL line per criterion."""

import pytest

_results = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(n): acceptance criterion number")


@pytest.fixture
def detail(request):
    """Dict a test fills with the measured values shown in the summary line."""
    d = {}
    request.node._acceptance_detail = d
    return d


@pytest.hookimpl(wrapper=True)
def pytest_runtest_makereport(item, call):
    rep = yield
    mark = item.get_closest_marker("acceptance")
    if mark is not None and (rep.when == "call" or rep.failed or rep.skipped):
        n = mark.args[0]
        entry = _results.setdefault(n, {"ok": True, "parts": []})
        if rep.when == "call" or not rep.passed:
            entry["ok"] &= rep.passed
            d = getattr(item, "_acceptance_detail", {})
            text = ", ".join(f"{k}={v}" for k, v in d.items())
            entry["parts"].append(f"{item.callspec.id if hasattr(item, 'callspec') else item.name}"
                                  f"[{'ok' if rep.passed else rep.outcome}]" + (f" {text}" if text else ""))
    return rep


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n in sorted(_results):
        e = _results[n]
        tr.write_line(f"criterion {n:2d}: {'PASS' if e['ok'] else 'FAIL'}  " + "; ".join(e["parts"]))
