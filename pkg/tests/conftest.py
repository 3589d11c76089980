from __future__ import annotations

import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

CRITERIA = {
    1: "hyperbolic fixed point of the a=1 Henon map",
    2: "elliptic fixed point detected at a=0.3, claim refused",
    3: "parabolic period-2 orbit stays inconclusive and terminates",
    4: "every grid-Newton orbit of period <= 6 lies in a surviving enclosure",
    5: "six-level area column non-increasing, shadowing over 10^4 segments",
    6: "property suites at full size",
    7: "fixed-point data: Table 1 row 400 and period counts n <= 8",
}

_outcomes: dict[int, list[str]] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("acceptance")
    if mark is None:
        return
    n = mark.args[0]
    if rep.when == "call" or (rep.when == "setup" and rep.outcome != "passed"):
        _outcomes.setdefault(n, []).append(rep.outcome)


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(CRITERIA):
        results = _outcomes.get(n)
        if not results:
            continue
        if "failed" in results:
            verdict = "FAIL"
        elif all(r == "skipped" for r in results):
            verdict = "SKIP"
        else:
            verdict = "PASS"
        terminalreporter.write_line(f"criterion {n}: {verdict} - {CRITERIA[n]}")
