import sys
import time
from collections import defaultdict
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

CRITERIA = {
    1: "conformal algebra generation",
    2: "structure closure",
    3: "Killing solution",
    4: "conformal power law",
    5: "Klein-Gordon example",
    6: "canonical realizations",
    7: "rank-one obstructions",
    8: "equivalence pipeline",
    9: "oracle agreement",
    10: "parser and suite runtime",
}
SUITE_BUDGET = 60.0

_outcomes = defaultdict(list)
_start = time.perf_counter()


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    rep = (yield).get_result()
    m = item.get_closest_marker("criterion")
    if m is None:
        return
    if rep.when == "call" or rep.failed or rep.skipped:
        _outcomes[m.args[0]].append(rep.passed and rep.when == "call")


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    elapsed = time.perf_counter() - _start
    terminalreporter.section("acceptance criteria")
    for k, title in CRITERIA.items():
        results = _outcomes.get(k, [])
        ok = bool(results) and all(results)
        note = f"{sum(results)}/{len(results)} checks"
        if k == 10:
            ok = ok and elapsed < SUITE_BUDGET
            note += f", session {elapsed:.1f} s (budget {SUITE_BUDGET:.0f} s)"
        if not results:
            note = "not run"
        terminalreporter.write_line(f"criterion {k:2d} {'PASS' if ok else 'FAIL'}  {title} ({note})")
