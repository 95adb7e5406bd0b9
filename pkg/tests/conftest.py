from __future__ import annotations

from fractions import Fraction

import mpmath
import pytest

from shapx.engine import add_report_hook, remove_report_hook

REPORT_STATS = {"checked": 0, "exact": 0, "violations": []}
ACCEPTANCE_LINES: list[str] = []


def _sum_rule_hook(report):
    total = sum(report.scores, Fraction(0))
    target = report.full_value - report.base_value
    REPORT_STATS["checked"] += 1
    if report.exact and isinstance(target, Fraction):
        REPORT_STATS["exact"] += 1
        ok = total == target
    else:
        ok = abs(total - target) <= mpmath.mpf(10) ** -20 * max(1, abs(target))
    if not ok:
        REPORT_STATS["violations"].append((report.engine, total, target))
    assert ok, f"sum rule violated by {report.engine}: {total} != {target}"


@pytest.fixture(scope="session", autouse=True)
def global_sum_rule_hook():
    add_report_hook(_sum_rule_hook)
    yield REPORT_STATS
    remove_report_hook(_sum_rule_hook)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
    terminalreporter.write_line(
        f"sum-rule hook: {REPORT_STATS['checked']} reports checked, "
        f"{len(REPORT_STATS['violations'])} violations")
