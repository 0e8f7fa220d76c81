"""Session-wide fixtures.

Every alternating-optimisation run made anywhere in the suite is audited for
a non-increasing objective trace and for centroids inside [-1, 1]. The
acceptance tests read the audit; the terminal summary prints one line per
acceptance criterion.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import pytest

from dcsfcm import fuzzy

TRACE_SLACK = 1e-12


@dataclass
class FcmAudit:
    runs: int = 0
    iterations: int = 0
    monotone_violations: list = field(default_factory=list)
    internality_violations: list = field(default_factory=list)

    def record(self, run: fuzzy.RunTrace) -> None:
        self.runs += 1
        trace = run.trace
        self.iterations += len(trace) - 1
        for i in range(1, len(trace)):
            if trace[i] > trace[i - 1] + TRACE_SLACK * max(1.0, abs(trace[i - 1])):
                self.monotone_violations.append((self.runs, i, trace[i - 1], trace[i]))
        if run.centroid_min < -1.0 or run.centroid_max > 1.0:
            self.internality_violations.append((self.runs, run.centroid_min, run.centroid_max))


AUDIT = FcmAudit()
CRITERIA: dict[int, tuple[str, str]] = {}
NODE_CRITERION: dict[str, int] = {}

_original_run = fuzzy.run_alternating


def _audited_run(*args, **kwargs):
    run = _original_run(*args, **kwargs)
    AUDIT.record(run)
    return run


fuzzy.run_alternating = _audited_run


@pytest.fixture
def fcm_audit() -> FcmAudit:
    return AUDIT


@pytest.fixture
def criterion(request):
    """Call ``criterion(n, ok, detail)`` to record an acceptance outcome."""

    def record(number: int, ok: bool, detail: str) -> None:
        CRITERIA[number] = ("PASS" if ok else "FAIL", detail)
        print(f"criterion {number}: {'PASS' if ok else 'FAIL'} - {detail}")

    return record


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number")
    config.addinivalue_line("markers", "audit: runs after every other test")


def pytest_collection_modifyitems(session, config, items):
    # the suite-wide audit must see every other fit first
    items.sort(key=lambda item: item.get_closest_marker("audit") is not None)
    for item in items:
        m = item.get_closest_marker("criterion")
        if m is not None:
            NODE_CRITERION[item.nodeid] = m.args[0]


def pytest_runtest_logreport(report):
    number = NODE_CRITERION.get(report.nodeid)
    if number is None:
        return
    if report.skipped and number not in CRITERIA:
        reason = report.longrepr[2] if isinstance(report.longrepr, tuple) else "skipped"
        CRITERIA[number] = ("SKIP", str(reason))
    elif report.failed and CRITERIA.get(number, ("",))[0] != "FAIL":
        CRITERIA[number] = ("FAIL", f"error during {report.when}")


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not CRITERIA:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n in sorted(CRITERIA):
        status, detail = CRITERIA[n]
        tr.write_line(f"criterion {n:>2}: {status}  {detail}")
    tr.write_line(
        f"FCM audit: {AUDIT.runs} runs, {AUDIT.iterations} iterations, "
        f"{len(AUDIT.monotone_violations)} monotonicity and "
        f"{len(AUDIT.internality_violations)} internality violations"
    )
