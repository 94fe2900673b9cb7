import numpy as np
import pytest

# criterion number -> list of (label, ok, detail), filled by test_acceptance
ACCEPTANCE = {}


def record(criterion, label, ok, detail=""):
    ACCEPTANCE.setdefault(criterion, []).append((label, bool(ok), detail))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for crit in sorted(ACCEPTANCE):
        entries = ACCEPTANCE[crit]
        ok = all(e[1] for e in entries)
        tr.write_line(f"criterion {crit:2d}: {'PASS' if ok else 'FAIL'} ({sum(e[1] for e in entries)}/{len(entries)} checks)")
        for label, good, detail in entries:
            if not good or len(entries) == 1:
                tr.write_line(f"    {'ok  ' if good else 'FAIL'} {label} {detail}")
