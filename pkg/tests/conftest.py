"""Shared pytest wiring: per-criterion result lines for the acceptance suite."""


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """Print one PASS/FAIL line per acceptance test at the end of the run."""
    verdicts: dict[str, bool] = {}
    for outcome in ("passed", "failed", "error"):
        for report in terminalreporter.stats.get(outcome, []):
            nodeid = getattr(report, "nodeid", "")
            if "test_acceptance.py" not in nodeid:
                continue
            if getattr(report, "when", "call") not in ("call", "setup"):
                continue
            name = nodeid.split("::")[-1]
            ok = outcome == "passed"
            verdicts[name] = verdicts.get(name, True) and ok
    if not verdicts:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok in sorted(verdicts.items()):
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {name}")
