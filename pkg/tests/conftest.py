"""Shared pytest plumbing.

Collects one-line verdicts from the end-to-end checks in
test_acceptance.py and replays them in the terminal summary, so the
final report shows every criterion with its measured values even when
stdout capture is on.
"""

_acceptance_lines = []


def record_criterion(tag: str, ok: bool, detail: str) -> None:
    status = "PASS" if ok else "FAIL"
    line = f"[{tag}] {status}  {detail}"
    _acceptance_lines.append(line)
    print(line)
    assert ok, line


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _acceptance_lines:
        return
    terminalreporter.section("acceptance criteria")
    for line in _acceptance_lines:
        terminalreporter.write_line(line)
