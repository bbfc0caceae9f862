import sys
import pathlib

sys.path.insert(0, str(pathlib.Path(__file__).parent))

# acceptance criterion -> (passed, detail); filled by test_acceptance.py
CRITERIA: dict[str, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for name, (ok, detail) in CRITERIA.items():
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
