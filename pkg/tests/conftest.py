import pathlib

import pytest

CONFIG_DIR = pathlib.Path(__file__).resolve().parent.parent / "configs"

# (number, name, passed, detail) tuples appended by the acceptance tests;
# echoed at the end of the run so there is one verdict line per criterion
# even when pytest captures stdout.
ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def config_dir() -> pathlib.Path:
    return CONFIG_DIR


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for num, name, ok, detail in sorted(ACCEPTANCE_LINES):
        mark = "PASS" if ok else "FAIL"
        terminalreporter.write_line(f"[{mark}] criterion {num:2d} ({name}): {detail}")
