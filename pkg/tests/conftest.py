import sys
from contextlib import contextmanager
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

_CRITERIA: dict[str, str] = {}


class _Criterion:
    def __init__(self, name, title):
        self.name, self.title, self.details = name, title, []

    def note(self, text):
        self.details.append(str(text))


@pytest.fixture
def criterion():
    """Record one PASS/FAIL line per acceptance criterion."""
    @contextmanager
    def open_criterion(name, title):
        c = _Criterion(name, title)
        ok = False
        try:
            yield c
            ok = True
        finally:
            detail = "; ".join(c.details)
            line = f"{name} {'PASS' if ok else 'FAIL'}: {title}" + (f" [{detail}]" if detail else "")
            _CRITERIA[name] = line
            print(line)
    return open_criterion


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for name in sorted(_CRITERIA):
            terminalreporter.write_line(_CRITERIA[name])
