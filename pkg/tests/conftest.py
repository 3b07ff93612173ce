"""Collects one verdict line per acceptance criterion for the terminal summary."""
import pytest

_VERDICTS: dict[int, str] = {}


@pytest.fixture
def verdict():
    def record(n: int, ok: bool | None, detail: str = "") -> None:
        word = "SKIP" if ok is None else "PASS" if ok else "FAIL"
        line = f"criterion {n}: {word}" + (f"  {detail}" if detail else "")
        _VERDICTS[n] = line
        print(line)

    return record


def pytest_terminal_summary(terminalreporter):
    if _VERDICTS:
        terminalreporter.write_sep("=", "acceptance criteria")
        for n in sorted(_VERDICTS):
            terminalreporter.write_line(_VERDICTS[n])
