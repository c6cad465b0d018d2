import pytest

_ACCEPTANCE: list[tuple[float, str]] = []


class AcceptanceLog:
    def record(self, number: int, name: str, ok: bool, detail: str) -> str:
        line = f"criterion {number:>2} {'PASS' if ok else 'FAIL'}  {name}: {detail}"
        _ACCEPTANCE.append((number, line))
        print(line)
        return line

    def info(self, number: int, text: str) -> None:
        line = f"criterion {number:>2} info  {text}"
        _ACCEPTANCE.append((number + 0.5, line))
        print(line)


@pytest.fixture(scope="session")
def acceptance_log():
    return AcceptanceLog()


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(_ACCEPTANCE, key=lambda x: x[0]):
            terminalreporter.write_line(line)
