import pytest

# criterion id -> (passed, detail); filled by test_acceptance
ACCEPTANCE: dict[str, tuple[bool, str]] = {}


@pytest.fixture
def acceptance_report():
    return ACCEPTANCE


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")

    def order(k):
        num = k.rstrip("abc")
        return (int(num), k) if num.isdigit() else (99, k)

    for key in sorted(ACCEPTANCE, key=order):
        ok, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"{key:<8} {'PASS' if ok else 'FAIL'}  {detail}")
