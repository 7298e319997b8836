import sys


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    results = getattr(module, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for index in sorted(results):
        res = results[index]
        terminalreporter.write_line(f"criterion {index}: {'PASS' if res.passed else 'FAIL'}  {res.name}")
