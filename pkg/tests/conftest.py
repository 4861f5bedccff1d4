def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(RESULTS, key=lambda k: int(k[1:])):
        ok, detail = RESULTS[key]
        terminalreporter.write_line(f"{key:<4} {'PASS' if ok else 'FAIL'}  {detail}")
