def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key, _, _ in mod.CRITERIA:
        terminalreporter.write_line(mod.RESULTS.get(key, f"{key}: NOT RUN"))
