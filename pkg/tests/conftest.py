from __future__ import annotations


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import SUMMARY

    if SUMMARY:
        terminalreporter.section("acceptance summary")
        for k in sorted(SUMMARY):
            terminalreporter.write_line(SUMMARY[k])
