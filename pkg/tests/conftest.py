"""Shared pytest wiring for the acceptance gates.

Gate verdicts collect in a module-level registry and print in the
terminal summary, so the [ACCEPT] lines survive output capture no
matter which capture mode the run uses.
"""

ACCEPTANCE_GATES = []


def record_gate(name: str, ok: bool, detail: str = "") -> None:
    ACCEPTANCE_GATES.append((name, bool(ok), detail))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_GATES:
        return
    terminalreporter.section("acceptance gates")
    for name, ok, detail in ACCEPTANCE_GATES:
        line = f"[ACCEPT] {name} {'PASS' if ok else 'FAIL'}"
        if detail:
            line += f"  ({detail})"
        terminalreporter.write_line(line)
