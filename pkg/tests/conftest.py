_CRITERIA: dict[str, list[bool]] = {}


def pytest_runtest_makereport(item, call):
    mark = item.get_closest_marker("criterion")
    if mark is None or call.when != "call":
        return
    _CRITERIA.setdefault(str(mark.args[0]), []).append(call.excinfo is None)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")

    def key(label):
        num = "".join(ch for ch in label if ch.isdigit())
        return (int(num) if num else 0, label)

    for label in sorted(_CRITERIA, key=key):
        ok = all(_CRITERIA[label])
        terminalreporter.write_line(f"criterion {label:>3}: {'PASS' if ok else 'FAIL'}")
