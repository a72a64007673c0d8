import re
from collections import OrderedDict

CRITERIA = OrderedDict(
    [
        (1, "1D rigid limit vs cosh cos + 1 = 0"),
        (2, "1D semi-rigid sweep vs oracle"),
        (3, "quarter-star matrix and factorization"),
        (4, "antenna symmetry sectors"),
        (5, "planar out/in decoupling"),
        (6, "scalar decomposition"),
        (7, "maximal rank of vertex blocks"),
        (8, "symmetry and positivity of K"),
        (9, "rigid-limit continuity"),
        (10, "local basis identities"),
    ]
)

_PATTERN = re.compile(r"test_acceptance\.py::test_c(\d+)_")
_results: dict[int, list[bool]] = {}


def pytest_runtest_logreport(report):
    m = _PATTERN.search(report.nodeid)
    if not m:
        return
    if report.when == "call" or (report.when == "setup" and not report.passed):
        _results.setdefault(int(m.group(1)), []).append(report.passed)


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for n, title in CRITERIA.items():
        got = _results.get(n)
        status = "NOT RUN" if got is None else ("PASS" if all(got) else "FAIL")
        terminalreporter.write_line(f"criterion {n:2d}: {status:7s} {title}")
