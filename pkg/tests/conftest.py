import os
from collections import OrderedDict

import pytest

from filphin import instancegen as ig

FIXTURES = os.path.join(os.path.dirname(__file__), "fixtures")

CRITERIA = {
    1: "planted recovery on the 500-instance corpus",
    2: "two-path product equality on all corpus groups",
    3: "extension-class identity on all 500 instances",
    4: "rank-one dimension laws (st / cris / phi=1)",
    5: "five-step filtration closed form",
    6: "w_ranks shape (generic and degenerate)",
    7: "basis-change and scaling invariance",
    8: "single-field mutation per axiom (a)-(f)",
    9: "fixture values",
    10: "CLI structured-report determinism on the corpus",
}

_outcomes = OrderedDict((k, []) for k in CRITERIA)


def fixture_path(name: str) -> str:
    return os.path.join(FIXTURES, name)


@pytest.fixture(scope="session")
def corpus_groups():
    return ig.corpus()


@pytest.fixture(scope="session")
def corpus_modules(corpus_groups):
    """``[(group, [(spec, M), ...]), ...]`` generated once per session."""
    return [(g, [(s, ig.generate(s)) for s in g.specs]) for g in corpus_groups]


@pytest.fixture(scope="session")
def corpus_flat(corpus_modules):
    return [(s, M, g.m) for g, items in corpus_modules for s, M in items]


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if rep.when == "call" or (rep.when == "setup" and rep.outcome != "passed"):
        _outcomes[marker.args[0]].append((item.name, rep.outcome))


def pytest_terminal_summary(terminalreporter):
    if not any(_outcomes.values()):
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for k, desc in CRITERIA.items():
        results = _outcomes[k]
        if not results:
            tr.write_line("criterion %2d: NOT RUN  %s" % (k, desc))
            continue
        failed = [name for name, o in results if o != "passed"]
        status = "PASS" if not failed else "FAIL"
        line = "criterion %2d: %s  %s (%d/%d)" % (k, status, desc, len(results) - len(failed), len(results))
        if failed:
            line += "  failing: " + ", ".join(failed)
        tr.write_line(line)
