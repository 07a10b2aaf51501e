import numpy as np
import pytest

from vectro import pv
from vectro.text import synth_corpus


@pytest.fixture(scope="session")
def toy_corpus():
    return synth_corpus(30, 12, (40, 70), 0.5, seed=3)


@pytest.fixture(scope="session")
def toy_models(toy_corpus):
    """One small trained model per kind (D=30, d=8, nu=2)."""
    return {kind: pv.train(toy_corpus, pv.PvConfig(kind, 30, 8, 2, 0.1), seed=1, epochs=4)
            for kind in pv.KINDS}


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# ---------------------------------------------------------------- acceptance summary

_acceptance = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("acceptance")
    if mark is None:
        return
    number, title = mark.args
    detail = getattr(item, "acceptance_detail", "")
    if rep.when == "call" or (rep.when == "setup" and rep.failed):
        _acceptance[number] = ("PASS" if rep.passed else "FAIL", title, detail)


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_acceptance):
        status, title, detail = _acceptance[number]
        line = f"criterion {number:2d}: {status}  {title}"
        terminalreporter.write_line(line + (f"  [{detail}]" if detail else ""))


@pytest.fixture
def report(request):
    """Attach a one-line detail to the acceptance summary (also printed)."""
    def _set(text):
        request.node.acceptance_detail = text
        print(text)
    return _set
