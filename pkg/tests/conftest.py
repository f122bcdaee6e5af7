from __future__ import annotations

import warnings

import pytest

from bpetok import TrainerConfig, train_bpe
from bpetok.synthetic import desk_corpus


@pytest.fixture(scope="session")
def small_corpus():
    return desk_corpus(150_000, seed=7, lexicon_size=1500)


@pytest.fixture(scope="session")
def small_model(small_corpus):
    return train_bpe(small_corpus, TrainerConfig(vocabulary_size=1024))


@pytest.fixture(scope="session")
def prose_model():
    """A model trained without newlines, tabs or emoji in its corpus."""
    texts = ["It was a humid, grey summer day at the end of June.",
             "Det var en fuktig, grå sommardag i slutet av juni.",
             "Swedish and Norwegian are close; Icelandic is further away."] * 20
    # merges run out before 512; every merge is kept and the size shrinks
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return train_bpe(texts, TrainerConfig(vocabulary_size=512))


# -- acceptance summary: one PASS/FAIL line per criterion ---------------------

_CRITERIA: dict[int, tuple[str, str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, name): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or not (rep.when == "call" or rep.failed):
        return
    number, name = marker.args
    detail = "; ".join(str(v) for k, v in item.user_properties if k == "detail")
    status = "PASS" if rep.passed else "FAIL"
    if number not in _CRITERIA or status == "FAIL":
        _CRITERIA[number] = (name, status, detail)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        name, status, detail = _CRITERIA[number]
        line = f"criterion {number:>2} {status}  {name}"
        terminalreporter.write_line(line + (f"  [{detail}]" if detail else ""))
