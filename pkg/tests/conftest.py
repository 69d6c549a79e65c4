from pathlib import Path

import pytest

from hlweave.advice import parse_aspect_file
from hlweave.syntax import parse
from hlweave.weaver import emit, pre_weave, weave

CORPUS = Path(__file__).parent / "corpus"


def corpus_text(name: str) -> str:
    return (CORPUS / name).read_text(encoding="utf-8")


def load(name: str):
    return pre_weave(parse(corpus_text(name), str(CORPUS / name)), filename=str(CORPUS / name))


def aspects(name: str):
    return parse_aspect_file(corpus_text(name), name)


def woven(source: str, aspect_file: str):
    return emit(weave(load(source), aspects(aspect_file)))


@pytest.fixture
def corpus():
    return CORPUS


_ACCEPTANCE: list[tuple[str, str]] = []


def pytest_runtest_logreport(report):
    if report.when == "call" and "test_acceptance.py::" in report.nodeid:
        _ACCEPTANCE.append((report.nodeid.split("::")[-1], report.outcome))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome in sorted(_ACCEPTANCE):
        number = name.split("_")[2]
        verdict = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"criterion {number}: {verdict}  {name}")
