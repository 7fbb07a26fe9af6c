import logging
import sys
from importlib import resources
from pathlib import Path

import pytest

HERE = Path(__file__).parent
sys.path.insert(0, str(HERE))  # randprog

from semtrans.pipeline import parse_tests, transform  # noqa: E402
from semtrans.syntax import parse_program  # noqa: E402

CORPUS = ("cbv", "factorial", "cbn", "nbe")
GOLDEN = HERE / "golden"


def corpus_path(name: str, ext: str = "sem") -> Path:
    return Path(str(resources.files("semtrans") / "corpus" / f"{name}.{ext}"))


def corpus_text(name: str, ext: str = "sem") -> str:
    return corpus_path(name, ext).read_text(encoding="utf-8")


def golden(name: str):
    return parse_program((GOLDEN / f"{name}.sem").read_text(encoding="utf-8"))


_pipelines: dict = {}


def pipeline(name: str):
    """Full pipeline result for a corpus program, computed once per session."""
    if name not in _pipelines:
        _pipelines[name] = transform(corpus_text(name))
    return _pipelines[name]


def checks(name: str):
    return parse_tests(corpus_text(name, "tests"))


@pytest.fixture(params=CORPUS)
def corpus_name(request):
    return request.param


@pytest.fixture(autouse=True)
def _quiet_warnings(caplog):
    caplog.set_level(logging.ERROR, logger="semtrans")


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    results = getattr(module, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for n in sorted(results):
            terminalreporter.write_line(results[n])
