from pathlib import Path

import pytest

from kgscope.kg import ApiBackend, load_fixture
from kgscope.llm import Gateway
from kgscope.testing import toy_provider

DATA = Path(__file__).resolve().parents[1] / "src" / "kgscope" / "data"
QT = "03/01/2024, 10:00:00 PT"
FIXTURES = ("movie_small.kg", "movie.kg", "music.kg", "sports.kg")


@pytest.fixture(scope="session")
def data_dir():
    return DATA


@pytest.fixture(scope="session")
def small():
    return load_fixture(DATA / "movie_small.kg")


@pytest.fixture(scope="session")
def movie():
    return load_fixture(DATA / "movie.kg")


@pytest.fixture(scope="session")
def finance():
    return ApiBackend.from_file(DATA / "finance_api.json")


@pytest.fixture
def toy_gateway(movie):
    return Gateway(toy_provider(movie[1]))


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("tests.test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        terminalreporter.write_line(results[n])
    if 9 not in results:
        terminalreporter.write_line("criterion 9: SKIPPED - optional live provider (set KGSCOPE_LLM_ENDPOINT)")
