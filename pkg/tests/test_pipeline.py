import json

import pytest

from kgscope.errors import TransportError
from kgscope.llm import Gateway, RuleProvider
from kgscope.pipeline import Pipeline, PipelineConfig, answer_question
from kgscope.planner import PlannerConfig
from kgscope.testing import toy_provider

from .conftest import QT


@pytest.mark.parametrize("question, hops, answer", [
    ("Which of Patty Ross's films had the highest box office?", 2, "Harbor Lights"),
    ("Which movie directed by Hugo Brandt had the highest box office?", 2, "Paper Moons"),
    ("Where was Lena Fox born?", 1, "Oslo"),
    ("When was Patty Ross born?", 1, "1971-04-12"),
    ("Who is Dean Marsh married to?", 1, "Marta Kell"),
])
def test_toy_questions(movie, question, hops, answer):
    _, backend = movie
    result = Pipeline(backend, Gateway(toy_provider(backend))).answer(question, QT)
    assert result.plan.hops == hops and result.answer.text == answer and not result.answer.is_missing


def test_one_hop_limit_misses_two_hop_answer(movie):
    _, backend = movie
    cfg = PipelineConfig(PlannerConfig(max_hops=1))
    result = Pipeline(backend, Gateway(toy_provider(backend)), cfg).answer(
        "Which of Patty Ross's films had the highest box office?", QT)
    assert result.answer.is_missing and result.plan.hops == 1


def test_planning_failure_becomes_missing(movie):
    _, backend = movie
    gw = Gateway(RuleProvider({"planning.entity_domain": lambda p, r: "no json"}))
    result = Pipeline(backend, gw).answer("anything?", QT)
    assert result.answer.is_missing and result.plan is None and result.reason == "planning:parse"


def test_summarizer_failure_becomes_missing(movie):
    _, backend = movie
    rules = toy_provider(backend).rules

    def down(p, r):
        raise TransportError("down")

    gw = Gateway(RuleProvider({**rules, "summarize.cot": down}))
    result = answer_question("Where was Lena Fox born?", QT, backend, gw)
    assert result.answer.is_missing and result.plan is not None


def test_every_request_uses_temperature_zero(movie, tmp_path, monkeypatch):
    log = tmp_path / "requests.jsonl"
    monkeypatch.setenv("KGSCOPE_REQUEST_LOG", str(log))
    _, backend = movie
    Pipeline(backend, Gateway(toy_provider(backend))).answer("Where was Lena Fox born?", QT)
    records = [json.loads(x) for x in log.read_text().splitlines()]
    assert len(records) >= 4
    assert {r["temperature"] for r in records} == {0.0}


def test_api_backend_question(finance):
    gw = Gateway(toy_provider(finance))
    result = Pipeline(finance, gw).answer("What is the market capitalization of XYZ?", QT)
    assert result.answer.text == "1250000000"
