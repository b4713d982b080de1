import json

import httpx
import pytest

from kgscope.errors import KGScopeError, RenderError, ScriptMissError, TagParseError, TransportError
from kgscope.llm import (
    TEMPLATE_IDS,
    Catalog,
    ChatRequest,
    Gateway,
    HttpChatProvider,
    PromptTemplate,
    RecordingProvider,
    RuleProvider,
    ScriptedProvider,
    default_catalog,
    fingerprint,
    parse_tagged,
    render,
)
from kgscope.llm.catalog import PLACEHOLDER

JUDGE = {"QUESTION": "q", "GOLD": "g", "PREDICTION": "p"}


def test_catalog_has_every_template():
    cat = default_catalog()
    for tid in TEMPLATE_IDS:
        assert tid in cat
        assert cat.get(tid).skeleton.strip()


def test_sft_judge_is_the_evaluation_critic():
    cat = default_catalog()
    assert cat.get("sft.judge") is cat.get("judge.crag")


def test_required_placeholders():
    cat = default_catalog()
    assert cat.get("summarize.cot").required_placeholders == {"QUERY_TIME", "QUESTION", "CONTENT"}
    assert cat.get("judge.head2tail").required_placeholders == {"QUESTION", "GOLD", "PREDICTION"}
    assert cat.get("filter.hop_boundary").required_placeholders == {"KG_NAME", "REMINDER", "QUESTION", "TRIPLES"}


@pytest.mark.parametrize("tid", TEMPLATE_IDS)
def test_full_binding_leaves_no_markers(tid):
    tpl = default_catalog().get(tid)
    text = tpl.render({name: f"value of {name.lower()}" for name in tpl.required_placeholders})
    assert not PLACEHOLDER.search(text)


def test_missing_binding_is_named():
    with pytest.raises(RenderError, match="GOLD, PREDICTION"):
        default_catalog().get("judge.crag").render({"QUESTION": "q"})


def test_bound_text_is_not_re_expanded():
    tpl = PromptTemplate("t", "A <<X>> B <<Y>>")
    assert render(tpl, {"X": "<<Y>>", "Y": "y"}) == "A <<Y>> B y"


def test_unknown_template():
    with pytest.raises(RenderError):
        default_catalog().get("nope")


def test_provider_variant_wins(tmp_path):
    (tmp_path / "judge.crag.txt").write_text("base <<QUESTION>>\n")
    (tmp_path / "judge.crag@small.txt").write_text("tuned <<QUESTION>>\n")
    cat = Catalog.load(tmp_path)
    assert cat.get("judge.crag").render({"QUESTION": "x"}) == "base x"
    assert cat.get("judge.crag", "small").render({"QUESTION": "x"}) == "tuned x"
    assert cat.get("judge.crag", "other").render({"QUESTION": "x"}) == "base x"
    gw = Gateway(RuleProvider({}, default="ok"), cat, variant="small")
    assert gw.render(gw.request("judge.crag", QUESTION="x")) == "tuned x"


def test_fingerprint_stability():
    gw = Gateway(RuleProvider({}, default="ok"))
    a = gw.fingerprint(gw.request("judge.crag", **JUDGE))
    b = gw.fingerprint(ChatRequest("judge.crag", dict(JUDGE), temperature=0.7))
    assert a == b == fingerprint("judge.crag", gw.render(gw.request("judge.crag", **JUDGE)))
    assert a != gw.fingerprint(gw.request("judge.crag", **{**JUDGE, "GOLD": "h"}))
    assert len(a) == 64


def test_default_temperature_is_zero():
    assert ChatRequest("judge.crag").temperature == 0.0
    assert Gateway(RuleProvider({}, default="")).request("judge.crag", **JUDGE).temperature == 0.0


def test_scripted_hit_and_strict_miss():
    gw = Gateway(ScriptedProvider({}))
    fp = gw.fingerprint(gw.request("judge.crag", **JUDGE))
    gw.provider = ScriptedProvider({fp: '{"score": 1}'})
    assert gw.ask("judge.crag", **JUDGE) == '{"score": 1}'
    with pytest.raises(ScriptMissError) as info:
        gw.ask("judge.crag", **{**JUDGE, "GOLD": "other"})
    assert info.value.template_id == "judge.crag"


def test_lenient_miss_falls_back():
    provider = ScriptedProvider({}, strict=False)
    gw = Gateway(provider)
    assert gw.ask("judge.crag", **JUDGE) == "I don't know"
    assert len(provider.misses) == 1


def test_script_file_roundtrip(tmp_path):
    rec = RecordingProvider(RuleProvider({"judge.crag": lambda p, r: "score " + r.bindings["GOLD"]}))
    gw = Gateway(rec)
    for g in "abc":
        gw.ask("judge.crag", **{**JUDGE, "GOLD": g})
    path = tmp_path / "script.jsonl"
    rec.dump(path)
    lines = [json.loads(x) for x in path.read_text().splitlines()]
    assert [x["fingerprint"] for x in lines] == sorted(x["fingerprint"] for x in lines)
    replay = Gateway(ScriptedProvider.from_file(path))
    assert [replay.ask("judge.crag", **{**JUDGE, "GOLD": g}) for g in "abc"] == ["score a", "score b", "score c"]


class Flaky(RuleProvider):
    def __init__(self, failures):
        super().__init__({}, default="fine")
        self.failures = failures
        self.calls = 0

    def generate(self, prompt, request, fp):
        self.calls += 1
        if self.calls <= self.failures:
            raise TransportError("down")
        return super().generate(prompt, request, fp)


def test_one_retry_on_transport_error():
    p = Flaky(1)
    assert Gateway(p).ask("judge.crag", **JUDGE) == "fine"
    assert p.calls == 2
    p = Flaky(2)
    with pytest.raises(TransportError):
        Gateway(p).ask("judge.crag", **JUDGE)
    assert p.calls == 2


def test_request_log(tmp_path, monkeypatch):
    path = tmp_path / "requests.jsonl"
    monkeypatch.setenv("KGSCOPE_REQUEST_LOG", str(path))
    gw = Gateway(RuleProvider({}, default="x"))
    gw.ask("judge.crag", **JUDGE)
    gw.ask("judge.head2tail", **JUDGE)
    recs = [json.loads(x) for x in path.read_text().splitlines()]
    assert [r["template_id"] for r in recs] == ["judge.crag", "judge.head2tail"]
    assert set(recs[0]) == {"fingerprint", "template_id", "bytes", "latency", "temperature"}
    assert "prompt" in gw.log[0]


def test_rule_provider_without_rule():
    with pytest.raises(KGScopeError):
        Gateway(RuleProvider({})).ask("judge.crag", **JUDGE)


def test_http_provider_wire_format():
    seen = {}

    def handler(request):
        seen["url"] = str(request.url)
        seen["auth"] = request.headers.get("authorization")
        seen["body"] = json.loads(request.content)
        return httpx.Response(200, json={"choices": [{"message": {"content": "Paris"}}]})

    client = httpx.Client(transport=httpx.MockTransport(handler))
    gw = Gateway(HttpChatProvider("http://llm.test/v1", "m1", "tok", client=client))
    assert gw.ask("judge.crag", **JUDGE) == "Paris"
    assert seen["url"] == "http://llm.test/v1/chat/completions"
    assert seen["auth"] == "Bearer tok"
    assert seen["body"]["model"] == "m1" and seen["body"]["temperature"] == 0.0
    assert seen["body"]["messages"][0]["content"].endswith("Prediction: p")


def test_http_provider_server_error_retried():
    calls = []

    def handler(request):
        calls.append(1)
        return httpx.Response(503) if len(calls) == 1 else httpx.Response(
            200, json={"choices": [{"message": {"content": "ok"}}]})

    client = httpx.Client(transport=httpx.MockTransport(handler))
    assert Gateway(HttpChatProvider("http://llm.test", "m", client=client)).ask("judge.crag", **JUDGE) == "ok"
    assert len(calls) == 2


def test_http_provider_needs_env(monkeypatch):
    monkeypatch.delenv("KGSCOPE_LLM_ENDPOINT", raising=False)
    with pytest.raises(KGScopeError):
        HttpChatProvider.from_env()


@pytest.mark.parametrize("text, tag", [
    ("<YES>", "YES"),
    ("reasoning ... <NO> then <YES>", "NO"),
    ("<NA> the entity is wrong", "NA"),
    ("I think <YES>.", "YES"),
])
def test_parse_tagged(text, tag):
    assert parse_tagged(text, ["<YES>", "<NO>", "<NA>"]) == tag


@pytest.mark.parametrize("text", ["", "yes", "<yes>", "YES", "<MAYBE>"])
def test_parse_tagged_failures(text):
    with pytest.raises(TagParseError):
        parse_tagged(text, ["YES", "NO", "NA"])
