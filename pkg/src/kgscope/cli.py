"""Command-line interface: ask, batch, eval, sft, ablate.

Exit codes: 0 success, 2 usage/config, 3 data error, 4 infrastructure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .errors import (
    ArgumentError,
    FixtureFormatError,
    KGScopeError,
    RegistryError,
    RetrievalError,
    ScriptMissError,
    TransportError,
    ValidationError,
)
from .evalkit import STYLES, aggregate, evaluate
from .kg.api import ApiBackend
from .kg.backend import Backend
from .kg.fixture import load_fixture
from .kg.sparql import SparqlBackend
from .llm.gateway import Gateway, HttpChatProvider, Provider, RecordingProvider, ScriptedProvider
from .pipeline import Pipeline, PipelineConfig, PipelineResult
from .planner.core import FILTER_MODES, PlannerConfig
from .sft import build_sft_dataset
from .summarizer import Answer
from .timeutil import parse_query_time

log = logging.getLogger("kgscope")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INFRA = 0, 2, 3, 4
MAX_HOPS_LIMIT = 3
VARIANTS = {"multihop": "-multihop", "filter": "-filter", "cot": "-CoT"}


class UsageError(KGScopeError):
    pass


class DataError(KGScopeError):
    pass


@dataclass
class RunConfig:
    backend: str
    provider: str = "toy"
    filter_mode: str = "llm"
    max_hops: int = 3
    top_k: int = 30
    mode: str = "cot"
    multi_entity: bool = False
    strict_evidence: bool = True
    out: str = "kgscope-out"
    ontology: str | None = None
    judge_style: str = "crag"
    workers: int = field(default_factory=lambda: os.cpu_count() or 1)
    record: str | None = None
    trace: bool = False

    def __post_init__(self):
        if not self.backend:
            raise UsageError("a backend spec is required")
        if not 1 <= self.max_hops <= MAX_HOPS_LIMIT:
            raise UsageError(f"--max-hops must be in [1, {MAX_HOPS_LIMIT}]")
        if self.filter_mode not in FILTER_MODES:
            raise UsageError(f"--filter-mode must be one of {', '.join(FILTER_MODES)}")
        if self.mode not in ("cot", "plain"):
            raise UsageError("--mode must be cot or plain")
        if self.top_k < 1 or self.workers < 1:
            raise UsageError("--top-k and --workers must be >= 1")

    def pipeline_config(self) -> PipelineConfig:
        planner = PlannerConfig(max_hops=self.max_hops, filter_mode=self.filter_mode, top_k=self.top_k,
                                multi_entity=self.multi_entity)
        return PipelineConfig(planner, self.mode, self.strict_evidence)


def ablation_configs(base: RunConfig, variants) -> dict[str, RunConfig]:
    """Baseline plus one effective config per requested variant."""
    names = []
    for v in variants:
        key = v.strip().lstrip("-").lower()
        if key not in VARIANTS:
            raise UsageError(f"unknown ablation variant {v!r}; choose from {', '.join(VARIANTS.values())}")
        names.append(key)
    if not names:
        raise UsageError("at least one ablation variant is required")
    out = {"baseline": base}
    for key in dict.fromkeys(names):
        if key == "multihop":
            out[VARIANTS[key]] = dataclasses.replace(base, max_hops=1)
        elif key == "filter":
            out[VARIANTS[key]] = dataclasses.replace(base, filter_mode="none")
        else:
            out[VARIANTS[key]] = dataclasses.replace(base, mode="plain")
    return out


def open_backend(spec: str, ontology_path: str | None = None) -> Backend:
    kind, sep, target = spec.partition(":")
    if not sep or kind not in ("fixture", "sparql", "api"):
        kind, target = _infer_backend(spec), spec
    if kind == "fixture":
        return load_fixture(target)[1]
    if kind == "api":
        return ApiBackend.from_file(target)
    if not ontology_path:
        raise UsageError("a SPARQL backend needs --ontology FIXTURE (its [ontology] section is used)")
    ontology, _ = load_fixture(ontology_path)
    return SparqlBackend(target, ontology)


def _infer_backend(spec: str) -> str:
    if spec.startswith(("http://", "https://")):
        return "sparql"
    if spec.endswith(".json"):
        return "api"
    if spec.endswith(".kg"):
        return "fixture"
    raise UsageError(f"cannot infer the backend kind of {spec!r}; prefix it with fixture:, sparql: or api:")


def open_provider(spec: str, backend: Backend) -> Provider:
    kind, _, rest = spec.partition(":")
    if kind == "toy":
        from .testing import toy_provider

        return toy_provider(backend)
    if kind == "http":
        return HttpChatProvider.from_env()
    if kind == "scripted":
        path, _, flag = rest.rpartition(":") if rest.endswith((":lenient", ":strict")) else (rest, "", "strict")
        if not path:
            raise UsageError("scripted provider needs a path: scripted:FILE[:strict|:lenient]")
        try:
            return ScriptedProvider.from_file(path, strict=flag != "lenient")
        except (OSError, ValueError, KeyError) as exc:
            raise DataError(f"cannot read script {path}: {exc}") from exc
    raise UsageError(f"unknown provider {spec!r}; use toy, http or scripted:FILE")


def read_records(path: str | os.PathLike, what: str = "record") -> list[dict]:
    out, ids = [], set()
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except ValueError as exc:
            raise DataError(f"{path}:{lineno}: bad {what}: {exc}") from exc
        if "id" not in rec:
            raise DataError(f"{path}:{lineno}: {what} has no id")
        rec["id"] = str(rec["id"])
        if rec["id"] in ids:
            raise DataError(f"{path}:{lineno}: duplicate id {rec['id']!r}")
        ids.add(rec["id"])
        if rec.get("query_time"):
            try:
                parse_query_time(rec["query_time"])
            except ValueError as exc:
                raise DataError(f"{path}:{lineno}: {exc}") from exc
        out.append(rec)
    return out


def write_jsonl(path: Path, records):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec, ensure_ascii=False, sort_keys=True) + "\n")


def answer_record(qid: str, result: PipelineResult) -> dict:
    return {
        "id": qid,
        "answer": result.answer.text,
        "is_missing": result.answer.is_missing,
        "plan": result.plan.summary() if result.plan else None,
        "hops": result.plan.hops if result.plan else None,
        "triples": result.triple_count,
        "reason": result.reason or result.answer.error or "",
        "seconds": round(result.seconds, 6),
    }


class Runner:
    """Backend, provider and gateway opened once per command."""

    def __init__(self, config: RunConfig):
        self.config = config
        self.backend = open_backend(config.backend, config.ontology)
        provider = open_provider(config.provider, self.backend)
        self.recorder = RecordingProvider(provider) if config.record else None
        self.gateway = Gateway(self.recorder or provider)

    def pipeline(self, config: RunConfig | None = None) -> Pipeline:
        return Pipeline(self.backend, self.gateway, (config or self.config).pipeline_config())

    def run_batch(self, questions: list[dict], config: RunConfig | None = None) -> list[dict]:
        pipe = self.pipeline(config)

        def one(q):
            return answer_record(q["id"], pipe.answer(q["query"], q.get("query_time", "")))

        with ThreadPoolExecutor(max_workers=self.config.workers) as pool:
            return list(pool.map(one, questions))

    def evaluate(self, answers: list[dict], gold: list[dict]):
        by_id = {g["id"]: g for g in gold}
        missing = [a["id"] for a in answers if a["id"] not in by_id]
        if missing:
            raise DataError(f"answers without gold: {', '.join(missing)}")

        def one(a):
            g = by_id[a["id"]]
            answer = Answer(a.get("answer", ""), bool(a.get("is_missing", False)))
            return evaluate(a["id"], g["query"], str(g.get("gold", "")), answer, self.config.judge_style,
                            self.gateway, g.get("split") or "unsplit")

        with ThreadPoolExecutor(max_workers=self.config.workers) as pool:
            verdicts = list(pool.map(one, answers))
        return verdicts, aggregate(verdicts)

    def finish(self):
        if self.recorder is not None:
            Path(self.config.record).parent.mkdir(parents=True, exist_ok=True)
            self.recorder.dump(self.config.record)


def write_eval(out: Path, verdicts, report, title: str = ""):
    write_jsonl(out / "verdicts.jsonl", [v.to_dict() for v in verdicts])
    (out / "report.txt").write_text(report.to_text(title), encoding="utf-8")
    (out / "report.jsonl").write_text(report.to_jsonl(), encoding="utf-8")


def cmd_ask(config: RunConfig, args) -> int:
    runner = Runner(config)
    if args.query_time:
        try:
            parse_query_time(args.query_time)
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
    result = runner.pipeline().answer(args.question, args.query_time or "")
    runner.finish()
    print(f"answer: {result.answer.text}" + ("  [missing]" if result.answer.is_missing else ""))
    print(f"plan: {result.plan.summary() if result.plan else 'none (' + result.reason + ')'}")
    print(f"triples: {result.triple_count}")
    if config.trace and result.evidence is not None:
        for line in result.evidence.lines:
            print(f"  {line}")
        if result.answer.reasoning:
            print("reasoning:\n" + result.answer.reasoning)
    return EXIT_OK


def cmd_batch(config: RunConfig, args) -> int:
    runner = Runner(config)
    questions = read_records(args.questions, "question")
    records = runner.run_batch(questions)
    runner.finish()
    out = Path(config.out)
    write_jsonl(out / "answers.jsonl", records)
    missing = sum(r["is_missing"] for r in records)
    print(f"{len(records)} answers written to {out / 'answers.jsonl'} ({missing} missing)")
    return EXIT_OK


def cmd_eval(config: RunConfig, args) -> int:
    runner = Runner(config)
    answers = read_records(args.answers, "answer")
    gold = read_records(args.gold, "gold record")
    verdicts, report = runner.evaluate(answers, gold)
    runner.finish()
    out = Path(config.out)
    write_eval(out, verdicts, report)
    print(report.to_text(), end="")
    return EXIT_OK


def cmd_sft(config: RunConfig, args) -> int:
    runner = Runner(config)
    items = read_records(args.training, "training question")
    pipe = runner.pipeline()

    def evidence_for(item):
        return pipe.evidence(item["query"], item.get("query_time", ""))[2]

    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        stats = build_sft_dataset(items, evidence_for, runner.gateway, out / "sft.jsonl", config.workers)
    except ValueError as exc:
        raise DataError(str(exc)) from exc
    runner.finish()
    print(json.dumps(stats.to_dict(), sort_keys=True))
    return EXIT_OK


def cmd_ablate(config: RunConfig, args) -> int:
    variants = [v for v in (args.variants or "").split(",") if v.strip()]
    configs = ablation_configs(config, variants)
    runner = Runner(config)
    questions = read_records(args.questions, "question")
    out = Path(config.out)
    rows = []
    for name, cfg in configs.items():
        records = runner.run_batch(questions, cfg)
        verdicts, report = runner.evaluate(records, questions)
        sub = out / name.lstrip("-")
        write_jsonl(sub / "answers.jsonl", records)
        write_eval(sub, verdicts, report, name)
        g = report.overall
        rows.append((name, g, sum(r["triples"] for r in records)))
    runner.finish()
    lines = [f"{'variant':<10}{'n':>5}{'Accu.':>8}{'Hall.':>8}{'Miss.':>8}{'Truth.':>8}{'triples':>9}"]
    for name, g, triples in rows:
        if g is None:
            lines.append(f"{name:<10}{0:>5}")
            continue
        lines.append(f"{name:<10}{g.n:>5}{g.A:>8.3f}{g.H:>8.3f}{g.M:>8.3f}{g.T:>8.3f}{triples:>9}")
    text = "\n".join(lines) + "\n"
    out.mkdir(parents=True, exist_ok=True)
    (out / "ablation.txt").write_text(text, encoding="utf-8")
    print(text, end="")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--backend", required=True,
                        help="fixture:PATH, sparql:URL, api:PATH (kind inferred from .kg/.json/http)")
    common.add_argument("--ontology", help="fixture whose [ontology] section describes a SPARQL backend")
    common.add_argument("--provider", default="toy", help="toy | http | scripted:FILE[:strict|:lenient]")
    common.add_argument("--filter-mode", default="llm", choices=FILTER_MODES)
    common.add_argument("--max-hops", type=int, default=3)
    common.add_argument("--top-k", type=int, default=30)
    common.add_argument("--mode", default="cot", choices=("cot", "plain"))
    common.add_argument("--multi-entity", action="store_true")
    common.add_argument("--strict-evidence", action=argparse.BooleanOptionalAction, default=True)
    common.add_argument("--judge-style", default="crag", choices=sorted(STYLES))
    common.add_argument("--out", default="kgscope-out", help="output directory")
    common.add_argument("--workers", type=int, default=os.cpu_count() or 1)
    common.add_argument("--record", help="write every model reply to this script file for strict replay")
    common.add_argument("--trace", action="store_true")
    common.add_argument("-v", "--verbose", action="count", default=0)

    parser = argparse.ArgumentParser(prog="kgscope", description="Knowledge-graph question answering pipeline.")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("ask", parents=[common], help="answer one question")
    p.add_argument("question")
    p.add_argument("--query-time", default="", help="MM/DD/YYYY, HH:MM:SS TZ")
    p.set_defaults(func=cmd_ask)
    p = sub.add_parser("batch", parents=[common], help="answer a file of questions")
    p.add_argument("questions")
    p.set_defaults(func=cmd_batch)
    p = sub.add_parser("eval", parents=[common], help="judge answers against gold")
    p.add_argument("answers")
    p.add_argument("gold")
    p.set_defaults(func=cmd_eval)
    p = sub.add_parser("sft", parents=[common], help="build an SFT corpus")
    p.add_argument("training")
    p.set_defaults(func=cmd_sft)
    p = sub.add_parser("ablate", parents=[common], help="compare ablation variants")
    p.add_argument("questions")
    p.add_argument("--variants", default="", help="comma list of -multihop,-filter,-CoT (use --variants=...)")
    p.set_defaults(func=cmd_ablate)
    return parser


def config_from_args(args) -> RunConfig:
    return RunConfig(
        backend=args.backend, provider=args.provider, filter_mode=args.filter_mode, max_hops=args.max_hops,
        top_k=args.top_k, mode=args.mode, multi_entity=args.multi_entity, strict_evidence=args.strict_evidence,
        out=args.out, ontology=args.ontology, judge_style=args.judge_style, workers=args.workers,
        record=args.record, trace=args.trace,
    )


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(config_from_args(args), args)
    except UsageError as exc:
        print(f"kgscope: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (FixtureFormatError, ValidationError, RegistryError, ArgumentError, DataError) as exc:
        print(f"kgscope: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (TransportError, ScriptMissError, RetrievalError) as exc:
        print(f"kgscope: infrastructure error: {exc}", file=sys.stderr)
        return EXIT_INFRA
    except KGScopeError as exc:
        print(f"kgscope: error: {exc}", file=sys.stderr)
        return EXIT_INFRA


if __name__ == "__main__":
    sys.exit(main())
