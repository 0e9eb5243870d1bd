"""Command-line entry point: build, query, eval, stats, preprocess.

Exit codes: 0 on success, 1 on runtime failure (LLM transport, no question
completed), 2 on usage or input errors.
"""

from __future__ import annotations

import argparse
import itertools
import json
import logging
import sys
from pathlib import Path

from .config import RunConfig, load_config
from .errors import (
    ConfigError,
    FormatError,
    GraphMemError,
    MissingRawData,
    SchemaError,
    TransportError,
)
from .evaluation import preprocess_corpus, read_questions, run_eval
from .graph import GraphStats, KnowledgeGraph
from .llm import load_mock_script
from .memorize import Memorizer, build_from_corpus, read_corpus
from .qa import QAPipeline
from .retrieval import NodeRestriction, combo_label

logger = logging.getLogger("graphmem")

EXIT_OK, EXIT_RUNTIME, EXIT_INPUT = 0, 1, 2


class InputError(GraphMemError):
    """Bad paths or arguments detected by the CLI itself."""


def format_stats(stats: GraphStats) -> str:
    header = "\t".join(label for _, label in GraphStats.COLUMNS)
    cells = []
    for value in stats.as_tuple():
        cells.append(f"{value:.2f}" if isinstance(value, float) else str(value))
    return header + "\n" + "\t".join(cells)


def _setup(args) -> tuple[RunConfig, dict | None]:
    cfg = load_config(args.config)
    mocks = None
    if args.mock_script:
        if not Path(args.mock_script).is_file():
            raise InputError(f"mock script not found: {args.mock_script}")
        mocks = load_mock_script(args.mock_script)
    return cfg, mocks


def _require_llm(cfg: RunConfig, role: str, mocks):
    client = cfg.build_llm(role, mocks)
    if client is None:
        raise ConfigError(f"no LLM configured for role {role!r}; set llm.{role} or pass --mock-script")
    return client


def _graph_path(args, cfg: RunConfig) -> Path:
    path = args.graph or cfg.graph
    if not path:
        raise InputError("no graph path given")
    return Path(path)


def _load_graph(args, cfg: RunConfig) -> KnowledgeGraph:
    path = _graph_path(args, cfg)
    if not path.is_file():
        raise InputError(f"graph file not found: {path}")
    return KnowledgeGraph.load(path, cfg.build_embedder())


def cmd_build(args) -> int:
    cfg, mocks = _setup(args)
    corpus = Path(args.corpus or cfg.corpus or "")
    if not corpus.is_file():
        raise InputError(f"corpus not readable: {corpus}")
    out = _graph_path(args, cfg)
    embedder = cfg.build_embedder()
    if args.append and out.is_file():
        graph = KnowledgeGraph.load(out, embedder)
    else:
        graph = KnowledgeGraph(embedder)
    records = list(read_corpus(corpus))
    memorizer = Memorizer(
        graph,
        _require_llm(cfg, "extractor", mocks) if records else None,
        params=cfg.params("extractor"),
        prompt_dir=cfg.prompts,
        **cfg.memorize,
    )
    log_path = Path(args.log) if args.log else out.with_name(out.name + ".log.jsonl")
    if log_path.exists() and not args.append:
        log_path.unlink()
    out.parent.mkdir(parents=True, exist_ok=True)
    build_from_corpus(memorizer, records, log_path)
    graph.save(out)
    stats = graph.stats()
    print(format_stats(stats))
    if args.figure:
        from .plotting import plot_stats

        plot_stats(stats, args.figure, title=out.name)
    return EXIT_OK


def cmd_query(args) -> int:
    cfg, mocks = _setup(args)
    graph = _load_graph(args, cfg)
    qa_cfg = cfg.qa_config(args.combo, args.restriction, top_n_triplets=args.top_n, record_timings=not args.no_timings)
    pipeline = QAPipeline(
        graph,
        _require_llm(cfg, "generator", mocks),
        qa_cfg,
        params=cfg.params("generator"),
        prompt_dir=cfg.prompts,
    )
    ans = pipeline.answer(args.question)
    print(ans.text if ans.text is not None else ans.kind.value)
    if args.show_evidence:
        for item in ans.evidence:
            print(f"evidence\t{item.key}")
    print("trace\t" + json.dumps(ans.trace, sort_keys=True))
    return EXIT_OK


def _report_name(combo: str, restriction: NodeRestriction) -> str:
    return f"report_{combo.replace('+', '-').casefold()}_{restriction.value}.jsonl"


def cmd_eval(args) -> int:
    cfg, mocks = _setup(args)
    graph = _load_graph(args, cfg)
    questions_path = Path(args.questions)
    if not questions_path.is_file():
        raise InputError(f"questions file not found: {questions_path}")
    questions = read_questions(questions_path)
    generator = _require_llm(cfg, "generator", mocks)
    judge_client = None if args.no_judge else cfg.build_llm("judge", mocks)

    combos = args.combo or [cfg.retrieval.get("combo", "wc+bs")]
    restrictions = [NodeRestriction.parse(r) for r in (args.restriction or [cfg.retrieval.get("restriction", "All")])]
    grid = list(itertools.product(combos, restrictions))
    report = Path(args.report)
    if len(grid) > 1:
        report.mkdir(parents=True, exist_ok=True)
        targets = [report / _report_name(c, r) for c, r in grid]
    else:
        targets = [report]
    parallelism = args.parallelism or int(cfg.eval.get("parallelism", 1))

    rows = []
    completed = 0
    print("config\taccuracy\tem_rate\tno_answer_rate")
    for (combo, restriction), target in zip(grid, targets):
        qa_cfg = cfg.qa_config(combo, restriction.value, top_n_triplets=args.top_n, record_timings=not args.no_timings)
        label = f"{combo_label(qa_cfg.combo)} / {restriction.value}"
        pipeline = QAPipeline(graph, generator, qa_cfg, params=cfg.params("generator"), prompt_dir=cfg.prompts)
        result = run_eval(
            questions,
            pipeline,
            judge_client,
            report_path=target,
            resume=not args.no_resume,
            parallelism=parallelism,
            judge_params=cfg.params("judge"),
            config={
                "combo": combo_label(qa_cfg.combo),
                "restriction": restriction.value,
                "top_n_triplets": qa_cfg.top_n_triplets,
                "entity_match_k": qa_cfg.entity_match_k,
            },
        )
        agg = result.aggregate()
        completed += agg["total"] - agg["errors"]
        rows.append((label, agg))
        print(f"{label}\t{agg['accuracy']:.4f}\t{agg['em_rate']:.4f}\t{agg['no_answer_rate']:.4f}")
    if not args.no_figure and rows:
        from .plotting import plot_eval_summary

        fig_dir = report if len(grid) > 1 else report.parent
        plot_eval_summary(rows, fig_dir / (report.stem + "_summary.png" if len(grid) == 1 else "summary.png"))
    if questions and completed == 0:
        logger.error("no question completed")
        return EXIT_RUNTIME
    return EXIT_OK


def cmd_stats(args) -> int:
    cfg, _ = _setup(args)
    graph = _load_graph(args, cfg)
    stats = graph.stats()
    if args.json:
        print(json.dumps(stats.as_dict(), sort_keys=True))
    else:
        print(format_stats(stats))
    if args.figure:
        from .plotting import plot_stats

        plot_stats(stats, args.figure, title=_graph_path(args, cfg).name)
    return EXIT_OK


def cmd_preprocess(args) -> int:
    result = preprocess_corpus(args.kind, args.raw, args.out)
    for key, value in result.counts.items():
        print(f"{key}\t{value}")
    print(f"qa\t{result.qa_path}")
    print(f"contexts\t{result.context_path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML run configuration")
    common.add_argument("--mock-script", help="scripted LLM responses (YAML/JSON) instead of HTTP")
    common.add_argument("-v", "--verbose", action="count", default=0)

    parser = argparse.ArgumentParser(prog="graphmem", description="Hypergraph memory and graph-retrieval QA.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build", parents=[common], help="memorize a JSONL corpus into a graph file")
    p.add_argument("corpus", nargs="?")
    p.add_argument("-g", "--graph", help="output graph file")
    p.add_argument("--log", help="build log (JSONL); default <graph>.log.jsonl")
    p.add_argument("--append", action="store_true", help="extend an existing graph file")
    p.add_argument("--figure", help="write a stats figure to this path")
    p.set_defaults(func=cmd_build)

    def retrieval_flags(p, multi: bool):
        action = "append" if multi else "store"
        p.add_argument("--combo", action=action, help="retrieval combo such as bs, wc+bs, astar+bs")
        p.add_argument("--restriction", action=action, choices=["All", "E", "T", "O"])
        p.add_argument("--top-n", type=int, help="evidence items kept by the filter")
        p.add_argument("--no-timings", action="store_true", help="omit wall-clock timings from traces")

    p = sub.add_parser("query", parents=[common], help="answer one question")
    p.add_argument("graph")
    p.add_argument("question")
    p.add_argument("--show-evidence", action="store_true")
    retrieval_flags(p, multi=False)
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("eval", parents=[common], help="evaluate a question file")
    p.add_argument("graph")
    p.add_argument("questions")
    p.add_argument("-o", "--report", required=True, help="report file, or directory in grid mode")
    p.add_argument("--parallelism", type=int)
    p.add_argument("--no-resume", action="store_true")
    p.add_argument("--no-judge", action="store_true")
    p.add_argument("--no-figure", action="store_true")
    retrieval_flags(p, multi=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("stats", parents=[common], help="print graph statistics")
    p.add_argument("graph")
    p.add_argument("--json", action="store_true")
    p.add_argument("--figure", help="write a stats figure to this path")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("preprocess", parents=[common], help="prepare a benchmark dataset")
    p.add_argument("kind", choices=["hotpotqa", "triviaqa", "diaasq"])
    p.add_argument("--raw", help="raw dataset file or directory (default from environment)")
    p.add_argument("--out", default=".", help="output directory")
    p.set_defaults(func=cmd_preprocess)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except TransportError as exc:
        print(f"error: LLM transport failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except FormatError as exc:
        print(f"error: malformed graph file: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (InputError, ConfigError, SchemaError, MissingRawData, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except GraphMemError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
