import json
import subprocess
import sys

import pytest

from graphmem.cli import main
from graphmem.evaluation import EvalReport, read_report
from graphmem.graph import KnowledgeGraph, Triplet

from conftest import CORPUS, MOCK_SCRIPT, TOY_MOCK, TOY_QUESTIONS

MONA_LISA_STATS = {"object_nodes": 5, "thesis_nodes": 3, "episodic_nodes": 1, "simple_relations": 4,
                   "hyper_relations": 7, "episodic_relations": 8}


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def built(tmp_path, capsys):
    graph = tmp_path / "g.gm"
    code, out, _ = run(capsys, "build", CORPUS, "-g", graph, "--mock-script", TOY_MOCK)
    assert code == 0
    return graph


def stats_json(capsys, graph):
    code, out, _ = run(capsys, "stats", graph, "--json")
    assert code == 0
    return json.loads(out)


def test_build_mona_lisa(tmp_path, capsys):
    graph = tmp_path / "g.gm"
    fig = tmp_path / "stats.png"
    code, out, _ = run(capsys, "build", CORPUS, "-g", graph, "--mock-script", MOCK_SCRIPT, "--figure", fig)
    assert code == 0
    header, row = out.strip().splitlines()
    assert len(header.split("\t")) == len(row.split("\t"))
    stats = stats_json(capsys, graph)
    assert {k: stats[k] for k in MONA_LISA_STATS} == MONA_LISA_STATS
    assert fig.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"
    log = [json.loads(x) for x in (tmp_path / "g.gm.log.jsonl").read_text().splitlines()]
    assert log[0]["id"] == "ml-1" and log[0]["parse_errors"] == 0


def test_build_empty_corpus(tmp_path, capsys):
    corpus = tmp_path / "empty.jsonl"
    corpus.write_text("")
    code, _, _ = run(capsys, "build", corpus, "-g", tmp_path / "g.gm")
    assert code == 0
    stats = stats_json(capsys, tmp_path / "g.gm")
    assert all(v == 0 for v in stats.values())


def test_build_counts_parse_errors(tmp_path, capsys):
    script = tmp_path / "mock.yaml"
    script.write_text(
        '- match: "TASK: extract-triplets"\n  response: "sorry, I cannot"\n'
        '- match: "TASK: extract-theses"\n  response: "```\\nMona Lisa is famous :: [Mona Lisa]\\n```"\n'
        '- match: "TASK"\n  response: "```\\n```"\n'
    )
    code, _, _ = run(capsys, "build", CORPUS, "-g", tmp_path / "g.gm", "--mock-script", script)
    assert code == 0
    log = json.loads((tmp_path / "g.gm.log.jsonl").read_text())
    assert log["parse_errors"] == 1


def test_build_unreadable_corpus(tmp_path, capsys):
    code, _, err = run(capsys, "build", tmp_path / "absent.jsonl", "-g", tmp_path / "g.gm")
    assert code == 2 and "corpus" in err


def test_query_creator(built, capsys):
    code, out, _ = run(capsys, "query", built, "Who created Mona Lisa?", "--mock-script", TOY_MOCK, "--show-evidence")
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "Leonardo da Vinci"
    assert "evidence\t(Mona Lisa, creator, Leonardo da Vinci)" in lines
    assert lines[-1].startswith("trace\t")


def test_query_restriction_o_on_toy_graph(tmp_path, capsys):
    g = KnowledgeGraph()
    g.add_simple_relation(Triplet("Mona Lisa", "creator", "Leonardo da Vinci"))
    g.save(tmp_path / "toy.gm")
    code, out, _ = run(capsys, "query", tmp_path / "toy.gm", "Who created Mona Lisa?", "--restriction", "O",
                       "--mock-script", TOY_MOCK)
    assert code == 0 and out.splitlines()[0] == "NoAnswer"


def test_query_missing_graph(tmp_path, capsys):
    code, _, err = run(capsys, "query", tmp_path / "absent.gm", "q?", "--mock-script", TOY_MOCK)
    assert code == 2 and "not found" in err


def test_query_transport_failure_exits_1(built, tmp_path, capsys):
    script = tmp_path / "mute.yaml"
    script.write_text("- match: nothing-matches-this\n  response: x\n")
    code, _, err = run(capsys, "query", built, "Who created Mona Lisa?", "--mock-script", script)
    assert code == 1 and "transport" in err


def test_query_without_llm_is_config_error(built, capsys):
    code, _, err = run(capsys, "query", built, "Who created Mona Lisa?")
    assert code == 2 and "no LLM configured" in err


def test_eval_summary_equals_report(built, tmp_path, capsys):
    report = tmp_path / "report.jsonl"
    code, out, _ = run(capsys, "eval", built, TOY_QUESTIONS, "-o", report, "--mock-script", TOY_MOCK)
    assert code == 0
    header, row = out.strip().splitlines()
    assert header == "config\taccuracy\tem_rate\tno_answer_rate"
    records, aggregate = read_report(report)
    recomputed = EvalReport(records, aggregate["config"]).aggregate()
    assert aggregate == recomputed
    cells = row.split("\t")
    assert cells[0] == "WC + BS / All"
    assert [float(c) for c in cells[1:]] == [round(recomputed[k], 4) for k in ("accuracy", "em_rate", "no_answer_rate")]
    assert (tmp_path / "report_summary.png").exists()


def test_eval_grid_writes_four_reports(built, tmp_path, capsys):
    out_dir = tmp_path / "grid"
    code, out, _ = run(capsys, "eval", built, TOY_QUESTIONS, "-o", out_dir, "--mock-script", TOY_MOCK,
                       "--combo", "bs", "--combo", "wc+bs", "--restriction", "All", "--restriction", "E")
    assert code == 0
    reports = sorted(p.name for p in out_dir.glob("report_*.jsonl"))
    assert reports == ["report_bs_All.jsonl", "report_bs_E.jsonl", "report_wc-bs_All.jsonl", "report_wc-bs_E.jsonl"]
    assert len(out.strip().splitlines()) == 5
    assert (out_dir / "summary.png").exists()


def test_eval_resume_skips_done(built, tmp_path, capsys):
    report = tmp_path / "r.jsonl"
    args = ["eval", built, TOY_QUESTIONS, "-o", report, "--mock-script", TOY_MOCK, "--no-timings", "--no-figure"]
    assert run(capsys, *args)[0] == 0
    first = report.read_bytes()
    assert run(capsys, *args)[0] == 0
    assert report.read_bytes() == first


def test_eval_is_byte_identical_without_timings(built, tmp_path, capsys):
    outputs = []
    for name in ("a.jsonl", "b.jsonl"):
        code, out, _ = run(capsys, "eval", built, TOY_QUESTIONS, "-o", tmp_path / name, "--mock-script", TOY_MOCK,
                           "--no-timings", "--no-resume", "--no-figure")
        assert code == 0
        outputs.append(out)
    assert (tmp_path / "a.jsonl").read_bytes() == (tmp_path / "b.jsonl").read_bytes()
    assert outputs[0] == outputs[1]


def test_eval_with_all_failures_exits_1(built, tmp_path, capsys):
    script = tmp_path / "mute.yaml"
    script.write_text("- match: nothing-matches-this\n  response: x\n")
    code, _, _ = run(capsys, "eval", built, TOY_QUESTIONS, "-o", tmp_path / "r.jsonl", "--mock-script", script,
                     "--no-figure")
    assert code == 1


def test_stats_variants(built, tmp_path, capsys):
    empty = tmp_path / "empty.gm"
    KnowledgeGraph().save(empty)
    assert all(v == 0 for v in stats_json(capsys, empty).values())
    stats = stats_json(capsys, built)
    assert {k: stats[k] for k in MONA_LISA_STATS} == MONA_LISA_STATS
    fig = tmp_path / "s.png"
    code, out, _ = run(capsys, "stats", built, "--figure", fig)
    assert code == 0 and fig.exists() and len(out.strip().splitlines()) == 2


def test_stats_corrupted_file(tmp_path, capsys):
    bad = tmp_path / "bad.gm"
    bad.write_text("graphmem-v1\nnode n1 ???\n")
    code, _, err = run(capsys, "stats", bad)
    assert code == 2 and "malformed graph file" in err


def test_preprocess_command(tmp_path, capsys):
    raw = tmp_path / "raw.jsonl"
    raw.write_text("")
    code, out, _ = run(capsys, "preprocess", "triviaqa", "--raw", raw, "--out", tmp_path)
    assert code == 0 and "qa_pairs\t0" in out
    code, _, err = run(capsys, "preprocess", "hotpotqa", "--raw", tmp_path / "nope", "--out", tmp_path)
    assert code == 2


def test_module_entry_point(built):
    proc = subprocess.run([sys.executable, "-m", "graphmem", "stats", str(built), "--json"],
                          capture_output=True, text=True, check=True)
    assert json.loads(proc.stdout)["object_nodes"] == 5
