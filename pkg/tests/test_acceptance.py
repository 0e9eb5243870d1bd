"""Acceptance suite: one PASS/FAIL line per criterion, printed to the terminal."""

import os
import random
import string
import time

import networkx as nx
import pytest

from graphmem.cli import main
from graphmem.evaluation import EvalReport, read_report, reconstruct, split_text
from graphmem.evaluation.metrics import exact_match, normalize_answer
from graphmem.evaluation.preprocess import ENV_VARS, preprocess_corpus
from graphmem.graph import KnowledgeGraph, NodeKind
from graphmem.memorize import Memorizer
from graphmem.retrieval import (
    AStarConfig,
    BeamSearchConfig,
    GraphView,
    Heuristic,
    NodeRestriction,
    NoPath,
    WaterCirclesConfig,
    astar_path,
    astar_retrieve,
    beamsearch_retrieve,
    expand,
    mixed_retrieve,
    select_paths,
    watercircles_retrieve,
)
from graphmem.retrieval.beamsearch import BeamPath

from conftest import CORPUS, MONA_LISA, TOY_MOCK, TOY_QUESTIONS, random_graph
from oracles import brute_force_intersections, merge_select, restricted_nx, shortest_path_edges, touched_nodes

pytestmark = pytest.mark.acceptance


@pytest.fixture
def verdict(capsys):
    def emit(n: int, ok: bool, detail: str):
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'} criterion {n}: {detail}")
        assert ok, detail

    return emit


def test_criterion_01_mona_lisa_golden_build(mocks, verdict):
    t0 = time.perf_counter()
    g = KnowledgeGraph()
    Memorizer(g, mocks["extractor"]).memorize(MONA_LISA, "2024-01-01T00:00:00")
    elapsed = time.perf_counter() - t0
    s = g.stats()
    got = (s.object_nodes, s.thesis_nodes, s.episodic_nodes, s.simple_relations, s.hyper_relations,
           s.episodic_relations)
    expected = (5, 3, 1, 4, 6, 8)
    verdict(1, got == expected and elapsed < 1.0,
            f"(object, thesis, episodic, simple, hyper, episodic_rel) = {got}, expected {expected}; "
            f"{elapsed:.3f}s < 1s")


def test_criterion_02_retrieval_oracles(verdict):
    rng = random.Random(2024)
    t0 = time.perf_counter()
    graphs = pairs = 0
    failures = []
    while graphs < 200:
        g = random_graph(rng, max_nodes=50)
        graphs += 1
        view = GraphView(g)
        zero = Heuristic(view, "zero")
        nxg = restricted_nx(g)
        nodes = list(g.nodes)
        budget = len(nodes) + 1
        for i, s in enumerate(nodes):
            lengths = nx.single_source_shortest_path_length(nxg, s)
            for t in nodes[i + 1:]:
                if t not in lengths:
                    continue
                pairs += 1
                try:
                    got = len(astar_path(view, s, t, zero, budget, budget))
                except NoPath:
                    got = None
                if got != lengths[t]:
                    failures.append(("astar", graphs, s, t, got, lengths[t]))

        ents = rng.sample(nodes, k=min(rng.randint(1, 4), len(nodes)))
        exp = expand(view, ents, WaterCirclesConfig())
        if set(exp.chain) != shortest_path_edges(g, ents):
            failures.append(("watercircles", graphs))

        q = g.embedder.embed(rng.choice(["obj1", "thesis about obj2", "episode r3"]))
        parts = [
            astar_retrieve(g, ents, ents, q, AStarConfig()).keys(),
            watercircles_retrieve(g, ents, q).keys(),
            beamsearch_retrieve(g, ents, q).keys(),
        ]
        mixed = mixed_retrieve(g, ents, q, [AStarConfig(), WaterCirclesConfig(), BeamSearchConfig()]).keys()
        if set(mixed) != set().union(*parts) or len(mixed) != len(set(mixed)):
            failures.append(("mixed", graphs))
    elapsed = time.perf_counter() - t0
    verdict(2, not failures and elapsed < 60,
            f"{graphs} graphs, {pairs} reachable pairs, {len(failures)} mismatches "
            f"{failures[:3]}; {elapsed:.1f}s < 60s")


def test_criterion_03_restriction_soundness(verdict):
    rng = random.Random(3)
    algorithms = [AStarConfig(), WaterCirclesConfig(), BeamSearchConfig()]
    cases = checked = violations = 0
    for _ in range(1000):
        g = random_graph(rng, max_nodes=30)
        ents = rng.sample(list(g.nodes), k=min(rng.randint(1, 3), len(g.nodes)))
        q = g.embedder.embed(rng.choice(["obj0 r1", "thesis", "episode text"]))
        cases += 1
        for restriction in NodeRestriction:
            for cfg in algorithms:
                for item in mixed_retrieve(g, ents, q, [cfg], restriction):
                    checked += 1
                    if any(g.nodes[n].kind in restriction.prohibited for n in touched_nodes(g, item)):
                        violations += 1
    verdict(3, violations == 0 and cases == 1000,
            f"{cases} cases x {len(algorithms)} algorithms x 4 restrictions, {checked} items checked, "
            f"{violations} violations")


SORTING_TABLE = [
    # (mode, ended scores, continuous scores, max_paths)
    ("ended_first", [0.9, 0.2], [0.8, 0.1], 3),  # fewer ended than max: topped up from continuous
    ("ended_first", [0.4, 0.1, 0.3, 0.2], [0.99], 3),  # overflow: ended alone fills the quota
    ("ended_first", [], [0.5, 0.7], 1),
    ("continuous_first", [0.9, 0.2], [0.8, 0.1], 3),
    ("continuous_first", [0.9], [0.1, 0.3, 0.2, 0.4], 2),
    ("continuous_first", [0.6, 0.5], [], 4),
    ("mixed", [0.9, 0.2], [0.8, 0.1], 3),
    ("mixed", [0.1, 0.2], [0.8, 0.7, 0.6], 4),
    ("mixed", [0.3], [0.2], 5),
]


def test_criterion_04_beamsearch_sorting_modes(verdict):
    def paths(scores, tag):
        return [BeamPath("s", ("s",), (), (), (f"{tag}{i}",), x) for i, x in enumerate(scores)]

    bad = []
    for mode, ended, cont, k in SORTING_TABLE:
        got = [(p.relevance, p.labels[0][0]) for p in select_paths(paths(ended, "e"), paths(cont, "c"), mode, k)]
        want = merge_select([(x, "e") for x in ended], [(x, "c") for x in cont], mode, k)
        if got != want:
            bad.append((mode, got, want))
    verdict(4, not bad, f"{len(SORTING_TABLE)} table rows over ended_first/continuous_first/mixed, {len(bad)} wrong {bad}")


def test_criterion_05_n_intersections_ordering(verdict):
    rng = random.Random(5)
    hubs = mismatches = 0
    for _ in range(200):
        g = random_graph(rng, max_nodes=40)
        objects = [n.id for n in g.nodes_of_kind(NodeKind.OBJECT)]
        ents = rng.sample(objects, k=min(rng.randint(1, 4), len(objects)))
        labels = [g.nodes[e].content for e in ents]
        res = watercircles_retrieve(g, ents, cfg=WaterCirclesConfig(hyper_num=100, episodic_num=100))
        arriving = {h.hub: g.nodes[h.source].content for h in expand(GraphView(g), ents, WaterCirclesConfig()).hubs}
        for key in ("hyper", "episodic"):
            ranked = res.provenance[key]
            counts = [n for _, n in ranked]
            if counts != sorted(counts, reverse=True):
                mismatches += 1
            for hub, n in ranked:
                hubs += 1
                if n != brute_force_intersections(g.nodes[hub].content, labels, arriving[hub]):
                    mismatches += 1
    verdict(5, mismatches == 0 and hubs > 0, f"{hubs} ranked hubs on 200 graphs, {mismatches} mismatches vs brute force")


EM_TABLE = [
    ("Leonardo da Vinci.", "leonardo da vinci", True),
    ("Paris", "Rome", False),
    ("  a  b ", "A B", True),
    ("PARIS", "paris", True),
    ("Paris!", "Paris", True),
    ("U.S.A.", "USA", True),
    ("New\tYork", "new york", True),
    ("new york", "newyork", False),
    ("1503-1519", "15031519", True),
    ("(oil painting)", "oil painting", True),
    ("“Mona Lisa”", "Mona Lisa", True),
    ("Mona Lisa", "Mona Lisa's", False),
    ("", "", True),
    ("", "x", False),
    ("42", "42.0", False),
    ("Yes", "yes.", True),
    ("poplar wood\n", " poplar   wood", True),
    ("Leonardo", "Leonardo da Vinci", False),
    ("ÉCOLE", "école", True),
    ("a, b, and c", "a b and c", True),
]


def test_criterion_06_exact_match(verdict):
    wrong = [(p, g) for p, g, want in EM_TABLE if exact_match(p, g) is not want]
    texts = [t for row in EM_TABLE for t in row[:2]]
    asymmetric = [(a, b) for a in texts for b in texts if exact_match(a, b) != exact_match(b, a)]
    irreflexive = [t for t in texts if not exact_match(t, t) or not exact_match(normalize_answer(t), t)]
    verdict(6, len(EM_TABLE) == 20 and not wrong and not asymmetric and not irreflexive,
            f"{len(EM_TABLE)} cases, {len(wrong)} wrong {wrong}; symmetry violations {len(asymmetric)}; "
            f"reflexivity violations {len(irreflexive)}")


def test_criterion_07_splitter(verdict):
    rng = random.Random(7)
    alphabet = string.ascii_letters + "  .,\n"
    bad_recon = bad_len = bad_overlap = 0
    for _ in range(1000):
        parts = []
        for _ in range(rng.randint(0, 8)):
            parts.append("".join(rng.choice(alphabet) for _ in range(rng.choice([0, 5, 60, 300, 900, 1500]))))
        text = "\n\n".join(parts)
        frags = split_text(text, 1024, 64, ("\n\n",))
        bad_recon += reconstruct(frags) != text
        bad_len += any(len(f.text) > 1024 for f in frags)
        bad_overlap += any(a.end - b.start > 64 or b.start < a.start for a, b in zip(frags, frags[1:]))
    verdict(7, bad_recon == bad_len == bad_overlap == 0,
            f"1000 texts: {bad_recon} reconstruction failures, {bad_len} fragments > 1024, "
            f"{bad_overlap} overlaps > 64")


@pytest.mark.network
def test_criterion_08_preprocessing_counts(tmp_path, capsys, verdict):
    hotpot, trivia = os.environ.get(ENV_VARS["hotpotqa"]), os.environ.get(ENV_VARS["triviaqa"])
    if not hotpot or not trivia:
        with capsys.disabled():
            print("\nSKIP criterion 8: raw HotpotQA/TriviaQA data not available "
                  f"(set {ENV_VARS['hotpotqa']} and {ENV_VARS['triviaqa']})")
        pytest.skip("raw datasets not available")
    h = preprocess_corpus("hotpotqa", hotpot, tmp_path).counts
    t = preprocess_corpus("triviaqa", trivia, tmp_path).counts
    got = (h["contexts_after_filter"], h["contexts_kept"], t["fragments"], t["fragments_after_filter"],
           t["fragments_kept"])
    expected = (13291, 3933, 278384, 9975, 4925)
    verdict(8, got == expected, f"counts {got}, expected {expected}")


def test_criterion_09_end_to_end_determinism(tmp_path, capsys, verdict):
    graph = tmp_path / "g.gm"
    assert main(["build", str(CORPUS), "-g", str(graph), "--mock-script", str(TOY_MOCK)]) == 0
    reports = []
    for name in ("run1.jsonl", "run2.jsonl"):
        path = tmp_path / name
        code = main(["eval", str(graph), str(TOY_QUESTIONS), "-o", str(path), "--mock-script", str(TOY_MOCK),
                     "--no-timings", "--no-resume", "--no-figure"])
        assert code == 0
        reports.append(path)
    capsys.readouterr()
    identical = reports[0].read_bytes() == reports[1].read_bytes()
    records, aggregate = read_report(reports[0])
    n = len(records)
    recomputed = {
        "accuracy": sum(r.judge_label for r in records) / n,
        "em_rate": sum(r.em for r in records) / n,
        "no_answer_rate": sum(r.kind == "NoAnswer" for r in records) / n,
    }
    agg_ok = all(aggregate[k] == v for k, v in recomputed.items()) and aggregate == EvalReport(
        records, aggregate["config"]).aggregate()
    verdict(9, identical and agg_ok and n == 10,
            f"{n} questions; byte-identical reports: {identical}; aggregates {recomputed} match: {agg_ok}")


def test_criterion_10_persistence(tmp_path, verdict):
    rng = random.Random(10)
    bad = 0
    for i in range(100):
        g = random_graph(rng)
        path = tmp_path / f"g{i}.gm"
        g.save(path)
        h = KnowledgeGraph.load(path, g.embedder)
        same_stats = g.stats().as_tuple() == h.stats().as_tuple()
        same_triplets = [str(t) for t in g.triplets()] == [str(t) for t in h.triplets()]
        bad += not (same_stats and same_triplets)
    verdict(10, bad == 0, f"100 random graphs round-tripped, {bad} differ in stats tuple or triplet strings")
