"""Ranking metrics: filtered realistic ranks, aggregation, oracle bounds."""

import numpy as np
import pytest

from hyperq import (GraphBuilder, MetricReport, Metrics, Parameters,
                    QueryRecord, RankingResult, SamplingConfig, SplitTag,
                    aggregate, evaluate_bundle, evaluate_faithfulness,
                    evaluate_records, generate, instantiate,
                    oracle_expected_metrics, ranks, summarize_runs,
                    summary_to_text, synth_graph)
from hyperq.encoder import HyperParams


def test_tie_block_rank_is_two_point_five():
    # four entities scored 0.9, 0.5, 0.5, 0.1; the 0.5-scored answer sits in
    # a tie block spanning positions 2-3, so its realistic rank is 2.5
    scores = np.array([0.9, 0.5, 0.5, 0.1])
    res = ranks(scores, answers={1})
    assert res.ranks == ((1, 2.5),)
    assert res.candidate_count == 4


def test_weighted_mrr_hand_example():
    # query A: one answer at rank 1; query B: two answers at ranks 1 and 2.
    # per-answer weight 1/|ranked|, so (1*1 + 0.5*1 + 0.5*0.5) / 2 = 0.875
    a = RankingResult(((0, 1.0),), candidate_count=10, answer_cardinality=1)
    b = RankingResult(((1, 1.0), (2, 2.0)), candidate_count=10,
                      answer_cardinality=2)
    m = aggregate([a, b])
    assert np.isclose(m.mrr, 0.875)
    assert np.isclose(m.weight, 2.0)
    assert m.count == 2


def test_constant_scores_rank_is_middle():
    for n, n_answers in ((7, 1), (12, 3), (50, 5)):
        scores = np.zeros(n)
        answers = set(range(n_answers))
        res = ranks(scores, answers)
        c = res.candidate_count
        assert c == n - n_answers + 1
        for _, r in res.ranks:
            assert r == (c + 1) / 2


def test_amri_zero_for_exact_middle_rank():
    # rank 3 among 5 candidates: (r-1) equals (|C|-1)/2, so AMRI is exactly 0
    res = RankingResult(((0, 3.0),), candidate_count=5, answer_cardinality=1)
    assert aggregate([res]).amri == 0.0


def test_amri_one_when_perfect():
    results = [RankingResult(((i, 1.0),), candidate_count=100,
                             answer_cardinality=1) for i in range(20)]
    assert aggregate(results).amri == 1.0


def test_amri_near_zero_for_random_scores():
    rng = np.random.default_rng(11)
    results = []
    for _ in range(1000):
        scores = rng.random(64)
        results.append(ranks(scores, answers={int(rng.integers(64))}))
    assert abs(aggregate(results).amri) < 0.05


def test_duplicating_results_leaves_metrics_unchanged():
    rng = np.random.default_rng(3)
    results = [ranks(rng.random(20), answers={int(rng.integers(20))})
               for _ in range(10)]
    m1 = aggregate(results)
    m2 = aggregate(results * 3)
    assert np.isclose(m1.mrr, m2.mrr)
    assert np.isclose(m1.amri, m2.amri)
    assert all(np.isclose(m1.hits[k], m2.hits[k]) for k in m1.hits)


def test_easy_answer_filter_improves_rank():
    scores = np.array([0.9, 0.8, 0.7, 0.6, 0.5])
    plain = ranks(scores, answers={4})
    filtered = ranks(scores, answers={4}, easy_answers={0, 1})
    assert plain.ranks[0][1] == 5.0
    assert filtered.ranks[0][1] == 3.0
    assert filtered.candidate_count == plain.candidate_count - 2


def test_ranks_input_validation():
    scores = np.zeros(4)
    with pytest.raises(ValueError):
        ranks(np.zeros((2, 2)), answers={0})
    with pytest.raises(ValueError):
        ranks(scores, answers=set())
    with pytest.raises(ValueError):
        ranks(scores, answers={4})
    with pytest.raises(ValueError):
        ranks(scores, answers={0}, easy_answers={-1})
    with pytest.raises(ValueError):
        aggregate([])


def test_each_query_contributes_weight_one():
    rng = np.random.default_rng(5)
    results = []
    for i in range(8):
        n_ans = int(rng.integers(1, 5))
        results.append(ranks(rng.random(30), answers=set(range(n_ans))))
    assert np.isclose(aggregate(results).weight, len(results))


def oracle_fixture():
    """h connects to t1/t2/t3 via r; only the t1 edge carries (q, u)."""
    b = GraphBuilder()
    b.add("h", "r", "t1", [("q", "u")])
    b.add("h", "r", "t2")
    b.add("h", "r", "t3")
    g = b.build()
    h, t1 = g.entities.id("h"), g.entities.id("t1")
    q = instantiate("1p", anchors=[h], relations=[g.relations.id("r")],
                    qualifiers=[[(g.relations.id("q"),
                                  g.entities.id("u"))]])
    rec = QueryRecord(query=q, split=SplitTag.TEST,
                      answers=frozenset({t1}), easy_answers=frozenset())
    return g, rec


def test_oracle_exact_small_case():
    # |S| = 3, |A| = 1: rank uniform on 1..3, so E[Hits@2] = 2/3 and
    # E[1/rank] = (1 + 1/2 + 1/3)/3 = 11/18
    g, rec = oracle_fixture()
    m = oracle_expected_metrics(g, [rec], ks=(1, 2, 3, 10))
    assert np.isclose(m.hits[2], 2.0 / 3.0)
    assert np.isclose(m.mrr, 11.0 / 18.0)
    assert np.isclose(m.hits[1], 1.0 / 3.0)
    assert m.hits[3] == 1.0
    assert m.hits[10] == 1.0


def test_oracle_matches_monte_carlo():
    rng = np.random.default_rng(17)
    for _ in range(20):
        m = int(rng.integers(1, 12))
        k = int(rng.integers(1, 11))
        # closed form for rank uniform on 1..m
        exp_hits = min(k, m) / m
        exp_rr = float(np.sum(1.0 / np.arange(1, m + 1))) / m
        draws = rng.integers(1, m + 1, size=10_000)
        mc_hits = float(np.mean(draws <= k))
        mc_rr = float(np.mean(1.0 / draws))
        assert abs(exp_hits - mc_hits) < 0.02
        assert abs(exp_rr - mc_rr) < 0.02


def test_oracle_skips_queries_without_hard_answers():
    g, rec = oracle_fixture()
    easy = QueryRecord(query=rec.query, split=SplitTag.TEST,
                       answers=rec.answers, easy_answers=rec.answers)
    assert oracle_expected_metrics(g, [easy]) is None
    m = oracle_expected_metrics(g, [rec, easy])
    assert m.count == 1


def test_evaluate_records_on_trained_shapes():
    g = synth_graph(23, 40, 6, profile="mixed")
    bundle = generate(g, SamplingConfig(pattern="1p", seed=4,
                                        max_queries_per_split=8))
    params = Parameters(HyperParams(dim=8, layers=1), g.n_entities,
                        g.n_relations, seed=0)
    m = evaluate_bundle(params, bundle, "test")
    assert m is not None
    assert set(m.hits) == {1, 3, 10}
    assert 0.0 <= m.mrr <= 1.0
    assert m.amri <= 1.0
    faith = evaluate_faithfulness(params, bundle)
    assert faith is not None
    assert evaluate_records(params, []) is None


def test_metrics_roundtrip():
    m = Metrics(hits={1: 0.25, 10: 0.75}, mrr=0.4, amri=0.1,
                count=7, weight=7.0)
    assert Metrics.from_dict(m.to_dict()) == m


def test_metric_report_roundtrip_and_text():
    report = MetricReport()
    m = Metrics(hits={1: 0.5, 10: 1.0}, mrr=0.6, amri=0.2, count=3,
                weight=3.0)
    report.add("2p", "test", m)
    report.add("1p", "valid", m)
    again = MetricReport.from_dict(report.to_dict())
    assert again.entries == report.entries
    text = report.to_text()
    assert "hits@10" in text and "2p" in text and "mrr" in text
    assert MetricReport().to_text() == "(no metrics)"
    assert report.get("2p", "test") == m
    assert report.get("3p", "test") is None


def test_summarize_runs_mean_and_std():
    def rep(mrr):
        r = MetricReport()
        r.add("1p", "test", Metrics(hits={10: mrr}, mrr=mrr, amri=0.0,
                                    count=2, weight=2.0))
        return r

    single = summarize_runs([rep(0.5)])
    stats = single["entries"]["1p"]["test"]
    assert stats["mrr"]["std"] == 0.0
    assert stats["runs"] == 1

    multi = summarize_runs([rep(0.4), rep(0.6)])
    stats = multi["entries"]["1p"]["test"]
    assert np.isclose(stats["mrr"]["mean"], 0.5)
    assert np.isclose(stats["mrr"]["std"], 0.1)  # population std
    assert stats["runs"] == 2

    text = summary_to_text(multi)
    assert "±" in text and "1p" in text
    with pytest.raises(ValueError):
        summarize_runs([])
