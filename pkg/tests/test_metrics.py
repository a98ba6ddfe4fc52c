import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from trag import (
    QaExample,
    RankedTables,
    answer_metrics,
    combined_report,
    em_f1,
    normalize_answer,
    rank_metrics,
)
from trag.errors import MissingGold


def oracle_question_metrics(ranking, gold_id, ks):
    """Brute-force single-relevant metrics, computed from definitions."""
    rank = None
    for i, t in enumerate(ranking, start=1):
        if t == gold_id:
            rank = i
            break
    out = {
        "mrr": 1.0 / rank if rank else 0.0,
        "hit@1": 1.0 if rank == 1 else 0.0,
        "map": (1.0 / rank) if rank else 0.0,
    }
    for k in ks:
        hit = rank is not None and rank <= k
        out[f"r@{k}"] = 1.0 if hit else 0.0
        out[f"p@{k}"] = (1.0 / k) if hit else 0.0
        out[f"ndcg@{k}"] = (1.0 / math.log2(rank + 1)) if hit else 0.0
    return out


class TestNormalize:
    def test_article_and_punct(self):
        assert normalize_answer("The Beatles!") == "beatles"

    def test_empty(self):
        assert normalize_answer("") == ""

    def test_all_articles(self):
        assert normalize_answer("A  an THE") == ""

    def test_whitespace_collapse(self):
        assert normalize_answer("  two   words ") == "two words"

    def test_unicode_punct(self):
        assert normalize_answer("“Hello—world”") == "helloworld" or \
            normalize_answer("“Hello—world”") == "hello world"


class TestEmF1:
    def test_partial_overlap(self):
        em, f1 = em_f1("john smith", ["Smith"])
        assert em == 0
        assert f1 == pytest.approx(2 / 3)

    def test_article_stripped_match(self):
        em, f1 = em_f1("the answer", ["answer"])
        assert em == 1
        assert f1 == 1.0

    def test_disjoint(self):
        assert em_f1("x", ["y"]) == (0, 0.0)

    def test_both_empty(self):
        assert em_f1("the", ["an"]) == (1, 1.0)

    def test_multiple_golds_max(self):
        em, f1 = em_f1("paris", ["London", "Paris"])
        assert em == 1 and f1 == 1.0

    @given(st.text(max_size=30), st.text(max_size=30))
    @settings(max_examples=200, deadline=None)
    def test_f1_symmetric_single_gold(self, a, b):
        _, f1_ab = em_f1(a, [b])
        _, f1_ba = em_f1(b, [a])
        assert f1_ab == pytest.approx(f1_ba, abs=1e-12)


class TestRankMetrics:
    def test_gold_at_rank_two(self):
        ranked = [RankedTables(qid="q", ranking=["x", "g", "y", "z", "w"])]
        report = rank_metrics(ranked, {"q": "g"}, ks=[5])
        v = report.values
        assert v["mrr"] == pytest.approx(0.5)
        assert v["hit@1"] == 0.0
        assert v["r@5"] == 1.0
        assert v["p@5"] == pytest.approx(0.2)
        assert v["ndcg@5"] == pytest.approx(1 / math.log2(3))
        assert v["map"] == pytest.approx(0.5)

    def test_perfect_ranking(self):
        ranked = [RankedTables(qid=f"q{i}", ranking=["g", "a", "b", "c", "d"])
                  for i in range(4)]
        gold = {f"q{i}": "g" for i in range(4)}
        v = rank_metrics(ranked, gold, ks=[5]).values
        assert v["mrr"] == v["hit@1"] == v["r@5"] == v["ndcg@5"] == v["map"] == 1.0
        assert v["p@5"] == pytest.approx(0.2)

    def test_gold_absent(self):
        ranked = [RankedTables(qid="q", ranking=["a", "b"])]
        v = rank_metrics(ranked, {"q": "missing"}, ks=[5]).values
        assert all(val == 0.0 for val in v.values())

    def test_missing_gold_error(self):
        with pytest.raises(MissingGold):
            rank_metrics([RankedTables(qid="q", ranking=["a"])], {}, ks=[1])

    def test_duplicate_ranking_rejected(self):
        with pytest.raises(ValueError):
            RankedTables(qid="q", ranking=["a", "a"])

    def test_matches_oracle_on_random_rankings(self):
        rng = np.random.Generator(np.random.PCG64(5))
        tables = [f"t{i}" for i in range(20)]
        ks = [1, 3, 5, 10]
        for _ in range(300):
            perm = list(rng.permutation(tables))
            depth = int(rng.integers(1, len(perm) + 1))
            ranking = perm[:depth]
            gold = tables[int(rng.integers(0, len(tables)))]
            got = rank_metrics([RankedTables(qid="q", ranking=ranking)],
                               {"q": gold}, ks=ks).values
            want = oracle_question_metrics(ranking, gold, ks)
            for name, val in want.items():
                assert got[name] == pytest.approx(val, abs=1e-12), name

    def test_permutation_of_questions_invariant(self):
        rng = np.random.Generator(np.random.PCG64(6))
        tables = [f"t{i}" for i in range(8)]
        ranked = []
        gold = {}
        for i in range(10):
            perm = list(rng.permutation(tables))
            ranked.append(RankedTables(qid=f"q{i}", ranking=perm))
            gold[f"q{i}"] = tables[int(rng.integers(0, 8))]
        a = rank_metrics(ranked, gold, ks=[3]).values
        b = rank_metrics(list(reversed(ranked)), gold, ks=[3]).values
        assert a == b

    def test_improving_rank_never_hurts(self):
        base = ["a", "b", "g", "c", "d"]
        better = ["a", "g", "b", "c", "d"]
        ks = [1, 3, 5]
        v0 = rank_metrics([RankedTables(qid="q", ranking=base)],
                          {"q": "g"}, ks=ks).values
        v1 = rank_metrics([RankedTables(qid="q", ranking=better)],
                          {"q": "g"}, ks=ks).values
        for name in v0:
            assert v1[name] >= v0[name] - 1e-12

    def test_multi_gold_sets(self):
        ranked = [RankedTables(qid="q", ranking=["a", "g1", "b", "g2"])]
        v = rank_metrics(ranked, {"q": {"g1", "g2"}}, ks=[4]).values
        assert v["r@4"] == 1.0
        assert v["p@4"] == pytest.approx(0.5)
        # AP = (1/2)(1/2 + 2/4)
        assert v["map"] == pytest.approx(0.5)


class TestReports:
    def test_answer_metrics_numeric_split(self):
        examples = [
            QaExample(qid="q1", question="?", gold_table_id="t1",
                      answers=["42"]),
            QaExample(qid="q2", question="?", gold_table_id="t2",
                      answers=["Paris"]),
        ]
        report = answer_metrics({"q1": "42", "q2": "London"}, examples)
        assert report.values["em"] == pytest.approx(0.5)
        assert report.splits["numeric"]["n"] == 1
        assert report.splits["numeric"]["em"] == 1.0
        assert report.splits["non_numeric"]["em"] == 0.0

    def test_combined_report(self):
        examples = [QaExample(qid="q1", question="?", gold_table_id="g",
                              answers=["yes"])]
        report = combined_report(examples, {"q1": "yes"},
                                 {"q1": ["g", "x"]}, ks=[1])
        assert report.values["em"] == 1.0
        assert report.values["hit@1"] == 1.0
        assert report.n_questions == 1
        assert all(0.0 <= v <= 1.0 for v in report.values.values())
