import math
import re
from collections import Counter

import numpy as np
import pytest

from trag import Bm25Index, Segment
from trag.errors import EmptyCorpus, EmptyQuery


def seg(table_id, text, seg_index=0):
    return Segment(table_id=table_id, seg_index=seg_index, text=text,
                   token_count=len(text.split()))


def brute_force_table_scores(segments, query, k1, b):
    """Independent scorer: python dicts, same formula, max over segments.

    Accumulation order is part of the scoring definition (sorted unique
    query terms, weighted by their query count), so exact order comparison
    against the index is meaningful even for mathematically tied docs.
    """
    toks = [t.lower() for t in re.findall(r"[^\W_]+", query, re.UNICODE)]
    qcounts = Counter(toks)
    docs = [[t.lower() for t in re.findall(r"[^\W_]+", s.text, re.UNICODE)]
            for s in segments]
    n = len(docs)
    avg = sum(len(d) for d in docs) / n
    df = Counter()
    for d in docs:
        for t in set(d):
            df[t] += 1
    per_table = {}
    for s, d in zip(segments, docs):
        tf = Counter(d)
        score = 0.0
        for t in sorted(qcounts):
            if t not in tf:
                continue
            idf = math.log(1 + (n - df[t] + 0.5) / (df[t] + 0.5))
            w = qcounts[t] * idf * (k1 + 1.0)
            f = float(tf[t])
            score += (w * f) / (f + k1 * (1.0 - b + b * len(d) / avg))
        prev = per_table.get(s.table_id)
        if prev is None or score > prev:
            per_table[s.table_id] = score
    ranked = sorted(((tid, sc) for tid, sc in per_table.items() if sc > 0),
                    key=lambda x: (-x[1], x[0]))
    return ranked


class TestBuild:
    def test_df_counts(self):
        idx = Bm25Index.build([seg("d1", "a"), seg("d2", "a"), seg("d3", "b")])
        assert idx.n_segs == 3
        ta, tb = idx.vocab["a"], idx.vocab["b"]
        assert idx.offsets[ta + 1] - idx.offsets[ta] == 2
        assert idx.offsets[tb + 1] - idx.offsets[tb] == 1

    def test_rebuild_identical(self, tmp_path):
        segments = [seg("d1", "apple banana"), seg("d2", "cherry date")]
        a = Bm25Index.build(segments)
        b = Bm25Index.build(segments)
        pa, pb = tmp_path / "a.bin", tmp_path / "b.bin"
        a.save(pa)
        b.save(pb)
        assert pa.read_bytes() == pb.read_bytes()

    def test_empty_corpus(self):
        with pytest.raises(EmptyCorpus):
            Bm25Index.build([])

    def test_token_free_segments_build_finite(self):
        idx = Bm25Index.build([seg("d1", "***"), seg("d2", "|||")])
        assert np.isfinite(idx.doc_norm).all()
        assert idx.search("anything", top_k=5) == []

    def test_segment_count_at_least_table_count(self, tiny_corpus):
        from trag import segment_corpus
        segments = segment_corpus(tiny_corpus)
        idx = Bm25Index.build(segments)
        assert idx.n_segs >= len(tiny_corpus)
        assert idx.n_tables == len(tiny_corpus)


class TestSearch:
    def test_hand_example(self):
        segments = [seg("d1", "apple banana"), seg("d2", "apple apple"),
                    seg("d3", "cherry")]
        idx = Bm25Index.build(segments, k1=0.9, b=0.4)
        hits = idx.search("apple", top_k=10)
        assert [h.table_id for h in hits] == ["d2", "d1"]

    def test_absent_term(self):
        idx = Bm25Index.build([seg("d1", "apple")])
        assert idx.search("zebra", top_k=5) == []

    def test_empty_query(self):
        idx = Bm25Index.build([seg("d1", "apple")])
        with pytest.raises(EmptyQuery):
            idx.search("***", top_k=5)

    def test_full_text_query_ranks_first(self):
        texts = ["apple banana cherry", "dog elephant fox",
                 "grape honey iris", "jackal kiwi lemon"]
        segments = [seg(f"d{i}", t) for i, t in enumerate(texts)]
        idx = Bm25Index.build(segments)
        for i, text in enumerate(texts):
            hits = idx.search(text, top_k=4)
            oracle = brute_force_table_scores(segments, text, 0.9, 0.4)
            assert hits[0].table_id == oracle[0][0] == f"d{i}"

    def test_tie_break_ascending_table_id(self):
        segments = [seg("zz", "same text"), seg("aa", "same text")]
        idx = Bm25Index.build(segments)
        hits = idx.search("same", top_k=2)
        assert [h.table_id for h in hits] == ["aa", "zz"]
        assert hits[0].score == hits[1].score

    def test_top_k_clamps(self):
        idx = Bm25Index.build([seg("d1", "apple")])
        assert len(idx.search("apple", top_k=100)) == 1


class TestOracle:
    def test_matches_brute_force_on_random_corpora(self):
        rng = np.random.Generator(np.random.PCG64(99))
        vocab = [f"w{i}" for i in range(30)]
        segments = []
        for i in range(40):
            n = int(rng.integers(1, 12))
            text = " ".join(vocab[int(j)] for j in rng.integers(0, len(vocab), n))
            segments.append(seg(f"t{i:02d}", text, seg_index=0))
        idx = Bm25Index.build(segments, k1=0.9, b=0.4)
        for _ in range(100):
            qlen = int(rng.integers(1, 5))
            query = " ".join(vocab[int(j)] for j in rng.integers(0, len(vocab), qlen))
            hits = idx.search(query, top_k=40)
            oracle = brute_force_table_scores(segments, query, 0.9, 0.4)
            assert [h.table_id for h in hits] == [t for t, _ in oracle]
            for h, (_, score) in zip(hits, oracle):
                assert h.score == pytest.approx(score, abs=1e-12)


class TestFormulaProperties:
    def test_tf_monotonic(self):
        # score term is increasing in tf with the length norm held fixed
        k1, b = 0.9, 0.4
        for norm in (0.5, 1.0, 2.0, 7.3):
            prev = -1.0
            for tf in range(1, 30):
                val = (tf * (k1 + 1)) / (tf + k1 * norm)
                assert val > prev
                prev = val

    def test_extra_occurrence_in_index_never_hurts(self):
        base = [seg("d1", "apple pie"), seg("d2", "apple apple pie"),
                seg("d3", "other text")]
        idx = Bm25Index.build(base, k1=0.9, b=0.4)
        scores = {h.table_id: h.score for h in idx.search("apple", top_k=3)}
        assert scores["d2"] >= scores["d1"]

    def test_idf_positive_for_all_df(self):
        segments = [seg(f"d{i}", "common") for i in range(5)]
        segments.append(seg("d5", "common rare"))
        idx = Bm25Index.build(segments)
        assert (idx.idf > 0).all()


class TestPersistence:
    def test_round_trip(self, tmp_path):
        segments = [seg("d1", "apple banana"), seg("d2", "apple apple"),
                    seg("d3", "cherry")]
        idx = Bm25Index.build(segments, k1=1.2, b=0.75)
        path = tmp_path / "bm25.bin"
        idx.save(path)
        loaded = Bm25Index.load(path)
        assert loaded.k1 == idx.k1 and loaded.b == idx.b
        assert loaded.vocab == idx.vocab
        assert loaded.table_ids == idx.table_ids
        h1 = idx.search("apple banana", top_k=3)
        h2 = loaded.search("apple banana", top_k=3)
        assert h1 == h2

    def test_kind_checked(self, tmp_path):
        from trag.errors import BadIndexFile
        path = tmp_path / "x.bin"
        path.write_bytes(b"garbage here, not an index")
        with pytest.raises(BadIndexFile):
            Bm25Index.load(path)


def test_backends_agree():
    segments = [seg(f"d{i}", f"tok{i} shared common" if i % 2 else f"tok{i} shared")
                for i in range(20)]
    idx = Bm25Index.build(segments)
    s_numba = idx.segment_scores("shared common tok3", use_numba=True)
    s_numpy = idx.segment_scores("shared common tok3", use_numba=False)
    np.testing.assert_allclose(s_numba, s_numpy, rtol=0, atol=1e-15)
