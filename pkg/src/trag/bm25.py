"""Inverted index with Okapi BM25 ranking over table segments.

Scores use IDF(t) = ln(1 + (N - df + 0.5)/(df + 0.5)), which is strictly
positive for every df <= N. A table's score is the max over its segments;
repeated query tokens contribute once per occurrence. Ties order by
ascending table id.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corpus import Segment
from .errors import EmptyCorpus, EmptyQuery
from .kernels import bm25_accumulate
from .store import load_store, save_store
from .tokenize import DEFAULT_TOKENIZER, Tokenizer


@dataclass(frozen=True)
class ScoredHit:
    table_id: str
    seg_index: int
    score: float
    seg_pos: int  # position in the indexed segment list


class Bm25Index:
    """Immutable after build; concurrent searches need no locks."""

    def __init__(self, *, vocab: dict[str, int], offsets: np.ndarray,
                 post_segs: np.ndarray, post_tfs: np.ndarray,
                 idf: np.ndarray, doc_len: np.ndarray, doc_norm: np.ndarray,
                 avg_doc_len: float, seg_table_idx: np.ndarray,
                 seg_indices: np.ndarray, table_ids: list[str],
                 k1: float, b: float):
        self.vocab = vocab
        self.offsets = offsets
        self.post_segs = post_segs
        self.post_tfs = post_tfs
        self.idf = idf
        self.doc_len = doc_len
        self.doc_norm = doc_norm
        self.avg_doc_len = avg_doc_len
        self.seg_table_idx = seg_table_idx
        self.seg_indices = seg_indices
        self.table_ids = table_ids
        self.k1 = k1
        self.b = b

    @property
    def n_segs(self) -> int:
        return int(self.doc_len.shape[0])

    @property
    def n_tables(self) -> int:
        return len(self.table_ids)

    @classmethod
    def build(cls, segments: list[Segment], k1: float = 0.9, b: float = 0.4,
              tokenizer: Tokenizer | None = None) -> "Bm25Index":
        if not segments:
            raise EmptyCorpus("no segments to index")
        tok = tokenizer or DEFAULT_TOKENIZER
        n = len(segments)

        table_ids: list[str] = []
        table_pos: dict[str, int] = {}
        seg_table_idx = np.empty(n, dtype=np.int32)
        seg_indices = np.empty(n, dtype=np.int32)
        doc_len = np.empty(n, dtype=np.float64)

        per_seg: list[Counter] = []
        for i, seg in enumerate(segments):
            counts = Counter(tok.tokens(seg.text))
            per_seg.append(counts)
            doc_len[i] = sum(counts.values())
            if seg.table_id not in table_pos:
                table_pos[seg.table_id] = len(table_ids)
                table_ids.append(seg.table_id)
            seg_table_idx[i] = table_pos[seg.table_id]
            seg_indices[i] = seg.seg_index

        # Sorted vocabulary keeps serialization and postings layout stable.
        terms = sorted(set().union(*per_seg)) if per_seg else []
        vocab = {t: i for i, t in enumerate(terms)}
        df = np.zeros(len(terms), dtype=np.int64)
        for counts in per_seg:
            for t in counts:
                df[vocab[t]] += 1

        offsets = np.zeros(len(terms) + 1, dtype=np.int64)
        offsets[1:] = np.cumsum(df)
        total = int(offsets[-1])
        post_segs = np.empty(total, dtype=np.int32)
        post_tfs = np.empty(total, dtype=np.float32)
        cursor = offsets[:-1].copy()
        for i, counts in enumerate(per_seg):
            for t, f in counts.items():
                tid = vocab[t]
                post_segs[cursor[tid]] = i
                post_tfs[cursor[tid]] = f
                cursor[tid] += 1
        # Segments are visited in index order, so postings come out sorted
        # by segment ref.

        # all-empty segments would zero the average and poison the norm
        avg = float(doc_len.mean()) or 1.0
        nf = float(n)
        idf = np.log(1.0 + (nf - df + 0.5) / (df + 0.5))
        doc_norm = k1 * (1.0 - b + b * doc_len / avg)
        return cls(vocab=vocab, offsets=offsets, post_segs=post_segs,
                   post_tfs=post_tfs, idf=idf, doc_len=doc_len,
                   doc_norm=doc_norm, avg_doc_len=avg,
                   seg_table_idx=seg_table_idx, seg_indices=seg_indices,
                   table_ids=table_ids, k1=k1, b=b)

    def segment_scores(self, query: str, tokenizer: Tokenizer | None = None,
                       use_numba: bool | None = None) -> np.ndarray:
        """Raw per-segment scores; zero for segments without query terms."""
        tok = tokenizer or DEFAULT_TOKENIZER
        tokens = tok.tokens(query)
        if not tokens:
            raise EmptyQuery(f"query has no indexable token: {query!r}")
        counts = Counter(t for t in tokens if t in self.vocab)
        if not counts:
            return np.zeros(self.n_segs, dtype=np.float64)
        items = sorted(counts.items())
        term_ids = np.array([self.vocab[t] for t, _ in items], dtype=np.int64)
        qtfs = np.array([float(c) for _, c in items], dtype=np.float64)
        return bm25_accumulate(self.offsets, self.post_segs, self.post_tfs,
                               self.idf, self.doc_norm, self.k1,
                               term_ids, qtfs, self.n_segs,
                               use_numba=use_numba)

    def search(self, query: str, top_k: int = 10,
               aggregate: str = "max-segment",
               tokenizer: Tokenizer | None = None,
               use_numba: bool | None = None) -> list[ScoredHit]:
        """Table-level hits: best segment per table, positive scores only."""
        if aggregate != "max-segment":
            raise ValueError(f"unknown aggregate mode: {aggregate}")
        if top_k < 1:
            raise ValueError("top_k must be positive")
        scores = self.segment_scores(query, tokenizer=tokenizer,
                                     use_numba=use_numba)
        pos = np.flatnonzero(scores > 0.0)
        if pos.size == 0:
            return []
        # Per table keep the best-scoring segment (lowest position on ties).
        order = np.lexsort((pos, -scores[pos], self.seg_table_idx[pos]))
        ordered = pos[order]
        tables = self.seg_table_idx[ordered]
        _, first = np.unique(tables, return_index=True)
        best_pos = ordered[first]

        hits = [
            ScoredHit(table_id=self.table_ids[int(self.seg_table_idx[p])],
                      seg_index=int(self.seg_indices[p]),
                      score=float(scores[p]),
                      seg_pos=int(p))
            for p in best_pos
        ]
        hits.sort(key=lambda h: (-h.score, h.table_id))
        return hits[:top_k]

    def save(self, path: str | Path) -> None:
        meta = {
            "k1": self.k1,
            "b": self.b,
            "avg_doc_len": self.avg_doc_len,
            "terms": sorted(self.vocab, key=self.vocab.get),
            "table_ids": self.table_ids,
        }
        arrays = {
            "offsets": self.offsets,
            "post_segs": self.post_segs,
            "post_tfs": self.post_tfs,
            "idf": self.idf,
            "doc_len": self.doc_len,
            "doc_norm": self.doc_norm,
            "seg_table_idx": self.seg_table_idx,
            "seg_indices": self.seg_indices,
        }
        save_store(path, "bm25", meta, arrays)

    @classmethod
    def load(cls, path: str | Path) -> "Bm25Index":
        meta, arrays = load_store(path, kind="bm25")
        vocab = {t: i for i, t in enumerate(meta["terms"])}
        return cls(vocab=vocab, offsets=arrays["offsets"],
                   post_segs=arrays["post_segs"], post_tfs=arrays["post_tfs"],
                   idf=arrays["idf"], doc_len=arrays["doc_len"],
                   doc_norm=arrays["doc_norm"],
                   avg_doc_len=float(meta["avg_doc_len"]),
                   seg_table_idx=arrays["seg_table_idx"],
                   seg_indices=arrays["seg_indices"],
                   table_ids=list(meta["table_ids"]),
                   k1=float(meta["k1"]), b=float(meta["b"]))
