"""Soft hard negatives: BM25 pool per question, gold discarded, uniform
draw without replacement from the top-k remaining tables.

Per-question RNG streams are derived as seed XOR a stable hash of the qid,
so output is identical under any scheduling of questions.
"""
from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .bm25 import Bm25Index
from .corpus import QaExample
from .errors import EmptyQuery

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class MinerConfig:
    pool_size: int = 100
    k: int = 3
    negatives_per_question: int = 1
    rng_seed: int = 17

    def __post_init__(self):
        if self.pool_size < 1 or self.k < 1 or self.negatives_per_question < 1:
            raise ValueError("pool_size, k and negatives_per_question must be >= 1")
        if self.k > self.pool_size:
            raise ValueError("k must not exceed pool_size")
        if self.negatives_per_question > self.k:
            raise ValueError("negatives_per_question must not exceed k")


@dataclass(frozen=True)
class MinedNegative:
    qid: str
    negative_table_id: str
    bm25_rank: int  # 1-based rank within the non-gold pool


def _qid_stream(seed: int, qid: str) -> np.random.Generator:
    digest = hashlib.blake2b(qid.encode("utf-8"), digest_size=8).digest()
    derived = (seed ^ int.from_bytes(digest, "little")) & 0xFFFFFFFFFFFFFFFF
    return np.random.Generator(np.random.PCG64(derived))


def mine(examples: list[QaExample], index: Bm25Index,
         config: MinerConfig) -> list[MinedNegative]:
    out: list[MinedNegative] = []
    for ex in examples:
        try:
            hits = index.search(ex.question, top_k=config.pool_size)
        except EmptyQuery:
            log.warning("question %s has no indexable tokens; zero negatives",
                        ex.qid)
            continue
        pool = [h.table_id for h in hits if h.table_id != ex.gold_table_id]
        if not pool:
            log.warning("empty non-gold pool for %s; zero negatives", ex.qid)
            continue
        window = pool[:config.k]
        n_draw = min(config.negatives_per_question, len(window))
        rng = _qid_stream(config.rng_seed, ex.qid)
        picks = rng.choice(len(window), size=n_draw, replace=False)
        for p in sorted(int(x) for x in picks):
            out.append(MinedNegative(qid=ex.qid,
                                     negative_table_id=window[p],
                                     bm25_rank=p + 1))
    return out


def write_negatives(negatives: list[MinedNegative], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for neg in negatives:
            fh.write(json.dumps(
                {"qid": neg.qid, "negative_table_id": neg.negative_table_id,
                 "bm25_rank": neg.bm25_rank},
                ensure_ascii=False, sort_keys=True))
            fh.write("\n")
