"""BM25 scoring kernels: a numba-jitted hot loop with a numpy fallback.

Both paths share one arithmetic shape (same operation order, float64
accumulation) so they agree to float precision. The TRAG_NUMBA env flag
sets the default path; callers may force either explicitly, which is what
the benchmark does. The numba module is imported lazily so the fallback
works without it.
"""
from __future__ import annotations

import numpy as np

from .backend import NUMBA_ENABLED


def _bm25_accumulate_numpy(offsets, post_segs, post_tfs, idf, doc_norm,
                           k1, term_ids, qtfs, n_segs):
    scores = np.zeros(n_segs, dtype=np.float64)
    for t, qtf in zip(term_ids, qtfs):
        lo, hi = offsets[t], offsets[t + 1]
        segs = post_segs[lo:hi]
        f = post_tfs[lo:hi].astype(np.float64)
        w = qtf * idf[t] * (k1 + 1.0)
        # Segment ids are unique within one postings list, so in-place
        # fancy-index add is safe here.
        scores[segs] += (w * f) / (f + doc_norm[segs])
    return scores


def bm25_accumulate(offsets: np.ndarray, post_segs: np.ndarray,
                    post_tfs: np.ndarray, idf: np.ndarray,
                    doc_norm: np.ndarray, k1: float,
                    term_ids: np.ndarray, qtfs: np.ndarray, n_segs: int,
                    use_numba: bool | None = None) -> np.ndarray:
    """Per-segment BM25 scores for one query's (term id, query tf) pairs."""
    if use_numba is None:
        use_numba = NUMBA_ENABLED
    if use_numba:
        from .kernels_numba import bm25_accumulate_numba
        return bm25_accumulate_numba(offsets, post_segs, post_tfs, idf,
                                     doc_norm, k1, term_ids, qtfs, n_segs)
    return _bm25_accumulate_numpy(offsets, post_segs, post_tfs, idf,
                                  doc_norm, k1, term_ids, qtfs, n_segs)
