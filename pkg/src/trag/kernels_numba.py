"""Jitted twin of the BM25 accumulation loop. Imported lazily."""
import numpy as np
from numba import njit


@njit(cache=True)
def bm25_accumulate_numba(offsets, post_segs, post_tfs, idf, doc_norm,
                          k1, term_ids, qtfs, n_segs):
    scores = np.zeros(n_segs, dtype=np.float64)
    for qi in range(term_ids.shape[0]):
        t = term_ids[qi]
        w = qtfs[qi] * idf[t] * (k1 + 1.0)
        for p in range(offsets[t], offsets[t + 1]):
            s = post_segs[p]
            f = np.float64(post_tfs[p])
            scores[s] += (w * f) / (f + doc_norm[s])
    return scores
