#!/usr/bin/env python3
"""Benchmark the numba kernels against their pure-numpy fallbacks.

Covers the two hot paths: BM25 postings accumulation and graph ANN
build/search. The numpy side is what you get with TRAG_NUMBA=0; here both
are invoked explicitly so one process can time them side by side.

Usage: python benchmarks/bench_kernels.py [--segments 20000] [--vectors 4000]
"""
import argparse
import time

import numpy as np

from trag import Bm25Index, Segment
from trag.backend import NUMBA_ENABLED
from trag.hnsw import build_graph, search_graph


def timeit(fn, repeat=3):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def bench_bm25(n_segments: int, n_queries: int = 200) -> None:
    rng = np.random.Generator(np.random.PCG64(7))
    vocab = [f"w{i}" for i in range(2000)]
    # zipf-ish skew so postings lists vary in length like real text
    weights = 1.0 / np.arange(1, len(vocab) + 1)
    weights /= weights.sum()
    segments = []
    for i in range(n_segments):
        n = int(rng.integers(8, 60))
        toks = rng.choice(len(vocab), size=n, p=weights)
        segments.append(Segment(f"t{i}", 0, " ".join(vocab[t] for t in toks), n))
    index = Bm25Index.build(segments)
    queries = []
    for _ in range(n_queries):
        qn = int(rng.integers(1, 6))
        queries.append(" ".join(vocab[t] for t in rng.choice(200, size=qn)))

    def run(use_numba):
        def inner():
            acc = 0.0
            for q in queries:
                acc += float(index.segment_scores(q, use_numba=use_numba).sum())
            return acc
        return inner

    if NUMBA_ENABLED:
        run(True)()  # compile outside the timed region
        t_nb, out_nb = timeit(run(True))
    t_np, out_np = timeit(run(False))
    print(f"bm25 scoring   ({n_segments} segs, {n_queries} queries):")
    if NUMBA_ENABLED:
        assert abs(out_nb - out_np) < 1e-6 * max(abs(out_np), 1.0)
        print(f"  numba  {t_nb * 1e3:8.1f} ms")
    print(f"  numpy  {t_np * 1e3:8.1f} ms")
    if NUMBA_ENABLED:
        print(f"  speedup x{t_np / t_nb:.2f}")


def bench_hnsw(n_vectors: int, dim: int = 128, n_queries: int = 50) -> None:
    rng = np.random.Generator(np.random.PCG64(11))
    vectors = rng.normal(size=(n_vectors, dim)).astype(np.float32)
    vectors /= np.linalg.norm(vectors, axis=1, keepdims=True)
    queries = rng.normal(size=(n_queries, dim))
    queries /= np.linalg.norm(queries, axis=1, keepdims=True)

    results = {}
    backends = [True, False] if NUMBA_ENABLED else [False]
    for use_numba in backends:
        label = "numba" if use_numba else "numpy"
        if use_numba:  # warm the JIT on a small slice first
            build_graph(vectors[:64], m=8, seed=0, use_numba=True)
        t_build, graph = timeit(
            lambda: build_graph(vectors, seed=7, use_numba=use_numba),
            repeat=1)

        def run_queries():
            total = 0
            for q in queries:
                _, ids = search_graph(graph, vectors, q, k=10,
                                      ef_search=100, use_numba=use_numba)
                total += len(ids)
            return total

        run_queries()
        t_search, _ = timeit(run_queries)
        results[label] = (t_build, t_search)
        print(f"ann {label:5s} ({n_vectors} vecs, dim {dim}): "
              f"build {t_build:6.2f} s, {n_queries} queries "
              f"{t_search * 1e3:7.1f} ms")
    if len(results) == 2:
        print(f"  build speedup  x{results['numpy'][0] / results['numba'][0]:.2f}")
        print(f"  search speedup x{results['numpy'][1] / results['numba'][1]:.2f}")


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--segments", type=int, default=20_000)
    parser.add_argument("--vectors", type=int, default=4_000)
    parser.add_argument("--dim", type=int, default=128)
    args = parser.parse_args()
    print(f"numba available: {NUMBA_ENABLED}")
    bench_bm25(args.segments)
    bench_hnsw(args.vectors, dim=args.dim)


if __name__ == "__main__":
    main()
