"""Dense retrieval: embedding providers and a vector index with exact and
approximate (graph) k-NN over segment embeddings.

The metric is inner product; the local provider L2-normalizes, so ordering
matches cosine in practice. Query and passage embeddings go through
separate methods to keep the bi-encoder shape even when one model serves
both.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol, runtime_checkable

import httpx
import numpy as np

from .corpus import Segment
from .errors import DimensionMismatch, EmptyIndex
from .hnsw import DEFAULT_M, HnswGraph, build_graph, search_graph
from .store import load_store, save_store
from .tokenize import DEFAULT_TOKENIZER


@runtime_checkable
class EmbeddingProvider(Protocol):
    dim: int

    def embed_query(self, text: str) -> np.ndarray: ...

    def embed_passage(self, text: str) -> np.ndarray: ...


def embed_local(text: str, dim: int) -> np.ndarray:
    """Signed feature-hashed term-frequency vector, L2-normalized.

    Stable across processes (keyed on a content hash, not hash()). Empty
    or token-free text embeds to the zero vector.
    """
    if dim < 8:
        raise ValueError("dim must be at least 8")
    vec = np.zeros(dim, dtype=np.float64)
    for token in DEFAULT_TOKENIZER.tokens(text):
        h = int.from_bytes(
            hashlib.blake2b(token.encode("utf-8"), digest_size=8).digest(),
            "little")
        bucket = h % dim
        sign = 1.0 if (h >> 63) & 1 == 0 else -1.0
        vec[bucket] += sign
    norm = float(np.linalg.norm(vec))
    if norm > 0.0:
        vec /= norm
    return vec


class HashingEmbedder:
    """Deterministic local provider; same space for queries and passages."""

    def __init__(self, dim: int = 128):
        if dim < 8:
            raise ValueError("dim must be at least 8")
        self.dim = dim

    def embed_query(self, text: str) -> np.ndarray:
        return embed_local(text, self.dim)

    def embed_passage(self, text: str) -> np.ndarray:
        return embed_local(text, self.dim)


class RemoteEmbedder:
    """HTTP embedding-service client.

    Wire protocol: POST {base_url}/embed with {"texts": [...], "mode":
    "query"|"passage"} returning {"vectors": [[...], ...]}.
    """

    def __init__(self, base_url: str, dim: int, timeout: float = 30.0,
                 batch_size: int = 32, client: httpx.Client | None = None):
        self.base_url = base_url.rstrip("/")
        self.dim = dim
        self.batch_size = batch_size
        self._client = client or httpx.Client(timeout=timeout)

    def _embed(self, texts: list[str], mode: str) -> list[np.ndarray]:
        out: list[np.ndarray] = []
        for start in range(0, len(texts), self.batch_size):
            chunk = texts[start:start + self.batch_size]
            resp = self._client.post(f"{self.base_url}/embed",
                                     json={"texts": chunk, "mode": mode})
            resp.raise_for_status()
            for row in resp.json()["vectors"]:
                vec = np.asarray(row, dtype=np.float32)
                if vec.shape != (self.dim,):
                    raise DimensionMismatch(self.dim, int(vec.shape[0]))
                out.append(vec)
        return out

    def embed_query(self, text: str) -> np.ndarray:
        return self._embed([text], "query")[0]

    def embed_passage(self, text: str) -> np.ndarray:
        return self._embed([text], "passage")[0]

    def embed_passages(self, texts: list[str]) -> list[np.ndarray]:
        return self._embed(texts, "passage")


@dataclass(frozen=True)
class KnnHit:
    table_id: str
    seg_index: int
    score: float
    seg_pos: int


class DenseIndex:
    """Immutable vector store; ann graph present above the seg threshold."""

    def __init__(self, *, vectors: np.ndarray, seg_table_idx: np.ndarray,
                 seg_indices: np.ndarray, table_ids: list[str],
                 graph: HnswGraph | None, ann_threshold: int,
                 ef_search: int, seed: int):
        self.vectors = vectors
        self.seg_table_idx = seg_table_idx
        self.seg_indices = seg_indices
        self.table_ids = table_ids
        self.graph = graph
        self.ann_threshold = ann_threshold
        self.ef_search = ef_search
        self.seed = seed
        self._vec64 = vectors.astype(np.float64)

    @property
    def dim(self) -> int:
        return int(self.vectors.shape[1])

    @property
    def n_vectors(self) -> int:
        return int(self.vectors.shape[0])

    @classmethod
    def build(cls, segments: list[Segment], provider: EmbeddingProvider,
              ann_threshold: int = 1000, m: int = DEFAULT_M,
              ef_construction: int = 200, ef_search: int = 100,
              seed: int = 0, use_numba: bool | None = None) -> "DenseIndex":
        if not segments:
            raise EmptyIndex("no segments to index")
        if hasattr(provider, "embed_passages"):
            rows = provider.embed_passages([s.text for s in segments])
        else:
            rows = [provider.embed_passage(s.text) for s in segments]
        dim = int(provider.dim)
        for vec in rows:
            if vec.shape != (dim,):
                raise DimensionMismatch(dim, int(np.asarray(vec).shape[0]))
        vectors = np.ascontiguousarray(np.stack(rows), dtype=np.float32)

        table_ids: list[str] = []
        table_pos: dict[str, int] = {}
        n = len(segments)
        seg_table_idx = np.empty(n, dtype=np.int32)
        seg_indices = np.empty(n, dtype=np.int32)
        for i, seg in enumerate(segments):
            if seg.table_id not in table_pos:
                table_pos[seg.table_id] = len(table_ids)
                table_ids.append(seg.table_id)
            seg_table_idx[i] = table_pos[seg.table_id]
            seg_indices[i] = seg.seg_index

        graph = None
        if n >= ann_threshold:
            graph = build_graph(vectors, m=m, ef_construction=ef_construction,
                                seed=seed, use_numba=use_numba)
        return cls(vectors=vectors, seg_table_idx=seg_table_idx,
                   seg_indices=seg_indices, table_ids=table_ids, graph=graph,
                   ann_threshold=ann_threshold, ef_search=ef_search, seed=seed)

    @classmethod
    def from_vectors(cls, vectors: np.ndarray, table_ids: list[str] | None = None,
                     ann_threshold: int = 1000, m: int = DEFAULT_M,
                     ef_construction: int = 200, ef_search: int = 100,
                     seed: int = 0, use_numba: bool | None = None) -> "DenseIndex":
        """Index raw vectors directly (one synthetic table per vector)."""
        vectors = np.ascontiguousarray(vectors, dtype=np.float32)
        n = vectors.shape[0]
        if table_ids is None:
            width = len(str(max(n - 1, 0)))
            table_ids = [f"v{i:0{width}d}" for i in range(n)]
        elif len(table_ids) != n:
            raise ValueError(
                f"{len(table_ids)} table ids for {n} vectors")
        seg_table_idx = np.arange(n, dtype=np.int32)
        seg_indices = np.zeros(n, dtype=np.int32)
        graph = None
        if n >= ann_threshold:
            graph = build_graph(vectors, m=m, ef_construction=ef_construction,
                                seed=seed, use_numba=use_numba)
        return cls(vectors=vectors, seg_table_idx=seg_table_idx,
                   seg_indices=seg_indices, table_ids=table_ids, graph=graph,
                   ann_threshold=ann_threshold, ef_search=ef_search, seed=seed)

    def _hits(self, positions: np.ndarray, scores: np.ndarray,
              top_k: int, dedupe_tables: bool) -> list[KnnHit]:
        hits: list[KnnHit] = []
        seen: set[int] = set()
        for p, s in zip(positions, scores):
            t = int(self.seg_table_idx[p])
            if dedupe_tables:
                if t in seen:
                    continue
                seen.add(t)
            hits.append(KnnHit(table_id=self.table_ids[t],
                               seg_index=int(self.seg_indices[p]),
                               score=float(s), seg_pos=int(p)))
            if len(hits) == top_k:
                break
        return hits

    def knn(self, query_vec: np.ndarray, top_k: int, mode: str = "exact",
            dedupe_tables: bool = False, ef_search: int | None = None,
            use_numba: bool | None = None) -> list[KnnHit]:
        if self.n_vectors == 0:
            raise EmptyIndex("index holds no vectors")
        q = np.asarray(query_vec, dtype=np.float64).reshape(-1)
        if q.shape[0] != self.dim:
            raise DimensionMismatch(self.dim, int(q.shape[0]))
        if mode == "exact":
            scores = self._vec64 @ q
            # stable: score desc, then ascending segment position
            order = np.lexsort((np.arange(self.n_vectors), -scores))
            # when deduping we may need to walk past top_k positions
            depth = self.n_vectors if dedupe_tables else min(top_k, self.n_vectors)
            return self._hits(order[:depth], scores[order[:depth]],
                              top_k, dedupe_tables)
        if mode == "ann":
            if self.graph is None:
                # below the build threshold the flat scan is the graph's
                # exact limit; serve it rather than failing
                return self.knn(q, top_k, mode="exact",
                                dedupe_tables=dedupe_tables)
            ef = ef_search if ef_search is not None else self.ef_search
            fetch = max(top_k, ef) if dedupe_tables else top_k
            scores, ids = search_graph(self.graph, self.vectors, q,
                                       k=fetch, ef_search=ef,
                                       use_numba=use_numba)
            return self._hits(ids, scores, top_k, dedupe_tables)
        raise ValueError(f"unknown knn mode: {mode}")

    def save(self, path: str | Path) -> None:
        meta = {
            "table_ids": self.table_ids,
            "ann_threshold": self.ann_threshold,
            "ef_search": self.ef_search,
            "seed": self.seed,
            "has_graph": self.graph is not None,
        }
        arrays = {
            "vectors": self.vectors,
            "seg_table_idx": self.seg_table_idx,
            "seg_indices": self.seg_indices,
        }
        if self.graph is not None:
            g = self.graph
            meta["graph"] = {"m": g.m, "m0": g.m0,
                             "ef_construction": g.ef_construction,
                             "seed": g.seed, "entry": g.entry}
            arrays["levels"] = g.levels
            arrays["adj0"] = g.adj0
            arrays["deg0"] = g.deg0
            arrays["adj_up"] = g.adj_up
            arrays["deg_up"] = g.deg_up
        save_store(path, "dense", meta, arrays)

    @classmethod
    def load(cls, path: str | Path) -> "DenseIndex":
        meta, arrays = load_store(path, kind="dense")
        graph = None
        if meta.get("has_graph"):
            gm = meta["graph"]
            graph = HnswGraph(m=int(gm["m"]), m0=int(gm["m0"]),
                              ef_construction=int(gm["ef_construction"]),
                              seed=int(gm["seed"]), entry=int(gm["entry"]),
                              levels=arrays["levels"], adj0=arrays["adj0"],
                              deg0=arrays["deg0"], adj_up=arrays["adj_up"],
                              deg_up=arrays["deg_up"])
        return cls(vectors=arrays["vectors"],
                   seg_table_idx=arrays["seg_table_idx"],
                   seg_indices=arrays["seg_indices"],
                   table_ids=list(meta["table_ids"]), graph=graph,
                   ann_threshold=int(meta["ann_threshold"]),
                   ef_search=int(meta["ef_search"]), seed=int(meta["seed"]))
