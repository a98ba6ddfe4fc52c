"""Answer generation: per-candidate prompts, step-level marginalization of
generator distributions under retrieval priors, and beam-search decoding
with table provenance.

Marginalization happens per decoding step (the mixture distribution over
the next token), and the reported sequence probability is the product of
those step mixtures. Provenance is the candidate maximizing
prior(z) * p(sequence | z).
"""
from __future__ import annotations

import math
import threading
from dataclasses import dataclass, replace
from typing import Protocol, runtime_checkable

import httpx
import numpy as np

from .bm25 import Bm25Index
from .corpus import Segment
from .dense import DenseIndex, EmbeddingProvider
from .errors import LengthMismatch, NoCandidates

EOS = "</s>"


@dataclass(frozen=True)
class RetrievedCandidate:
    table_id: str
    seg_index: int
    score: float
    text: str
    prior: float | None = None


@dataclass(frozen=True)
class RetrievalPrior:
    candidates: list[tuple[RetrievedCandidate, float]]

    def __post_init__(self):
        total = sum(p for _, p in self.candidates)
        if self.candidates and abs(total - 1.0) > 1e-9:
            raise ValueError(f"priors sum to {total}, expected 1")

    def priors(self) -> np.ndarray:
        return np.array([p for _, p in self.candidates], dtype=np.float64)


@dataclass(frozen=True)
class AnswerResult:
    text: str
    log_prob: float
    provenance_table_id: str
    provenance_score: float


@runtime_checkable
class GeneratorContract(Protocol):
    vocab: list[str]
    eos: str

    def next_token_dist(self, prompt: str, prefix: tuple[str, ...]) -> np.ndarray: ...


def assemble_prompt(question: str, segment: Segment | str) -> str:
    text = segment.text if isinstance(segment, Segment) else str(segment)
    return f"question: {question} context: {text}"


def softmax_priors(candidates: list[RetrievedCandidate],
                   temperature: float = 1.0) -> RetrievalPrior:
    """Turn retrieval scores into p(z|q); shift-invariant by construction."""
    if not candidates:
        raise NoCandidates("no retrieved candidates")
    if temperature <= 0:
        raise ValueError("temperature must be positive")
    scores = np.array([c.score for c in candidates], dtype=np.float64)
    z = scores / temperature
    z -= z.max()
    p = np.exp(z)
    p /= p.sum()
    pairs = [(replace(c, prior=float(pi)), float(pi))
             for c, pi in zip(candidates, p)]
    return RetrievalPrior(pairs)


def marginalize_step(candidates: RetrievalPrior,
                     per_candidate_dists: list[np.ndarray]) -> np.ndarray:
    if len(per_candidate_dists) != len(candidates.candidates):
        raise LengthMismatch(
            f"{len(per_candidate_dists)} distributions for "
            f"{len(candidates.candidates)} candidates")
    priors = candidates.priors()
    stacked = np.stack([np.asarray(d, dtype=np.float64)
                        for d in per_candidate_dists])
    return priors @ stacked


class ToyGenerator:
    """Trie of memorized (context key, answer) pairs with add-lambda smoothing.

    A key is matched by substring against the prompt; the walked trie node
    yields continuation counts, smoothed so unseen prefixes never dead-end.
    Read-only after construction, safe for concurrent calls.
    """

    def __init__(self, memory: list[tuple[str, str]], smoothing: float = 1e-6):
        self.smoothing = smoothing
        tokens = sorted({t for _, answer in memory for t in answer.split()})
        self.vocab: list[str] = tokens + [EOS]
        self.eos = EOS
        self._tok_idx = {t: i for i, t in enumerate(self.vocab)}
        self._keys: list[str] = []
        self._tries: dict[str, dict] = {}
        for key, answer in memory:
            if key not in self._tries:
                self._keys.append(key)
                self._tries[key] = {"total": 0, "end": 0, "children": {}}
            node = self._tries[key]
            node["total"] += 1
            for tok in answer.split():
                node = node["children"].setdefault(
                    tok, {"total": 0, "end": 0, "children": {}})
                node["total"] += 1
            node["end"] += 1

    def _node_for(self, prompt: str, prefix: tuple[str, ...]) -> dict | None:
        for key in self._keys:
            if key and key in prompt:
                node = self._tries[key]
                for tok in prefix:
                    node = node["children"].get(tok)
                    if node is None:
                        return None
                return node
        return None

    def next_token_dist(self, prompt: str, prefix) -> np.ndarray:
        probs = np.full(len(self.vocab), self.smoothing, dtype=np.float64)
        node = self._node_for(prompt, tuple(prefix))
        if node is not None:
            for tok, child in node["children"].items():
                probs[self._tok_idx[tok]] += child["total"]
            probs[self._tok_idx[self.eos]] += node["end"]
        probs /= probs.sum()
        return probs

    @classmethod
    def from_examples(cls, tables_by_id: dict, examples,
                      smoothing: float = 1e-6) -> "ToyGenerator":
        """Memorize (gold table's segment prefix, first answer) per example."""
        from .corpus import segment_prefix
        memory = []
        for ex in examples:
            table = tables_by_id[ex.gold_table_id]
            memory.append((segment_prefix(table), ex.answers[0]))
        return cls(memory, smoothing=smoothing)


class RemoteGenerator:
    """HTTP generator client: POST {base_url}/next_token with
    {"prompt": ..., "prefix_tokens": [...]} -> {"probs": [...]}.

    The wire protocol carries no vocabulary, so it is supplied here.
    """

    def __init__(self, base_url: str, vocab: list[str], eos: str = EOS,
                 timeout: float = 30.0, client: httpx.Client | None = None):
        self.base_url = base_url.rstrip("/")
        self.vocab = list(vocab)
        self.eos = eos
        self._client = client or httpx.Client(timeout=timeout)

    def next_token_dist(self, prompt: str, prefix) -> np.ndarray:
        resp = self._client.post(
            f"{self.base_url}/next_token",
            json={"prompt": prompt, "prefix_tokens": list(prefix)})
        resp.raise_for_status()
        probs = np.asarray(resp.json()["probs"], dtype=np.float64)
        if probs.shape != (len(self.vocab),):
            raise LengthMismatch(
                f"generator returned {probs.shape[0]} probs for vocab "
                f"of {len(self.vocab)}")
        return probs


class SerializingGenerator:
    """Lock wrapper for generator backends that are not reentrant."""

    def __init__(self, inner):
        self._inner = inner
        self._lock = threading.Lock()
        self.vocab = inner.vocab
        self.eos = inner.eos

    def next_token_dist(self, prompt: str, prefix) -> np.ndarray:
        with self._lock:
            return self._inner.next_token_dist(prompt, prefix)


@dataclass
class _Beam:
    tokens: tuple[str, ...]
    log_prob: float           # sum of log step-mixture probabilities
    zlog: np.ndarray          # per-candidate log p(tokens | z)


def beam_decode(question: str, candidates: RetrievalPrior, generator,
                beam_width: int = 4, max_len: int = 32) -> list[AnswerResult]:
    """Beam search over the marginalized next-token distribution.

    A beam finishes on EOS (consuming its probability) or at max_len
    (without an EOS factor). Ties break on the token sequence itself.
    """
    if not candidates.candidates:
        raise NoCandidates("no retrieved candidates")
    if beam_width < 1 or max_len < 1:
        raise ValueError("beam_width and max_len must be >= 1")
    vocab = generator.vocab
    eos = generator.eos
    eos_idx = vocab.index(eos)
    n_cand = len(candidates.candidates)
    prompts = [assemble_prompt(question, c.text)
               for c, _ in candidates.candidates]
    priors = candidates.priors()
    log_priors = np.log(priors, out=np.full(n_cand, -np.inf), where=priors > 0)

    live: list[_Beam] = [_Beam((), 0.0, np.zeros(n_cand))]
    finished: list[_Beam] = []

    for _ in range(max_len):
        if not live:
            break
        expansions = []  # (logp, tokens, parent, token index, stacked dists)
        for beam in live:
            dists = [generator.next_token_dist(prompts[z], beam.tokens)
                     for z in range(n_cand)]
            mix = marginalize_step(candidates, dists)
            stacked = np.stack(dists)
            for ti, token in enumerate(vocab):
                p = float(mix[ti])
                if p <= 0.0:
                    continue
                expansions.append((beam.log_prob + math.log(p),
                                   beam.tokens + (token,), beam, ti, stacked))
        expansions.sort(key=lambda e: (-e[0], e[1]))
        new_live: list[_Beam] = []
        for logp, tokens, parent, ti, stacked in expansions:
            if ti != eos_idx and len(new_live) >= beam_width:
                continue
            with np.errstate(divide="ignore"):
                zstep = np.log(stacked[:, ti])
            child = _Beam(tokens if ti != eos_idx else tokens[:-1],
                          logp, parent.zlog + zstep)
            if ti == eos_idx:
                finished.append(child)
            else:
                new_live.append(child)
        # keep the finished pool bounded; scores only drop as beams grow
        finished.sort(key=lambda b: (-b.log_prob, b.tokens))
        del finished[max(beam_width, 1) * 4:]
        live = new_live

    finished.extend(live)  # length-capped beams count without an EOS factor
    finished.sort(key=lambda b: (-b.log_prob, b.tokens))

    results: list[AnswerResult] = []
    for beam in finished[:beam_width]:
        posterior = log_priors + beam.zlog
        j = int(np.argmax(posterior))
        results.append(AnswerResult(
            text=" ".join(beam.tokens),
            log_prob=beam.log_prob,
            provenance_table_id=candidates.candidates[j][0].table_id,
            provenance_score=float(np.exp(posterior[j]))))
    return results


@runtime_checkable
class Retriever(Protocol):
    def retrieve(self, query: str, n: int) -> list[RetrievedCandidate]: ...


class Bm25Retriever:
    """Table-level BM25 retrieval; candidate text is the best segment."""

    def __init__(self, index: Bm25Index, segments: list[Segment]):
        self.index = index
        self.segments = segments

    def retrieve(self, query: str, n: int) -> list[RetrievedCandidate]:
        hits = self.index.search(query, top_k=n)
        return [RetrievedCandidate(table_id=h.table_id, seg_index=h.seg_index,
                                   score=h.score,
                                   text=self.segments[h.seg_pos].text)
                for h in hits]


class DenseRetriever:
    def __init__(self, index: DenseIndex, segments: list[Segment],
                 provider: EmbeddingProvider, mode: str = "exact",
                 ef_search: int | None = None):
        self.index = index
        self.segments = segments
        self.provider = provider
        self.mode = mode
        self.ef_search = ef_search

    def retrieve(self, query: str, n: int) -> list[RetrievedCandidate]:
        qv = self.provider.embed_query(query)
        hits = self.index.knn(qv, top_k=n, mode=self.mode, dedupe_tables=True,
                              ef_search=self.ef_search)
        return [RetrievedCandidate(table_id=h.table_id, seg_index=h.seg_index,
                                   score=h.score,
                                   text=self.segments[h.seg_pos].text)
                for h in hits]


def answer(question: str, retriever: Retriever, generator,
           n_docs: int = 5, beam_width: int = 4, max_len: int = 32,
           temperature: float = 1.0) -> list[AnswerResult]:
    """Retrieve, softmax scores into priors, beam-decode. Sorted by log_prob."""
    cands = retriever.retrieve(question, n_docs)
    if not cands:
        raise NoCandidates(f"nothing retrieved for {question!r}")
    prior = softmax_priors(cands, temperature=temperature)
    return beam_decode(question, prior, generator,
                       beam_width=beam_width, max_len=max_len)
