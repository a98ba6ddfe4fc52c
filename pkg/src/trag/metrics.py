"""Answer and ranking metrics.

Answer scoring normalizes both sides (lowercase, strip punctuation, drop
articles, collapse whitespace) before exact-match and token-multiset F1.
Ranking metrics treat relevance as binary with one gold table per question
unless a gold set is supplied; aggregates are plain means over questions.
"""
from __future__ import annotations

import unicodedata
from collections import Counter
from dataclasses import dataclass, field

from .errors import MissingGold

_ARTICLES = {"a", "an", "the"}


def _is_punct(ch: str) -> bool:
    return unicodedata.category(ch).startswith("P")


def normalize_answer(s: str) -> str:
    s = s.lower()
    s = "".join(ch for ch in s if not _is_punct(ch))
    tokens = [t for t in s.split() if t not in _ARTICLES]
    return " ".join(tokens)


def token_f1(pred_tokens: list[str], gold_tokens: list[str]) -> float:
    if not pred_tokens and not gold_tokens:
        return 1.0
    if not pred_tokens or not gold_tokens:
        return 0.0
    common = sum((Counter(pred_tokens) & Counter(gold_tokens)).values())
    if common == 0:
        return 0.0
    precision = common / len(pred_tokens)
    recall = common / len(gold_tokens)
    return 2 * precision * recall / (precision + recall)


def em_f1(prediction: str, golds: list[str]) -> tuple[int, float]:
    if not golds:
        raise ValueError("golds must be non-empty")
    pred = normalize_answer(prediction)
    pred_tokens = pred.split()
    em = 0
    best_f1 = 0.0
    for gold in golds:
        g = normalize_answer(gold)
        if pred == g:
            em = 1
        best_f1 = max(best_f1, token_f1(pred_tokens, g.split()))
    return em, best_f1


@dataclass(frozen=True)
class RankedTables:
    qid: str
    ranking: list[str]

    def __post_init__(self):
        if len(set(self.ranking)) != len(self.ranking):
            raise ValueError(f"duplicate table ids in ranking for {self.qid!r}")


@dataclass
class MetricReport:
    values: dict[str, float]
    n_questions: int
    per_question: list[dict] = field(default_factory=list)
    splits: dict[str, dict] = field(default_factory=dict)


def _log2(x: float) -> float:
    import math
    return math.log2(x)


def question_rank_metrics(ranking: list[str], relevant: set[str],
                          ks: list[int]) -> dict[str, float]:
    """All per-question ranking metrics for one binary-relevance judgment."""
    rel_ranks = [i + 1 for i, t in enumerate(ranking) if t in relevant]
    n_rel = len(relevant)
    out: dict[str, float] = {}
    out["mrr"] = 1.0 / rel_ranks[0] if rel_ranks else 0.0
    out["hit@1"] = 1.0 if rel_ranks and rel_ranks[0] == 1 else 0.0
    ap = 0.0
    for hit_no, rank in enumerate(rel_ranks, start=1):
        ap += hit_no / rank
    out["map"] = ap / n_rel if n_rel else 0.0
    for k in ks:
        in_top = [r for r in rel_ranks if r <= k]
        out[f"r@{k}"] = len(in_top) / n_rel if n_rel else 0.0
        out[f"p@{k}"] = len(in_top) / k
        dcg = sum(1.0 / _log2(r + 1) for r in in_top)
        idcg = sum(1.0 / _log2(i + 1) for i in range(1, min(n_rel, k) + 1))
        out[f"ndcg@{k}"] = dcg / idcg if idcg > 0 else 0.0
    return out


def rank_metrics(rankings: list[RankedTables],
                 gold: dict[str, str | set[str]],
                 ks: list[int] | None = None) -> MetricReport:
    ks = ks if ks is not None else [5, 10]
    per_question: list[dict] = []
    sums: Counter = Counter()
    for ranked in rankings:
        if ranked.qid not in gold:
            raise MissingGold(ranked.qid)
        g = gold[ranked.qid]
        relevant = {g} if isinstance(g, str) else set(g)
        row = question_rank_metrics(ranked.ranking, relevant, ks)
        per_question.append({"qid": ranked.qid, **row})
        for name, value in row.items():
            sums[name] += value
    n = len(rankings)
    values = {name: (sums[name] / n if n else 0.0) for name in sums}
    return MetricReport(values=values, n_questions=n,
                        per_question=per_question)


def answer_metrics(predictions: dict[str, str], examples) -> MetricReport:
    """EM/F1 over QA examples, with a numeric/non-numeric split.

    A question counts as numeric when any gold answer contains a digit.
    """
    per_question: list[dict] = []
    em_sum = 0.0
    f1_sum = 0.0
    split_sums = {True: Counter(), False: Counter()}
    split_counts = {True: 0, False: 0}
    for ex in examples:
        pred = predictions.get(ex.qid, "")
        em, f1 = em_f1(pred, ex.answers)
        numeric = any(any(ch.isdigit() for ch in a) for a in ex.answers)
        per_question.append({"qid": ex.qid, "em": float(em), "f1": f1,
                             "numeric": numeric})
        em_sum += em
        f1_sum += f1
        split_sums[numeric]["em"] += em
        split_sums[numeric]["f1"] += f1
        split_counts[numeric] += 1
    n = len(examples)
    values = {"em": em_sum / n if n else 0.0, "f1": f1_sum / n if n else 0.0}
    splits = {}
    for numeric, label in ((True, "numeric"), (False, "non_numeric")):
        cnt = split_counts[numeric]
        splits[label] = {
            "n": cnt,
            "em": split_sums[numeric]["em"] / cnt if cnt else 0.0,
            "f1": split_sums[numeric]["f1"] / cnt if cnt else 0.0,
        }
    return MetricReport(values=values, n_questions=n,
                        per_question=per_question, splits=splits)


def combined_report(examples, predictions: dict[str, str],
                    rankings: dict[str, list[str]] | None,
                    ks: list[int] | None = None) -> MetricReport:
    """Answer metrics plus ranking metrics over one prediction set."""
    report = answer_metrics(predictions, examples)
    if rankings is not None:
        ranked = [RankedTables(qid=ex.qid, ranking=rankings.get(ex.qid, []))
                  for ex in examples]
        gold = {ex.qid: ex.gold_table_id for ex in examples}
        rm = rank_metrics(ranked, gold, ks=ks)
        report.values.update(rm.values)
        by_qid = {row["qid"]: row for row in rm.per_question}
        for row in report.per_question:
            extra = by_qid.get(row["qid"], {})
            row.update({k: v for k, v in extra.items() if k != "qid"})
    return report
