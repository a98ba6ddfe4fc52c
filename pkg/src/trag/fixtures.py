"""Synthetic corpus used by the end-to-end smoke pipeline and tests.

Every table carries tokens that appear nowhere else and a unique answer
cell, so sparse retrieval puts the gold table at rank 1 and a memorizing
generator reproduces the answer exactly.
"""
from __future__ import annotations

from pathlib import Path

from .corpus import QaExample, TableDoc, write_corpus, write_qa


def make_fixture(n_tables: int = 50) -> tuple[list[TableDoc], list[QaExample]]:
    tables: list[TableDoc] = []
    examples: list[QaExample] = []
    for i in range(n_tables):
        tid = f"t{i:03d}"
        topic = f"topic{i:03d}q"
        answer = f"ans{i:03d}z"
        title = f"Catalog of {topic}"
        rows = [
            [f"item{i:03d}a", answer, f"{1900 + i}"],
            [f"item{i:03d}b", f"other{i:03d}y", f"{1950 + i}"],
            [f"item{i:03d}c", f"spare{i:03d}w", f"{2000 + i}"],
        ]
        tables.append(TableDoc(id=tid, title=title,
                               header=["name", "value", "year"], rows=rows))
        examples.append(QaExample(
            qid=f"q{i:03d}",
            question=f"what is the value of item{i:03d}a in {topic}",
            gold_table_id=tid,
            answers=[answer]))
    return tables, examples


def write_fixture(out_dir: str | Path, n_tables: int = 50) -> tuple[Path, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    tables, examples = make_fixture(n_tables)
    corpus_path = out / "corpus.jsonl"
    qa_path = out / "qa.jsonl"
    write_corpus(tables, corpus_path)
    write_qa(examples, qa_path)
    return corpus_path, qa_path
