"""Table/QA data model, JSONL ingestion, linearization and segmentation.

A table is flattened into "<header> | <cell>" pairs joined by single
spaces, one " *" terminating each row, with the title (when present)
prepended. Segments are chunks of that flat form that fit a token budget;
each segment repeats the title+header prefix so it stands alone as a
retrieval unit.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

from .errors import (
    BudgetTooSmall,
    DuplicateId,
    MalformedRecord,
    NonRectangular,
)
from .tokenize import DEFAULT_TOKENIZER, Tokenizer


@dataclass(frozen=True)
class TableDoc:
    """One structured table. Rows must be rectangular w.r.t. the header."""

    id: str
    title: str | None
    header: list[str]
    rows: list[list[str]]


@dataclass(frozen=True)
class QaExample:
    qid: str
    question: str
    gold_table_id: str
    answers: list[str]


@dataclass(frozen=True)
class Segment:
    """A token-budgeted slice of a table's linearization."""

    table_id: str
    seg_index: int
    text: str
    token_count: int


def validate_table(table: TableDoc) -> None:
    if not table.id:
        raise MalformedRecord(0, "empty table id")
    width = len(table.header)
    for i, row in enumerate(table.rows):
        if len(row) != width:
            raise NonRectangular(table.id, i + 1)


def _parse_table_record(obj: dict, line_no: int) -> TableDoc:
    try:
        tid = obj["id"]
        title = obj.get("title")
        header = obj["header"]
        rows = obj["rows"]
    except (KeyError, TypeError) as exc:
        raise MalformedRecord(line_no, f"missing field: {exc}") from exc
    if not isinstance(tid, str) or not tid:
        raise MalformedRecord(line_no, "id must be a non-empty string")
    if title is not None and not isinstance(title, str):
        raise MalformedRecord(line_no, "title must be a string or null")
    if not isinstance(header, list) or not all(isinstance(h, str) for h in header):
        raise MalformedRecord(line_no, "header must be a list of strings")
    if not isinstance(rows, list):
        raise MalformedRecord(line_no, "rows must be a list of rows")
    for i, row in enumerate(rows):
        if not isinstance(row, list) or not all(isinstance(c, str) for c in row):
            raise MalformedRecord(line_no, f"row {i + 1} must be a list of strings")
        if len(row) != len(header):
            raise NonRectangular(tid, i + 1)
    return TableDoc(id=tid, title=title, header=header, rows=rows)


def load_corpus(path: str | Path, format: str = "jsonl") -> list[TableDoc]:
    """Load a table corpus. One JSON object per line; duplicate ids rejected."""
    if format != "jsonl":
        raise ValueError(f"unsupported corpus format: {format}")
    tables: list[TableDoc] = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                raise MalformedRecord(line_no, "blank line")
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise MalformedRecord(line_no, f"invalid JSON: {exc.msg}") from exc
            table = _parse_table_record(obj, line_no)
            if table.id in seen:
                raise DuplicateId(table.id)
            seen.add(table.id)
            tables.append(table)
    return tables


def load_csv_table(path: str | Path, table_id: str | None = None,
                   title: str | None = None) -> TableDoc:
    """Convenience wrapper: one CSV file becomes a single table.

    The first CSV row is the header; the file stem is the default id.
    """
    p = Path(path)
    with open(p, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        rows = list(reader)
    if not rows:
        raise MalformedRecord(0, f"{p}: empty CSV file")
    header, body = rows[0], rows[1:]
    table = TableDoc(id=table_id or p.stem, title=title, header=header, rows=body)
    validate_table(table)
    return table


def load_qa(path: str | Path, corpus: list[TableDoc] | None = None) -> list[QaExample]:
    """Load QA examples; gold table ids are checked when a corpus is given."""
    known = {t.id for t in corpus} if corpus is not None else None
    examples: list[QaExample] = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                raise MalformedRecord(line_no, "blank line")
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise MalformedRecord(line_no, f"invalid JSON: {exc.msg}") from exc
            try:
                qid = obj["qid"]
                question = obj["question"]
                table_id = obj["table_id"]
                answers = obj["answers"]
            except (KeyError, TypeError) as exc:
                raise MalformedRecord(line_no, f"missing field: {exc}") from exc
            if not isinstance(qid, str) or not qid:
                raise MalformedRecord(line_no, "qid must be a non-empty string")
            if qid in seen:
                raise MalformedRecord(line_no, f"duplicate qid {qid!r}")
            seen.add(qid)
            if not isinstance(answers, list) or not answers \
                    or not all(isinstance(a, str) for a in answers):
                raise MalformedRecord(line_no, "answers must be a non-empty list of strings")
            if known is not None and table_id not in known:
                raise MalformedRecord(line_no, f"unknown table_id {table_id!r}")
            examples.append(QaExample(qid=qid, question=question,
                                      gold_table_id=table_id, answers=answers))
    return examples


def render_row(header: list[str], row: list[str]) -> str:
    return " ".join(f"{h} | {c}" for h, c in zip(header, row)) + " *"


def linearize(table: TableDoc) -> str:
    """Flatten a table: title, then each row as header|cell pairs ending in '*'."""
    parts: list[str] = []
    if table.title:
        parts.append(table.title)
    parts.extend(render_row(table.header, row) for row in table.rows)
    return " ".join(parts)


def segment_prefix(table: TableDoc) -> str:
    """The self-describing prefix repeated at the start of every segment."""
    parts: list[str] = []
    if table.title:
        parts.append(table.title)
    if table.header:
        parts.append(" | ".join(table.header) + " *")
    return " ".join(parts)


def segment(table: TableDoc, budget: int = 512,
            tokenizer: Tokenizer | None = None) -> list[Segment]:
    """Slice a table into segments of at most `budget` tokens.

    Whole rows are packed greedily; a row that cannot fit a fresh segment
    on its own is hard-split at token boundaries. Segments do not overlap
    and cover every row in order.
    """
    tok = tokenizer or DEFAULT_TOKENIZER
    prefix = segment_prefix(table)
    prefix_tokens = tok.count(prefix)
    if prefix_tokens + 1 > budget:
        raise BudgetTooSmall(table.id, prefix_tokens, budget)
    avail = budget - prefix_tokens

    # Pre-split oversized rows into chunks of at most `avail` tokens so the
    # packer below only ever sees pieces that fit. A chunk keeps the
    # inter-token characters that follow its last token, so concatenating a
    # row's chunks reproduces the row text byte for byte.
    pieces: list[tuple[str, int, bool]] = []  # (text, n_tokens, starts_row)
    for row in table.rows:
        text = render_row(table.header, row)
        n = tok.count(text)
        if n <= avail:
            pieces.append((text, n, True))
            continue
        spans = tok.spans(text)
        i = 0
        while i < len(spans):
            j = min(i + avail, len(spans))
            start = 0 if i == 0 else spans[i][0]
            end = spans[j][0] if j < len(spans) else len(text)
            pieces.append((text[start:end], j - i, i == 0))
            i = j

    segments: list[Segment] = []
    cur: list[tuple[str, bool]] = []
    cur_tokens = prefix_tokens

    def flush() -> None:
        nonlocal cur, cur_tokens
        if not cur:
            return
        body = ""
        for k, (txt, starts_row) in enumerate(cur):
            if k > 0 and starts_row:
                body += " "
            body += txt
        text = f"{prefix} {body}" if prefix else body
        segments.append(Segment(table_id=table.id, seg_index=len(segments),
                                text=text, token_count=tok.count(text)))
        cur = []
        cur_tokens = prefix_tokens

    for text, n, starts_row in pieces:
        if cur and cur_tokens + n > budget:
            flush()
        cur.append((text, starts_row))
        cur_tokens += n
    flush()
    return segments


def write_corpus(tables: list[TableDoc], path: str | Path) -> None:
    """Write tables as corpus JSONL (deterministic bytes for fixed input)."""
    with open(path, "w", encoding="utf-8") as fh:
        for t in tables:
            fh.write(json.dumps(
                {"id": t.id, "title": t.title, "header": t.header, "rows": t.rows},
                ensure_ascii=False, sort_keys=True))
            fh.write("\n")


def write_qa(examples: list[QaExample], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for ex in examples:
            fh.write(json.dumps(
                {"qid": ex.qid, "question": ex.question,
                 "table_id": ex.gold_table_id, "answers": ex.answers},
                ensure_ascii=False, sort_keys=True))
            fh.write("\n")


def segment_corpus(tables: list[TableDoc], budget: int = 512,
                   tokenizer: Tokenizer | None = None) -> list[Segment]:
    """Segment every table, preserving corpus order."""
    out: list[Segment] = []
    for t in tables:
        out.extend(segment(t, budget=budget, tokenizer=tokenizer))
    return out
