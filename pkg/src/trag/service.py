"""HTTP QA service.

GET /health reports readiness; POST /ask takes {"question", "k"} (k
defaults to 4, capped at 50) and returns ranked answers with renormalized
scores, answer-cell coordinates for heatmap rendering, and the referenced
tables in full. Serving is read-only against an immutable index snapshot.
"""
from __future__ import annotations

import logging
import uuid
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .corpus import TableDoc
from .errors import EmptyQuery, NoCandidates, TragError
from .metrics import normalize_answer, token_f1
from .rag import Retriever, answer

log = logging.getLogger(__name__)

DEFAULT_K = 4
MAX_K = 50


def locate_cells(answer_text: str, table: TableDoc,
                 threshold: float = 0.5) -> list[tuple[int, int, float]]:
    """Cells whose normalized token-F1 against the answer clears the
    threshold, sorted by weight descending (row-major on ties)."""
    pred_tokens = normalize_answer(answer_text).split()
    out: list[tuple[int, int, float]] = []
    for r, row in enumerate(table.rows):
        for c, cell in enumerate(row):
            weight = token_f1(pred_tokens, normalize_answer(cell).split())
            if weight >= threshold:
                out.append((r, c, weight))
    out.sort(key=lambda x: (-x[2], x[0], x[1]))
    return out


@dataclass
class Engine:
    tables: dict[str, TableDoc]
    retriever: Retriever
    generator: object
    n_docs: int = 5
    max_len: int = 32
    temperature: float = 1.0
    cell_threshold: float = 0.5


def build_engine(index_dir: Path, cfg, memory_path: str | None = None,
                 mode: str = "bm25") -> Engine:
    from .cli import _build_generator, _load_retriever, _load_tables

    tables = _load_tables(Path(index_dir))
    retriever = _load_retriever(Path(index_dir), cfg, mode)
    generator = _build_generator(cfg, memory_path, tables)
    return Engine(tables={t.id: t for t in tables}, retriever=retriever,
                  generator=generator, n_docs=cfg.n_docs,
                  max_len=cfg.max_len, temperature=cfg.temperature,
                  cell_threshold=cfg.heatmap_threshold)


class AskBody(BaseModel):
    question: str = ""
    k: int | None = None


def _error(status: int, message: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={"error": message})


def create_app(engine: Engine | None, cors_origin: str | None = None) -> FastAPI:
    app = FastAPI(title="table-qa service")
    app.state.engine = engine

    if cors_origin:
        app.add_middleware(CORSMiddleware, allow_origins=[cors_origin],
                           allow_methods=["*"], allow_headers=["*"])

    @app.exception_handler(RequestValidationError)
    async def _validation_handler(request: Request, exc: RequestValidationError):
        return _error(400, "invalid request body")

    @app.exception_handler(Exception)
    async def _internal_handler(request: Request, exc: Exception):
        error_id = uuid.uuid4().hex
        log.exception("internal error %s", error_id)
        return JSONResponse(status_code=500, content={"error_id": error_id})

    @app.get("/health")
    def health():
        return {"status": "ok", "loaded": app.state.engine is not None}

    # sync handler: runs in the threadpool, so decoding one question does
    # not block other requests against the immutable index snapshot
    @app.post("/ask")
    def ask(body: AskBody):
        eng: Engine | None = app.state.engine
        if eng is None:
            return _error(503, "indexes not loaded")
        question = body.question.strip()
        if not question:
            return _error(400, "question must be non-empty")
        k = body.k if body.k is not None else DEFAULT_K
        if not 1 <= k <= MAX_K:
            return _error(400, f"k must be between 1 and {MAX_K}")
        try:
            results = answer(question, eng.retriever, eng.generator,
                             n_docs=eng.n_docs, beam_width=k,
                             max_len=eng.max_len,
                             temperature=eng.temperature)
        except EmptyQuery:
            return _error(400, "question has no indexable tokens")
        except NoCandidates:
            return {"answers": [], "tables": []}
        except TragError as exc:
            return _error(400, str(exc))

        logps = np.array([r.log_prob for r in results], dtype=np.float64)
        shifted = np.exp(logps - logps.max())
        scores = shifted / shifted.sum()

        answers = []
        table_order: list[str] = []
        for res, score in zip(results, scores):
            table = eng.tables.get(res.provenance_table_id)
            cells = (locate_cells(res.text, table, eng.cell_threshold)
                     if table is not None else [])
            if res.provenance_table_id not in table_order:
                table_order.append(res.provenance_table_id)
            answers.append({
                "text": res.text,
                "score": float(score),
                "table_id": res.provenance_table_id,
                "cells": [[r, c, w] for r, c, w in cells],
            })
        tables = [
            {"id": t.id, "title": t.title, "header": t.header, "rows": t.rows}
            for t in (eng.tables[tid] for tid in table_order
                      if tid in eng.tables)
        ]
        return {"answers": answers, "tables": tables}

    return app
