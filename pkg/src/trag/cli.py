"""Command-line entry point.

Subcommands: ingest, index (bm25|dense), mine, retrieve, answer, eval,
serve, fixture, smoke. Exit codes: 0 success, 1 usage error, 2 data error.
Logs go to stderr; data goes to files or stdout. All randomness flows from
--seed, and identical runs produce byte-identical artifacts.

Index directory layout: tables.jsonl, segments.jsonl, bm25.bin, dense.bin,
meta.json.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import os
import sys
from pathlib import Path

from .backend import BACKEND
from .bm25 import Bm25Index
from .config import RunConfig, load_config, save_config
from .corpus import (
    Segment,
    TableDoc,
    load_corpus,
    load_qa,
    segment_corpus,
    write_corpus,
)
from .dense import DenseIndex, HashingEmbedder, RemoteEmbedder
from .errors import MissingGold, TragError
from .fixtures import write_fixture
from .metrics import combined_report
from .mining import MinerConfig, mine, write_negatives
from .rag import (
    Bm25Retriever,
    DenseRetriever,
    RemoteGenerator,
    RetrievedCandidate,
    ToyGenerator,
    answer,
    beam_decode,
    softmax_priors,
)

log = logging.getLogger("trag")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _dump_json(obj) -> str:
    return json.dumps(obj, ensure_ascii=False, sort_keys=True)


def _write_jsonl(path: str | Path, rows: list[dict]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(_dump_json(row))
            fh.write("\n")


def _read_jsonl(path: str | Path) -> list[dict]:
    rows = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                rows.append(json.loads(line))
    return rows


def _load_segments(index_dir: Path) -> list[Segment]:
    rows = _read_jsonl(index_dir / "segments.jsonl")
    return [Segment(table_id=r["table_id"], seg_index=r["seg_index"],
                    text=r["text"], token_count=r["token_count"])
            for r in rows]


def _load_tables(index_dir: Path) -> list[TableDoc]:
    rows = _read_jsonl(index_dir / "tables.jsonl")
    return [TableDoc(id=r["id"], title=r["title"], header=r["header"],
                     rows=r["rows"]) for r in rows]


def _write_segments(segments: list[Segment], path: Path) -> None:
    _write_jsonl(path, [
        {"table_id": s.table_id, "seg_index": s.seg_index, "text": s.text,
         "token_count": s.token_count} for s in segments])


def _merge_config(args) -> RunConfig:
    cfg = load_config(args.config) if getattr(args, "config", None) else RunConfig()
    for f in dataclasses.fields(RunConfig):
        if hasattr(args, f.name) and getattr(args, f.name) is not None:
            setattr(cfg, f.name, getattr(args, f.name))
    return cfg


def _prepare_index_dir(cfg: RunConfig) -> tuple[Path, list[TableDoc], list[Segment]]:
    if not cfg.corpus:
        raise TragError("--corpus is required")
    index_dir = Path(cfg.index_dir)
    index_dir.mkdir(parents=True, exist_ok=True)
    tables = load_corpus(cfg.corpus)
    segments = segment_corpus(tables, budget=cfg.budget)
    write_corpus(tables, index_dir / "tables.jsonl")
    _write_segments(segments, index_dir / "segments.jsonl")
    meta = {
        "budget": cfg.budget,
        "n_tables": len(tables),
        "n_segments": len(segments),
        "bm25_k1": cfg.bm25_k1,
        "bm25_b": cfg.bm25_b,
        "dim": cfg.dim,
        "ann_threshold": cfg.ann_threshold,
        "hnsw_m": cfg.hnsw_m,
        "ef_construction": cfg.ef_construction,
        "ef_search": cfg.ef_search,
        "seed": cfg.seed,
    }
    meta_path = index_dir / "meta.json"
    if meta_path.exists():
        old = json.loads(meta_path.read_text(encoding="utf-8"))
        old.update(meta)
        meta = old
    meta_path.write_text(_dump_json(meta) + "\n", encoding="utf-8")
    return index_dir, tables, segments


def _embedder(dim: int):
    url = os.environ.get("TRAG_EMBEDDER_URL")
    if url:
        return RemoteEmbedder(url, dim=dim)
    return HashingEmbedder(dim=dim)


def _load_retriever(index_dir: Path, cfg: RunConfig, mode: str,
                    ef_search: int | None = None):
    segments = _load_segments(index_dir)
    if mode == "bm25":
        return Bm25Retriever(Bm25Index.load(index_dir / "bm25.bin"), segments)
    dense = DenseIndex.load(index_dir / "dense.bin")
    knn_mode = "ann" if mode == "dense-ann" else "exact"
    return DenseRetriever(dense, segments, _embedder(dense.dim),
                          mode=knn_mode, ef_search=ef_search)


def _build_generator(cfg: RunConfig, memory_path: str | None,
                     tables: list[TableDoc]):
    if cfg.generator == "remote":
        url = os.environ.get("TRAG_GENERATOR_URL")
        if not url:
            raise TragError("TRAG_GENERATOR_URL must be set for --generator remote")
        vocab_path = os.environ.get("TRAG_GENERATOR_VOCAB")
        if not vocab_path:
            raise TragError("TRAG_GENERATOR_VOCAB must point to a JSON vocab file")
        vocab = json.loads(Path(vocab_path).read_text(encoding="utf-8"))
        return RemoteGenerator(url, vocab=vocab)
    if cfg.generator != "toy":
        raise TragError(f"unknown generator: {cfg.generator}")
    if not memory_path:
        raise TragError("--memory <qa.jsonl> is required for the toy generator")
    tables_by_id = {t.id: t for t in tables}
    examples = load_qa(memory_path)
    return ToyGenerator.from_examples(tables_by_id, examples)


# --------------------------------------------------------------------------
# subcommand handlers
# --------------------------------------------------------------------------

def cmd_ingest(args) -> int:
    cfg = _merge_config(args)
    cfg.log_resolved("ingest")
    tables = load_corpus(cfg.corpus)
    out = Path(cfg.out or cfg.index_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_corpus(tables, out / "tables.jsonl")
    if cfg.qa:
        examples = load_qa(cfg.qa, corpus=tables)
        log.info("validated %d QA examples", len(examples))
    print(_dump_json({"tables": len(tables), "out": str(out / "tables.jsonl")}))
    return 0


def cmd_index(args) -> int:
    cfg = _merge_config(args)
    if args.index_dir is None and cfg.out:
        cfg.index_dir = cfg.out
    cfg.log_resolved(f"index {args.kind}")
    index_dir, tables, segments = _prepare_index_dir(cfg)
    if args.kind == "bm25":
        index = Bm25Index.build(segments, k1=cfg.bm25_k1, b=cfg.bm25_b)
        index.save(index_dir / "bm25.bin")
        print(_dump_json({"index": "bm25", "segments": index.n_segs,
                          "tables": index.n_tables,
                          "path": str(index_dir / "bm25.bin")}))
    else:
        provider = _embedder(cfg.dim)
        index = DenseIndex.build(segments, provider,
                                 ann_threshold=cfg.ann_threshold,
                                 m=cfg.hnsw_m,
                                 ef_construction=cfg.ef_construction,
                                 ef_search=cfg.ef_search, seed=cfg.seed)
        index.save(index_dir / "dense.bin")
        print(_dump_json({"index": "dense", "vectors": index.n_vectors,
                          "dim": index.dim,
                          "ann_graph": index.graph is not None,
                          "path": str(index_dir / "dense.bin")}))
    return 0


def cmd_mine(args) -> int:
    cfg = _merge_config(args)
    cfg.log_resolved("mine")
    index_path = Path(cfg.index_dir)
    if index_path.is_file():  # --index may point straight at bm25.bin
        index = Bm25Index.load(index_path)
    else:
        index = Bm25Index.load(index_path / "bm25.bin")
    examples = load_qa(cfg.qa)
    miner_cfg = MinerConfig(pool_size=cfg.pool, k=cfg.k,
                            negatives_per_question=cfg.negatives,
                            rng_seed=cfg.seed)
    negatives = mine(examples, index, miner_cfg)
    out = cfg.out or "negatives.jsonl"
    write_negatives(negatives, out)
    print(_dump_json({"questions": len(examples), "negatives": len(negatives),
                      "out": out}))
    return 0


def cmd_retrieve(args) -> int:
    cfg = _merge_config(args)
    cfg.log_resolved("retrieve")
    retriever = _load_retriever(Path(cfg.index_dir), cfg, args.mode,
                                ef_search=args.ef_search)
    for hit in retriever.retrieve(args.query, args.top):
        print(_dump_json({"table_id": hit.table_id, "seg_index": hit.seg_index,
                          "score": hit.score}))
    return 0


def cmd_answer(args) -> int:
    cfg = _merge_config(args)
    cfg.log_resolved("answer")
    index_dir = Path(cfg.index_dir)
    tables = _load_tables(index_dir)
    retriever = _load_retriever(index_dir, cfg, args.mode,
                                ef_search=getattr(args, "ef_search", None))
    generator = _build_generator(cfg, args.memory or cfg.qa, tables)
    all_segments = _load_segments(index_dir) if args.oracle else []

    def answers_for(question: str, gold_table_id: str | None = None):
        if args.oracle:
            if gold_table_id is None:
                raise TragError("--oracle requires --qa with gold table ids")
            segs = [s for s in all_segments if s.table_id == gold_table_id]
            cands = [RetrievedCandidate(table_id=s.table_id,
                                        seg_index=s.seg_index, score=0.0,
                                        text=s.text) for s in segs]
            prior = softmax_priors(cands, temperature=cfg.temperature)
            return beam_decode(question, prior, generator,
                               beam_width=cfg.beam, max_len=cfg.max_len)
        return answer(question, retriever, generator, n_docs=cfg.n_docs,
                      beam_width=cfg.beam, max_len=cfg.max_len,
                      temperature=cfg.temperature)

    if args.question:
        for res in answers_for(args.question):
            print(_dump_json({"answer": res.text, "log_prob": res.log_prob,
                              "table_id": res.provenance_table_id}))
        return 0

    if not cfg.qa:
        raise TragError("either --question or --qa is required")
    examples = load_qa(cfg.qa)
    rows = []
    for ex in examples:
        results = answers_for(ex.question, ex.gold_table_id)
        best = results[0]
        ranking = [h.table_id
                   for h in retriever.retrieve(ex.question, args.rank_depth)]
        rows.append({"qid": ex.qid, "answer": best.text,
                     "log_prob": best.log_prob,
                     "provenance_table_id": best.provenance_table_id,
                     "ranking": ranking})
    out = cfg.out or "predictions.jsonl"
    _write_jsonl(out, rows)
    print(_dump_json({"questions": len(rows), "out": out}))
    return 0


def cmd_eval(args) -> int:
    cfg = _merge_config(args)
    cfg.log_resolved("eval")
    examples = load_qa(cfg.qa)
    preds = _read_jsonl(args.predictions)
    known = {ex.qid for ex in examples}
    for r in preds:
        if r["qid"] not in known:
            raise MissingGold(r["qid"])
    predictions = {r["qid"]: r.get("answer", "") for r in preds}
    rankings = {r["qid"]: r["ranking"] for r in preds if "ranking" in r}
    ks = sorted({int(m.split("@")[1]) for m in args.metrics.split(",")
                 if "@" in m and m.split("@")[1].isdigit()}) or [5, 10]
    report = combined_report(examples, predictions,
                             rankings if rankings else None, ks=ks)
    requested = [m.strip().lower().replace("hit1", "hit@1")
                 for m in args.metrics.split(",")]
    values = {name: report.values[name] for name in requested
              if name in report.values}
    payload = {"metrics": values, "n_questions": report.n_questions,
               "splits": report.splits, "per_question": report.per_question}
    out = cfg.out or "report.json"
    Path(out).write_text(_dump_json(payload) + "\n", encoding="utf-8")
    print(_dump_json({"n_questions": report.n_questions, "metrics": values,
                      "out": out}))
    return 0


def cmd_serve(args) -> int:
    cfg = _merge_config(args)
    cfg.log_resolved("serve")
    import uvicorn

    from .service import build_engine, create_app

    index_dir = Path(os.environ.get("TRAG_INDEX_DIR", cfg.index_dir))
    engine = build_engine(index_dir, cfg, memory_path=args.memory or cfg.qa,
                          mode=args.mode)
    app = create_app(engine,
                     cors_origin=os.environ.get("TRAG_CORS_ORIGIN"))
    addr = os.environ.get("TRAG_ADDR", args.addr)
    host, _, port = addr.rpartition(":")
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port))
    return 0


def cmd_fixture(args) -> int:
    corpus_path, qa_path = write_fixture(args.out, n_tables=args.tables)
    print(_dump_json({"corpus": str(corpus_path), "qa": str(qa_path)}))
    return 0


def cmd_config(args) -> int:
    save_config(RunConfig(), args.out)
    print(_dump_json({"out": args.out}))
    return 0


def cmd_smoke(args) -> int:
    cfg = _merge_config(args)
    workdir = Path(args.workdir)
    workdir.mkdir(parents=True, exist_ok=True)
    corpus_path, qa_path = write_fixture(workdir / "fixture")
    idx = workdir / "idx"
    base = ["--corpus", str(corpus_path), "--index-dir", str(idx),
            "--seed", str(cfg.seed)]
    rc = main(["index", "bm25"] + base)
    rc = rc or main(["index", "dense"] + base)
    rc = rc or main(["mine", "--qa", str(qa_path), "--index-dir", str(idx),
                     "--seed", str(cfg.seed),
                     "--out", str(workdir / "negatives.jsonl")])
    rc = rc or main(["answer", "--qa", str(qa_path), "--index-dir", str(idx),
                     "--memory", str(qa_path),
                     "--out", str(workdir / "predictions.jsonl")])
    rc = rc or main(["eval", "--qa", str(qa_path),
                     "--predictions", str(workdir / "predictions.jsonl"),
                     "--metrics", "em,f1,mrr,hit1,r@5,ndcg@5,map",
                     "--out", str(workdir / "report.json")])
    if rc:
        return rc
    report = json.loads((workdir / "report.json").read_text(encoding="utf-8"))
    em = report["metrics"]["em"]
    hit1 = report["metrics"]["hit@1"]
    preds = _read_jsonl(workdir / "predictions.jsonl")
    gold = {ex.qid: ex.gold_table_id for ex in load_qa(qa_path)}
    prov_ok = all(r["provenance_table_id"] == gold[r["qid"]] for r in preds)
    ok = em == 1.0 and hit1 == 1.0 and prov_ok
    print(_dump_json({"em": em, "hit@1": hit1, "provenance_gold": prov_ok,
                      "report": str(workdir / "report.json"),
                      "status": "pass" if ok else "fail"}))
    return 0 if ok else 2


# --------------------------------------------------------------------------

def build_parser() -> _Parser:
    parser = _Parser(prog="trag", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True,
                                parser_class=_Parser)

    def common(p):
        p.add_argument("--config", help="key=value config file")
        p.add_argument("--index", "--index-dir", dest="index_dir",
                       help="index directory")
        p.add_argument("--seed", type=int)
        p.add_argument("--out")

    p = sub.add_parser("ingest", help="validate and stage a corpus")
    common(p)
    p.add_argument("--corpus", required=True)
    p.add_argument("--qa")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("index", help="build an index over a corpus")
    p.add_argument("kind", choices=["bm25", "dense"])
    common(p)
    p.add_argument("--corpus", required=True)
    p.add_argument("--budget", type=int)
    p.add_argument("--bm25-k1", dest="bm25_k1", type=float)
    p.add_argument("--bm25-b", dest="bm25_b", type=float)
    p.add_argument("--dim", type=int)
    p.add_argument("--ann-threshold", dest="ann_threshold", type=int)
    p.add_argument("--hnsw-m", dest="hnsw_m", type=int)
    p.add_argument("--ef-construction", dest="ef_construction", type=int)
    p.add_argument("--ef-search", dest="ef_search", type=int)
    p.set_defaults(func=cmd_index)

    p = sub.add_parser("mine", help="mine soft hard negatives")
    common(p)
    p.add_argument("--qa", required=True)
    p.add_argument("--k", type=int)
    p.add_argument("--pool", type=int)
    p.add_argument("--negatives", type=int)
    p.set_defaults(func=cmd_mine)

    p = sub.add_parser("retrieve", help="query an index")
    common(p)
    p.add_argument("--query", required=True)
    p.add_argument("--top", type=int, default=10)
    p.add_argument("--mode", choices=["bm25", "dense-exact", "dense-ann"],
                   default="bm25")
    p.add_argument("--ef-search", dest="ef_search", type=int,
                   help="query-time candidate list size for dense-ann")
    p.set_defaults(func=cmd_retrieve)

    p = sub.add_parser("answer", help="answer questions over an index")
    common(p)
    p.add_argument("--question")
    p.add_argument("--qa")
    p.add_argument("--memory", help="QA file the toy generator memorizes")
    p.add_argument("--n-docs", dest="n_docs", type=int)
    p.add_argument("--beam", type=int)
    p.add_argument("--max-len", dest="max_len", type=int)
    p.add_argument("--temperature", type=float)
    p.add_argument("--generator", choices=["toy", "remote"])
    p.add_argument("--mode", choices=["bm25", "dense-exact", "dense-ann"],
                   default="bm25")
    p.add_argument("--ef-search", dest="ef_search", type=int,
                   help="query-time candidate list size for dense-ann")
    p.add_argument("--rank-depth", dest="rank_depth", type=int, default=50)
    p.add_argument("--oracle", action="store_true",
                   help="force the gold table as the sole candidate")
    p.set_defaults(func=cmd_answer)

    p = sub.add_parser("eval", help="score predictions against gold answers")
    common(p)
    p.add_argument("--qa", required=True)
    p.add_argument("--predictions", required=True)
    p.add_argument("--metrics",
                   default="em,f1,mrr,hit1,r@1,r@10,r@50,p@5,p@10,ndcg@5,ndcg@10,map")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("serve", help="run the HTTP QA service")
    common(p)
    p.add_argument("--addr", default="127.0.0.1:8080")
    p.add_argument("--heatmap-threshold", dest="heatmap_threshold", type=float)
    p.add_argument("--qa")
    p.add_argument("--memory")
    p.add_argument("--generator", choices=["toy", "remote"])
    p.add_argument("--n-docs", dest="n_docs", type=int)
    p.add_argument("--mode", choices=["bm25", "dense-exact", "dense-ann"],
                   default="bm25")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("fixture", help="write the bundled synthetic corpus")
    p.add_argument("--out", required=True)
    p.add_argument("--tables", type=int, default=50)
    p.set_defaults(func=cmd_fixture)

    p = sub.add_parser("config", help="write a default config file")
    p.add_argument("--out", default="trag.conf")
    p.set_defaults(func=cmd_config)

    p = sub.add_parser("smoke", help="run the full pipeline on the fixture")
    common(p)
    p.add_argument("--workdir", required=True)
    p.set_defaults(func=cmd_smoke)

    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(stream=sys.stderr, level=os.environ.get(
        "TRAG_LOG_LEVEL", "INFO"), format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    log.debug("kernel backend: %s", BACKEND)
    try:
        return args.func(args)
    except TragError as exc:
        log.error("%s", exc)
        return 2
    except FileNotFoundError as exc:
        log.error("%s", exc)
        return 2
    except (ValueError, KeyError) as exc:
        log.error("%s", exc)
        return 2


if __name__ == "__main__":
    sys.exit(main())
