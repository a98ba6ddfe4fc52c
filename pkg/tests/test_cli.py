import json

import pytest

from trag.cli import main
from trag.config import RunConfig, load_config, save_config
from trag.fixtures import write_fixture


@pytest.fixture
def fixture_dir(tmp_path):
    corpus, qa = write_fixture(tmp_path / "fx", n_tables=12)
    return tmp_path, corpus, qa


def run(*argv):
    return main([str(a) for a in argv])


class TestExitCodes:
    def test_missing_required_flag_is_usage_error(self, capsys):
        assert run("index", "bm25") == 1
        assert "error" in capsys.readouterr().err

    def test_unknown_subcommand_is_usage_error(self):
        assert run("frobnicate") == 1

    def test_missing_file_is_data_error(self, tmp_path):
        assert run("index", "bm25", "--corpus", tmp_path / "nope.jsonl",
                   "--index-dir", tmp_path / "idx") == 2

    def test_bad_corpus_is_data_error(self, tmp_path):
        bad = tmp_path / "bad.jsonl"
        bad.write_text("not json\n")
        assert run("index", "bm25", "--corpus", bad,
                   "--index-dir", tmp_path / "idx") == 2


class TestIndexRetrieve:
    def test_happy_path(self, fixture_dir, capsys):
        tmp_path, corpus, qa = fixture_dir
        idx = tmp_path / "idx"
        assert run("index", "bm25", "--corpus", corpus, "--index-dir", idx) == 0
        capsys.readouterr()
        assert run("retrieve", "--index-dir", idx,
                   "--query", "item003a topic003q", "--top", "10") == 0
        lines = [json.loads(l) for l in
                 capsys.readouterr().out.strip().splitlines()]
        assert lines[0]["table_id"] == "t003"
        assert all(set(l) == {"table_id", "seg_index", "score"} for l in lines)

    def test_dense_modes(self, fixture_dir, capsys):
        tmp_path, corpus, qa = fixture_dir
        idx = tmp_path / "idx"
        assert run("index", "dense", "--corpus", corpus, "--index-dir", idx,
                   "--dim", "64") == 0
        capsys.readouterr()
        for mode in ("dense-exact", "dense-ann"):
            assert run("retrieve", "--index-dir", idx, "--query",
                       "item003a topic003q", "--mode", mode) == 0
            lines = [json.loads(l) for l in
                     capsys.readouterr().out.strip().splitlines()]
            assert lines[0]["table_id"] == "t003"


class TestEval:
    def test_n_questions_reported(self, tmp_path, capsys):
        # 966 synthetic predictions -> n_questions = 966
        qa = tmp_path / "qa.jsonl"
        preds = tmp_path / "preds.jsonl"
        with open(qa, "w") as fq, open(preds, "w") as fp:
            for i in range(966):
                fq.write(json.dumps({"qid": f"q{i}", "question": "x",
                                     "table_id": f"t{i}",
                                     "answers": [f"a{i}"]}) + "\n")
                fp.write(json.dumps({"qid": f"q{i}", "answer": f"a{i}",
                                     "ranking": [f"t{i}"]}) + "\n")
        out = tmp_path / "report.json"
        assert run("eval", "--qa", qa, "--predictions", preds,
                   "--metrics", "em,f1,mrr,hit1", "--out", out) == 0
        report = json.loads(out.read_text())
        assert report["n_questions"] == 966
        assert report["metrics"]["em"] == 1.0
        assert report["metrics"]["hit@1"] == 1.0

    def test_unknown_prediction_qid_is_missing_gold(self, tmp_path):
        qa = tmp_path / "qa.jsonl"
        preds = tmp_path / "preds.jsonl"
        qa.write_text(json.dumps({"qid": "q1", "question": "x",
                                  "table_id": "t1", "answers": ["a"]}) + "\n")
        preds.write_text(json.dumps({"qid": "ghost", "answer": "a",
                                     "ranking": []}) + "\n")
        assert run("eval", "--qa", qa, "--predictions", preds,
                   "--out", tmp_path / "r.json") == 2


class TestAnswer:
    def test_single_question(self, fixture_dir, capsys):
        tmp_path, corpus, qa = fixture_dir
        idx = tmp_path / "idx"
        run("index", "bm25", "--corpus", corpus, "--index-dir", idx)
        capsys.readouterr()
        assert run("answer", "--index-dir", idx, "--memory", qa,
                   "--question", "what is the value of item004a in topic004q") == 0
        lines = [json.loads(l) for l in
                 capsys.readouterr().out.strip().splitlines()]
        assert lines[0]["answer"] == "ans004z"
        assert lines[0]["table_id"] == "t004"

    def test_remote_generator_requires_env(self, fixture_dir, monkeypatch):
        tmp_path, corpus, qa = fixture_dir
        idx = tmp_path / "idx"
        run("index", "bm25", "--corpus", corpus, "--index-dir", idx)
        monkeypatch.delenv("TRAG_GENERATOR_URL", raising=False)
        assert run("answer", "--index-dir", idx, "--generator", "remote",
                   "--question", "anything") == 2

    def test_oracle_mode(self, fixture_dir, capsys):
        tmp_path, corpus, qa = fixture_dir
        idx = tmp_path / "idx"
        run("index", "bm25", "--corpus", corpus, "--index-dir", idx)
        out = tmp_path / "preds.jsonl"
        assert run("answer", "--index-dir", idx, "--qa", qa, "--memory", qa,
                   "--oracle", "--out", out) == 0
        rows = [json.loads(l) for l in out.read_text().splitlines()]
        assert all(r["answer"] == f"ans{int(r['qid'][1:]):03d}z" for r in rows)


class TestSmokeAndDeterminism:
    def test_smoke_passes(self, tmp_path, capsys):
        assert run("smoke", "--workdir", tmp_path / "w", "--seed", "17") == 0
        out = capsys.readouterr().out.strip().splitlines()[-1]
        status = json.loads(out)
        assert status["status"] == "pass"
        assert status["em"] == 1.0 and status["hit@1"] == 1.0
        assert status["provenance_gold"] is True

    def test_artifacts_byte_identical_across_runs(self, tmp_path, capsys):
        for w in ("w1", "w2"):
            assert run("smoke", "--workdir", tmp_path / w, "--seed", "23") == 0
        capsys.readouterr()
        names = ["idx/bm25.bin", "idx/dense.bin", "idx/segments.jsonl",
                 "negatives.jsonl", "predictions.jsonl", "report.json"]
        for name in names:
            a = (tmp_path / "w1" / name).read_bytes()
            b = (tmp_path / "w2" / name).read_bytes()
            assert a == b, name

    def test_gold_tables_removed_surfaces_error(self, tmp_path, capsys):
        corpus, qa = write_fixture(tmp_path / "fx", n_tables=8)
        # drop half the tables from the corpus, keep the full QA file
        lines = corpus.read_text().splitlines()
        corpus.write_text("\n".join(lines[:4]) + "\n")
        idx = tmp_path / "idx"
        run("index", "bm25", "--corpus", corpus, "--index-dir", idx)
        out = tmp_path / "preds.jsonl"
        # oracle answering needs gold segments; missing tables are data errors
        assert run("answer", "--index-dir", idx, "--qa", qa, "--memory", qa,
                   "--oracle", "--out", out) == 2


class TestConfigFile:
    def test_round_trip(self, tmp_path):
        cfg = RunConfig(seed=99, bm25_k1=1.1, corpus="c.jsonl")
        path = tmp_path / "trag.conf"
        save_config(cfg, path)
        loaded = load_config(path)
        assert loaded.seed == 99
        assert loaded.bm25_k1 == 1.1
        assert loaded.corpus == "c.jsonl"
        assert loaded.training["batch_size"] == 128
        assert loaded.training["grad_accumulation_steps"] == 64

    def test_unknown_key_rejected(self, tmp_path):
        path = tmp_path / "bad.conf"
        path.write_text("nonsense_key = 5\n")
        with pytest.raises(ValueError):
            load_config(path)

    def test_cli_reads_config(self, fixture_dir, tmp_path, capsys):
        wd, corpus, qa = fixture_dir
        conf = tmp_path / "t.conf"
        cfg = RunConfig(corpus=str(corpus), index_dir=str(tmp_path / "idx"))
        save_config(cfg, conf)
        assert run("index", "bm25", "--config", conf, "--corpus", corpus) == 0
        assert (tmp_path / "idx" / "bm25.bin").exists()
