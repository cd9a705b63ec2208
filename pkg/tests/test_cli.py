import json

import numpy as np
import pytest

from otto_align.cli import main
from otto_align.embedding_io import write_records
from conftest import make_record, matched_record


@pytest.fixture
def corpus(rng, tmp_path):
    records = [make_record(rng, int(rng.integers(2, 6)), int(rng.integers(2, 6)),
                           dim=8, pair_id=f"p{i}") for i in range(3)]
    path = tmp_path / "records.jsonl"
    write_records(records, path)
    return path


def run(args):
    return main([str(a) for a in args])


class TestAlign:
    def test_empty_input(self, tmp_path, capsys):
        empty = tmp_path / "empty.jsonl"
        empty.write_text("")
        out = tmp_path / "out.txt"
        assert run(["align", "-i", empty, "-o", out]) == 0
        assert out.read_text() == ""

    def test_order_preserved(self, corpus, tmp_path):
        out = tmp_path / "out.txt"
        assert run(["align", "-i", corpus, "-o", out, "--strategy", "ottawa"]) == 0
        lines = out.read_text().splitlines()
        assert len(lines) == 3

    @pytest.mark.parametrize("strategy", ["greedy", "assignment", "ot", "pot", "ottawa"])
    def test_all_strategies_run(self, corpus, tmp_path, strategy):
        out = tmp_path / f"{strategy}.txt"
        assert run(["align", "-i", corpus, "-o", out, "--strategy", strategy]) == 0
        assert len(out.read_text().splitlines()) == 3

    def test_parallel_output_identical(self, rng, tmp_path):
        records = [make_record(rng, 4, 5, dim=8, pair_id=f"p{i}") for i in range(8)]
        path = tmp_path / "records.jsonl"
        write_records(records, path)
        serial = tmp_path / "serial.txt"
        parallel = tmp_path / "parallel.txt"
        assert run(["align", "-i", path, "-o", serial, "--jobs", 1]) == 0
        assert run(["align", "-i", path, "-o", parallel, "--jobs", 3]) == 0
        assert serial.read_bytes() == parallel.read_bytes()

    def test_zero_norm_record_strict(self, tmp_path, capsys):
        bad = {"pair_id": "bad", "src_words": ["a"], "tgt_words": ["x"],
               "src_emb": [[0.0, 0.0]], "tgt_emb": [[1.0, 0.0]]}
        path = tmp_path / "bad.jsonl"
        path.write_text(json.dumps(bad) + "\n")
        out = tmp_path / "out.txt"
        assert run(["align", "-i", path, "-o", out, "--strict"]) == 2
        assert out.read_text() == ""
        assert "bad" in capsys.readouterr().err

    def test_failed_record_skipped_without_strict(self, rng, tmp_path, capsys):
        good = make_record(rng, 2, 2, dim=4, pair_id="good")
        path = tmp_path / "mixed.jsonl"
        write_records([good], path)
        bad = {"pair_id": "bad", "src_words": ["a"], "tgt_words": ["x"],
               "src_emb": [[0.0, 0.0, 0.0, 0.0]], "tgt_emb": [[1.0, 0.0, 0.0, 0.0]]}
        with open(path, "a", encoding="utf-8") as handle:
            handle.write(json.dumps(bad) + "\n")
            handle.write(json.dumps(bad).replace("bad", "bad2") + "\n")
        out = tmp_path / "out.txt"
        assert run(["align", "-i", path, "-o", out]) == 2
        assert len(out.read_text().splitlines()) == 1
        err = capsys.readouterr().err
        assert "bad" in err and "2 record(s) failed" in err

    def test_emit_null_tokens(self, rng, tmp_path):
        # Second source word has no counterpart: the forward direction sends
        # it to the null target.
        from conftest import with_target
        record = matched_record(rng, 2, dim=16)
        record = with_target(record, record.tgt_emb[:1].copy())
        path = tmp_path / "records.jsonl"
        write_records([record], path)
        out = tmp_path / "out.txt"
        assert run(["align", "-i", path, "-o", out, "--emit-null"]) == 0
        assert "1-∅" in out.read_text()


class TestDetect:
    def test_line_count_and_schema(self, corpus, tmp_path):
        out = tmp_path / "scores.jsonl"
        assert run(["detect", "-i", corpus, "-o", out]) == 0
        rows = [json.loads(line) for line in out.read_text().splitlines()]
        assert len(rows) == 3
        for row in rows:
            for key in ("pair_id", "hallucination", "omission", "r_src", "r_tgt",
                        "c_fwd", "c_rev", "word_hallucination", "word_omission",
                        "solver_warnings"):
                assert key in row
            assert np.isfinite(row["hallucination"])
            assert np.isfinite(row["omission"])

    def test_paper_literal_flag_changes_scores(self, rng, tmp_path):
        from conftest import with_target
        record = matched_record(rng, 5, dim=16)
        record = with_target(record, record.tgt_emb[:2].copy())
        path = tmp_path / "records.jsonl"
        write_records([record], path)
        default_out = tmp_path / "default.jsonl"
        literal_out = tmp_path / "literal.jsonl"
        assert run(["detect", "-i", path, "-o", default_out]) == 0
        assert run(["detect", "-i", path, "-o", literal_out,
                    "--paper-literal-eq78"]) == 0
        default = json.loads(default_out.read_text())
        literal = json.loads(literal_out.read_text())
        assert default["hallucination"] != literal["hallucination"]
        assert default["r_src"] == literal["r_src"]

    def test_deterministic_flag(self, corpus, tmp_path):
        a = tmp_path / "a.jsonl"
        b = tmp_path / "b.jsonl"
        assert run(["detect", "-i", corpus, "-o", a, "--deterministic"]) == 0
        assert run(["detect", "-i", corpus, "-o", b, "--deterministic"]) == 0
        assert a.read_bytes() == b.read_bytes()


class TestEval:
    def test_aer_perfect(self, tmp_path, capsys):
        (tmp_path / "pred.txt").write_text("0-0 1-1\n0-0\n")
        (tmp_path / "gold.txt").write_text("0-0 1-1\n0-0\n")
        assert run(["eval-aer", "--pred", tmp_path / "pred.txt",
                    "--gold", tmp_path / "gold.txt"]) == 0
        report = json.loads(capsys.readouterr().out)
        assert report["aer"] == 0.0
        assert report["sentences"] == 2

    def test_aer_with_possible(self, tmp_path, capsys):
        (tmp_path / "pred.txt").write_text("0-0 1-1\n")
        (tmp_path / "gold.txt").write_text("0-0 1?1\n")
        assert run(["eval-aer", "--pred", tmp_path / "pred.txt",
                    "--gold", tmp_path / "gold.txt"]) == 0
        report = json.loads(capsys.readouterr().out)
        assert report["aer"] == pytest.approx(0.0)

    def test_aer_join_mismatch(self, tmp_path, capsys):
        (tmp_path / "pred.txt").write_text("0-0\n")
        (tmp_path / "gold.txt").write_text("0-0\n1-1\n")
        assert run(["eval-aer", "--pred", tmp_path / "pred.txt",
                    "--gold", tmp_path / "gold.txt"]) == 2
        assert "line counts differ" in capsys.readouterr().err

    def test_auc_joins_by_pair_id(self, tmp_path, capsys):
        scores = [{"pair_id": f"p{i}", "hallucination": s}
                  for i, s in enumerate([0.9, 0.1, 0.8, 0.2])]
        labels = [{"pair_id": f"p{i}", "hallucination": l}
                  for i, l in enumerate([3, 0, 2, 0])]
        (tmp_path / "scores.jsonl").write_text(
            "\n".join(json.dumps(r) for r in scores))
        (tmp_path / "labels.jsonl").write_text(
            "\n".join(json.dumps(r) for r in reversed(labels)))
        assert run(["eval-auc", "--scores", tmp_path / "scores.jsonl",
                    "--labels", tmp_path / "labels.jsonl"]) == 0
        report = json.loads(capsys.readouterr().out)
        assert report["auc"] == 1.0

    def test_auc_shuffled_scores_same_metric(self, tmp_path, capsys):
        rows = [{"pair_id": f"p{i}", "hallucination": s,
                 "labels": {"hallucination": l}}
                for i, (s, l) in enumerate([(0.9, 3), (0.1, 0), (0.7, 2), (0.3, 0)])]
        (tmp_path / "labels.jsonl").write_text(
            "\n".join(json.dumps(r) for r in rows))
        for order in (rows, list(reversed(rows))):
            (tmp_path / "scores.jsonl").write_text(
                "\n".join(json.dumps(r) for r in order))
            assert run(["eval-auc", "--scores", tmp_path / "scores.jsonl",
                        "--labels", tmp_path / "labels.jsonl"]) == 0
        outputs = capsys.readouterr().out.splitlines()
        assert json.loads(outputs[0])["auc"] == json.loads(outputs[1])["auc"]

    def test_auc_missing_label_fails_loudly(self, tmp_path, capsys):
        (tmp_path / "scores.jsonl").write_text(
            json.dumps({"pair_id": "p0", "hallucination": 0.5}))
        (tmp_path / "labels.jsonl").write_text(
            json.dumps({"pair_id": "other", "hallucination": 1}))
        assert run(["eval-auc", "--scores", tmp_path / "scores.jsonl",
                    "--labels", tmp_path / "labels.jsonl"]) == 2
        assert "p0" in capsys.readouterr().err

    def test_auc_multiclass_mode(self, tmp_path, capsys):
        rows = [{"pair_id": f"p{i}", "omission": s, "labels": {"omission": l}}
                for i, (s, l) in enumerate([(0.9, 3), (0.1, 0), (0.5, 1), (0.65, 2)])]
        (tmp_path / "data.jsonl").write_text("\n".join(json.dumps(r) for r in rows))
        assert run(["eval-auc", "--scores", tmp_path / "data.jsonl",
                    "--labels", tmp_path / "data.jsonl",
                    "--field", "omission", "--mode", "multiclass"]) == 0
        report = json.loads(capsys.readouterr().out)
        assert report["auc"] == 1.0
        assert report["approximate"] is True

    def test_text_format(self, tmp_path, capsys):
        (tmp_path / "pred.txt").write_text("0-0\n")
        (tmp_path / "gold.txt").write_text("0-0\n")
        assert run(["eval-aer", "--pred", tmp_path / "pred.txt",
                    "--gold", tmp_path / "gold.txt", "--format", "text"]) == 0
        out = capsys.readouterr().out
        assert "aer" in out and "{" not in out


class TestConfigResolution:
    def test_config_file_supplies_defaults(self, corpus, tmp_path):
        config = tmp_path / "config.json"
        config.write_text(json.dumps({"strategy": "greedy", "emit_null": False}))
        out = tmp_path / "out.txt"
        assert run(["align", "-i", corpus, "-o", out, "--config", config]) == 0
        assert len(out.read_text().splitlines()) == 3

    def test_flag_beats_config(self, corpus, tmp_path):
        config = tmp_path / "config.json"
        config.write_text(json.dumps({"epsilon": -1.0}))
        out = tmp_path / "out.txt"
        # The broken config value is overridden by the explicit flag.
        assert run(["align", "-i", corpus, "-o", out, "--config", config,
                    "--epsilon", "0.05"]) == 0

    def test_unknown_config_key_rejected(self, corpus, tmp_path, capsys):
        config = tmp_path / "config.json"
        config.write_text(json.dumps({"epsilonn": 0.1}))
        assert run(["align", "-i", corpus, "--config", config]) == 2
        assert "epsilonn" in capsys.readouterr().err

    def test_jobs_env_fallback(self, corpus, tmp_path, monkeypatch):
        monkeypatch.setenv("OTTO_ALIGN_JOBS", "2")
        out = tmp_path / "out.txt"
        assert run(["align", "-i", corpus, "-o", out]) == 0
        assert len(out.read_text().splitlines()) == 3


class TestInspect:
    def test_inspect_by_index(self, corpus, capsys):
        assert run(["inspect", "-i", corpus, "--index", 1]) == 0
        out = capsys.readouterr().out
        assert "pair_id: p1" in out
        assert "cost matrix" in out
        assert "null geometry" in out

    def test_inspect_by_pair_id(self, corpus, capsys):
        assert run(["inspect", "-i", corpus, "--pair-id", "p2"]) == 0
        assert "pair_id: p2" in capsys.readouterr().out

    def test_inspect_missing_record(self, corpus, capsys):
        assert run(["inspect", "-i", corpus, "--pair-id", "nope"]) == 2
        assert "not found" in capsys.readouterr().err
