# coding=utf-8
"""
命令行：退出码与端到端流水线
"""

import json

from shopradar.__main__ import run


class TestExitCodes:

    def test_missing_subcommand(self, make_config_file):
        config, _ = make_config_file()
        assert run(["--config", config]) == 1

    def test_unknown_option(self, make_config_file, capsys):
        config, _ = make_config_file()
        assert run(["--config", config, "train", "--bogus"]) == 1
        assert "USAGE_ERROR" in capsys.readouterr().err

    def test_missing_config_file(self, tmp_path):
        assert run(["--config", str(tmp_path / "none.yaml"), "export"]) == 1

    def test_malformed_override(self, make_config_file):
        config, _ = make_config_file()
        assert run(["--config", config, "--set", "temperature", "train"]) == 1

    def test_missing_corpus_is_data_error(self, make_config_file, capsys):
        config, _ = make_config_file()
        assert run(["--config", config, "train"]) == 2
        assert "MISSING_ARTIFACT" in capsys.readouterr().err

    def test_export_without_checkpoint(self, make_config_file):
        config, _ = make_config_file()
        assert run(["--config", config, "gen-data"]) == 0
        assert run(["--config", config, "export"]) == 2


class TestPipeline:

    def test_end_to_end(self, make_config_file, tmp_path, capsys):
        config, data_dir = make_config_file()
        base = ["--config", config]

        assert run(base + ["gen-data", "--check-lexical"]) == 0
        assert "Recall@100" in capsys.readouterr().out
        assert (data_dir / "corpus" / "items.jsonl").exists()

        assert run(base + ["train", "--max-steps", "2"]) == 0
        assert (data_dir / "model" / "checkpoint.mgd").exists()
        assert (data_dir / "model" / "metrics.csv").read_text(encoding="utf-8").count("\n") == 3

        assert run(base + ["export"]) == 0
        assert (data_dir / "model" / "items.mge").exists()

        assert run(base + ["build-index"]) == 0
        assert sorted(p.name for p in (data_dir / "index").glob("column_*.mgx")) == ["column_0.mgx", "column_1.mgx"]

        capsys.readouterr()
        assert run(base + ["eval", "--name", "first"]) == 0
        summary = json.loads(capsys.readouterr().out.split("[评估]")[0])
        assert summary["retriever"] == "ann"
        assert summary["queries"] == 10
        assert run(base + ["eval", "--name", "second"]) == 0
        first = (data_dir / "report" / "first.json").read_bytes()
        assert first == (data_dir / "report" / "second.json").read_bytes()
        assert (data_dir / "report" / "first_queries.csv").exists()

        assert run(base + ["eval", "--exact", "--name", "exact"]) == 0
        assert json.loads((data_dir / "report" / "exact.json").read_text(encoding="utf-8"))["retriever"] == "exact"

        requests = tmp_path / "requests.jsonl"
        requests.write_text(
            json.dumps({"user_id": 0, "query": "shoes", "k": 10}) + "\n\n"
            + json.dumps({"user_id": 99999, "query": "red shoes"}) + "\n",
            encoding="utf-8",
        )
        out = tmp_path / "results.jsonl"
        assert run(base + ["search", "--queries", str(requests), "--output", str(out)]) == 0
        results = [json.loads(line) for line in out.read_text(encoding="utf-8").splitlines()]
        assert len(results) == 2
        assert results[0]["kept"] + results[0]["dropped"] == 10
        assert results[1]["kept"] + results[1]["dropped"] == 20

        requests.write_text("{broken\n", encoding="utf-8")
        assert run(base + ["search", "--queries", str(requests)]) == 2
        assert "MALFORMED_RECORD" in capsys.readouterr().err

    def test_sweep_axis_values_must_parse(self, make_config_file):
        config, _ = make_config_file()
        assert run(["--config", config, "gen-data"]) == 0
        assert run(["--config", config, "sweep", "--axis", "tau", "--values", "a,b"]) == 1
