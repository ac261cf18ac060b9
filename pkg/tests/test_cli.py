import json

import numpy as np
import pytest
from PIL import Image

from sketchchain.cli import main
from sketchchain.config import ENV_VAR, EngineConfig
from sketchchain.evaluate import aggregate_by_category, format_report
from sketchchain.synth import main as synth_main


@pytest.fixture(scope="module")
def demo(tmp_path_factory):
    """Synthetic corpus + built index shared by the CLI tests."""
    root = tmp_path_factory.mktemp("demo")
    assert synth_main([str(root), "--per-class", "12", "--distractors", "10",
                       "--queries-per-class", "1", "--seed", "3"]) == 0
    index = root / "index.skch"
    assert main([
        "index", "build",
        "--corpus", str(root / "corpus.jsonl"),
        "--output", str(index),
        "--seed", "7",
    ]) == 0
    return root


class TestSynth:
    def test_outputs_exist(self, demo):
        assert (demo / "corpus.jsonl").exists()
        assert (demo / "labels.json").exists()
        assert len(list((demo / "sketches").glob("*.json"))) == 4


class TestIndexBuild:
    def test_index_file_written(self, demo):
        raw = (demo / "index.skch").read_bytes()
        assert raw[:4] == b"SKCH"

    def test_same_seed_reproduces_bytes(self, demo, tmp_path):
        other = tmp_path / "again.skch"
        assert main([
            "index", "build",
            "--corpus", str(demo / "corpus.jsonl"),
            "--output", str(other),
            "--seed", "7",
        ]) == 0
        assert other.read_bytes() == (demo / "index.skch").read_bytes()


class TestQuery:
    def test_query_returns_ranked_json(self, demo, capsys):
        sketch = next(iter(sorted((demo / "sketches").glob("star-*.json"))))
        code = main([
            "query",
            "--index", str(demo / "index.skch"),
            "--sketch", str(sketch),
            "--k", "5",
            "--candidates", "40",
        ])
        assert code == 0
        out = json.loads(capsys.readouterr().out)
        assert len(out["results"]) <= 5
        assert out["results"][0]["image_id"].startswith("star-")

    def test_too_simple_sketch_exits_2(self, demo, tmp_path, capsys):
        sketch = tmp_path / "line.json"
        sketch.write_text(json.dumps({
            "strokes": [[[float(x), 50.0] for x in range(0, 200, 4)]],
            "frame": [256, 256],
        }))
        code = main([
            "query", "--index", str(demo / "index.skch"), "--sketch", str(sketch),
        ])
        assert code == 2
        assert json.loads(capsys.readouterr().out)["error"] == "all_chains_too_simple"


class TestEval:
    def test_eval_writes_report(self, demo, tmp_path, capsys):
        report_path = tmp_path / "report.json"
        code = main([
            "eval",
            "--index", str(demo / "index.skch"),
            "--queries", str(demo / "sketches"),
            "--labels", str(demo / "labels.json"),
            "--at", "1,5",
            "--candidates", "40",
            "--report", str(report_path),
        ])
        assert code == 0
        table = capsys.readouterr().out
        assert "category" in table and "@5 A" in table
        report = json.loads(report_path.read_text())
        assert set(report["categories"]) <= {"star", "mug", "bottle", "swan"}
        star5 = report["categories"]["star"]["5"]
        assert star5["average"] >= 0.6


class TestAggregation:
    def test_best_worst_average(self):
        per_query = [
            {"query": "a", "category": "cat", "precision": {5: 0.8}},
            {"query": "b", "category": "cat", "precision": {5: 0.4}},
        ]
        agg = aggregate_by_category(per_query, [5])
        assert agg["cat"]["5"]["best"] == 0.8
        assert agg["cat"]["5"]["worst"] == 0.4
        assert agg["cat"]["5"]["average"] == pytest.approx(0.6)

    def test_format_report_mentions_warnings(self):
        report = {
            "k_levels": [5],
            "queries": [],
            "categories": {"cat": {"5": {"best": 1.0, "worst": 0.5, "average": 0.75}}},
            "overall": {"5": 0.75},
            "warnings": ["imgX"],
        }
        text = format_report(report)
        assert "cat" in text and "0.750" in text
        assert "unlabeled" in text


class TestExtractCommand:
    def test_extract_from_raw_jsonl(self, tmp_path, capsys):
        raw = tmp_path / "raw.jsonl"
        record = {
            "image_id": "imgA",
            "original_size": [256, 256],
            "polylines": [[[10, 10], [10, 120], [150, 120], [150, 200]]],
            "regions": [[[60, 60], [180, 60], [180, 180], [60, 180]]],
        }
        raw.write_text(json.dumps(record) + "\n" + "{bad json\n")
        out = tmp_path / "chains.jsonl"
        assert main(["extract", "--input", str(raw), "--output", str(out)]) == 0
        lines = [json.loads(l) for l in out.read_text().splitlines()]
        assert len(lines) >= 2
        assert {l["source"] for l in lines} == {"csn", "region"}

    def test_extract_from_mask(self, tmp_path):
        mask = np.zeros((100, 100), dtype=np.uint8)
        mask[20, 20:80] = 255
        mask[20:80, 79] = 255
        png = tmp_path / "edge.png"
        Image.fromarray(mask).save(png)
        out = tmp_path / "chains.jsonl"
        assert main(["extract", "--mask", str(png), "--output", str(out)]) == 0
        lines = [json.loads(l) for l in out.read_text().splitlines()]
        assert len(lines) == 1
        assert lines[0]["image_id"] == "edge"
        assert len(lines[0]["points"]) == 3  # two tips and the corner


class TestConfigEnv:
    def test_env_config_overrides(self, tmp_path, monkeypatch):
        cfg_file = tmp_path / "params.json"
        cfg_file.write_text(json.dumps({"branching": 8, "min_sketch_joints": 7}))
        monkeypatch.setenv(ENV_VAR, str(cfg_file))
        cfg = EngineConfig.from_env()
        assert cfg.branching == 8
        assert cfg.min_sketch_joints == 7

    def test_unknown_key_rejected(self, tmp_path, monkeypatch):
        cfg_file = tmp_path / "params.json"
        cfg_file.write_text(json.dumps({"not_a_param": 1}))
        monkeypatch.setenv(ENV_VAR, str(cfg_file))
        with pytest.raises(ValueError):
            EngineConfig.from_env()
