from __future__ import annotations

import json

import numpy as np
import pytest

from cuekit.cli import (
    cmd_ablate,
    cmd_cues,
    cmd_eval,
    cmd_neighbors,
    cmd_split,
    cmd_sweep,
    cmd_train,
    cmd_zeroshot,
    main,
)
from cuekit.config import RunConfig, load_config
from cuekit.dataset import load_split
from cuekit.harness import read_sweep_csv
from cuekit.tensorio import read_tensor


def run_pipeline(config):
    cmd_split(config)
    cmd_zeroshot(config)
    cmd_cues(config)
    cmd_neighbors(config)
    cmd_train(config)
    cmd_eval(config)


class TestConfig:
    def test_roundtrips_unchanged(self, tiny_run):
        config = tiny_run["config"]
        assert RunConfig.from_dict(config.to_dict()) == config

    def test_hash_changes_with_fields(self, tiny_run):
        config = tiny_run["config"]
        base = config.config_hash()
        loaded = load_config(tiny_run["config_path"])
        assert loaded.config_hash() == base
        loaded.ir = 55.0
        assert loaded.config_hash() != base

    def test_run_dir_is_hash_named(self, tiny_run):
        config = tiny_run["config"]
        assert config.run_dir().name == config.config_hash()[:12]


class TestPipelineCommands:
    def test_split_writes_descriptor(self, tiny_run):
        config = tiny_run["config"]
        out = cmd_split(config)
        split = load_split(out)
        assert split.ir == 10.0 and split.n_max == 30
        assert sum(split.per_class_counts) == len(split.all_indices())

    def test_zeroshot_scores_shape(self, tiny_run):
        config = tiny_run["config"]
        out = cmd_zeroshot(config)
        scores = read_tensor(out)
        bench = tiny_run["bench"]
        assert scores.shape == (bench.pool.num_samples, bench.pool.num_classes)
        assert scores.min() >= -1.0 and scores.max() <= 1.0

    def test_cues_match_split_size(self, tiny_run):
        config = tiny_run["config"]
        cmd_split(config)
        cmd_zeroshot(config)
        out = cmd_cues(config)
        doc = json.loads(out.read_text())
        split = load_split(config.split_file)
        assert len(doc["per_sample_cue_lists"]) == sum(split.per_class_counts)
        assert all(len(row) == config.k for row in doc["per_sample_cue_lists"])
        assert doc["mode"] == "top" and doc["kind"] == "zs"

    def test_cues_default_count(self, tiny_run):
        # k=5 with six classes: five cues per sample
        config = tiny_run["config"]
        config.k = 5
        cmd_split(config)
        cmd_zeroshot(config)
        out = cmd_cues(config)
        doc = json.loads(out.read_text())
        assert all(len(row) == 5 for row in doc["per_sample_cue_lists"])

    def test_neighbors_builds_graph_and_report(self, tiny_run):
        config = tiny_run["config"]
        out = cmd_neighbors(config)
        doc = json.loads(out.read_text())
        assert doc["classes"] == tiny_run["bench"].train.class_names
        assert doc["meta"]["provider"] == "fixture"
        assert (config.reports_path / "filter_report.json").exists()

    def test_full_pipeline_and_eval(self, tiny_run):
        config = tiny_run["config"]
        run_pipeline(config)
        eval_doc = json.loads((config.reports_path / "eval.json").read_text())
        assert 0.0 <= eval_doc["overall_acc"] <= 1.0
        transition = json.loads((config.reports_path / "transition.json").read_text())
        total = sum(sum(v) for v in transition["counts"].values())
        assert total == tiny_run["bench"].test.num_samples

    def test_train_is_bit_deterministic(self, tiny_run):
        config = tiny_run["config"]
        cmd_split(config)
        cmd_zeroshot(config)
        cmd_cues(config)
        cmd_neighbors(config)
        first = cmd_train(config)
        snapshot = {p.name: p.read_bytes() for p in first.iterdir()}
        second = cmd_train(config)
        for p in second.iterdir():
            assert snapshot[p.name] == p.read_bytes()

    def test_artifacts_are_idempotent(self, tiny_run):
        config = tiny_run["config"]
        cmd_split(config)
        cmd_zeroshot(config)
        cmd_cues(config)
        before = {
            "split": config.split_file.read_bytes(),
            "zeroshot": config.zeroshot_file.read_bytes(),
            "cues": config.cues_file.read_bytes(),
        }
        cmd_split(config)
        cmd_zeroshot(config)
        cmd_cues(config)
        assert config.split_file.read_bytes() == before["split"]
        assert config.zeroshot_file.read_bytes() == before["zeroshot"]
        assert config.cues_file.read_bytes() == before["cues"]


class TestDependencyContract:
    def test_train_without_cues_names_producer(self, tiny_run):
        from cuekit.cli import MissingArtifactError

        config = tiny_run["config"]
        cmd_split(config)
        cmd_zeroshot(config)
        with pytest.raises(MissingArtifactError, match="cuekit cues"):
            cmd_train(config)

    def test_eval_without_model(self, tiny_run):
        from cuekit.cli import MissingArtifactError

        config = tiny_run["config"]
        cmd_split(config)
        with pytest.raises(MissingArtifactError, match="cuekit train"):
            cmd_eval(config)

    def test_cues_without_split(self, tiny_run):
        from cuekit.cli import MissingArtifactError

        config = tiny_run["config"]
        with pytest.raises(MissingArtifactError, match="cuekit split"):
            cmd_cues(config)

    def test_ablate_requires_shared_zeroshot_artifact(self, tiny_run):
        from cuekit.cli import MissingArtifactError

        config = tiny_run["config"]
        cmd_split(config)
        cmd_neighbors(config)
        with pytest.raises(MissingArtifactError, match="cuekit zeroshot"):
            cmd_ablate(config)


class TestMainEntry:
    def test_exit_zero_on_success(self, tiny_run, capsys):
        rc = main(["split", "--config", str(tiny_run["config_path"])])
        assert rc == 0
        assert "split.json" in capsys.readouterr().out

    def test_error_json_on_missing_artifact(self, tiny_run, capsys):
        rc = main(["train", "--config", str(tiny_run["config_path"])])
        assert rc == 2
        err = json.loads(capsys.readouterr().err)
        assert err["error"] == "missing_artifact"
        assert "produced_by" in err

    def test_missing_config_file(self, tmp_path, capsys):
        rc = main(["split", "--config", str(tmp_path / "absent.json")])
        assert rc != 0

    def test_missing_manifest_reported(self, tiny_run, capsys):
        config = tiny_run["config"]
        config.manifest = str(tiny_run["config_path"].parent / "nowhere.json")
        from cuekit.config import save_config

        bad_path = tiny_run["config_path"].parent / "bad.json"
        save_config(bad_path, config)
        rc = main(["split", "--config", str(bad_path)])
        assert rc == 2
        err = json.loads(capsys.readouterr().err)
        assert err["error"] == "missing_file"
        assert "manifest" in err["message"]

    def test_overrides_change_hash_and_values(self, tiny_run, capsys):
        rc = main(
            ["split", "--config", str(tiny_run["config_path"]),
             "--ir", "5", "--seed", "7", "--print-config"]
        )
        assert rc == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["dataset"]["ir"] == 5.0
        assert doc["dataset"]["seed"] == 7
        assert doc["train"]["seed"] == 7

    def test_lambda_overrides(self, tiny_run, capsys):
        rc = main(
            ["train", "--config", str(tiny_run["config_path"]),
             "--lambda-zs", "0", "--lambda-llm", "0", "--print-config"]
        )
        assert rc == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["train"]["loss"]["lambda_zs"] == 0.0
        assert doc["train"]["loss"]["lambda_llm"] == 0.0


class TestAblateAndSweep:
    @pytest.fixture()
    def prepared(self, tiny_run):
        config = tiny_run["config"]
        config.ablation_seeds = (0, 1)
        cmd_split(config)
        cmd_zeroshot(config)
        cmd_cues(config)
        cmd_neighbors(config)
        return config

    def test_ablate_rows(self, prepared):
        reports = cmd_ablate(prepared)
        rows = json.loads((reports / "ablation.json").read_text())
        assert len(rows) == 7 * 2  # 7 arms x 2 seeds
        arms = {r["arm"] for r in rows}
        assert arms == {"baseline", "vlm_only", "llm_only", "both", "top_k", "random_k", "last_k"}
        table = (reports / "ablation.txt").read_text()
        assert "baseline" in table

    def test_top_arm_equals_vlm_only(self, prepared):
        reports = cmd_ablate(prepared)
        rows = json.loads((reports / "ablation.json").read_text())
        by_key = {(r["arm"], r["seed"]): r for r in rows}
        for seed in (0, 1):
            assert (
                by_key[("top_k", seed)]["model_sha256"]
                == by_key[("vlm_only", seed)]["model_sha256"]
            )

    def test_sweep_matrices_and_baseline_cell(self, prepared):
        reports = cmd_sweep(prepared)
        grid, all_acc = read_sweep_csv(reports / "sweep_all.csv")
        assert grid == [0.0, 0.25, 0.5, 0.75, 1.0]
        assert all_acc.shape == (5, 5)
        _, few_acc = read_sweep_csv(reports / "sweep_few.csv")
        assert few_acc.shape == (5, 5)

        # the (0,0) cell trains with both weights zero: the LA baseline
        ablation = cmd_ablate(prepared)
        rows = json.loads((ablation / "ablation.json").read_text())
        baseline = [r for r in rows if r["arm"] == "baseline" and r["seed"] == 0][0]
        sweep_models = json.loads((reports / "sweep_models.json").read_text())
        assert sweep_models["0,0"] == baseline["model_sha256"]
        assert all_acc[0, 0] == pytest.approx(baseline["all"], abs=0)

    def test_sweep_csv_reparses_exactly(self, prepared, tmp_path):
        reports = cmd_sweep(prepared)
        grid, matrix = read_sweep_csv(reports / "sweep_all.csv")
        from cuekit.harness import write_sweep_csv

        write_sweep_csv(tmp_path / "again.csv", grid, matrix)
        grid2, matrix2 = read_sweep_csv(tmp_path / "again.csv")
        assert grid == grid2
        assert np.array_equal(matrix, matrix2)
