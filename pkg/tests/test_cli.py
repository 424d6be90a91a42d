import json
import os

import numpy as np
import pytest
from click.testing import CliRunner

from t2ieval.artifacts import MatrixArtifact, save_matrix, write_jsonl
from t2ieval.cli import cli

from .conftest import BENCHMARK_CSV, BENCHMARK_RS, random_prob_matrix
from .oracles import naive_softmax, sample_labels


@pytest.fixture
def runner():
    return CliRunner()


def invoke(runner, *args):
    return runner.invoke(cli, [str(a) for a in args], catch_exceptions=False)


def build_method_artifacts(root, rng, shift=0.0):
    """Write a full artifact set for one method under ``root``; returns paths."""
    os.makedirs(root, exist_ok=True)
    paths = {}

    probs = random_prob_matrix(rng, 12, 4)
    save_matrix(MatrixArtifact.from_array(probs, role="probabilities"),
                os.path.join(root, "probs"))
    paths["probs"] = os.path.join(root, "probs")

    logits = rng.normal(shift, 2.0, size=(12, 4))
    save_matrix(MatrixArtifact.from_array(logits, role="logits"),
                os.path.join(root, "logits"))
    paths["logits"] = os.path.join(root, "logits")

    for key, rows in (("features", 24), ("crop_features", 16)):
        save_matrix(MatrixArtifact.from_array(rng.normal(shift, 1.0, size=(rows, 5)),
                                              role="features"),
                    os.path.join(root, key))
        paths[key] = os.path.join(root, key)

    save_matrix(MatrixArtifact.from_array(random_prob_matrix(rng, 10, 6),
                                          role="probabilities"),
                os.path.join(root, "crop_probs"))
    paths["crop_probs"] = os.path.join(root, "crop_probs")

    retrieval = []
    for i in range(8):
        sims = rng.uniform(0.0, 0.8, size=10)
        gt = int(rng.integers(0, 10))
        if i % 4 != 0:
            sims[gt] = 0.95
        retrieval.append({"query_id": f"q{i}", "gt_index": gt,
                          "similarities": [float(s) for s in sims]})
    paths["retrieval"] = os.path.join(root, "retrieval.jsonl")
    write_jsonl(paths["retrieval"], retrieval)

    detections = [
        {"image_id": f"i{i}", "expected_class": ["dog", "cat"][i % 2],
         "detections": [{"class": ["dog", "cat"][i % 2],
                         "score": 0.9 if i % 3 else 0.2}]}
        for i in range(9)
    ]
    paths["detections"] = os.path.join(root, "detections.jsonl")
    write_jsonl(paths["detections"], detections)

    triplets = [
        {"word": ["left", "right", "on"][i % 3], "triplet_id": f"t{i}",
         "sim_matched": float(rng.uniform(0.4, 1.0)),
         "sim_mismatched": float(rng.uniform(0.0, 0.6))}
        for i in range(12)
    ]
    paths["triplets"] = os.path.join(root, "triplets.jsonl")
    write_jsonl(paths["triplets"], triplets)

    counts = [
        {"caption_id": f"c{i}",
         "gt_counts": {"dog": float(rng.integers(1, 5))},
         "pred_counts": {"dog": float(rng.integers(0, 5))}}
        for i in range(10)
    ]
    paths["counts"] = os.path.join(root, "counts.jsonl")
    write_jsonl(paths["counts"], counts)
    return paths


def write_run_config(tmp_path, rng, out_name="out"):
    real_dir = os.path.join(tmp_path, "real")
    os.makedirs(real_dir, exist_ok=True)
    real_features = os.path.join(real_dir, "features")
    real_crops = os.path.join(real_dir, "crop_features")
    save_matrix(MatrixArtifact.from_array(rng.normal(size=(30, 5)), role="features"),
                real_features)
    save_matrix(MatrixArtifact.from_array(rng.normal(size=(20, 5)), role="features"),
                real_crops)
    methods = []
    for name in ("alpha", "beta"):
        paths = build_method_artifacts(os.path.join(tmp_path, name), rng,
                                       shift=0.5 if name == "beta" else 0.0)
        methods.append({"name": name, "artifacts": paths})
    config = {
        "output_dir": os.path.join(tmp_path, out_name),
        "metrics": ["is", "is_star", "fid", "o_is", "o_fid", "rp", "soa", "pa", "ca"],
        "parameters": {"n_splits": 3, "temperature": 0.8, "soa_threshold": 0.5},
        "real": {"features": real_features, "crop_features": real_crops},
        "methods": methods,
    }
    config_path = os.path.join(tmp_path, "run.json")
    with open(config_path, "w") as fh:
        json.dump(config, fh, indent=2)
    return config_path, config


class TestValidateCommand:
    def test_pass_lines(self, runner, tmp_path, rng):
        save_matrix(MatrixArtifact.from_array(rng.normal(size=(3, 4)), role="features"),
                    str(tmp_path / "m"))
        write_jsonl(str(tmp_path / "d.jsonl"),
                    [{"image_id": "i", "expected_class": "dog", "detections": []}])
        result = invoke(runner, "validate", tmp_path / "m", tmp_path / "d.jsonl")
        assert result.exit_code == 0
        assert result.output.count("PASS") == 2

    def test_fail_names_file_and_exits_3(self, runner, tmp_path):
        (tmp_path / "bad.json").write_text(json.dumps(
            {"rows": 2, "cols": 2, "dtype": "f32le", "role": "features"}))
        (tmp_path / "bad.bin").write_bytes(b"\x00" * 10)
        result = runner.invoke(cli, ["validate", str(tmp_path / "bad")])
        assert result.exit_code == 3
        assert "FAIL" in result.output and "bad" in result.output


class TestMetricCommands:
    def test_is_command(self, runner, tmp_path):
        save_matrix(MatrixArtifact.from_array([[1, 0], [0, 1]], role="probabilities"),
                    str(tmp_path / "p"))
        result = invoke(runner, "is", "--probs", tmp_path / "p", "--splits", 1)
        payload = json.loads(result.output)
        assert payload["metric"] == "IS"
        assert payload["value"] == pytest.approx(2.0, abs=1e-12)
        assert payload["n"] == 2

    def test_is_star_requires_temperature_source(self, runner, tmp_path, rng):
        save_matrix(MatrixArtifact.from_array(rng.normal(size=(6, 3)), role="logits"),
                    str(tmp_path / "z"))
        result = runner.invoke(cli, ["is-star", "--logits", str(tmp_path / "z")])
        assert result.exit_code == 2

    def test_is_star_with_fixed_temperature(self, runner, tmp_path, rng):
        save_matrix(MatrixArtifact.from_array(rng.normal(size=(6, 3)), role="logits"),
                    str(tmp_path / "z"))
        result = invoke(runner, "is-star", "--logits", tmp_path / "z",
                        "--temperature", 0.5, "--splits", 2)
        payload = json.loads(result.output)
        assert payload["config"]["temperature"] == 0.5

    def test_fid_same_file_is_zero(self, runner, tmp_path, rng):
        save_matrix(MatrixArtifact.from_array(rng.normal(size=(20, 4)), role="features"),
                    str(tmp_path / "f"))
        result = invoke(runner, "fid", "--real", tmp_path / "f", "--generated", tmp_path / "f")
        assert json.loads(result.output)["value"] == pytest.approx(0.0, abs=1e-6)

    def test_rp_soa_pa_ca_commands(self, runner, tmp_path, rng):
        paths = build_method_artifacts(str(tmp_path / "m"), rng)
        for args, metric in (
            (("rp", "--records", paths["retrieval"]), "RP"),
            (("soa", "--records", paths["detections"]), "SOA"),
            (("pa", "--triplets", paths["triplets"]), "PA"),
            (("ca", "--records", paths["counts"]), "CA"),
        ):
            result = invoke(runner, *args)
            assert json.loads(result.output)["metric"] == metric

    def test_calibrate_command_with_figures(self, runner, tmp_path, rng):
        z = rng.normal(0, 2, size=(300, 5))
        labels = [int(v) for v in sample_labels(rng, naive_softmax(z))]
        save_matrix(MatrixArtifact.from_array(0.4 * z, role="logits"), str(tmp_path / "z"))
        (tmp_path / "y.json").write_text(json.dumps(labels))
        result = invoke(runner, "calibrate", "--logits", tmp_path / "z",
                        "--labels", tmp_path / "y.json",
                        "--figures", tmp_path / "figs")
        payload = json.loads(result.output)
        assert set(payload) >= {"temperature", "nll_before", "nll_after",
                                "ece_before", "ece_after", "reliability_bins"}
        assert (tmp_path / "figs" / "reliability_before.png").exists()
        assert (tmp_path / "figs" / "reliability_after.png").exists()


class TestPrepCommands:
    def test_pa_sets(self, runner, tmp_path):
        write_jsonl(str(tmp_path / "caps.jsonl"), [
            {"id": "1", "text": "A man is in front of the blue car"},
            {"id": "2", "text": "a bird between two trees"},
        ])
        result = invoke(runner, "prep", "pa-sets", "--captions", tmp_path / "caps.jsonl",
                        "--out", tmp_path / "prep")
        payload = json.loads(result.output)
        assert payload["counts"] == {"in front of": 1}
        assert payload["unmapped"] == {"between": 1}
        lines = (tmp_path / "prep" / "pa_sets.jsonl").read_text().splitlines()
        assert json.loads(lines[0])["mismatched"] == "A man is behind the blue car"

    def test_count_candidates(self, runner, tmp_path):
        write_jsonl(str(tmp_path / "caps.jsonl"), [
            {"id": "1", "text": "two dogs on a couch"},
            {"id": "2", "text": "the dog runs"},
        ])
        result = invoke(runner, "prep", "count-candidates",
                        "--captions", tmp_path / "caps.jsonl", "--out", tmp_path / "prep")
        assert json.loads(result.output)["candidates"] == 1


class TestRankAndReportCommands:
    def test_rank_reproduces_golden_rs(self, runner, tmp_path):
        result = invoke(runner, "rank", "--table", BENCHMARK_CSV, "--out", tmp_path / "rep")
        payload = json.loads(result.output)
        assert payload["ranking_score"] == BENCHMARK_RS
        assert (tmp_path / "rep" / "report.csv").exists()
        assert (tmp_path / "rep" / "report_ranking.png").exists()

    def test_report_rerenders_run_dir(self, runner, tmp_path, rng):
        config_path, config = write_run_config(str(tmp_path), rng)
        assert invoke(runner, "run", "--config", config_path).exit_code == 0
        report_json = os.path.join(config["output_dir"], "report.json")
        before = open(report_json, "rb").read()
        os.remove(report_json)
        assert invoke(runner, "report", "--run", config["output_dir"]).exit_code == 0
        assert open(report_json, "rb").read() == before


class TestRunCommand:
    def test_full_run_succeeds_and_reports(self, runner, tmp_path, rng):
        config_path, config = write_run_config(str(tmp_path), rng)
        result = invoke(runner, "run", "--config", config_path)
        assert result.exit_code == 0
        out = config["output_dir"]
        values = json.loads(open(os.path.join(out, "metric_values.json")).read())
        assert values["errors"] == []
        assert set(values["values"]["alpha"]) == {"IS", "IS_star", "FID", "RP", "SOA_C",
                                                  "SOA_I", "O_IS", "O_FID", "CA", "PA"}
        report = json.loads(open(os.path.join(out, "report.json")).read())
        assert set(report["ranking_score"]) == {"alpha", "beta"}

    def test_zero_methods_exits_2(self, runner, tmp_path):
        config_path = tmp_path / "bad.json"
        config_path.write_text(json.dumps(
            {"output_dir": str(tmp_path / "o"), "metrics": ["rp"], "methods": []}))
        result = runner.invoke(cli, ["run", "--config", str(config_path)])
        assert result.exit_code == 2

    def test_missing_artifact_key_exits_2(self, runner, tmp_path):
        config_path = tmp_path / "bad.json"
        config_path.write_text(json.dumps(
            {"output_dir": str(tmp_path / "o"), "metrics": ["rp"],
             "methods": [{"name": "m", "artifacts": {}}]}))
        assert runner.invoke(cli, ["run", "--config", str(config_path)]).exit_code == 2

    def test_broken_artifact_isolates_cell_and_exits_3(self, runner, tmp_path, rng):
        config_path, config = write_run_config(str(tmp_path), rng)
        raw = json.loads(open(config_path).read())
        raw["methods"][0]["artifacts"]["probs"] = str(tmp_path / "missing")
        with open(config_path, "w") as fh:
            json.dump(raw, fh)
        result = runner.invoke(cli, ["run", "--config", config_path])
        assert result.exit_code == 3
        values = json.loads(open(os.path.join(config["output_dir"], "metric_values.json")).read())
        assert len(values["errors"]) == 1
        assert values["errors"][0]["method"] == "alpha"
        assert values["errors"][0]["metric"] == "is"
        # every other cell still computed
        assert values["values"]["alpha"]["RP"] is not None
        assert values["values"]["beta"]["IS"] is not None

    def test_degenerate_calibration_exits_4(self, runner, tmp_path, rng):
        config_path, config = write_run_config(str(tmp_path), rng)
        save_matrix(MatrixArtifact.from_array([[1.0, 2.0]] * 4, role="logits"),
                    str(tmp_path / "degenerate"))
        (tmp_path / "labels.json").write_text("[1, 1, 1, 1]")
        raw = json.loads(open(config_path).read())
        raw["metrics"] = ["is_star"]
        raw["parameters"] = {"calibration": {"logits": str(tmp_path / "degenerate"),
                                             "labels": str(tmp_path / "labels.json")}}
        with open(config_path, "w") as fh:
            json.dump(raw, fh)
        result = runner.invoke(cli, ["run", "--config", config_path])
        assert result.exit_code == 4

    def test_rank_only_run(self, runner, tmp_path):
        config_path = tmp_path / "rank.json"
        config_path.write_text(json.dumps({
            "output_dir": str(tmp_path / "out"),
            "metrics": ["rank"],
            "metric_table": BENCHMARK_CSV,
        }))
        result = invoke(runner, "run", "--config", config_path)
        assert result.exit_code == 0
        report = json.loads(open(tmp_path / "out" / "report.json").read())
        assert report["ranking_score"] == BENCHMARK_RS
