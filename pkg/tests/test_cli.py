import json
import os

import numpy as np
import pytest

from datagen import write_synthetic_idx_files
from rnn_introspect import cli, training
from rnn_introspect.util import sha256_file


@pytest.fixture(scope="module")
def data(tmp_path_factory):
    root = tmp_path_factory.mktemp("idx")
    return write_synthetic_idx_files(root, n=192, seed=1)


@pytest.fixture(scope="module")
def train_args(data, tmp_path_factory):
    out = tmp_path_factory.mktemp("trainrun")
    argv = [
        "train",
        "--train-images", data["train_images"],
        "--train-labels", data["train_labels"],
        "--test-images", data["test_images"],
        "--test-labels", data["test_labels"],
        "--out-dir", str(out),
        "--epochs", "2",
        "--batch-size", "32",
        "--seed", "3",
    ]
    assert cli.main(argv) == 0
    return out


def read_manifest(out_dir):
    with open(os.path.join(out_dir, "manifest.json")) as fh:
        return json.load(fh)


class TestGridParsing:
    def test_range(self):
        assert cli.parse_grid("1..5") == [1, 2, 3, 4, 5]

    def test_range_with_step(self):
        assert cli.parse_grid("0..10:5") == [0, 5, 10]

    def test_comma_list(self):
        assert cli.parse_grid("0,1,7") == [0, 1, 7]

    @pytest.mark.parametrize("bad", ["5..1", "", "1..9:0"])
    def test_bad_grids(self, bad):
        with pytest.raises(ValueError):
            cli.parse_grid(bad)


class TestExitCodes:
    def test_usage_error_is_2(self):
        assert cli.main(["train"]) == 2  # missing required flags

    def test_unknown_exp_is_2(self, data, tmp_path):
        argv = [
            "experiment", "--exp", "7", "--checkpoint", "x",
            "--test-images", data["test_images"], "--test-labels", data["test_labels"],
            "--out-dir", str(tmp_path),
        ]
        assert cli.main(argv) == 2

    def test_bad_idx_data_is_3(self, data, tmp_path):
        bad = tmp_path / "garbage-images"
        bad.write_bytes(b"\x00\x00\x08\x01" + bytes(100))  # label magic in image file
        argv = [
            "train", "--train-images", str(bad), "--train-labels", data["train_labels"],
            "--out-dir", str(tmp_path / "out"), "--epochs", "1",
        ]
        assert cli.main(argv) == 3

    def test_corrupt_checkpoint_is_3(self, data, tmp_path):
        ckpt = tmp_path / "bad.ckpt"
        ckpt.write_bytes(b"not a checkpoint at all")
        argv = [
            "experiment", "--exp", "1", "--checkpoint", str(ckpt),
            "--test-images", data["test_images"], "--test-labels", data["test_labels"],
            "--out-dir", str(tmp_path / "out"),
        ]
        assert cli.main(argv) == 3

    @pytest.mark.filterwarnings("ignore:invalid value encountered")
    def test_numeric_failure_is_4(self, data, train_args, tmp_path):
        ckpt = training.load_checkpoint(train_args / "checkpoint.ckpt")
        ckpt.params.w_out[:] = np.inf
        broken = tmp_path / "inf.ckpt"
        training.save_checkpoint(ckpt, broken)
        argv = [
            "train", "--train-images", data["train_images"],
            "--train-labels", data["train_labels"],
            "--out-dir", str(tmp_path / "out"),
            "--epochs", "3", "--batch-size", "32", "--seed", "3",
            "--resume", str(broken),
        ]
        assert cli.main(argv) == 4

    def test_io_failure_is_5(self, data, tmp_path):
        blocker = tmp_path / "blocked"
        blocker.write_text("a file, not a directory")
        argv = [
            "train", "--train-images", data["train_images"],
            "--train-labels", data["train_labels"],
            "--out-dir", str(blocker), "--epochs", "1",
        ]
        assert cli.main(argv) == 5

    def test_help_is_0(self, capsys):
        assert cli.main(["--help"]) == 0
        assert "reproduce-paper" in capsys.readouterr().out


class TestTrainCommand:
    def test_artifacts_exist(self, train_args):
        assert (train_args / "checkpoint.ckpt").exists()
        assert (train_args / "metrics.csv").exists()
        assert (train_args / "manifest.json").exists()

    def test_metrics_schema(self, train_args):
        lines = (train_args / "metrics.csv").read_text().strip().split("\n")
        assert lines[0] == "epoch,train_loss,train_acc,test_acc"
        assert len(lines) == 3  # two epochs

    def test_manifest_checksums_match_files(self, train_args):
        manifest = read_manifest(train_args)
        assert manifest["command"] == "train"
        assert manifest["seeds"] == {"seed": 3}
        for name, entry in manifest["outputs"].items():
            assert os.path.exists(entry["path"]), name
            assert sha256_file(entry["path"]) == entry["sha256"]

    def test_checkpoint_loads_and_config_recorded(self, train_args):
        ckpt = training.load_checkpoint(train_args / "checkpoint.ckpt")
        assert ckpt.epoch == 2
        assert ckpt.config.seed == 3
        assert ckpt.config.batch_size == 32

    def test_no_temp_files_left(self, train_args):
        leftovers = [n for n in os.listdir(train_args) if ".ckpt." in n or ".csv." in n]
        assert leftovers == []

    def test_float64_no_bias_config_flows_through(self, data, tmp_path):
        out = tmp_path / "f64"
        argv = [
            "train",
            "--train-images", data["train_images"], "--train-labels", data["train_labels"],
            "--out-dir", str(out), "--epochs", "1", "--limit", "64",
            "--precision", "float64", "--no-output-bias",
        ]
        assert cli.main(argv) == 0
        ckpt = training.load_checkpoint(out / "checkpoint.ckpt")
        assert ckpt.config.precision == "float64"
        assert not ckpt.config.output_bias
        assert np.all(ckpt.params.b_out == 0.0)  # bias never trained
        assert ckpt.params.w_in.dtype == np.float64
        # downstream commands must accept the float64 checkpoint
        argv = [
            "experiment", "--exp", "1", "--checkpoint", str(out / "checkpoint.ckpt"),
            "--test-images", data["test_images"], "--test-labels", data["test_labels"],
            "--out-dir", str(out / "exp"), "--grid", "1..3",
        ]
        assert cli.main(argv) == 0

    def test_limit_smoke_run(self, data, tmp_path):
        out = tmp_path / "smoke"
        argv = [
            "train",
            "--train-images", data["train_images"], "--train-labels", data["train_labels"],
            "--out-dir", str(out), "--epochs", "1", "--limit", "100",
            "--batch-size", "50",
        ]
        assert cli.main(argv) == 0
        assert (out / "checkpoint.ckpt").exists()
        ckpt = training.load_checkpoint(out / "checkpoint.ckpt")
        assert ckpt.adam.step_count == 2  # 100 examples / batch 50
        assert read_manifest(out)["config"]["limit"] == 100


class TestExperimentCommand:
    def test_single_experiment(self, data, train_args, tmp_path):
        argv = [
            "experiment", "--exp", "2",
            "--checkpoint", str(train_args / "checkpoint.ckpt"),
            "--test-images", data["test_images"], "--test-labels", data["test_labels"],
            "--out-dir", str(tmp_path), "--grid", "1..9",
        ]
        assert cli.main(argv) == 0
        lines = (tmp_path / "exp2_curve.csv").read_text().strip().split("\n")
        assert lines[0] == "kind,amount,readout_step,accuracy,shown_rows"
        assert len(lines) == 10
        assert (tmp_path / "exp2_curve.svg").exists()

    def test_exp3_default_grid_writes_501_rows(self, data, train_args, tmp_path):
        argv = [
            "experiment", "--exp", "3",
            "--checkpoint", str(train_args / "checkpoint.ckpt"),
            "--test-images", data["test_images"], "--test-labels", data["test_labels"],
            "--out-dir", str(tmp_path), "--limit", "64",
        ]
        assert cli.main(argv) == 0
        lines = (tmp_path / "exp3_curve.csv").read_text().strip().split("\n")
        assert len(lines) == 502  # header + k = 0..500

    def test_coplot(self, data, train_args, tmp_path):
        argv = [
            "experiment", "--exp", "12",
            "--checkpoint", str(train_args / "checkpoint.ckpt"),
            "--test-images", data["test_images"], "--test-labels", data["test_labels"],
            "--out-dir", str(tmp_path), "--grid", "1..9",
        ]
        assert cli.main(argv) == 0
        assert (tmp_path / "exp1_curve.csv").exists()
        assert (tmp_path / "exp2_curve.csv").exists()
        assert (tmp_path / "exp12_curve.svg").exists()

    def test_rerun_overwrites_atomically(self, data, train_args, tmp_path):
        argv = [
            "experiment", "--exp", "1",
            "--checkpoint", str(train_args / "checkpoint.ckpt"),
            "--test-images", data["test_images"], "--test-labels", data["test_labels"],
            "--out-dir", str(tmp_path), "--grid", "1..3",
        ]
        assert cli.main(argv) == 0
        first = (tmp_path / "exp1_curve.csv").read_bytes()
        assert cli.main(argv) == 0
        assert (tmp_path / "exp1_curve.csv").read_bytes() == first
        assert not [n for n in os.listdir(tmp_path) if ".csv." in n or ".svg." in n]


@pytest.fixture(scope="module")
def analyze_out(data, train_args, tmp_path_factory):
    out = tmp_path_factory.mktemp("analyze")
    argv = [
        "analyze",
        "--checkpoint", str(train_args / "checkpoint.ckpt"),
        "--test-images", data["test_images"], "--test-labels", data["test_labels"],
        "--out-dir", str(out),
        "--timesteps", "4,14,28",
        "--subsample", "96",
        "--perplexity", "6",
        "--tsne-iterations", "60",
        "--seed", "2",
    ]
    assert cli.main(argv) == 0
    return out


class TestAnalyzeCommand:
    def test_artifacts(self, analyze_out):
        # three requested timesteps -> three scatter plots
        for name in (
            "spectra.csv", "embedding.csv", "purity.csv", "dimensionality.svg",
            "tsne_t4.svg", "tsne_t14.svg", "tsne_t28.svg", "manifest.json",
        ):
            assert (analyze_out / name).exists(), name

    def test_embedding_row_count(self, analyze_out):
        lines = (analyze_out / "embedding.csv").read_text().strip().split("\n")
        assert lines[0] == "point_id,x,y,label,timestep"
        assert len(lines) == 1 + 96 * 3  # subsample size per requested timestep

    def test_purity_rows(self, analyze_out):
        lines = (analyze_out / "purity.csv").read_text().strip().split("\n")
        assert lines[0] == "timestep,k,purity"
        assert len(lines) == 1 + 3 * 3  # three timesteps x k in {5, 10, 20}

    def test_spectra_cover_all_timesteps(self, analyze_out):
        lines = (analyze_out / "spectra.csv").read_text().strip().split("\n")
        timesteps = {int(line.split(",")[0]) for line in lines[1:]}
        assert timesteps == set(range(1, 29))

    def test_svgs_self_contained_and_small(self, analyze_out):
        for name in ("dimensionality.svg", "tsne_t4.svg"):
            blob = (analyze_out / name).read_bytes()
            assert len(blob) < 5_000_000
            assert b"href" not in blob


class TestReproduceCommand:
    def test_chains_everything(self, data, tmp_path):
        out = tmp_path / "repro"
        argv = [
            "reproduce-paper",
            "--train-images", data["train_images"], "--train-labels", data["train_labels"],
            "--test-images", data["test_images"], "--test-labels", data["test_labels"],
            "--out-dir", str(out),
            "--epochs", "1", "--limit", "96", "--subsample", "64",
            "--perplexity", "5", "--tsne-iterations", "30", "--timesteps", "14",
        ]
        assert cli.main(argv) == 0
        assert (out / "train" / "checkpoint.ckpt").exists()
        assert (out / "exp12" / "exp1_curve.csv").exists()
        assert (out / "exp12" / "exp2_curve.csv").exists()
        assert (out / "exp3" / "exp3_curve.csv").exists()
        assert (out / "analyze" / "embedding.csv").exists()
        manifest = read_manifest(out)
        assert manifest["command"] == "reproduce-paper"
        assert any(name.startswith("train/") for name in manifest["outputs"])
