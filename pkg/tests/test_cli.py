"""Command-line interface, exercised in-process through main()."""

from __future__ import annotations

import json
import subprocess
import sys

import numpy as np
import pytest

from mmgc.cli import main
from mmgc.data import read_feature_matrix, save_dataset

GEN_CONFIG = """\
n = 40
k = 3
p_in = 0.4
p_out = 0.02
seed = 5
outlier_rate = 0.05
modality.text.dim = 6
modality.text.noise_sigma = 1.0
modality.image.dim = 4
"""

FAST_TRAIN = ["--epochs", "2", "--hidden-dim", "8", "--walk-len", "3",
              "--mms-negatives", "8"]


def _expect_failure(argv, capsys, match=""):
    with pytest.raises(SystemExit) as excinfo:
        main(argv)
    assert excinfo.value.code == 2
    err = capsys.readouterr().err
    assert err.startswith("error:")
    assert match in err
    return err


# ---------------------------------------------------------------- generate

def test_generate_writes_dataset(tmp_path, capsys):
    config = tmp_path / "synth.txt"
    config.write_text(GEN_CONFIG)
    out = tmp_path / "data"
    assert main(["generate", "--config", str(config), "--out", str(out)]) == 0

    for name in ("manifest.txt", "edges.txt", "labels.txt",
                 "text.features.bin", "image.features.bin"):
        assert (out / name).exists(), name

    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == f"manifest {out / 'manifest.txt'}"
    assert lines[1] == "nodes 40"
    assert lines[2].startswith("edges ")

    spikes = (out / "text.spikes.csv").read_text().splitlines()
    assert spikes[0] == "row,col"
    r, c = map(int, spikes[1].split(","))
    assert 0 <= r < 40 and 0 <= c < 6


def test_generate_rejects_unknown_key(tmp_path, capsys):
    config = tmp_path / "synth.txt"
    config.write_text(GEN_CONFIG + "bogus = 1\n")
    _expect_failure(
        ["generate", "--config", str(config), "--out", str(tmp_path / "d")],
        capsys, match="bogus",
    )


def test_generate_requires_modalities(tmp_path, capsys):
    config = tmp_path / "synth.txt"
    config.write_text("n = 10\nk = 2\np_in = 0.5\np_out = 0.1\n")
    _expect_failure(
        ["generate", "--config", str(config), "--out", str(tmp_path / "d")],
        capsys, match="modalities",
    )


# ---------------------------------------------------------------- diagnose

def test_diagnose_reports_json(dataset_dir, capsys):
    assert main(["diagnose", "--data", str(dataset_dir),
                 "--tau", "2.5"]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["tau"] == 2.5
    assert len(report["cross_modal"]) == 1
    pair = report["cross_modal"][0]
    assert sorted(pair["modalities"]) == ["image", "text"]
    assert 0.0 <= pair["distance_correlation"] <= 1.0
    assert report["average_distance_correlation"] == pair["distance_correlation"]
    assert set(report["outliers"]) == {"image", "text"}
    assert report["outliers"]["text"]["tau"] == 2.5


def test_diagnose_missing_manifest(tmp_path, capsys):
    _expect_failure(["diagnose", "--data", str(tmp_path / "nope.txt")], capsys)


# ----------------------------------------------------------------- cluster

def test_cluster_end_to_end(dataset_dir, tmp_path, capsys):
    out = tmp_path / "run"
    code = main(["cluster", "--data", str(dataset_dir),
                 "--out", str(out), *FAST_TRAIN])
    assert code == 0

    lines = (out / "assignments.csv").read_text().splitlines()
    assert lines[0] == "node_id,cluster"
    assert len(lines) == 25  # header + 24 nodes
    ids = [int(l.split(",")[1]) for l in lines[1:]]
    assert set(ids) == {0, 1, 2}  # manifest records clusters = 3

    metrics = json.loads((out / "metrics.json").read_text())
    assert list(metrics) == ["acc", "nmi", "f1", "ari", "cs"]
    for name in ("acc", "nmi", "f1", "cs"):
        assert 0.0 <= metrics[name] <= 1.0
    assert -0.5 <= metrics["ari"] <= 1.0  # adjusted index may dip negative

    assert len((out / "epochs.jsonl").read_text().splitlines()) == 2
    w = read_feature_matrix(out / "projection_text.bin")
    assert w.shape == (6, 8) and w.dtype == np.float32

    stdout = capsys.readouterr().out
    assert any(l.startswith("acc ") and l.endswith("%") for l in stdout.splitlines())


def test_cluster_k_precedence(dataset_dir, tmp_path):
    # every cluster is refilled when it empties, so exactly k ids appear
    config = tmp_path / "train.txt"
    config.write_text("clusters = 2\nepochs = 2\nhidden_dim = 8\n"
                      "walk_length = 3\nmms_negatives = 8\n")

    def run(extra, out):
        assert main(["cluster", "--data", str(dataset_dir),
                     "--out", str(tmp_path / out), "--config", str(config),
                     *extra]) == 0
        lines = (tmp_path / out / "assignments.csv").read_text().splitlines()[1:]
        return {int(l.split(",")[1]) for l in lines}

    assert run([], "from_config") == {0, 1}          # config beats manifest
    assert run(["--k", "4"], "from_flag") == {0, 1, 2, 3}  # flag beats config


def test_cluster_flag_overrides_config_scalar(dataset_dir, tmp_path):
    config = tmp_path / "train.txt"
    config.write_text("epochs = 1\nhidden_dim = 8\nwalk_length = 3\n"
                      "mms_negatives = 8\n")
    out = tmp_path / "run"
    assert main(["cluster", "--data", str(dataset_dir),
                 "--out", str(out), "--config", str(config),
                 "--epochs", "3"]) == 0
    assert len((out / "epochs.jsonl").read_text().splitlines()) == 3


def test_cluster_without_labels_skips_metrics(small_graph, tmp_path, capsys):
    unlabeled = type(small_graph)(
        edges=small_graph.edges, modalities=small_graph.modalities, labels=None
    )
    manifest = save_dataset(unlabeled, tmp_path / "data")
    out = tmp_path / "run"
    assert main(["cluster", "--data", str(manifest), "--out", str(out),
                 "--k", "3", *FAST_TRAIN]) == 0
    assert "skipping metrics" in capsys.readouterr().out
    assert not (out / "metrics.json").exists()
    assert (out / "assignments.csv").exists()


def test_cluster_requires_some_k(small_graph, tmp_path, capsys):
    unlabeled = type(small_graph)(
        edges=small_graph.edges, modalities=small_graph.modalities, labels=None
    )
    manifest = save_dataset(unlabeled, tmp_path / "data")  # no clusters entry
    _expect_failure(
        ["cluster", "--data", str(manifest), "--out", str(tmp_path / "run"),
         *FAST_TRAIN],
        capsys, match="cluster count",
    )


def test_cluster_runs_deterministically(dataset_dir, tmp_path):
    argv = ["cluster", "--data", str(dataset_dir),
            "--seed", "3", *FAST_TRAIN]
    assert main(argv + ["--out", str(tmp_path / "a"), "--threads", "1"]) == 0
    assert main(argv + ["--out", str(tmp_path / "b"), "--threads", "8"]) == 0
    a = (tmp_path / "a" / "assignments.csv").read_bytes()
    b = (tmp_path / "b" / "assignments.csv").read_bytes()
    assert a == b


def test_cluster_accepts_ablation_flags(dataset_dir, tmp_path):
    out = tmp_path / "run"
    assert main(["cluster", "--data", str(dataset_dir),
                 "--out", str(out), "--no-fdd", "--no-hps", *FAST_TRAIN]) == 0


def test_cluster_config_boolean_flags(dataset_dir, tmp_path, capsys):
    config = tmp_path / "train.txt"
    config.write_text("no_fdd = true\nepochs = 1\nhidden_dim = 8\n"
                      "walk_length = 3\nmms_negatives = 8\n")
    out = tmp_path / "run"
    assert main(["cluster", "--data", str(dataset_dir),
                 "--out", str(out), "--config", str(config)]) == 0

    config.write_text("no_fdd = maybe\n")
    _expect_failure(
        ["cluster", "--data", str(dataset_dir),
         "--out", str(out), "--config", str(config)],
        capsys, match="boolean",
    )


# ----------------------------------------------------------------- spectra

def test_spectra_reports_and_files(dataset_dir, tmp_path, capsys):
    out = tmp_path / "spectra_out"
    assert main(["spectra", "--data", str(dataset_dir),
                 "--out", str(out)]) == 0
    csv_lines = (out / "spectra.csv").read_text().splitlines()
    assert csv_lines[0] == "lambda,response_exact,response_truncated,error"
    assert len(csv_lines) > 1

    report = json.loads((out / "spectra.json").read_text())
    assert report["passed"] is True
    assert all(report["checks"].values())

    stdout = capsys.readouterr().out
    assert "energy_identity: pass" in stdout
    assert "FAIL" not in stdout


# --------------------------------------------------------------- gradcheck

def test_gradcheck_passes(dataset_dir, capsys):
    assert main(["gradcheck", "--data", str(dataset_dir),
                 "--n-cap", "12"]) == 0
    stdout = capsys.readouterr().out
    assert "loss gradients" in stdout
    assert "end-to-end step gradient" in stdout
    assert "FAIL" not in stdout
    assert "max_rel_error=" in stdout


# ------------------------------------------------------------------ process

def test_console_script_help():
    proc = subprocess.run(
        [sys.executable, "-m", "mmgc.cli", "--help"],
        capture_output=True, text=True, timeout=60,
    )
    assert proc.returncode == 0
    for sub in ("generate", "diagnose", "cluster", "spectra", "gradcheck"):
        assert sub in proc.stdout
