#!/usr/bin/env python3
"""
End-to-end tests for the generate / extract / sweep / probe commands
"""

import pandas as pd
import pytest

from cli import EXIT_DATA, EXIT_OK, EXIT_USAGE, main
from glcm import FEATURE_NAMES


@pytest.fixture(autouse=True)
def isolated_cwd(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)


@pytest.fixture
def dataset_dir(tmp_path):
    target = tmp_path / "dataset"
    assert main(["generate", str(target), "--images-per-class", "10", "--side", "16", "--seed", "3"]) == EXIT_OK
    return target


def test_help_lists_features_and_angles(capsys):
    with pytest.raises(SystemExit) as info:
        main(["--help"])
    assert info.value.code == 0
    text = capsys.readouterr().out
    for name in FEATURE_NAMES:
        assert name in text
    for angle in ("0 deg", "45 deg", "90 deg", "135 deg"):
        assert angle in text


def test_sweep_help_flags_threaded_timings(capsys):
    with pytest.raises(SystemExit) as info:
        main(["sweep", "--help"])
    assert info.value.code == 0
    text = capsys.readouterr().out
    assert "--jobs" in text
    assert "*_ms" in text


def test_generate_writes_dataset(dataset_dir, tmp_path):
    assert len(list(dataset_dir.glob("*.pgm"))) == 30
    manifest = pd.read_csv(dataset_dir / "manifest.csv")
    assert manifest["split"].value_counts().to_dict() == {"train": 27, "test": 3}

    again = tmp_path / "again"
    assert main(["generate", str(again), "--images-per-class", "10", "--side", "16", "--seed", "3"]) == EXIT_OK
    for path in sorted(dataset_dir.iterdir()):
        assert (again / path.name).read_bytes() == path.read_bytes()


def test_extract_writes_feature_csv(dataset_dir, tmp_path):
    output = tmp_path / "features.csv"
    code = main(["extract", str(dataset_dir), "--combo", "energy+homogeneity", "--side", "16",
                 "--output", str(output)])
    assert code == EXIT_OK
    frame = pd.read_csv(output)
    assert len(frame) == 30
    assert list(frame.columns[:4]) == ["sample_index", "label", "energy_0", "homogeneity_0"]
    assert frame.shape[1] == 2 + 8


def test_extract_three_features_default_path(dataset_dir, tmp_path):
    code = main(["extract", str(dataset_dir), "--combo", "contrast+correlation+entropy", "--side", "16",
                 "--output-dir", str(tmp_path / "out"), "--jobs", "3"])
    assert code == EXIT_OK
    frame = pd.read_csv(tmp_path / "out" / "features_contrast+entropy+correlation.csv")
    assert frame.shape == (30, 2 + 12)


@pytest.mark.parametrize("combo", ["energy+energy", "energy+shine", "energy"])
def test_extract_bad_combo_is_usage_error(dataset_dir, combo, capsys):
    assert main(["extract", str(dataset_dir), "--combo", combo]) == EXIT_USAGE
    assert "❌" in capsys.readouterr().out


def test_sweep_writes_reports(dataset_dir, tmp_path):
    out = tmp_path / "sweep"
    code = main(["sweep", str(dataset_dir), "--side", "16", "--svm-epochs", "3", "--output-dir", str(out)])
    assert code == EXIT_OK
    assert len(pd.read_csv(out / "report" / "cells.csv")) == 40
    assert len(pd.read_csv(out / "report" / "summary.csv")) == 4
    assert (out / "report" / "ranking.txt").is_file()


def test_sweep_reports_failing_cell(dataset_dir, tmp_path, capsys):
    out = tmp_path / "sweep"
    code = main(["sweep", str(dataset_dir), "--side", "16", "--knn-k", "100", "--output-dir", str(out)])
    assert code == EXIT_DATA
    printed = capsys.readouterr().out
    assert "❌" in printed
    assert "KNN/energy+contrast" in printed
    assert not (out / "report" / "cells.csv").exists()


def test_probe(tmp_path):
    out = tmp_path / "probe"
    code = main(["probe", "--sides", "16,32,64", "--kernel", "vectorized", "--features",
                 "--output-dir", str(out)])
    assert code == EXIT_OK
    probe = pd.read_csv(out / "probe.csv")
    assert list(probe.columns) == ["side", "median_ms", "cell_ops"]
    assert probe["cell_ops"].tolist() == [2 * n * (n - 1) + 2 * (n - 1) ** 2 for n in (16, 32, 64)]
    assert len(pd.read_csv(out / "feature_costs.csv")) == 5


@pytest.mark.parametrize("argv", [["probe"], ["probe", "--sides", "64,128"], ["probe", "--sides", "a,b,c"]])
def test_probe_needs_three_sides(argv):
    assert main(argv) == EXIT_USAGE


def test_usage_and_data_exit_codes(tmp_path):
    assert main([]) == EXIT_USAGE
    assert main(["dance"]) == EXIT_USAGE
    assert main(["sweep", str(tmp_path / "nowhere")]) == EXIT_DATA
    assert main(["generate", str(tmp_path / "d"), "--levels", "1"]) == EXIT_DATA
    assert main(["generate", str(tmp_path / "d"), "--images-per-class", "10", "--side", "16",
                 "--config", str(tmp_path / "missing.cfg")]) == EXIT_USAGE
