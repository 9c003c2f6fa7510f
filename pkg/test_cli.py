"""End-to-end tests for the osclab command line"""

from pathlib import Path

import numpy as np
import pandas as pd
import pytest

from app.cli import main
from app.io_formats import parse_pgm, read_weights
from app.manifest import MANIFEST_NAME, RunManifest

DATA = Path(__file__).parent / "data"


def write_train(path: Path, times) -> Path:
    path.write_text("# synthetic\n" + "\n".join(repr(float(t)) for t in times) + "\n")
    return path


def test_simulate_writes_one_file_per_oscillator(tmp_path):
    out = tmp_path / "sim"
    assert main(["--config", str(DATA / "two_oscillators.json"), "--out", str(out), "simulate"]) == 0
    assert sorted(p.name for p in out.iterdir()) == [MANIFEST_NAME, "train_0.txt", "train_1.txt"]
    manifest = RunManifest.load(out / MANIFEST_NAME)
    assert manifest.command == "simulate"
    assert manifest.seeds == {"seed": 1}
    assert all(manifest.verify(out).values())


def test_simulate_reruns_are_byte_identical(tmp_path):
    for name in ("a", "b"):
        assert main(["--config", str(DATA / "two_oscillators.json"), "--out", str(tmp_path / name), "simulate"]) == 0
    for train in ("train_0.txt", "train_1.txt"):
        assert (tmp_path / "a" / train).read_bytes() == (tmp_path / "b" / train).read_bytes()


def test_seed_flag_overrides_config(tmp_path):
    args = ["--config", str(DATA / "two_oscillators.json"), "--seed", "0x10", "--out", str(tmp_path), "simulate"]
    assert main(args) == 0
    assert RunManifest.load(tmp_path / MANIFEST_NAME).seeds == {"seed": 16}


def test_invalid_parameters_exit_code(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"network": {"oscillators": [{"supply_current_uA": 500}, {"supply_current_uA": 5000}]}}')
    assert main(["--config", str(bad), "--out", str(tmp_path / "o"), "simulate"]) == 3


def test_missing_config_exit_code(tmp_path):
    assert main(["--out", str(tmp_path), "simulate"]) == 2
    assert main(["--config", str(tmp_path / "nope.json"), "--out", str(tmp_path), "simulate"]) == 2


def test_metrics_on_synthetic_trains(tmp_path, capsys):
    a = write_train(tmp_path / "a.txt", np.arange(200) * 1.0)
    b = write_train(tmp_path / "b.txt", np.arange(100) * 2.0)
    out = tmp_path / "m"
    assert main(["--out", str(out), "metrics", str(a), str(b)]) == 0
    frame = pd.read_csv(out / "metrics.csv")
    assert len(frame) == 1
    assert (frame.loc[0, "m_i"], frame.loc[0, "m_j"]) == (2, 1)
    assert frame.loc[0, "shr"] == "1:2"
    assert frame.loc[0, "mu_percent"] == 100.0
    assert "a.txt ~ b.txt" in capsys.readouterr().out


def test_metrics_insufficient_data_exit_code(tmp_path):
    a = write_train(tmp_path / "a.txt", np.arange(10) * 1.0)
    b = write_train(tmp_path / "b.txt", np.arange(10) * 1.0)
    assert main(["--out", str(tmp_path / "m"), "metrics", str(a), str(b)]) == 5


def test_metrics_malformed_file_exit_code(tmp_path):
    a = write_train(tmp_path / "a.txt", np.arange(100) * 1.0)
    b = tmp_path / "b.txt"
    b.write_text("0.5\nnot-a-number\n")
    assert main(["--out", str(tmp_path / "m"), "metrics", str(a), str(b)]) == 7


def test_metrics_needs_two_trains(tmp_path):
    a = write_train(tmp_path / "a.txt", np.arange(100) * 1.0)
    assert main(["--out", str(tmp_path / "m"), "metrics", str(a)]) == 3


def test_sweep_writes_map_and_image(tmp_path, capsys):
    out = tmp_path / "sweep"
    assert main(["--config", str(DATA / "sweep_toy.json"), "--out", str(out), "--workers", "1", "sweep"]) == 0
    assert len((out / "map.csv").read_text().splitlines()) == 10
    pixels = parse_pgm((out / "map.pgm").read_text())
    assert pixels.shape == (3, 3)
    # diagonal cells lock 1:1, which maps to the middle gray level
    assert [pixels[k, k] for k in range(3)] == [128, 128, 128]
    assert "N_s:" in capsys.readouterr().out
    assert set(RunManifest.load(out / MANIFEST_NAME).artifacts) == {"map.csv", "map.pgm"}


def test_sweep_patterns_writes_one_row_per_pattern(tmp_path, capsys):
    out = tmp_path / "patterns"
    args = ["--config", str(DATA / "two_oscillators.json"), "--out", str(out), "--workers", "1", "sweep", "--patterns", "600", "450"]
    assert main(args) == 0
    frame = pd.read_csv(out / "patterns.csv", dtype={"pattern": str}, keep_default_na=False)
    assert list(frame["pattern"]) == ["00", "01", "10", "11"]
    assert list(frame["error_flag"]) == ["", "", "", ""]
    assert set(frame["i"]) == {0} and set(frame["j"]) == {1}
    assert "ON/OFF PATTERNS" in capsys.readouterr().out
    manifest = RunManifest.load(out / MANIFEST_NAME)
    assert set(manifest.artifacts) == {"patterns.csv"}
    assert manifest.config["patterns"] == {"i_on_uA": 600.0, "i_off_uA": 450.0}
    assert all(manifest.verify(out).values())


def test_sweep_needs_a_sweep_section(tmp_path):
    assert main(["--config", str(DATA / "two_oscillators.json"), "--out", str(tmp_path), "sweep"]) == 2


def test_xor_with_reference_features(tmp_path):
    out = tmp_path / "xor"
    assert main(["--config", str(DATA / "calibrated_xor.json"), "--out", str(out), "xor", "--reference-features"]) == 0
    frame = pd.read_csv(out / "xor_table.csv")
    assert list(frame["Q"]) == [0, 1, 1, 0]
    assert list(frame["Q"]) == list(frame["expected_Q"])
    assert list(frame["I_p1_uA"]) == pytest.approx([981.0, 981.0, 638.0, 638.0])
    assert read_weights(out / "weights.json").weights == pytest.approx((1.12, -0.8, 0.78, -1.0))


def test_train_on_reference_dataset(tmp_path, capsys):
    out = tmp_path / "train"
    assert main(["--out", str(out), "train", str(DATA / "reference_features.csv")]) == 0
    neuron = read_weights(out / "weights.json")
    assert len(neuron.input_weights) == 2
    assert len(neuron.feature_weights) == 1
    assert "4/4" in capsys.readouterr().out


def test_train_rejects_malformed_dataset(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("in_x,label\n1,7\n")
    assert main(["--out", str(tmp_path / "o"), "train", str(bad)]) == 7
