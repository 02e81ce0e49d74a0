from pathlib import Path

import numpy as np
import pytest

from noisescope.cli import run
from noisescope.dataset import save_image


class TestScheduleCommand:
    def test_reference_invocation(self, tmp_path, capsys):
        rc = run(["schedule", "--rho", "7", "--n", "18", "--range", "0.6:5.3",
                  "--out", str(tmp_path)])
        assert rc == 0
        out = capsys.readouterr().out
        assert "r_p=" in out
        lines = (tmp_path / "schedule.csv").read_text().splitlines()
        assert lines[0] == "index,sigma"
        assert len(lines) == 20
        assert (tmp_path / "run-manifest.txt").exists()

    def test_explicit_bounds(self, tmp_path):
        rc = run(["schedule", "--sigma-min", "0.002", "--sigma-max", "80",
                  "--out", str(tmp_path)])
        assert rc == 0

    def test_missing_bounds_is_runtime_error(self, tmp_path):
        assert run(["schedule", "--out", str(tmp_path)]) == 2

    def test_byte_identical_reruns(self, tmp_path):
        run(["schedule", "--range", "0.6:5.3", "--out", str(tmp_path / "a")])
        run(["schedule", "--range", "0.6:5.3", "--out", str(tmp_path / "b")])
        a = (tmp_path / "a" / "schedule.csv").read_bytes()
        b = (tmp_path / "b" / "schedule.csv").read_bytes()
        assert a == b


class TestUsageErrors:
    def test_unknown_flag_exit_1_no_files(self, tmp_path):
        rc = run(["schedule", "--does-not-exist", "1", "--out", str(tmp_path / "x")])
        assert rc == 1
        assert not (tmp_path / "x").exists()

    def test_unknown_subcommand(self):
        assert run(["frobnicate"]) == 1

    def test_help_exits_zero(self):
        assert run(["--help"]) == 0


class TestAnalyze:
    def test_empty_directory_exit_2(self, tmp_path, capsys):
        data = tmp_path / "data"
        data.mkdir()
        rc = run(["analyze", "--data", str(data), "--out", str(tmp_path / "out")])
        assert rc == 2
        assert "corpus" in capsys.readouterr().err

    def test_gen_data_then_analyze(self, tmp_path):
        data = tmp_path / "data"
        rc = run(["gen-data", "--count", "12", "--out", str(data), "--seed", "5"])
        assert rc == 0
        assert (data / "manifest.csv").exists()
        assert len(list(data.glob("img_*.png"))) == 12

        out = tmp_path / "analysis"
        rc = run(["analyze", "--data", str(data), "--out", str(out),
                  "--grid-max", "12", "--grid-step", "0.1", "--subsample", "400"])
        assert rc == 0
        assert (out / "sweep.csv").exists()
        text = (out / "range.txt").read_text()
        assert "sigma_end" in text and "sigma_start" in text

    def test_analyze_reports_no_convergence(self, tmp_path):
        # A high-contrast blocky corpus whose class divergence cannot settle
        # below the threshold within a tiny grid: runtime error, not a crash.
        data = tmp_path / "data"
        data.mkdir()
        rng = np.random.default_rng(0)
        for i in range(3):
            img = np.ones((16, 16))
            img[4:12, 4:12] = rng.uniform(-1, -0.2, (8, 8))
            save_image(img, data / f"im_{i}.png")
        rc = run(["analyze", "--data", str(data), "--out", str(tmp_path / "o"),
                  "--grid-max", "2", "--grid-step", "0.5", "--subsample", "50"])
        assert rc == 2

    def test_gen_data_masks_live_in_subdirectory(self, tmp_path):
        data = tmp_path / "data"
        assert run(["gen-data", "--count", "2", "--out", str(data)]) == 0
        assert len(list(data.glob("*.png"))) == 2
        assert len(list((data / "masks").glob("*.png"))) == 2


class TestEval:
    def test_eval_csv_appends(self, tmp_path):
        data = tmp_path / "data"
        run(["gen-data", "--count", "5", "--out", str(data), "--seed", "1"])
        out = tmp_path / "ev"
        for _ in range(2):
            rc = run(["eval", "--images", str(data), "--reference", str(data),
                      "--range", "0.3:8.0", "--out", str(out), "--downscale", "4"])
            assert rc == 0
        lines = (out / "eval.csv").read_text().splitlines()
        assert len(lines) == 3
        assert lines[1] == lines[2]
        assert lines[1].startswith("1,")  # pdr 1.0 on clean generator output


class TestConfigFile:
    def test_config_supplies_defaults_flags_override(self, tmp_path):
        cfg = tmp_path / "conf.kv"
        cfg.write_text("rho=3\nn=10\nrange=0.6:5.3\n")
        out1 = tmp_path / "o1"
        rc = run(["schedule", "--config", str(cfg), "--out", str(out1)])
        assert rc == 0
        assert len((out1 / "schedule.csv").read_text().splitlines()) == 12

        out2 = tmp_path / "o2"
        rc = run(["schedule", "--config", str(cfg), "--n", "18", "--out", str(out2)])
        assert rc == 0
        assert len((out2 / "schedule.csv").read_text().splitlines()) == 20
