import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from odmr_scanscope.cli import main

SCENES_DIR = Path(__file__).resolve().parent.parent / "scenes"
REFERENCE_SCENE = SCENES_DIR / "single_spin_reference.json"


def run_cli(*argv):
    return main(list(argv))


@pytest.fixture
def small_scene(tmp_path):
    """A fast scene: coarse sweep, tiny scan, noise on."""
    scene = {
        "sample": {
            "spins": [{"position_nm": [0.0, 0.0, 0.0],
                       "moment_direction": [0.0, 0.0, 1.0]}],
            "bias_field_T": [0.0, 0.0, 0.2],
        },
        "probe": {"line": {"rf_amplitude_scale": 0.001}},
        "sweep": {"mode": "field", "start": 0.18, "stop": 0.205, "points": 101},
        "scan": {"x_range_nm": 3.0, "y_range_nm": 3.0, "nx": 4, "ny": 4},
        "noise": {"enabled": True, "rng_seed": 5},
        "modality": {"kind": "afm_nsom"},
    }
    path = tmp_path / "scene.json"
    path.write_text(json.dumps(scene))
    return path


class TestReport:
    def test_reference_scene_report(self, tmp_path, capsys):
        out = tmp_path / "out"
        code = run_cli("report", "--scene", str(REFERENCE_SCENE), "--out", str(out))
        assert code == 0
        report = json.loads((out / "report.json").read_text())
        assert report["field_T"] == pytest.approx(1.4848e-2, rel=0.01)
        assert report["ratio"] == pytest.approx(7.42, abs=0.08)
        assert report["verdict"] == "detectable"
        assert report["detectable"] is True
        assert report["min_detectable_field_T"] < report["field_T"]
        assert "sensitivity_model" in report
        stdout = capsys.readouterr().out
        assert "detectable" in stdout


class TestSweep:
    def test_noiseless_sweep_is_byte_identical(self, small_scene, tmp_path):
        out1, out2 = tmp_path / "a", tmp_path / "b"
        assert run_cli("sweep", "--scene", str(small_scene), "--out", str(out1),
                       "--no-noise") == 0
        assert run_cli("sweep", "--scene", str(small_scene), "--out", str(out2),
                       "--no-noise") == 0
        assert (out1 / "spectrum.csv").read_bytes() == \
            (out2 / "spectrum.csv").read_bytes()
        assert not (out1 / "spectrum_noisy.csv").exists()

    def test_noisy_variant_written_and_seeded(self, small_scene, tmp_path):
        out1, out2, out3 = tmp_path / "a", tmp_path / "b", tmp_path / "c"
        run_cli("sweep", "--scene", str(small_scene), "--out", str(out1))
        run_cli("sweep", "--scene", str(small_scene), "--out", str(out2))
        run_cli("sweep", "--scene", str(small_scene), "--out", str(out3),
                "--seed", "99")
        noisy1 = (out1 / "spectrum_noisy.csv").read_bytes()
        assert noisy1 == (out2 / "spectrum_noisy.csv").read_bytes()
        assert noisy1 != (out3 / "spectrum_noisy.csv").read_bytes()
        # the clean spectrum is seed independent
        assert (out1 / "spectrum.csv").read_bytes() == \
            (out3 / "spectrum.csv").read_bytes()


class TestScan:
    def test_outputs_and_seed_isolation(self, small_scene, tmp_path):
        outs = {}
        for name, argv in {
            "s1": ("--seed", "1"),
            "s2": ("--seed", "2"),
            "n1": ("--seed", "1", "--no-noise"),
            "n2": ("--seed", "2", "--no-noise"),
        }.items():
            out = tmp_path / name
            assert run_cli("scan", "--scene", str(small_scene),
                           "--out", str(out), *argv) == 0
            outs[name] = out
        for out in outs.values():
            assert (out / "scan.csv").exists()
            assert (out / "scan.pgm").exists()
            assert (out / "scan_meta.json").exists()
        # noiseless layers identical across seeds; noisy layers differ
        assert (outs["n1"] / "scan.csv").read_bytes() == \
            (outs["n2"] / "scan.csv").read_bytes()
        assert (outs["s1"] / "scan.csv").read_bytes() != \
            (outs["s2"] / "scan.csv").read_bytes()
        meta = json.loads((outs["s1"] / "scan_meta.json").read_text())
        assert meta["seed"] == 1
        assert meta["units"] == "T"

    def test_threads_flag_and_env(self, small_scene, tmp_path, monkeypatch):
        out1, out2 = tmp_path / "a", tmp_path / "b"
        run_cli("scan", "--scene", str(small_scene), "--out", str(out1),
                "--threads", "3")
        monkeypatch.setenv("ODMR_SCANSCOPE_THREADS", "2")
        run_cli("scan", "--scene", str(small_scene), "--out", str(out2))
        assert (out1 / "scan.csv").read_bytes() == (out2 / "scan.csv").read_bytes()


class TestFit:
    def test_fit_round_trip(self, small_scene, tmp_path, capsys):
        out = tmp_path / "out"
        run_cli("sweep", "--scene", str(small_scene), "--out", str(out),
                "--no-noise")
        code = run_cli("fit", "--input", str(out / "spectrum.csv"),
                       "--out", str(out))
        assert code == 0
        fit = json.loads((out / "fit.json").read_text())
        assert set(fit) == {"center", "fwhm", "amplitude", "offset",
                            "residual_norm", "converged", "iterations"}
        assert fit["converged"] is True
        # spin adds 1.48e-2 T on axis: line sits below the bare resonance
        assert fit["center"] == pytest.approx(0.2 - 1.4855e-2, rel=1e-3)
        stdout = capsys.readouterr().out
        assert '"center"' in stdout


class TestErrorPaths:
    def test_missing_scene_file(self, tmp_path, capsys):
        code = run_cli("report", "--scene", str(tmp_path / "absent.json"))
        assert code == 8
        err = json.loads(capsys.readouterr().err)
        assert err["exit_code"] == 8

    def test_syntax_error_exit_code(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        assert run_cli("report", "--scene", str(bad)) == 2
        err = json.loads(capsys.readouterr().err)
        assert err["error"] == "SceneSyntaxError"

    def test_unknown_key_exit_code(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text('{"sampel": {}}')
        assert run_cli("report", "--scene", str(bad)) == 3
        err = json.loads(capsys.readouterr().err)
        assert err["error"] == "SceneUnknownKeyError"
        assert err["path"] == "sampel"

    def test_invariant_violation_exit_code(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text('{"sweep": {"points": 2}}')
        assert run_cli("report", "--scene", str(bad)) == 4
        err = json.loads(capsys.readouterr().err)
        assert err["error"] == "SceneInvariantError"
        assert "sweep.points" in err["path"]

    def test_bad_threads_env(self, small_scene, monkeypatch, capsys):
        monkeypatch.setenv("ODMR_SCANSCOPE_THREADS", "lots")
        assert run_cli("scan", "--scene", str(small_scene)) == 5
        capsys.readouterr()


class TestInstalledEntryPoint:
    def test_console_script_runs(self, tmp_path):
        result = subprocess.run(
            [sys.executable, "-m", "odmr_scanscope.cli", "report",
             "--scene", str(REFERENCE_SCENE), "--out", str(tmp_path)],
            capture_output=True, text=True)
        assert result.returncode == 0
        assert (tmp_path / "report.json").exists()
