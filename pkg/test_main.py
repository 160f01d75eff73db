"""
Tests for the command-line front end.
"""

import json
import os

import pandas as pd
import pytest

from eddy import FACTOR_CACHE, SELF_MATRIX_CACHE
from main import EXIT_INPUT_ERROR, EXIT_OK, build_parser, main
from pullin import quasifem_model

SCENARIO_DIR = os.path.join(os.path.dirname(os.path.abspath(__file__)), "scenarios")


def read_json(path):
    with open(path, encoding="utf-8") as f:
        return json.load(f)


class TestMesh:
    def test_three_by_three(self, tmp_path):
        assert main(["mesh", "--grid-n", "3", "--out", str(tmp_path)]) == EXIT_OK
        frame = pd.read_csv(tmp_path / "preliminary_r1.55mm_mesh.csv")
        assert len(frame) == 9
        meta = read_json(tmp_path / "preliminary_r1.55mm_mesh_meta.json")
        assert meta["n"] == 9
        assert meta["grid_n"] == 3
        assert len(meta["scenario_hash"]) == 64

    def test_scenario_file_and_rule(self, tmp_path):
        rc = main(["mesh", "--scenario", os.path.join(SCENARIO_DIR, "disc_2_4mm.json"), "--grid-n", "3",
                   "--rule", "fully-inside", "--out", str(tmp_path)])
        assert rc == EXIT_OK
        assert len(pd.read_csv(tmp_path / "disc_2_4mm_mesh.csv")) == 5


class TestInputErrors:
    def test_missing_field(self, tmp_path, capsys):
        path = tmp_path / "broken.json"
        path.write_text(json.dumps({"disc": {"radius_m": 1e-3}}), encoding="utf-8")
        assert main(["mesh", "--scenario", str(path), "--out", str(tmp_path)]) == EXIT_INPUT_ERROR
        assert "coils: missing required field" in capsys.readouterr().out

    def test_too_few_samples(self, tmp_path):
        assert main(["pullin", "--model", "simplified", "--samples", "4", "--out", str(tmp_path)]) == EXIT_INPUT_ERROR

    def test_even_grid(self, tmp_path):
        assert main(["mesh", "--grid-n", "4", "--out", str(tmp_path)]) == EXIT_INPUT_ERROR

    def test_bad_disc_radii(self):
        with pytest.raises(SystemExit):
            build_parser().parse_args(["pullin", "--disc-radii", "1e-3,abc"])


class TestPullin:
    def test_simplified_model(self, tmp_path):
        assert main(["pullin", "--model", "simplified", "--out", str(tmp_path)]) == EXIT_OK
        meta = read_json(tmp_path / "preliminary_r1.55mm_pullin_simplified.json")
        assert meta["result"]["lambda_p"] == pytest.approx(1.0 / 3.0, abs=1e-7)
        assert meta["result"]["U_p_V"] is None
        curve = pd.read_csv(tmp_path / "preliminary_r1.55mm_curve_simplified.csv")
        assert list(curve.columns) == ["lambda_abs", "beta", "sqrt_beta", "U_volts", "q3_m"]
        assert len(curve) == 15

    def test_reruns_are_byte_identical(self, tmp_path):
        first, second = tmp_path / "a", tmp_path / "b"
        for out in (first, second):
            assert main(["pullin", "--model", "simplified", "--samples", "9", "--out", str(out)]) == EXIT_OK
        name = "preliminary_r1.55mm_curve_simplified.csv"
        assert (first / name).read_bytes() == (second / name).read_bytes()
        a = read_json(first / "preliminary_r1.55mm_pullin_simplified.json")
        b = read_json(second / "preliminary_r1.55mm_pullin_simplified.json")
        a["result"].pop("runtime_s")
        b["result"].pop("runtime_s")
        assert a == b

    def test_all_models_with_comparison(self, tmp_path):
        rc = main(["pullin", "--grid-n", "11", "--out", str(tmp_path)])
        assert rc == EXIT_OK
        comparison = pd.read_csv(tmp_path / "preliminary_r1.55mm_comparison.csv")
        assert comparison["model"].tolist() == ["quasi-fem", "analytical", "simplified"]
        assert comparison["delta_lambda"].iloc[0] == 0.0

    def test_measured_disc_has_voltages(self, tmp_path):
        rc = main(["pullin", "--scenario", os.path.join(SCENARIO_DIR, "disc_2_4mm.json"), "--model", "analytical",
                   "--out", str(tmp_path)])
        assert rc == EXIT_OK
        result = read_json(tmp_path / "disc_2_4mm_pullin_analytical.json")["result"]
        assert result["U_p_V"] == pytest.approx(105.26 * result["sqrt_beta_p"], rel=1e-4)

    def test_disc_sweep_releases_mesh_caches(self, tmp_path):
        rc = main(["pullin", "--model", "simplified", "--grid-n", "11", "--disc-radii", "1.55e-3",
                   "--out", str(tmp_path)])
        assert rc == EXIT_OK
        sweep = pd.read_csv(tmp_path / "preliminary_r1.55mm_disc_sweep.csv")
        assert sweep["disc_radius_m"].tolist() == pytest.approx([1.55e-3])
        assert 0.25 < sweep["lambda_p"].iloc[0] < 0.45
        assert len(SELF_MATRIX_CACHE) == 0
        assert len(FACTOR_CACHE) == 0
        assert quasifem_model.cache_info().currsize == 0


class TestOtherCommands:
    def test_eddy(self, tmp_path):
        assert main(["eddy", "--grid-n", "7", "--out", str(tmp_path)]) == EXIT_OK
        meta = read_json(tmp_path / "preliminary_r1.55mm_eddy_meta.json")
        assert meta["residual"] <= 1e-10
        assert meta["impedance_mode"] == "ideal"
        assert meta["symmetry_spread"]["orbit"] <= 1e-8
        profile = pd.read_csv(tmp_path / "preliminary_r1.55mm_radial_profile.csv")
        assert profile["count"].sum() == meta["n"]

    def test_field(self, tmp_path):
        assert main(["field", "--out", str(tmp_path)]) == EXIT_OK
        frame = pd.read_csv(tmp_path / "preliminary_r1.55mm_field.csv")
        assert len(frame) == 21 * 21
        assert {"gradmag_r", "gradmag_z", "push_r", "push_z"} <= set(frame.columns)
        push = read_json(tmp_path / "preliminary_r1.55mm_field_meta.json")["push_at_centre"]
        assert 0.0 <= push["inclination_deg"] <= 90.0

    def test_validate_fast_passes(self, tmp_path):
        rc = main(["validate", "--fast", "--out", str(tmp_path)])
        assert rc == EXIT_OK
        meta = read_json(tmp_path / "validation_meta.json")
        assert sorted(meta["scenario_hashes"]) == ["disc_2_4mm", "disc_2_8mm", "disc_3_2mm_h107", "disc_3_2mm_h64"]
        assert meta["summary"]["grid_n"] == 31
        assert meta["summary"]["failed_checks"] == 0
        assert (tmp_path / "validation_report.txt").exists()
