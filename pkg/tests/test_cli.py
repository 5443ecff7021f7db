import json
import subprocess
import sys

import numpy as np
import pytest

from ntk_spectrum.cli import EXIT_CONFIG, EXIT_FAIL, EXIT_OK, main
from ntk_spectrum.sphere import load_dataset


@pytest.fixture
def points(tmp_path):
    path = tmp_path / "pts.csv"
    assert main(["gen-data", "--dim", "3", "--n", "5", "--seed", "4", "--format", "csv",
                 "--out", str(path)]) == EXIT_OK
    return path


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


class TestGenData:
    def test_json_to_stdout(self, capsys):
        code, out, _ = run(capsys, "gen-data", "--dim", "4", "--n", "3", "--seed", "1")
        assert code == EXIT_OK
        obj = json.loads(out)
        assert obj["dim"] == 4 and len(obj["points"]) == 3

    def test_csv_file(self, points):
        data = load_dataset(points)
        assert data.dim == 3 and data.n == 5

    def test_bad_dimension_is_config_error(self, capsys):
        code, _, err = run(capsys, "gen-data", "--dim", "0", "--n", "3")
        assert code == EXIT_CONFIG and "error" in err


class TestBounds:
    def test_uniform(self, capsys):
        code, out, _ = run(capsys, "bounds", "uniform", "--dim", "3", "--n", "10", "--eps", "0.1")
        assert code == EXIT_OK
        assert json.loads(out)["lambda_upper"] == pytest.approx(0.1517, abs=1e-4)

    def test_shallow_from_delta(self, capsys):
        code, out, _ = run(capsys, "bounds", "shallow", "--dim", "3", "--n", "10", "--delta", "0.5",
                           "--opnorm-sq", "4")
        assert code == EXIT_OK
        assert json.loads(out)["d1_required"] == 1784

    def test_deep_csv(self, capsys, points):
        code, out, _ = run(capsys, "bounds", "deep", "--data", str(points), "--format", "csv")
        assert code == EXIT_OK
        assert out.splitlines()[0] == "quantity,value"

    def test_missing_delta(self, capsys):
        assert run(capsys, "bounds", "shallow")[0] == EXIT_CONFIG

    def test_out_of_range_delta(self, capsys):
        assert run(capsys, "bounds", "shallow", "--delta", "2.0")[0] == EXIT_CONFIG


class TestKernelAndNtk:
    def test_closed(self, capsys, points):
        code, out, _ = run(capsys, "kernel", "closed", "--data", str(points))
        assert code == EXIT_OK
        obj = json.loads(out)
        assert np.allclose(np.diag(obj["entries"]), 0.5)

    def test_mc_and_series(self, capsys, points):
        code, out, _ = run(capsys, "kernel", "mc", "--data", str(points), "--samples", "2000",
                           "--activation", "scaled-relu", "--seed", "2")
        assert code == EXIT_OK and "stderr" in json.loads(out)
        code, out, _ = run(capsys, "kernel", "series", "--data", str(points), "--R", "20",
                           "--format", "csv")
        assert code == EXIT_OK and len(out.splitlines()) == 5

    def test_ntk(self, capsys, points):
        code, out, _ = run(capsys, "ntk", "shallow", "--data", str(points), "--width", "64")
        assert code == EXIT_OK and json.loads(out)["d1"] == 64
        code, out, _ = run(capsys, "ntk", "deep", "--data", str(points), "--widths", "8,6")
        assert code == EXIT_OK and json.loads(out)["widths"] == [3, 8, 6]

    def test_missing_file(self, capsys, tmp_path):
        assert run(capsys, "kernel", "closed", "--data", str(tmp_path / "none.csv"))[0] == EXIT_CONFIG


class TestVerify:
    def test_audit_passes(self, capsys):
        code, out, err = run(capsys, "audit", "funk-hecke", "--dims", "3-5", "--rmax", "8")
        assert code == EXIT_OK
        assert "funk-hecke-audit: PASS" in err
        assert json.loads(out)["passed"] is True

    def test_failing_check_exits_one(self, capsys, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"grid": {"d": [3], "r_max": 4, "tol": 0.0}}))
        code, _, err = run(capsys, "verify", "funk-hecke-audit", "--config", str(cfg))
        assert code == EXIT_FAIL and "FAIL" in err

    def test_empty_grid_exits_two(self, capsys, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"grid": {"d0": []}}))
        assert run(capsys, "verify", "separation-scaling", "--config", str(cfg))[0] == EXIT_CONFIG

    def test_output_files(self, capsys, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"grid": {"d": [3], "r_max": 4},
                                   "output": {"csv": str(tmp_path / "r.csv"),
                                              "json": str(tmp_path / "r.json")}}))
        assert run(capsys, "verify", "funk-hecke-audit", "--config", str(cfg))[0] == EXIT_OK
        assert (tmp_path / "r.csv").read_text().startswith("check,cell,trial,seed,quantity,value")
        assert json.loads((tmp_path / "r.json").read_text())["schema_version"] == 1

    def test_bad_config_json(self, capsys, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text("{not json")
        assert run(capsys, "verify", "funk-hecke-audit", "--config", str(cfg))[0] == EXIT_CONFIG


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "ntk_spectrum.cli", "bounds", "uniform"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["kind"] == "uniform"
