import csv
import io
import json
import subprocess
import sys
from fractions import Fraction

import pytest

from fibrenorm.cli import (CSV_COLUMNS, EXIT_CEILING, EXIT_DEPTH, EXIT_INVALID, EXIT_OK, from_hex,
                           read_trajectory_csv, run, to_hex)
from fibrenorm.numerics import PrecisionContext

from conftest import MAIN_BASE, frozen_param

# the frozen parameter belongs to the family with binary-float coordinates
FAMILY = [f"--{k}={Fraction(MAIN_BASE[k])}" for k in ("x1", "x3", "x4", "s")]
PINNED = FAMILY + ["--param", str(frozen_param("main"))]


def call(capsys, *argv):
    code = run(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_spectral_json(capsys):
    code, out, _ = call(capsys, "spectral", "--ell", "1.5")
    assert code == EXIT_OK
    d = json.loads(out)
    assert abs(d["lambda_u"] - 1.215250) < 1e-6
    assert d["provenance"]["config_hash"] and d["provenance"]["ell"] == "1.5"


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "fibrenorm", "spectral", "--ell", "1.3"],
                         capture_output=True, text=True)
    assert res.returncode == 0
    assert json.loads(res.stdout)["lambda_u"] > 1


def test_invalid_arguments(capsys):
    with pytest.raises(SystemExit) as exc:
        run(["spectral", "--bogus"])
    assert exc.value.code == EXIT_INVALID
    assert call(capsys, "spectral", "--ell", "2.5")[0] == EXIT_INVALID
    assert call(capsys, "spectral", "--bits", "512", "--max-bits", "256")[0] == EXIT_INVALID


def test_renorm_csv_columns_and_reruns(capsys, tmp_path):
    argv = ["renorm", "--depth", "6", *PINNED, "--bits", "512"]
    code, out, _ = call(capsys, *argv)
    assert code == EXIT_OK
    assert call(capsys, *argv)[1] == out
    rows = list(csv.reader(io.StringIO(out)))
    assert tuple(rows[0][:len(CSV_COLUMNS)]) == CSV_COLUMNS
    assert rows[0][len(CSV_COLUMNS):] == [c + "_hex" for c in CSV_COLUMNS[1:]]
    assert len(rows) == 8
    path = tmp_path / "traj.csv"
    path.write_text(out)
    with open(path) as fh:
        traj = read_trajectory_csv(fh, "1.5", 512)
    assert len(traj.states) == 7


def test_hex_round_trip():
    ctx = PrecisionContext(bits=300)
    for x in (ctx.mpf(1) / 3, -ctx.mp.pi, ctx.mpf(0), ctx.mp.ldexp(ctx.mpf(-5), -400)):
        assert from_hex(to_hex(x), ctx) == x


def test_config_file_and_override(capsys, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# test settings\nell = 1.3\nprecision_bits = 128\n")
    d = json.loads(call(capsys, "spectral", "--config", str(cfg))[1])
    assert d["provenance"]["ell"] == "1.3" and d["provenance"]["precision_bits"] == 128
    d2 = json.loads(call(capsys, "spectral", "--config", str(cfg), "--ell", "1.7")[1])
    assert d2["provenance"]["ell"] == "1.7"
    assert d2["provenance"]["config_hash"] != d["provenance"]["config_hash"]


def test_precision_ceiling_exit(capsys, monkeypatch):
    monkeypatch.setenv("FIBRENORM_MAX_BITS", "300")
    code, _, err = call(capsys, "locate", "--depth", "14")
    assert code == EXIT_CEILING and "ceiling" in err


def test_depth_not_reached_exit(capsys):
    code, _, err = call(capsys, "renorm", "--depth", "5", "--x2", "0.2")
    assert code == EXIT_DEPTH and "level 0" in err


def test_verify_passes(capsys):
    code, out, _ = call(capsys, "verify", "--depth", "6")
    d = json.loads(out)
    assert code == EXIT_OK and d["passed"]
    assert [o["return_times"] for o in d["oracle"]] == [[1, 2]] * 6


def test_invariants_from_csv_matches_direct(capsys, tmp_path):
    path = tmp_path / "t.csv"
    code, _, _ = call(capsys, "renorm", "--depth", "10", *PINNED, "--bits", "600",
                      "--output", str(path))
    assert code == EXIT_OK
    a = json.loads(call(capsys, "invariants", "--trajectory", str(path), "--bits", "600")[1])
    b = json.loads(call(capsys, "invariants", "--depth", "10", *PINNED, "--bits", "600")[1])
    assert abs(a["C_u"] - b["C_u"]) < 1e-9
    assert a["C_u"] < 0
