"""Command-line interface: exit codes, file contracts, reproducibility, sweeps."""
import csv
import hashlib
import json
import math
from pathlib import Path

import numpy as np
import pytest

from degenwave.cli import main

ROOT = Path(__file__).resolve().parents[1]
SAMPLE = ROOT / "configs" / "sample.json"
ENERGY_COLUMNS = ["t", "E_total", "E_kinetic", "E_potential", "E_coupling", "E_boundary",
                  "E_diffusive", "dissipation_rate"]


def _write(tmp_path, name="cfg.json", **changes):
    doc = json.loads(SAMPLE.read_text())
    for key, value in changes.items():
        if key in ("n_cells", "dt_time", "t_final_time", "initial", "fields"):
            doc["simulation"][key] = value
        elif key == "gamma":
            doc["profile"]["gamma"] = value
        elif key == "window_time":
            doc["fit"][key] = value
        else:
            doc[key] = value
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return p


def _rows(path):
    with open(path) as fh:
        r = list(csv.reader(fh))
    return r[0], np.array(r[1:], dtype=float)


def _manifest_ok(out):
    man = json.loads((out / "manifest.json").read_text())
    for entry in man["files"]:
        data = (out / entry["name"]).read_bytes()
        assert len(data) == entry["bytes"]
        assert hashlib.sha256(data).hexdigest() == entry["sha256"]
    return man


# -- check ----------------------------------------------------------------------------------


def test_check_sample_ok(capsys):
    assert main(["check", "--config", str(SAMPLE)]) == 0
    assert "ok" in capsys.readouterr().out


def test_check_condition_c_violation(tmp_path, capsys):
    p = _write(tmp_path, gamma=0.0, alpha=1.5 * math.pi**2)
    assert main(["check", "--config", str(p)]) == 2
    assert "(k,m)=(2,1)" in capsys.readouterr().out


def test_check_malformed(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    assert main(["check", "--config", str(p)]) == 3
    p.write_text(json.dumps({"profile": {"kind": "power", "gamma": "x"}}))
    assert main(["check", "--config", str(p)]) == 3
    assert main(["check", "--config", str(tmp_path / "missing.json")]) == 3


# -- simulate -------------------------------------------------------------------------------


def test_simulate_files_and_manifest(tmp_path):
    cfg = _write(tmp_path, n_cells=32, t_final_time=20.0)
    out = tmp_path / "run"
    assert main(["simulate", "--config", str(cfg), "--out", str(out), "--dt", "0.05", "--svg"]) == 0
    header, data = _rows(out / "energy.csv")
    assert header == ENERGY_COLUMNS
    E = data[:, 1]
    assert np.all(np.diff(E) <= 1e-10 * E[0])
    man = _manifest_ok(out)
    assert {f["name"] for f in man["files"]} == {"energy.csv", "energy.svg"}
    assert man["quadrature_error"] < 1e-6
    assert man["config"]["simulation"]["dt_time"] == 0.05


def test_simulate_byte_reproducible(tmp_path):
    cfg = _write(tmp_path, n_cells=16, t_final_time=5.0)
    blobs = []
    for name in ("a", "b"):
        out = tmp_path / name
        assert main(["simulate", "--config", str(cfg), "--out", str(out), "--dt", "0.05", "--svg"]) == 0
        blobs.append(((out / "energy.csv").read_bytes(), (out / "energy.svg").read_bytes()))
    assert blobs[0] == blobs[1]


def test_simulate_conservative(tmp_path):
    cfg = _write(tmp_path, rho=0.0, n_cells=32, t_final_time=10.0)
    out = tmp_path / "run"
    assert main(["simulate", "--config", str(cfg), "--out", str(out), "--dt", "0.01"]) == 2
    assert main(["simulate", "--config", str(cfg), "--out", str(out), "--dt", "0.01", "--force"]) == 0
    _, data = _rows(out / "energy.csv")
    E = data[:, 1]
    assert np.max(np.abs(E - E[0])) <= 1e-8 * E[0]


def test_simulate_refuses_then_fails_on_violation(tmp_path):
    cfg = _write(tmp_path, gamma=0.0, alpha=1.5 * math.pi**2, n_cells=32, t_final_time=200.0)
    out = tmp_path / "run"
    assert main(["simulate", "--config", str(cfg), "--out", str(out), "--dt", "0.05"]) == 2
    assert main(["simulate", "--config", str(cfg), "--out", str(out), "--dt", "0.05", "--force"]) == 1
    _, data = _rows(out / "energy.csv")
    assert data.shape[0] > 1 and data[-1, 0] < 200.0
    man = _manifest_ok(out)
    assert man["extra"]["status"] == "blow-up"


# -- spectrum -------------------------------------------------------------------------------


def test_spectrum_files(tmp_path):
    out = tmp_path / "sp"
    assert main(["spectrum", "--config", str(SAMPLE), "--out", str(out), "--k-min", "30",
                 "--k-max", "40"]) == 0
    header, data = _rows(out / "spectrum.csv")
    assert header == ["family", "k", "re", "im", "residual", "seed_re", "seed_im"]
    assert data.shape == (22, 7)
    assert np.all(data[:, 2] <= 0)
    header, trend = _rows(out / "trend.csv")
    assert header[0] == "k" and trend.shape[0] == 11
    _manifest_ok(out)


def test_spectrum_count_mismatch_exit(tmp_path, monkeypatch, capsys):
    import degenwave.spectrum as spm

    monkeypatch.setattr(spm, "count_roots", lambda *a, **k: 1)
    assert main(["spectrum", "--config", str(SAMPLE), "--out", str(tmp_path / "sp"),
                 "--k-min", "30", "--k-max", "31"]) == 4
    assert "window" in capsys.readouterr().err


# -- fit ------------------------------------------------------------------------------------


def test_fit_from_trace(tmp_path):
    t = np.logspace(0, 4, 200)
    p = tmp_path / "energy.csv"
    with open(p, "w") as fh:
        fh.write(",".join(ENERGY_COLUMNS) + "\n")
        for ti in np.concatenate([[0.0], t]):
            E = 7.0 if ti == 0 else 7 * ti**-0.8
            fh.write(",".join(f"{x:.16e}" for x in [ti, E] + [0.0] * 6) + "\n")
    out = tmp_path / "fit"
    assert main(["fit", "--trace", str(p), "--tau", "0.5", "--out", str(out), "--svg"]) == 0
    rep = json.loads((out / "report.json").read_text())
    assert abs(rep["s_fit"] - 0.8) < 1e-3
    assert rep["predicted"] == pytest.approx(0.8)
    _manifest_ok(out)


def test_fit_from_config(tmp_path):
    cfg = _write(tmp_path, n_cells=16, t_final_time=2000.0, window_time=[100.0, 2000.0])
    out = tmp_path / "fit"
    assert main(["fit", "--config", str(cfg), "--out", str(out), "--dt", "0.1",
                 "--k-min", "20", "--k-max", "30"]) == 0
    rep = json.loads((out / "report.json").read_text())
    assert rep["s_fit"] > 0
    assert rep["optimality"]["power"] == 2.5
    man = _manifest_ok(out)
    assert {f["name"] for f in man["files"]} == {"energy.csv", "report.json"}


# -- sweep ----------------------------------------------------------------------------------


def _sweep(tmp_path, grid):
    cfg = _write(tmp_path, n_cells=32, t_final_time=2000.0, window_time=[100.0, 2000.0])
    out = tmp_path / "sweep"
    code = main(["sweep", "--config", str(cfg), "--out", str(out), "--grid", json.dumps(grid),
                 "--dt", "0.05", "--k-min", "20", "--k-max", "26"])
    with open(out / "sweep.csv") as fh:
        r = list(csv.DictReader(fh))
    return code, r


def test_sweep_two_by_two(tmp_path, monkeypatch):
    monkeypatch.setenv("DEGENWAVE_THREADS", "2")
    code, rows = _sweep(tmp_path, {"tau": [0.3, 0.7], "alpha": [0.1, 0.2]})
    assert code == 0
    assert len(rows) == 4
    assert all(r["status"] == "ok" for r in rows)
    assert {(float(r["tau"]), float(r["alpha"])) for r in rows} == {
        (0.3, 0.1), (0.3, 0.2), (0.7, 0.1), (0.7, 0.2)}


def test_sweep_exponent_increases_with_tau(tmp_path, monkeypatch):
    monkeypatch.setenv("DEGENWAVE_THREADS", "3")
    code, rows = _sweep(tmp_path, {"tau": [0.3, 0.5, 0.7]})
    assert code == 0
    rows.sort(key=lambda r: float(r["tau"]))
    s = [float(r["s_fit"]) for r in rows]
    assert s[0] < s[1] < s[2]


def test_sweep_isolates_failed_cell(tmp_path, monkeypatch):
    monkeypatch.setenv("DEGENWAVE_THREADS", "1")
    code, rows = _sweep(tmp_path, {"alpha": [0.1, 0.6]})
    assert code == 1
    by_alpha = {float(r["alpha"]): r for r in rows}
    assert by_alpha[0.1]["status"] == "ok" and float(by_alpha[0.1]["s_fit"]) > 0
    assert by_alpha[0.6]["status"] == "failed" and by_alpha[0.6]["error"]


def test_sweep_bad_grid(tmp_path):
    out = tmp_path / "sweep"
    assert main(["sweep", "--config", str(SAMPLE), "--out", str(out), "--grid", '{"zeta": [1]}']) == 3
    assert main(["sweep", "--config", str(SAMPLE), "--out", str(out), "--grid", "[1,"]) == 3
