import csv
import io
import json

import pytest

from occlab.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_kernels(capsys):
    code, out, _ = run(capsys, "kernels", "--n", "2")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert [r["x"] for r in rows] == ["-2", "-1", "0", "1", "2"]
    assert float(rows[2]["prob"]) == 0.5


def test_charlier(capsys):
    code, out, _ = run(capsys, "charlier", "--phi", "0,0,1", "--lambda", "1.7")
    js = json.loads(out)
    assert code == 0 and js["rank"] == 1 and js["degree"] == 2
    assert js["coefficients"] == pytest.approx([4.4, 1.0])


def test_charlier_constant_is_usage_error(capsys):
    code, _, err = run(capsys, "charlier", "--phi", "3")
    assert code == 2 and "constant" in err


def test_correlations(capsys, tmp_path):
    out_csv, out_json = tmp_path / "a.csv", tmp_path / "a.json"
    code, _, _ = run(capsys, "correlations", "--q", "1,3", "--p", "0.5", "--T", "4",
                     "--out", str(out_csv), "--json", str(out_json))
    assert code == 0
    rows = list(csv.DictReader(out_csv.open()))
    assert len(rows) == 8 and rows[0] == {"q": "1", "t": "1", "a_t": "0.5"}
    js = json.loads(out_json.read_text())
    assert js["series"][0]["summable"] is False and js["series"][1]["summable"] is True


def test_variance(capsys, tmp_path):
    out = tmp_path / "v.csv"
    code, stdout, _ = run(capsys, "variance", "--observable", "W", "--N", "2,3", "--out", str(out))
    assert code == 0
    rows = list(csv.DictReader(out.open()))
    assert [float(r["exact"]) for r in rows] == pytest.approx([2.0, 4.0])
    assert json.loads(stdout)["reports"][0]["regime"] == "N^3/2"


def test_simulate_and_distance(capsys, tmp_path):
    out = tmp_path / "d.csv"
    js = tmp_path / "d.json"
    code, _, _ = run(capsys, "simulate", "--observable", "sigma", "--N", "2", "--q", "2",
                     "--replicates", "5", "--seed", "1", "--out", str(out), "--json", str(js))
    assert code == 0
    summary = json.loads(js.read_text())
    assert summary["mean"] == 0.25 and summary["variance"] == 0.0 and summary["m"] == 5

    run(capsys, "simulate", "--observable", "W", "--N", "8", "--replicates", "200", "--seed", "4", "--out", str(out))
    code, stdout, _ = run(capsys, "distance", str(out), "--standardize")
    est = json.loads(stdout)
    assert code == 0 and est["m"] == 200 and 0 <= est["d_K"] <= 1 and est["se_proxy"] >= 0


def test_simulate_reproducible(capsys, tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for path, threads in ((a, "1"), (b, "2")):
        run(capsys, "simulate", "--observable", "Y", "--N", "20", "--phi", "0,1,1", "--p", "0.6",
            "--replicates", "30", "--seed", "9", "--threads", threads, "--out", str(path))
    assert a.read_bytes() == b.read_bytes()


def test_run_and_validate(capsys, tmp_path, monkeypatch):
    cfg = tmp_path / "k.json"
    cfg.write_text(json.dumps({"kind": "kernel-checks", "N_grid": [4, 16, 64], "seed": 0}))
    assert run(capsys, "validate", str(cfg))[0] == 0
    monkeypatch.setenv("OUTPUT_DIR", str(tmp_path / "env_out"))
    code, out, _ = run(capsys, "run", str(cfg))
    assert code == 0 and "PASS" in out
    assert (tmp_path / "env_out" / "summary.json").exists()
    code, _, _ = run(capsys, "run", str(cfg), "--output-dir", str(tmp_path / "flag_out"))
    assert (tmp_path / "flag_out" / "kernels.csv").exists()


def test_run_criterion_failure(capsys, tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"kind": "clt-rate", "N_grid": [8, 16, 32], "seed": 1, "replicates": 100,
                               "observables": [{"type": "W"}], "criteria": {"slope_max": -5}}))
    code, out, _ = run(capsys, "run", str(cfg), "--output-dir", str(tmp_path / "o"))
    assert code == 1 and "FAIL" in out


def test_config_error_exit(capsys, tmp_path):
    cfg = tmp_path / "bad.json"
    cfg.write_text(json.dumps({"kind": "clt-rate", "N_grid": [], "seed": 1}))
    code, _, err = run(capsys, "validate", str(cfg))
    assert code == 2 and "N_grid" in err


def test_usage_error_exit(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["simulate", "--observable", "X", "--N", "3", "--seed", "1"])
    assert exc.value.code == 2
