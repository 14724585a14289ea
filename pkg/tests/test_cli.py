import csv
import json
import os

import pytest

from liyorke import cli


def _rows(path):
    with open(path) as fh:
        return list(csv.reader(fh))


def _manifest(out):
    with open(os.path.join(out, "manifest.json")) as fh:
        return json.load(fh)


def test_renewal_first_row(tmp_path):
    code, files = cli.run(["renewal", "--alpha", "2", "--N", "10000", "--M", "32768",
                           "--seed", "7", "--out", str(tmp_path)])
    assert code == 0
    rows = _rows(tmp_path / "renewal.csv")
    assert rows[0] == ["n", "u_operator", "u_mc", "stderr"]
    assert rows[1][:2] == ["0", "0.5"] and rows[2][:2] == ["1", "0.25"]
    with open(tmp_path / "renewal_summary.json") as fh:
        summary = json.load(fh)
    assert abs(summary["slope"] + 0.5) < 0.1
    assert set(summary["verdicts"]) == {"1", "2", "3", "4", "5"}
    man = _manifest(tmp_path)
    assert man["config"]["gamma"] == 3.0 and man["seed"] == 7
    assert {"started", "finished", "version", "outputs", "counters"} <= set(man)


def test_sweep_grid(tmp_path):
    code, _ = cli.run(["sweep", "--alphas", "1.2,1.7", "--ds", "2,3", "--N", "2e3",
                       "--samples", "100", "--seed", "1", "--out", str(tmp_path)])
    assert code == 0
    rows = _rows(tmp_path / "sweep.csv")
    assert len(rows) == 5
    head = rows[0]
    assert "prediction_LY" in head and "prediction_conservative" in head and "ci_LY_lo" in head


def test_density_and_induce(tmp_path):
    assert cli.run(["density", "--alpha", "0.5", "--M", "2048", "--svg", "1",
                    "--out", str(tmp_path)])[0] == 0
    rows = _rows(tmp_path / "density.csv")
    assert rows[0] == ["cell_mid", "cell_width", "h", "h_times_x_alpha"]
    assert (tmp_path / "density.svg").read_text().startswith("<svg")
    with open(tmp_path / "density_summary.json") as fh:
        s = json.load(fh)
    assert s["window"] == [1e-4, 1.0] and s["ratio"] < 50
    assert cli.run(["induce", "--alpha", "2", "--n_max", "1000", "--out", str(tmp_path)])[0] == 0
    rows = _rows(tmp_path / "induce.csv")
    assert rows[0] == ["n", "y_n", "yprime_n", "tail_tau_ge_n", "cumulative_n_tau"]
    assert len(rows) == 1001


def test_config_file_and_precedence(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text("")
    out = tmp_path / "a"
    assert cli.run(["induce", "--config", str(cfg), "--out", str(out)])[0] == 0
    assert _manifest(out)["config"]["alpha"] == 2.0
    cfg.write_text(json.dumps({"alpha": 2, "n_max": 500}))
    out = tmp_path / "b"
    assert cli.run(["induce", "--config", str(cfg), "--alpha", "3", "--out", str(out)])[0] == 0
    man = _manifest(out)["config"]
    assert man["alpha"] == 3.0 and man["n_max"] == 500


def test_config_errors(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"alfa": 2}))
    code, files = cli.run(["induce", "--config", str(cfg), "--out", str(tmp_path)])
    err = capsys.readouterr().err
    assert code == 1 and files == []
    assert "'alpha'" in err and "valid keys" in err
    cfg.write_text(json.dumps({"n_max": "many"}))
    assert cli.run(["induce", "--config", str(cfg)])[0] == 1
    assert "expected int" in capsys.readouterr().err
    assert cli.run(["induce", "--bogus", "1"])[0] == 1
    assert cli.run(["frobnicate"])[0] == 1
    assert cli.run(["accept", "--suite", "secondary"])[0] == 1
    assert cli.run(["tuples", "--map", "tent"])[0] == 1


def test_numerical_failure_exit_code(tmp_path):
    code, _ = cli.run(["density", "--alpha", "0.5", "--M", "512", "--method", "power",
                       "--max_iter", "2", "--tol", "1e-30", "--out", str(tmp_path)])
    assert code == 2
    assert _manifest(tmp_path)["exit_code"] == 2


def test_output_dir_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("LIYORKE_OUT", str(tmp_path / "envout"))
    assert cli.run(["induce", "--n_max", "100"])[0] == 0
    assert (tmp_path / "envout" / "induce.csv").exists()


def test_csv_bytes_independent_of_workers(tmp_path):
    outs = []
    for w in ("1", "0"):
        out = tmp_path / f"w{w}"
        assert cli.run(["tuples", "--alpha", "1.5", "--d", "3", "--N", "5000", "--samples", "300",
                        "--seed", "11", "--workers", w, "--out", str(out)])[0] == 0
        outs.append((out / "tuples.csv").read_bytes())
    assert outs[0] == outs[1]


def test_accept_driver(tmp_path):
    code, _ = cli.run(["accept", "--only", "1,10", "--scale", "0.01", "--out", str(tmp_path)])
    assert code == 0
    with open(tmp_path / "accept.json") as fh:
        res = json.load(fh)
    assert [c["criterion"] for c in res["criteria"]] == [1, 10]
    assert all(isinstance(c["passed"], bool) for c in res["criteria"])
    assert (tmp_path / "c01_yn_slopes.csv").exists()


def test_accept_csvs_repeat_bytewise(tmp_path):
    outs = []
    for k in range(2):
        out = tmp_path / f"r{k}"
        assert cli.run(["accept", "--only", "1,2", "--scale", "0.01", "--out", str(out)])[0] == 0
        outs.append({p.name: p.read_bytes() for p in sorted(out.glob("*.csv"))})
    assert outs[0] == outs[1] and "accept.csv" in outs[0]


def test_help_lists_columns(capsys):
    with pytest.raises(SystemExit):
        cli.build_parser().parse_args(["renewal", "--help"])
    assert "u_operator" in capsys.readouterr().out
