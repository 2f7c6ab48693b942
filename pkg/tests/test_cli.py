from __future__ import annotations

import csv

import pytest

from hjrare.cli import EXIT_CHECK, EXIT_CONFIG, EXIT_DEGENERATE, EXIT_OK, main, write_csv
from hjrare.config import table2_config


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def report(out: str) -> dict:
    return dict(line.split(" = ", 1) for line in out.splitlines() if " = " in line)


def test_potential(tmp_path, capsys):
    assert main(["potential", "--c", "0", "--x", "1.0", "--y", "1.2", "--points", "11",
                 "--out", str(tmp_path), "--plot"]) == EXIT_OK
    rep = report(capsys.readouterr().out)
    # S^0 is twice the potential rise
    assert float(rep["S"]) == pytest.approx(2 * (0.5 * 1.2 ** 4 - 1.2 ** 2 + 0.5), abs=1e-9)
    assert len(read_csv(tmp_path / "potential.csv")) == 11
    assert (tmp_path / "potential.png").exists()


def test_critical_value(capsys):
    assert main(["critical-value", "--model", "sis"] + "--a 0.5 --b 0.8333 --x0 0.6667".split()) == EXIT_OK
    assert abs(float(report(capsys.readouterr().out)["c_H"])) < 1e-12


def test_minmax(tmp_path, capsys):
    assert main(["minmax", "--T", "0.25", "--points", "5", "--out", str(tmp_path), "--plot"]) == EXIT_OK
    rep = report(capsys.readouterr().out)
    assert float(rep["value"]) == pytest.approx(1.10126, abs=1e-4)
    assert float(rep["y_star"]) == 1.42
    assert len(read_csv(tmp_path / "minmax.csv")) == 5 and (tmp_path / "minmax.png").exists()


def test_duality_pass_and_fail(tmp_path, capsys):
    args = ["duality-check", "--t", "0.5", "--c", "0.5", "--nx", "201", "--nt", "100",
            "--out", str(tmp_path)]
    assert main(args + ["--plot"]) == EXIT_OK
    assert report(capsys.readouterr().out)["result"] == "PASS"
    assert (tmp_path / "duality.png").exists()
    assert main(args + ["--rel-tol", "1e-6"]) == EXIT_CHECK
    assert report(capsys.readouterr().out)["result"] == "FAIL"
    rows = read_csv(tmp_path / "duality.csv")
    assert [r["kind"] for r in rows] == ["t", "c"]


def test_simulate(tmp_path, capsys):
    args = ["simulate", "--model", "sis", "--a", "0.5", "--b", "0.8333333333333334",
            "--x0", "0.6666666666666666", "--T", "0.5", "--n", "50", "--desk-scale",
            "--trace", "3", "--out", str(tmp_path), "--plot"]
    assert main(args) == EXIT_OK
    rep = report(capsys.readouterr().out)
    assert float(rep["estimate"]) > 0 and rep["degenerate"] == "False"
    assert len(read_csv(tmp_path / "batches.csv")) == 10
    assert {r["path"] for r in read_csv(tmp_path / "trace.csv")} == {"0", "1", "2"}
    assert (tmp_path / "batches.png").exists()


def test_simulate_is_reproducible(tmp_path, capsys):
    args = ["simulate", "--epsilon", "0.09", "--T", "0.25", "--desk-scale", "--seed", "4",
            "--out", str(tmp_path)]
    main(args)
    first = report(capsys.readouterr().out)
    main(args + ["--threads", "3"])
    second = report(capsys.readouterr().out)
    assert first["estimate"] == second["estimate"] and first["config_hash"] == second["config_hash"]


def test_simulate_degenerate(tmp_path):
    args = ["simulate", "--method", "standard", "--epsilon", "0.01", "--a", "-3", "--b", "3",
            "--T", "0.01", "--desk-scale", "--out", str(tmp_path)]
    assert main(args) == EXIT_DEGENERATE


def test_table2_from_config(tmp_path, capsys):
    cfg = table2_config(n=[100], batches=2, samples_per_batch=100, out_dir=str(tmp_path))
    path = tmp_path / "run.toml"
    path.write_text(cfg.dumps())
    assert main(["table2", "--config", str(path), "--plot"]) == EXIT_OK
    rows = read_csv(tmp_path / "table2.csv")
    assert len(rows) == 1 and rows[0]["config_hash"] == cfg.config_hash()
    assert (tmp_path / "table2.png").exists()
    assert "estimate" in capsys.readouterr().out


def test_table1_desk(tmp_path):
    assert main(["table1", "--epsilon", "0.09", "--T", "0.25", "--desk-scale",
                 "--out", str(tmp_path), "--plot"]) == EXIT_OK
    rows = read_csv(tmp_path / "table1.csv")
    assert len(rows) == 1 and rows[0]["method"] == "UcyK"
    assert (tmp_path / "table1.png").exists()


def test_example_gap(tmp_path, capsys):
    assert main(["example-gap", "--no-simulate", "--out", str(tmp_path), "--plot"]) == EXIT_OK
    rep = report(capsys.readouterr().out)
    assert float(rep["closed_form_K"]) == pytest.approx(0.23)
    assert (tmp_path / "example_gap.csv").exists() and (tmp_path / "example_gap.png").exists()


@pytest.mark.parametrize("argv", [
    ["minmax", "--a", "2.0"],
    ["minmax", "--model", "nope"],
    ["minmax", "--model", "double_well", "--param", "sigma"],
    ["simulate", "--config", "/nonexistent.toml"],
    ["simulate", "--model", "sis", "--epsilon", "0.1", "--a", "0.5", "--b", "0.9", "--x0", "0.7"],
    ["example-gap", "--a", "0.0", "--b", "2.0", "--no-simulate"],
])
def test_config_errors(argv, capsys, tmp_path):
    assert main(argv + ["--out", str(tmp_path)]) == EXIT_CONFIG
    assert capsys.readouterr().err


def test_below_critical_is_numeric(capsys, tmp_path):
    assert main(["potential", "--c", "-1.0", "--x", "1.0", "--y", "1.2", "--out", str(tmp_path)]) == 3


def test_write_csv_formats(tmp_path):
    p = write_csv(str(tmp_path / "sub" / "x.csv"), ["a", "b"], [{"a": 0.1, "b": float("nan")}, (1, "z")])
    assert read_csv(p) == [{"a": "0.1", "b": "nan"}, {"a": "1", "b": "z"}]
