import json

import numpy as np
import pytest

from mvcbound import cli
from mvcbound.io import DataFormatError, load_dataset, parse_config, parse_dataset

from conftest import two_gaussians


def run(argv, capsys):
    code = cli.main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def write_csv(path, d):
    rows = [",".join(map(repr, x.tolist() + [int(y)])) for x, y in zip(d.X, d.y)]
    path.write_text("\n".join(rows) + "\n")
    return path


def test_csv_and_sparse_examples():
    d = parse_dataset("1.0,2.0,1\n0.5,0.1,-1")
    assert d.X.shape == (2, 2) and d.y.tolist() == [1, -1]
    assert parse_dataset("1,0\n2,1").y.tolist() == [-1, 1]
    s = parse_dataset("+1 1:0.5 3:0.2\n-1 2:1", "sparse")
    assert s.X.tolist() == [[0.5, 0, 0.2], [0, 1, 0]]


@pytest.mark.parametrize("text,fmt,where", [
    ("1,1\n2,2\n", "csv", "line 2"),
    ("1,1\n2,3,1\n", "csv", "line 2"),
    ("1,1\nx,1\n", "csv", "line 2"),
    ("1 1:2\n-1 0:3\n", "sparse", "line 2"),
    ("1 1:2\n5 2:3\n", "sparse", "line 2"),
])
def test_parse_errors_carry_line_numbers(text, fmt, where):
    with pytest.raises(DataFormatError, match=where):
        parse_dataset(text, fmt)


def test_format_from_suffix(tmp_path):
    (tmp_path / "a.svm").write_text("1 2:1\n-1 1:1\n")
    assert load_dataset(tmp_path / "a.svm").X.shape == (2, 2)


def test_config_parsing(tmp_path):
    assert parse_config("# c\ndelta = 0.1  # tail\nm-unlabeled=7\n") == {"delta": "0.1", "m_unlabeled": "7"}
    with pytest.raises(ValueError, match="line 1"):
        parse_config("nonsense")


def test_bound_command(capsys):
    code, out, _ = run(["bound", "--id", "B0", "--rs", "0.30", "--kl", "5", "--m", "1000", "--delta", "0.05"], capsys)
    rep = json.loads(out)
    assert code == 0 and rep["value"] == pytest.approx(0.746, abs=0.004)
    assert rep["config"]["m"] == 1000


def test_config_file_and_flag_precedence(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("bound_id = B0\nrs = 0.30\nkl = 5\nm = 1000\ndelta = 0.5\n")
    _, out_cfg, _ = run(["--config", str(cfg), "bound"], capsys)
    _, out_flag, _ = run(["--config", str(cfg), "bound", "--delta", "0.05"], capsys)
    a, b = json.loads(out_cfg), json.loads(out_flag)
    assert a["config"]["delta"] == 0.5 and b["config"]["delta"] == 0.05
    assert b["value"] == pytest.approx(0.7456, abs=1e-4) and a["value"] < b["value"]
    cfg.write_text("bogus = 1\n")
    assert run(["--config", str(cfg), "bound"], capsys)[0] == 1


def test_train_mincq_toy(tmp_path, capsys):
    data = tmp_path / "toy.csv"
    data.write_text("0.0,-1\n1.0,1\n0.2,-1\n0.9,1\n")
    model = tmp_path / "m.json"
    code, _, _ = run(["train-mincq", "--data", str(data), "--mu", "0.5", "--per-attribute", "1",
                      "--out", str(model)], capsys)
    out = json.loads(model.read_text())
    assert code == 0 and out["q"] == [0.75] and out["seed"] == 0
    code, text, _ = run(["evaluate", "--model", str(model), "--data", str(data)], capsys)
    rep = json.loads(text)
    assert code == 0 and rep["risk"] == 0.0 and 0 <= rep["bounds"]["B2"] <= 1
    code, text, _ = run(["bound", "--id", "B3", "--model", str(model), "--data", str(data)], capsys)
    assert code == 0 and json.loads(text)["bound_id"] == "B3"


def test_infeasible_mu_exit_1(tmp_path, capsys):
    data = tmp_path / "toy.csv"
    data.write_text("0.0,-1\n1.0,1\n")
    code, _, err = run(["train-mincq", "--data", str(data), "--mu", "1.5", "--per-attribute", "1"], capsys)
    assert code == 1 and "not S-realizable" in err


def test_exit_codes(tmp_path, capsys, monkeypatch):
    bad = tmp_path / "bad.csv"
    bad.write_text("0,1\n1,2\n")
    code, _, err = run(["train-adaboost", "--data", str(bad)], capsys)
    assert code == 1 and "line 2" in err
    assert run(["frobnicate"], capsys)[0] == 1
    assert run(["bound", "--id", "B0", "--rs", "0.3"], capsys)[0] == 1

    def boom(args):
        raise ArithmeticError("overflow")

    monkeypatch.setattr(cli, "cmd_bound", boom)
    assert run(["bound", "--id", "B0", "--m", "5", "--rs", "0.3"], capsys)[0] == 2


def test_bound_curve_and_determinism(tmp_path, capsys):
    data = write_csv(tmp_path / "g.csv", two_gaussians(300, np.random.default_rng(7)))
    outs = []
    for k in range(2):
        path = tmp_path / f"curve{k}.csv"
        code, _, _ = run(["experiment", "bound-curve", "--data", str(data), "--rounds", "60",
                          "--out", str(path)], capsys)
        assert code == 0
        outs.append(path.read_bytes())
    lines = outs[0].decode().strip().splitlines()
    assert len(lines) == 61 and lines[0].startswith("round,")
    assert outs[0] == outs[1]


def test_stopping_and_adaboost_commands(tmp_path, capsys):
    data = write_csv(tmp_path / "g.csv", two_gaussians(120, np.random.default_rng(2)))
    code, text, _ = run(["experiment", "stopping-criterion", "--data", str(data), "--rounds", "20",
                         "--max-train", "60", "--seed", "4"], capsys)
    res = json.loads(text)
    assert code == 0 and res["seed"] == 4 and set(res["criteria"]) >= {"cv", "all_rounds"}
    code, text, _ = run(["train-adaboost", "--data", str(data), "--rounds", "5"], capsys)
    assert code == 0 and len(json.loads(text)["rounds"]) == 5
