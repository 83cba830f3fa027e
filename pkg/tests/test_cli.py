import csv
import json
import os
import subprocess
import sys

import jsonschema
import numpy as np
import pytest

import sklr.cli as cli
from sklr.data import write_csv
from sklr.errors import SolverContractError
from sklr.schemas import COMMAND_SCHEMAS
from sklr.synthetic import make_synth


@pytest.fixture(scope="module")
def synth_csv(tmp_path_factory):
    path = tmp_path_factory.mktemp("data") / "synth.csv"
    d = make_synth(0)
    write_csv(path, d.features, d.labels, names=["x1", "x2"], label_name="y")
    return path


def run(capsys, *argv):
    code = cli.main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def run_json(capsys, command, *argv):
    code, out, err = run(capsys, command, *argv, "--json")
    assert code == 0, err
    doc = json.loads(out)
    jsonschema.validate(doc, COMMAND_SCHEMAS[command])
    return doc


@pytest.fixture(scope="module")
def model_path(synth_csv, tmp_path_factory):
    path = tmp_path_factory.mktemp("model") / "m.json"
    assert cli.main(["train", "--data", str(synth_csv), "--label", "y", "-C", "60", "--lambda", "6",
                     "--kernel", "gaussian", "--sigma", "1", "--out", str(path), "--quiet"]) == 0
    return path


def test_train_report(capsys, synth_csv, tmp_path):
    doc = run_json(capsys, "train", "--data", synth_csv, "--label", "y", "-C", 60, "--lambda", 6,
                   "--out", tmp_path / "m.json")
    assert doc["termination"] == "converged" and doc["warning"] is None
    assert doc["kkt_residual"] <= 1e-5
    assert doc["lambda"] == 6.0
    assert (tmp_path / "m.json").exists()


def test_train_text_output(capsys, synth_csv, tmp_path):
    code, out, _ = run(capsys, "train", "--data", synth_csv, "-C", 1, "--out", tmp_path / "m.json")
    assert code == 0
    assert "selected points" in out and "seconds" in out


def test_lambda_choice_flag(capsys, synth_csv, tmp_path):
    doc = run_json(capsys, "train", "--data", synth_csv, "-C", 60, "--lambda-choice", "--out", tmp_path / "m.json")
    assert doc["lambda"] == 6.0


def test_wss_strategies_agree(capsys, synth_csv, tmp_path):
    docs = [run_json(capsys, "train", "--data", synth_csv, "-C", 60, "--lambda", 6, "--wss", w,
                     "--out", tmp_path / f"{w}.json") for w in ("first", "second")]
    assert abs(docs[0]["objective"] - docs[1]["objective"]) <= 1e-8


def test_max_iter_exits_zero_with_warning(capsys, synth_csv, tmp_path):
    doc = run_json(capsys, "train", "--data", synth_csv, "-C", 60, "--max-iter", 3, "--out", tmp_path / "m.json")
    assert doc["termination"] == "max_iter"
    assert "max_iter" in doc["warning"]


def test_predict_matches_eval(capsys, synth_csv, model_path, tmp_path):
    out = tmp_path / "pred.csv"
    doc = run_json(capsys, "predict", "--model", model_path, "--data", synth_csv, "--label", "y", "--out", out)
    rows = list(csv.DictReader(out.open()))
    assert doc["n"] == len(rows) == 99
    dec = np.array([float(r["decision"]) for r in rows])
    prob = np.array([float(r["prob_pos"]) for r in rows])
    lab = np.array([int(r["label"]) for r in rows])
    assert np.all((prob > 0) & (prob < 1))
    assert np.array_equal(lab, np.where(dec >= 0, 1, -1))
    y = np.array([float(r["y"]) for r in csv.DictReader(synth_csv.open())])
    ev = run_json(capsys, "eval", "--model", model_path, "--data", synth_csv, "--label", "y")
    assert ev["accuracy"] == np.mean(lab == y)


def test_predict_to_stdout(capsys, synth_csv, model_path):
    code, out, _ = run(capsys, "predict", "--model", model_path, "--data", synth_csv, "--label", "y")
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "decision,prob_pos,label" and len(lines) == 100


def test_predict_header_only(capsys, model_path, tmp_path):
    empty = tmp_path / "empty.csv"
    empty.write_text("x1,x2\n")
    out = tmp_path / "p.csv"
    code, _, err = run(capsys, "predict", "--model", model_path, "--data", empty, "--out", out)
    assert code == 0, err
    assert out.read_text() == "decision,prob_pos,label\n"


def test_predict_dimension_mismatch(capsys, model_path, tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("a,b,c\n1,2,3\n")
    code, _, err = run(capsys, "predict", "--model", model_path, "--data", bad)
    assert code == 1
    assert "3 feature columns" in err and "expects 2" in err


def test_cv_twice_identical(capsys, synth_csv, tmp_path):
    outs = []
    for i in range(2):
        out = tmp_path / f"cv{i}.csv"
        doc = run_json(capsys, "cv", "--data", synth_csv, "--label", "y", "--k", 3, "--seed", 7,
                       "--c-values", "1,10", "--n-lambda", 3, "--selection-rule", "sparsest-of-3",
                       "--out", out)
        assert doc["rule"] == "sparsest_of_top3" and len(doc["fold_accuracies"]) == 3
        rows = list(csv.reader(out.open()))
        outs.append([r[:-1] for r in rows])  # drop the wall-clock column
        doc.pop("timing")
        doc.pop("out")
        outs.append(doc)
    assert outs[0] == outs[2] and outs[1] == outs[3]


def test_cv_threads_from_environment(capsys, synth_csv, tmp_path, monkeypatch):
    base = run_json(capsys, "cv", "--data", synth_csv, "--k", 3, "--c-values", "1", "--n-lambda", 2)
    monkeypatch.setenv("SKLR_THREADS", "2")
    assert cli.build_parser().parse_args(["cv", "--data", "x"]).threads == 2
    par = run_json(capsys, "cv", "--data", synth_csv, "--k", 3, "--c-values", "1", "--n-lambda", 2)
    base.pop("timing")
    par.pop("timing")
    assert base == par


def test_grid(capsys, synth_csv, tmp_path):
    doc = run_json(capsys, "grid", "--data", synth_csv, "--c-values", "1,10", "--n-lambda", 2,
                   "--out", tmp_path / "g.csv")
    assert doc["n_cells"] == 4 and doc["lambda_mode"] == "grid"
    assert len((tmp_path / "g.csv").read_text().splitlines()) == 5


def test_sweep(capsys, synth_csv, tmp_path):
    out = tmp_path / "s.csv"
    doc = run_json(capsys, "sweep", "--data", synth_csv, "-C", 60, "--kernel", "linear", "--no-scale",
                   "--test-fraction", 0, "--out", out)
    rows = doc["rows"]
    assert [r["lambda"] for r in rows] == pytest.approx(np.linspace(0, 60, 10).tolist())
    assert rows[-1]["selection_ratio"] < rows[0]["selection_ratio"]
    norms = [r["omega_norm"] for r in rows]
    assert all(b >= a * 0.99 for a, b in zip(norms, norms[1:]))
    assert out.read_text().splitlines()[0] == "lambda,accuracy,selection_ratio,omega_norm,iterations"
    code, text, _ = run(capsys, "sweep", "--data", synth_csv, "-C", 60, "--n-lambda", 3)
    assert code == 0 and len(text.splitlines()) == 4


def test_bound(capsys, synth_csv):
    doc = run_json(capsys, "bound", "--data", synth_csv, "-C", 1, "--verify")
    assert doc["minority_label"] == -1
    assert doc["verify"]["c_bar"] == 1 - 1e-5
    doc = run_json(capsys, "bound", "--data", synth_csv, "-C", 1)
    assert doc["verify"] is None


def test_bench_wss(capsys):
    doc = run_json(capsys, "bench-wss", "--instances", 4, "--n", 60, "-C", 10, "--repeats", 3)
    assert doc["instances"] == 4 and doc["repeats"] == 3
    assert doc["first"]["converged"] == doc["second"]["converged"] == 4
    assert doc["iteration_ratio"] < 1.0
    assert doc["max_objective_diff"] <= 1e-8
    assert doc["timing"]["first_min"] <= doc["timing"]["first_mean"]


@pytest.mark.parametrize("argv, needle", [
    (["train", "--data", "/nonexistent.csv"], "nonexistent"),
    (["train", "--data", "{csv}", "-C", "-1"], "C must be"),
    (["train"], "--data"),
    (["cv", "--data", "{csv}", "--c-values", "a,b"], "c-values"),
    (["predict", "--model", "/nonexistent.json", "--data", "{csv}"], "nonexistent"),
    (["frobnicate"], "invalid choice"),
])
def test_input_errors_exit_one(capsys, synth_csv, argv, needle):
    argv = [a.replace("{csv}", str(synth_csv)) for a in argv]
    code, _, err = run(capsys, *argv)
    assert code == 1
    assert needle in err


def test_contract_violation_exits_two(capsys, synth_csv, tmp_path, monkeypatch):
    def broken(*args, **kwargs):
        raise SolverContractError("pair is not violating")

    monkeypatch.setattr(cli, "train_model", broken)
    code, _, err = run(capsys, "train", "--data", synth_csv, "--out", tmp_path / "m.json")
    assert code == 2
    assert "internal error" in err


def test_module_entry_point(synth_csv, tmp_path):
    env = dict(os.environ, SKLR_THREADS="1")
    res = subprocess.run([sys.executable, "-m", "sklr", "eval", "--help"], capture_output=True, text=True, env=env)
    assert res.returncode == 0 and "--model" in res.stdout
    res = subprocess.run([sys.executable, "-m", "sklr", "train", "--data", str(synth_csv), "--out",
                          str(tmp_path / "m.json"), "--json"], capture_output=True, text=True, env=env)
    assert res.returncode == 0
    jsonschema.validate(json.loads(res.stdout), COMMAND_SCHEMAS["train"])
