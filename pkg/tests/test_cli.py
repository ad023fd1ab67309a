"""End-to-end tests of the command-line interface and its manifests."""
import hashlib
import json

import pytest

from qkslab.cli import main


def _run(argv, capsys):
    code = main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def _digest(path):
    return hashlib.sha256(path.read_bytes()).hexdigest()


@pytest.fixture()
def dataset(tmp_path, capsys):
    path = tmp_path / "ds.json"
    code, out, err = _run(["ingest", "--synthetic", "7", "--days", "80",
                           "--out", str(path)], capsys)
    assert code == 0, err
    return path


def test_ingest_synthetic_prints_summary(tmp_path, capsys):
    out_path = tmp_path / "ds.json"
    code, out, _ = _run(["ingest", "--synthetic", "3", "--days", "460", "--out", str(out_path)], capsys)
    assert code == 0
    assert "rows=459" in out
    manifest = json.loads((tmp_path / "ds.json.manifest.json").read_text())
    assert manifest["command"] == "ingest"
    assert str(out_path) in manifest["outputs"]


def test_ingest_from_csvs_and_missing_file(tmp_path, capsys):
    from qkslab.data import write_synthetic_csvs

    write_synthetic_csvs(tmp_path / "i.csv", tmp_path / "g.csv", 5, days=60)
    code, out, _ = _run(["ingest", "--index", str(tmp_path / "i.csv"),
                         "--gold", str(tmp_path / "g.csv"),
                         "--out", str(tmp_path / "ds.json")], capsys)
    assert code == 0
    assert "rows=59" in out

    code, _, err = _run(["ingest", "--index", str(tmp_path / "nope.csv"),
                         "--gold", str(tmp_path / "g.csv"),
                         "--out", str(tmp_path / "x.json")], capsys)
    assert code != 0
    assert "file not found" in err


def test_kernel_exact_diagonal(dataset, tmp_path, capsys):
    out = tmp_path / "train.gram"
    code, text, _ = _run(["kernel", "--dataset", str(dataset), "--map", "yyy",
                          "--features", "3", "--size", "24", "--seed", "5",
                          "--out", str(out)], capsys)
    assert code == 0
    from qkslab.kernels import read_gram

    gram = read_gram(out)
    assert gram.symmetric
    assert all(v == 1.0 for v in gram.values.diagonal())


def test_kernel_shot_cap(dataset, tmp_path, capsys):
    args = ["kernel", "--dataset", str(dataset), "--map", "yyy", "--features", "2",
            "--size", "16", "--mode", "shots", "--shots", "2000",
            "--out", str(tmp_path / "k.gram")]
    code, _, err = _run(args, capsys)
    assert code != 0 and "cap" in err
    code, _, err = _run(args + ["--allow-overshoot"], capsys)
    assert code == 0, err


def test_kernel_determinism(dataset, tmp_path, capsys):
    a, b = tmp_path / "a.gram", tmp_path / "b.gram"
    argv = ["kernel", "--dataset", str(dataset), "--map", "zz", "--features", "3",
            "--size", "20", "--mode", "shots", "--shots", "128", "--seed", "9"]
    assert _run(argv + ["--out", str(a)], capsys)[0] == 0
    assert _run(argv + ["--out", str(b)], capsys)[0] == 0
    assert a.read_bytes() == b.read_bytes()


def test_kernel_test_rows_are_rectangular(dataset, tmp_path, capsys):
    out = tmp_path / "cross.gram"
    code, text, _ = _run(["kernel", "--dataset", str(dataset), "--map", "rbf",
                          "--features", "3", "--size", "30", "--rows", "test",
                          "--out", str(out)], capsys)
    assert code == 0
    from qkslab.kernels import read_gram

    gram = read_gram(out)
    assert not gram.symmetric
    assert gram.values.shape[0] < gram.values.shape[1]


def test_sweep_ptri_report_chain(dataset, tmp_path, capsys):
    sweep_path = tmp_path / "sweep.json"
    code, out, err = _run(["sweep", "--dataset", str(dataset), "--sizes", "30,40",
                           "--features", "2,3", "--kernels", "z,rbf", "--trials", "2",
                           "--seed", "4", "--out", str(sweep_path),
                           "--table", str(tmp_path / "sweep.csv")], capsys)
    assert code == 0, err
    doc = json.loads(sweep_path.read_text())
    assert len(doc["cells"]) == 8  # 4 configs x 2 kernels
    assert (tmp_path / "sweep.csv").exists()

    ptri_path = tmp_path / "ptri.json"
    code, out, err = _run(["ptri", "--sweep", str(sweep_path), "--methods", "z,rbf",
                           "--out", str(ptri_path)], capsys)
    assert code == 0, err
    pdoc = json.loads(ptri_path.read_text())
    assert set(pdoc["surfaces"]) == {"z", "rbf"}

    report_path = tmp_path / "flat.csv"
    code, out, err = _run(["report", "--input", str(ptri_path), "--out", str(report_path)], capsys)
    assert code == 0
    assert report_path.read_text().startswith("method,features,size")


def test_ptri_flat_surface_is_zero(tmp_path, capsys):
    # hand-build a constant-metric sweep document
    cells = []
    for f in (2, 3):
        for n in (30, 40):
            cells.append({"features": f, "size": n, "kernel": "rbf",
                          "records": [{"trial": 0, "trial_seed": 1, "balanced_accuracy": 0.5,
                                       "f1": 0.5, "fingerprint": "x"}],
                          "mean_balanced_accuracy": 0.5, "std_balanced_accuracy": 0.0,
                          "mean_f1": 0.5, "std_f1": 0.0})
    doc = {"format": "qkslab-sweep", "version": "1.0", "master_seed": 0, "trials": 1,
           "split_ratio": 0.7, "svm": {"C": 1.0, "tol": 0.001},
           "configs": [[2, 30], [2, 40], [3, 30], [3, 40]],
           "kernels": [{"name": "rbf"}], "cells": cells}
    sweep_path = tmp_path / "flat.json"
    sweep_path.write_text(json.dumps(doc))
    code, out, err = _run(["ptri", "--sweep", str(sweep_path), "--methods", "rbf",
                           "--out", str(tmp_path / "p.json")], capsys)
    assert code == 0, err
    pdoc = json.loads((tmp_path / "p.json").read_text())
    assert all(v == 0.0 for row in pdoc["surfaces"]["rbf"]["scores"] for v in row)


def test_variability_command(dataset, tmp_path, capsys):
    out = tmp_path / "var.json"
    code, text, err = _run(["variability", "--dataset", str(dataset), "--size", "30",
                            "--features", "2", "--kernel", "rbf", "--trials", "5",
                            "--seed", "2", "--out", str(out)], capsys)
    assert code == 0, err
    doc = json.loads(out.read_text())
    assert len(doc["records"]) == 5
    assert "std=" in text


def test_resources_command(tmp_path, capsys):
    code, out, err = _run(["resources", "--features", "4", "--reps", "1", "--verify"], capsys)
    assert code == 0, err
    row = [ln for ln in out.splitlines() if ln.startswith("4")][0]
    assert "37" in row and "19" in row and "True" in row


def test_schema_version_rejection(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"format": "qkslab-sweep", "version": "9.0", "cells": [],
                               "kernels": [], "configs": [], "trials": 1,
                               "master_seed": 0, "split_ratio": 0.7,
                               "svm": {"C": 1.0, "tol": 0.001}}))
    code, _, err = _run(["ptri", "--sweep", str(bad), "--methods", "rbf",
                         "--out", str(tmp_path / "p.json")], capsys)
    assert code != 0
    assert "version" in err


def test_replay_reproduces_byte_identical_outputs(tmp_path, capsys):
    ds_path = tmp_path / "ds.json"
    assert _run(["ingest", "--synthetic", "11", "--days", "70", "--out", str(ds_path)], capsys)[0] == 0
    sweep_path = tmp_path / "s.json"
    argv = ["sweep", "--dataset", str(ds_path), "--sizes", "30", "--features", "2",
            "--kernels", "z,rbf", "--trials", "2", "--seed", "8", "--out", str(sweep_path)]
    assert _run(argv, capsys)[0] == 0
    before = _digest(sweep_path)
    manifest_path = tmp_path / "s.json.manifest.json"
    code, out, err = _run(["replay", str(manifest_path)], capsys)
    assert code == 0, err
    assert "byte-identical" in out
    assert _digest(sweep_path) == before


def test_replay_detects_changed_inputs(tmp_path, capsys):
    ds_path = tmp_path / "ds.json"
    assert _run(["ingest", "--synthetic", "12", "--days", "60", "--out", str(ds_path)], capsys)[0] == 0
    out = tmp_path / "k.gram"
    assert _run(["kernel", "--dataset", str(ds_path), "--map", "z", "--features", "2",
                 "--size", "20", "--out", str(out)], capsys)[0] == 0
    ds_path.write_text(ds_path.read_text() + "\n")
    code, _, err = _run(["replay", str(out) + ".manifest.json"], capsys)
    assert code != 0
    assert "changed" in err
