import json

import pytest

from percmon import jsonio
from percmon.cli.percmon import main


def run(*argv) -> int:
    with pytest.raises(SystemExit) as info:
        main([str(a) for a in argv])
    return info.value.code


@pytest.fixture
def dataset(tmp_path):
    directory = tmp_path / "data"
    assert run("generate", "--count", 40, "--seed", 3, "--out", directory) == 0
    return directory


def test_generate(dataset):
    assert sorted(p.name for p in dataset.iterdir()) == ["manifest.json", "test.ndjson", "train.ndjson", "validation.ndjson"]
    manifest = jsonio.read_file(dataset / "manifest.json")
    assert manifest["command"] == "generate"
    assert manifest["seed"] == 3
    assert manifest["counts"] == {"train": 32, "test": 4, "validation": 4}


def test_fit_and_infer(dataset, tmp_path):
    fitted = tmp_path / "fit"
    assert run("fit", "--dataset", dataset, "--out", fitted) == 0
    params = jsonio.read_file(fitted / "params.json")
    assert params["samples"] == 32
    assert len(params["priors"]) == 16

    inferred = tmp_path / "fg"
    assert run("infer", "--dataset", dataset, "--params", fitted / "params.json", "--out", inferred) == 0
    for name in ("predictions.ndjson", "metrics.csv", "metrics.json", "timing.json", "manifest.json"):
        assert (inferred / name).exists()
    assert len(jsonio.read_ndjson_list(inferred / "predictions.ndjson")) == 4
    assert jsonio.read_file(inferred / "timing.json")["samples"] == 4

    baseline = tmp_path / "baseline"
    assert run("infer", "--dataset", dataset, "--algo", "baseline", "--out", baseline) == 0
    report = tmp_path / "report"
    assert run("report", "--out", report, inferred, baseline) == 0
    rows = (report / "identification.csv").read_text(encoding="utf-8").splitlines()
    assert len(rows) == 3
    assert rows[0].startswith("algo,kind,samples,accuracy_all")
    assert run("report", "--out", report, inferred, inferred) == 1


def test_factor_graph_needs_params(dataset, tmp_path, capsys):
    assert run("infer", "--dataset", dataset, "--out", tmp_path / "out") == 1
    envelope = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert envelope["error"]["type"] == "MissingParameterError"


def test_deterministic_infer(dataset, tmp_path):
    assert run("infer", "--dataset", dataset, "--algo", "deterministic", "--out", tmp_path / "det") == 0
    metrics = jsonio.read_file(tmp_path / "det" / "metrics.json")
    assert metrics["algo"] == "deterministic"
    assert metrics["samples"] == 4


def test_export(dataset, tmp_path):
    fitted = tmp_path / "fit"
    assert run("fit", "--dataset", dataset, "--out", fitted) == 0
    out = tmp_path / "export"
    assert run("export", "--dataset", dataset, "--params", fitted / "params.json", "--out", out) == 0
    files = sorted(p.name for p in (out / "gnn").iterdir())
    assert files == [f"test-{n:05d}.json" for n in range(4)]


def test_diagnosability(tmp_path):
    out = tmp_path / "diag"
    assert run("diagnosability", "--graph", "fig2-example", "--semantics", "WeakOR", "--out", out) == 0
    result = jsonio.read_file(out / "diagnosability.json")
    assert [entry["policy"] for entry in result["kappa"]] == ["all-modes", "outputs-only"]


def test_missing_dataset(tmp_path, capsys):
    assert run("fit", "--dataset", tmp_path / "nowhere", "--out", tmp_path) == 1
    envelope = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert envelope["error"]["code"] == "missing-file"


def test_no_command():
    assert run() == 2


def test_config_file(dataset, tmp_path):
    config = tmp_path / "run.json"
    config.write_text(json.dumps({"algo": "baseline-rel", "out": str(tmp_path / "rel")}), encoding="utf-8")
    assert run("--config", config, "infer", "--dataset", dataset) == 0
    assert jsonio.read_file(tmp_path / "rel" / "metrics.json")["algo"] == "baseline-rel"
    config.write_text(json.dumps({"colour": "red"}), encoding="utf-8")
    assert run("--config", config, "infer", "--dataset", dataset) == 1

# vim: set et sw=4 ts=4:
