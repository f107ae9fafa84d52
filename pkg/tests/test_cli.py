import json
import xml.etree.ElementTree as ET

import pytest

from vrsaccade.cli import run_command

GRID = "C=1,10;gamma=0.1,1"


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    """Two short sessions, synthesized and ingested through the CLI."""
    d = tmp_path_factory.mktemp("cli")
    cfg = d / "synth.json"
    cfg.write_text(json.dumps({"duration_s": 10.0, "fixation_ms_range": [150, 400]}))
    for seed in (0, 1):
        doc = d / f"s{seed}.json"
        assert run_command(["synth", "--config", str(cfg), "--seed", str(seed),
                            "--participant", f"p{seed}", "-o", str(doc)]) == 0
        assert (d / f"s{seed}.intervals.csv").exists()
        assert run_command(["ingest", str(doc), "--labels", str(d / f"s{seed}.intervals.csv"),
                            "-o", str(d / f"s{seed}.csv")]) == 0
    return d


def tables(d):
    return [str(d / "s0.csv"), str(d / "s1.csv")]


def test_unknown_flag(capsys):
    assert run_command(["train", "--bogus"]) == 2
    assert "usage" in capsys.readouterr().err


def test_no_subcommand():
    assert run_command([]) == 2


def test_missing_model(tmp_path, capsys, workdir):
    missing = tmp_path / "nope.json"
    code = run_command(["evaluate", str(missing), tables(workdir)[0], "-o", str(tmp_path / "r.json")])
    assert code == 1
    assert str(missing) in capsys.readouterr().err


def test_bad_table(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("a,b\n1,2\n")
    assert run_command(["analyze", str(bad), "-o", str(tmp_path / "out")]) == 1
    assert "header" in capsys.readouterr().err


def test_bad_grid(workdir, tmp_path):
    assert run_command(["train", *tables(workdir), "--grid", "C=;x=1",
                        "-o", str(tmp_path / "m.json")]) == 1


def test_train_evaluate(workdir, tmp_path):
    model = tmp_path / "model.json"
    assert run_command(["train", *tables(workdir), "--grid", GRID, "--seed", "3",
                        "-o", str(model)]) == 0
    assert (tmp_path / "model.grid.csv").read_text().count("\n") == 5
    report = tmp_path / "report.json"
    assert run_command(["evaluate", str(model), *tables(workdir), "-o", str(report),
                        "--plot", str(tmp_path / "cm.svg")]) == 0
    r = json.loads(report.read_text())
    assert r["scope"] == "held-out"
    assert set(r) >= {"confusion", "accuracy", "precision_w", "recall_w", "f1_w"}
    assert sum(map(sum, r["confusion"])) == len(json.loads(model.read_text())["dataset"]["test_indices"])
    ET.parse(tmp_path / "cm.svg")

    # same inputs, same flags: byte-identical outputs
    again = tmp_path / "model2.json"
    run_command(["train", *tables(workdir), "--grid", GRID, "--seed", "3", "-o", str(again)])
    assert again.read_bytes() == model.read_bytes()

    all_rows = tmp_path / "all.json"
    run_command(["evaluate", str(model), *tables(workdir), "--all-rows", "-o", str(all_rows)])
    assert json.loads(all_rows.read_text())["scope"] == "all"


def test_analyze(workdir, tmp_path, capsys):
    out = tmp_path / "an"
    assert run_command(["analyze", tables(workdir)[0], "--iqr-k", "3", "-o", str(out)]) == 0
    assert "min=" in capsys.readouterr().out
    stats = (out / "divergence_stats.csv").read_text().splitlines()
    assert len(stats) == 2
    mn, mx, mean = map(float, stats[1].split(",")[1:4])
    assert mn <= mean <= mx
    root = ET.parse(out / "divergence.svg").getroot()
    assert len([e for e in root.iter() if e.get("class") == "series"]) == 1


def test_pca(workdir, tmp_path):
    out = tmp_path / "pca"
    assert run_command(["pca", *tables(workdir), "--mode", "zscore", "-o", str(out)]) == 0
    assert len((out / "scree.csv").read_text().splitlines()) == 26
    assert (out / "scores_2d.csv").exists() and (out / "scores_4d.csv").exists()
    ET.parse(out / "scatter.svg")


def test_boundary(workdir, tmp_path):
    grid = tmp_path / "b.csv"
    assert run_command(["boundary", *tables(workdir), "--pcs", "2", "--resolution", "7",
                        "--grid", GRID, "-o", str(grid), "--plot", str(tmp_path / "b.svg")]) == 0
    assert len(grid.read_text().splitlines()) == 1 + 49
    root = ET.parse(tmp_path / "b.svg").getroot()
    assert len([e for e in root.iter() if e.get("class") == "cell"]) == 49


def test_report(workdir, tmp_path):
    out = tmp_path / "rep"
    docs = [str(workdir / "s0.json"), str(workdir / "s1.json")]
    assert run_command(["report", "--in", *docs, "--grid", GRID, "--resolution", "5",
                        "-o", str(out)]) == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["flags"]["seed"] == 0
    assert manifest["flags"]["grid"] == GRID
    for name in ("model.json", "evaluation.json", "boundary.csv", "boundary.svg",
                 "confusion.svg", "analysis/divergence_stats.csv", "pca/scree.csv"):
        assert (out / name).exists(), name


def test_synth_deterministic(tmp_path):
    for name in ("a.json", "b.json"):
        run_command(["synth", "--seed", "5", "--duration", "3", "-o", str(tmp_path / name)])
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()
    assert (tmp_path / "a.intervals.csv").read_bytes() == (tmp_path / "b.intervals.csv").read_bytes()


def test_inputs_untouched(workdir, tmp_path):
    before = {p.name: p.read_bytes() for p in workdir.iterdir() if p.is_file()}
    run_command(["analyze", *tables(workdir), "-o", str(tmp_path / "x")])
    after = {p.name: p.read_bytes() for p in workdir.iterdir() if p.is_file()}
    assert before == after
