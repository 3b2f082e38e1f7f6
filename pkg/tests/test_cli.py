import hashlib
import json

import pytest
import tomli_w

from rrmeval import io
from rrmeval.cli import EXIT_PARSE, EXIT_RUNTIME, EXIT_VALIDATION, main

SCENARIO = """[scenario]
duration = 90.0
seeds = [3, 4]
[scenario.populations]
ballistic-missile = 2
commercial-aircraft = 4
recreational-aircraft = 4
bird = 5
ship = 3
recreational-boat = 3
"""


def digest_tree(root):
    return {p.relative_to(root).as_posix(): hashlib.sha256(p.read_bytes()).hexdigest()
            for p in sorted(root.rglob("*")) if p.is_file() and p.name != "manifest.json"}


@pytest.fixture(scope="module")
def pipeline(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    cfg = root / "scen.toml"
    cfg.write_text(SCENARIO)
    scen = root / "scen"
    assert main(["simulate", "-c", str(cfg), "-p", "a-stu", "-o", str(scen)]) == 0
    assert main(["simulate", "-c", str(cfg), "-p", "na-nsr", "--clutter", "-o", str(root / "scen_c")]) == 0
    assert main(["simulate", "-c", str(cfg), "-p", "na-nsr", "-o", str(scen)]) == 0
    assert main(["fom", str(scen), "-o", str(root / "m.csv")]) == 0
    assert main(["evaluate", "-m", str(root / "m.csv"), "-o", str(root / "ev")]) == 0
    return root


def test_simulate_writes_logs_and_manifest(pipeline):
    run = pipeline / "scen" / "a-stu__seed3"
    for name in ("meta.json", "truths.csv", "tracks.csv", "timeline.csv"):
        assert (run / name).is_file()
    manifest = json.loads((pipeline / "scen_c" / "manifest.json").read_text())
    assert manifest["clutter"] == [True]
    assert manifest["seeds"] == [3, 4]
    assert manifest["policy"] == "NA+NSR"
    assert set(manifest["inputs"].values()) == {hashlib.sha256((pipeline / "scen.toml").read_bytes()).hexdigest()}


def test_simulate_is_reproducible(pipeline, tmp_path):
    assert main(["simulate", "-c", str(pipeline / "scen.toml"), "-p", "a-stu", "-o", str(tmp_path)]) == 0
    fresh = digest_tree(tmp_path)
    old = {k: v for k, v in digest_tree(pipeline / "scen").items() if k.startswith("a-stu")}
    assert fresh == old


def test_seed_override_renames_scenarios(pipeline, tmp_path):
    assert main(["simulate", "-c", str(pipeline / "scen.toml"), "-p", "a-stu", "--seed", "11", "-o", str(tmp_path)]) == 0
    assert (tmp_path / "a-stu__seed11").is_dir()


def test_fom_outputs(pipeline):
    ms = io.load_measurements(pipeline / "m.csv")
    assert ms.alternatives() == ["A+STU", "NA+NSR"]
    untracked = json.loads((pipeline / "m_untracked.json").read_text())
    assert untracked["threshold"] == 0.0
    assert set(untracked["counts"]) == {"A+STU", "NA+NSR"}


def test_evaluate_outputs(pipeline, capsys):
    ev = pipeline / "ev"
    report = io.read_report(ev / "report.json")
    assert all(0 <= report["scores"][a]["RRMPerformance"] <= 1 for a in report["alternatives"])
    assert (ev / "report.md").is_file() and len(list((ev / "plots").glob("*.csv"))) == 16
    assert json.loads((ev / "manifest.json").read_text())["model_digest"] == report["model_digest"]


def test_evaluate_alpha_is_pessimistic(pipeline, tmp_path):
    roots = []
    for alpha in ("1", "3"):
        out = tmp_path / alpha
        assert main(["evaluate", "-m", str(pipeline / "m.csv"), "--alpha", alpha, "--gauge-mode",
                     "smoothed-quantile-owa", "--format", "json", "-o", str(out)]) == 0
        roots.append(io.read_report(out / "report.json")["scores"]["A+STU"]["RRMPerformance"])
    assert roots[1] <= roots[0]


def test_compare_and_report(pipeline, tmp_path, capsys):
    rep = str(pipeline / "ev" / "report.json")
    assert main(["compare", rep, rep, "--alt-a", "NA+NSR", "--alt-b", "A+STU"]) == 0
    assert "| Criterion |" in capsys.readouterr().out
    out = tmp_path / "cmp.md"
    assert main(["compare", rep, rep, "--alt-a", "A+STU", "--alt-b", "A+STU", "-o", str(out)]) == 0
    assert "+0.000" in out.read_text()
    assert main(["report", rep, "--format", "markdown", "-o", str(tmp_path / "r.md")]) == 0
    assert (tmp_path / "r.md").read_text().startswith("# Evaluation report")


def test_model_dump_round_trips(tmp_path):
    out = tmp_path / "m.toml"
    assert main(["model", "-o", str(out)]) == 0
    assert io.load_preference_model(out) == io.load_default_model()


def test_exit_codes(pipeline, tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("alternative_id,metric_id,scenario_id,track_id,value\nA,TC-BM,s0,,oops\n")
    assert main(["evaluate", "-m", str(bad), "-o", str(tmp_path / "x")]) == EXIT_PARSE
    assert "line 2" in capsys.readouterr().err

    model = io.model_to_dict(io.load_default_model())
    next(n for n in model["node"] if n["id"] == "Tracking")["capacity"]["singletons"] = [0.7, 0.7]
    mfile = tmp_path / "m.toml"
    mfile.write_text(tomli_w.dumps(model))
    assert main(["evaluate", "-m", str(pipeline / "m.csv"), "--model", str(mfile)]) == EXIT_VALIDATION
    assert "Tracking" in capsys.readouterr().err

    assert main(["evaluate", "-m", str(pipeline / "m.csv"), "--alternative", "Nope",
                 "-o", str(tmp_path / "y")]) == EXIT_RUNTIME
    assert main(["fom", str(tmp_path / "empty-dir-that-is-missing")]) == EXIT_RUNTIME
    with pytest.raises(SystemExit) as exc:
        main(["simulate"])
    assert exc.value.code == 2


def test_output_dir_env(monkeypatch, pipeline, tmp_path):
    monkeypatch.setenv("RRMEVAL_OUTPUT_DIR", str(tmp_path))
    assert main(["evaluate", "-m", str(pipeline / "m.csv"), "--format", "json"]) == 0
    assert (tmp_path / "evaluation" / "report.json").is_file()


def test_manifest_timestamp_honours_source_date_epoch(monkeypatch, pipeline, tmp_path):
    monkeypatch.setenv("SOURCE_DATE_EPOCH", "0")
    assert main(["evaluate", "-m", str(pipeline / "m.csv"), "--format", "json", "-o", str(tmp_path)]) == 0
    assert json.loads((tmp_path / "manifest.json").read_text())["timestamp"] == "1970-01-01T00:00:00+00:00"
