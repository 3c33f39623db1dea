import json

from click.testing import CliRunner

from frag.cli import main


def invoke(*args):
    result = CliRunner().invoke(main, [str(a) for a in args], catch_exceptions=False)
    return result


def test_run_writes_report(planted, tmp_path):
    manifest, fixture, _ = planted
    out = tmp_path / "out"
    result = invoke("run", "--manifest", manifest, "--mock", fixture, "--k", 2, "--out", out, "--concurrency", 4)
    assert result.exit_code == 0, result.output
    summary = json.loads(result.output)
    assert summary["metrics"]["accuracy"] == 1.0
    report = json.loads((out / "report.json").read_text())
    assert len(report["tasks"]) == 3
    assert (out / "scores" / "q2.csv").exists()


def test_run_with_config_file(planted, tmp_path):
    manifest, fixture, _ = planted
    cfg = tmp_path / "run.yaml"
    cfg.write_text(f"manifest: {manifest.name}\nmock: {fixture.name}\nk_selected: 2\nselection_mode: uniform\n")
    result = invoke("run", "--config", cfg, "--out", tmp_path / "o")
    assert result.exit_code == 0, result.output
    assert json.loads(result.output)["metrics"]["accuracy"] < 1.0


def test_run_without_backend_errors(tmp_path):
    result = CliRunner().invoke(main, ["run", "--manifest", str(tmp_path / "m.jsonl")])
    assert result.exit_code != 0
    assert "base_url" in result.output


def test_sweep_prints_csv(planted):
    manifest, fixture, _ = planted
    result = invoke("sweep", "--manifest", manifest, "--mock", fixture, "--axis", "k", "--values", "1,2,4")
    assert result.exit_code == 0, result.output
    lines = result.output.strip().splitlines()
    assert lines[0].startswith("axis,value")
    assert [l.split(",")[1] for l in lines[1:]] == ["1", "2", "4"]


def test_sweep_rejects_empty_values(planted):
    manifest, fixture, _ = planted
    result = CliRunner().invoke(main, ["sweep", "--manifest", str(manifest), "--mock", str(fixture), "--axis", "n", "--values", ","])
    assert result.exit_code != 0


def test_score_dump_from_report_and_live(planted, tmp_path):
    manifest, fixture, _ = planted
    out = tmp_path / "out"
    invoke("run", "--manifest", manifest, "--mock", fixture, "--k", 2, "--out", out)
    from_report = invoke("score-dump", "--task", "q1", "--report", out)
    live = invoke("score-dump", "--task", "q1", "--manifest", manifest, "--mock", fixture, "--k", 2)
    assert from_report.exit_code == live.exit_code == 0
    assert from_report.output == live.output
    rows = from_report.output.strip().splitlines()
    assert rows[0] == "frame_index,score,selected"
    assert len(rows) == 41


def test_score_dump_unknown_task(planted, tmp_path):
    manifest, fixture, _ = planted
    result = CliRunner().invoke(main, ["score-dump", "--task", "nope", "--manifest", str(manifest), "--mock", str(fixture)])
    assert result.exit_code != 0 and "not in manifest" in result.output
