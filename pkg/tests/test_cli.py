from __future__ import annotations

import json
import shutil
from pathlib import Path

from fxsentibench.cli import main
from fxsentibench.gateway import Fixture


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def copy_config(data_dir: Path, tmp_path: Path, **edits) -> Path:
    config = json.loads((data_dir / "run_config.json").read_text())
    config.update(edits)
    for key in ("corpus_path", "market_data_dir", "probabilities_path"):
        if isinstance(config.get(key), str) and not Path(config[key]).is_absolute():
            config[key] = str(data_dir / config[key])
    if isinstance(config["backend"].get("fixture_path"), str):
        config["backend"]["fixture_path"] = str(data_dir / config["backend"]["fixture_path"])
    path = tmp_path / "config.json"
    path.write_text(json.dumps(config, indent=2))
    return path


def test_validate_ok(capsys, data_dir, tmp_path):
    config = copy_config(data_dir, tmp_path, output_dir=str(tmp_path / "out"))
    code, out, err = run_cli(capsys, "validate", "--config", str(config))
    assert code == 0
    assert out.strip() == "ok"


def test_validate_missing_corpus(capsys, data_dir, tmp_path):
    config = copy_config(
        data_dir, tmp_path, corpus_path=str(tmp_path / "nope.csv"), output_dir=str(tmp_path / "out")
    )
    code, out, err = run_cli(capsys, "validate", "--config", str(config))
    assert code == 2
    assert "corpus_path" in err


def test_validate_unknown_prompt_id(capsys, data_dir, tmp_path):
    config = copy_config(data_dir, tmp_path, prompts=["P1", "P9"], output_dir=str(tmp_path / "out"))
    code, out, err = run_cli(capsys, "validate", "--config", str(config))
    assert code == 2
    assert "P9" in err


def test_validate_rejects_unknown_key(capsys, data_dir, tmp_path):
    config = copy_config(data_dir, tmp_path, output_dir=str(tmp_path / "out"))
    raw = json.loads(config.read_text())
    raw["pricee"] = 1
    config.write_text(json.dumps(raw))
    code, out, err = run_cli(capsys, "validate", "--config", str(config))
    assert code == 2
    assert "pricee" in err


def test_run_single_prompt_report(capsys, data_dir, tmp_path):
    config = copy_config(
        data_dir, tmp_path, prompts=["P6N"], probabilities_path=None, output_dir=str(tmp_path / "out")
    )
    code, out, err = run_cli(capsys, "run", "--config", str(config), "--no-figures")
    assert code == 0, err
    report = json.loads((tmp_path / "out" / "report.json").read_text())
    assert list(report["models"]) == ["P6N"]
    assert (tmp_path / "out" / "manifest.json").exists()
    assert (tmp_path / "out" / "tables" / "da_numeric_models.csv").exists()


def test_run_writes_figures(capsys, data_dir, tmp_path):
    config = copy_config(data_dir, tmp_path, prompts=["P1", "P1N"], output_dir=str(tmp_path / "out"))
    code, out, err = run_cli(capsys, "run", "--config", str(config))
    assert code == 0, err
    figures = sorted(p.name for p in (tmp_path / "out" / "figures").glob("*.png"))
    assert figures == ["correlation_matrix.png", "directional_accuracy.png"]


def test_run_live_without_credentials_no_partial_output(capsys, data_dir, tmp_path, monkeypatch):
    monkeypatch.delenv("FXSB_TEST_KEY", raising=False)
    config = copy_config(
        data_dir,
        tmp_path,
        backend={"type": "live", "model_name": "gpt-3.5-turbo", "api_key_env": "FXSB_TEST_KEY"},
        require_deterministic=False,
        output_dir=str(tmp_path / "out"),
    )
    code, out, err = run_cli(capsys, "run", "--config", str(config), "--no-figures")
    assert code == 3
    assert "FXSB_TEST_KEY" in err
    assert not (tmp_path / "out" / "report.json").exists()


def test_run_flag_overrides_prompts(capsys, data_dir, tmp_path):
    config = copy_config(data_dir, tmp_path, probabilities_path=None, output_dir=str(tmp_path / "out"))
    code, out, err = run_cli(
        capsys, "run", "--config", str(config), "--prompts", "P3", "--no-figures",
        "--output", str(tmp_path / "override_out"),
    )
    assert code == 0, err
    report = json.loads((tmp_path / "override_out" / "report.json").read_text())
    assert list(report["models"]) == ["P3"]


def test_record_from_backend_round_trips(capsys, data_dir, tmp_path):
    config = copy_config(data_dir, tmp_path, prompts=["P1"], output_dir=str(tmp_path / "out"))
    fixture_out = tmp_path / "recorded.json"
    code, out, err = run_cli(capsys, "record", "--config", str(config), "--output", str(fixture_out))
    assert code == 0, err
    recorded = Fixture.load(fixture_out)
    assert len(recorded.entries) == 24
    source = Fixture.load(data_dir / "replay_fixture.json")
    for key, entry in recorded.entries.items():
        assert entry["response_text"] == source.entries[key]["response_text"]


def test_report_renders_tables(capsys, data_dir, tmp_path):
    run_dir = tmp_path / "run"
    run_dir.mkdir()
    shutil.copy(data_dir / "golden" / "report.json", run_dir / "report.json")
    code, out, err = run_cli(capsys, "report", str(run_dir))
    assert code == 0
    assert out == (data_dir / "golden" / "report.txt").read_text()


def test_report_json_flag(capsys, data_dir, tmp_path):
    run_dir = tmp_path / "run"
    run_dir.mkdir()
    shutil.copy(data_dir / "golden" / "report.json", run_dir / "report.json")
    code, out, err = run_cli(capsys, "report", str(run_dir), "--json")
    assert code == 0
    assert "== " not in out
    assert json.loads(out)["corpus"]["n_records"] == 24


def test_report_empty_dir_errors(capsys, tmp_path):
    code, out, err = run_cli(capsys, "report", str(tmp_path))
    assert code == 4
    assert "report.json" in err
