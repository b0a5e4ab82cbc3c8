"""Command line interface: exit codes, artifacts, determinism."""

import json
from pathlib import Path

import numpy as np
import pytest

from fieldclt.cli import BUNDLED_FIXTURES, main
from fieldclt.config import (
    ExperimentConfig,
    config_from_json,
    config_to_json,
    load_config,
    save_config,
)
from fieldclt.fields import IIDField, ProductIID, Window
from fieldclt.limitlaw import Normal, ProductOfNormals

BROKEN_FIXTURES = BUNDLED_FIXTURES.parent / "fixtures_broken"


def tiny_config(**overrides):
    base = dict(
        name="tiny",
        spec=ProductIID(d=2),
        window=Window((16, 16)),
        replicates=50,
        master_seed=5,
        law=ProductOfNormals(2),
        t_grid=(0.0, 0.5, 1.0),
        tolerances={"ks": 0.5, "ecf": 0.5},
        reference_draws=2000,
    )
    base.update(overrides)
    return ExperimentConfig(**base)


def write_tiny(tmp_path, **overrides):
    cfg = tiny_config(**overrides)
    path = tmp_path / "cfg.json"
    save_config(cfg, path)
    return cfg, path


# ---------------------------------------------------------------------------
# config serialization


def test_config_round_trip(tmp_path):
    cfg, path = write_tiny(tmp_path)
    assert load_config(path) == cfg


def test_config_missing_field_raises():
    doc = config_to_json(tiny_config())
    del doc["window"]
    with pytest.raises(ValueError, match="missing required field"):
        config_from_json(doc)


def test_config_validation():
    with pytest.raises(ValueError):
        tiny_config(replicates=1)
    with pytest.raises(ValueError):
        tiny_config(statistic="median")
    with pytest.raises(ValueError):
        tiny_config(master_seed="abc")


def test_config_overrides_replace_only_given_fields():
    cfg = tiny_config()
    same = cfg.with_overrides(seed=None, out_dir=None)
    assert same == cfg
    bumped = cfg.with_overrides(seed=99, out_dir="elsewhere")
    assert bumped.master_seed == 99
    assert bumped.out_dir == "elsewhere"
    assert bumped.spec == cfg.spec


# ---------------------------------------------------------------------------
# run subcommand


def test_run_tiny_config_passes(tmp_path, capsys):
    _, path = write_tiny(tmp_path)
    out = tmp_path / "out"
    code = main(["run", "--config", str(path), "--out", str(out)])
    assert code == 0
    captured = capsys.readouterr().out
    assert "verdict pass" in captured

    doc = json.loads((out / "report.json").read_text())
    for key in (
        "schema_version",
        "generated_at",
        "spec",
        "spec_digest",
        "window",
        "moments",
        "ks_results",
        "ecf_grid",
        "verdict",
    ):
        assert key in doc
    assert doc["schema_version"] == 1
    assert doc["verdict"] == "pass"
    assert "_values" not in doc

    lines = (out / "samples.csv").read_text().splitlines()
    assert lines[0] == "value"
    assert len(lines) == 51
    ecdf = (out / "ecdf.csv").read_text().splitlines()
    assert ecdf[0] == "x,cum_prob"
    assert ecdf[-1].endswith(",1.0")
    ecf_lines = (out / "ecf.csv").read_text().splitlines()
    assert ecf_lines[0] == "t,ecf_real"
    assert ecf_lines[1].startswith("0.0,1.0")


def test_run_without_law_skips_checks(tmp_path):
    _, path = write_tiny(tmp_path, law=None, t_grid=None)
    out = tmp_path / "out"
    assert main(["run", "--config", str(path), "--out", str(out)]) == 0
    doc = json.loads((out / "report.json").read_text())
    assert doc["ks_results"] == []
    assert not (out / "ecf.csv").exists()


def test_run_v_statistic_config(tmp_path):
    _, path = write_tiny(tmp_path, statistic="v_statistic", law=None, t_grid=None)
    out = tmp_path / "out"
    assert main(["run", "--config", str(path), "--out", str(out)]) == 0
    vals = np.loadtxt(out / "samples.csv", skiprows=1)
    assert np.all(vals >= 0)  # averages of squares


def test_run_failing_tolerance_exits_two(tmp_path, capsys):
    _, path = write_tiny(tmp_path, law=Normal(1.0), tolerances={"ks": 0.001})
    out = tmp_path / "out"
    code = main(["run", "--config", str(path), "--out", str(out)])
    assert code == 2
    assert "[FAIL]" in capsys.readouterr().out


def test_run_usage_errors(tmp_path):
    _, path = write_tiny(tmp_path)
    assert main(["run"]) == 1
    assert main(["run", "--config", str(path), "--preset", "chaos"]) == 1
    assert main(["run", "--config", str(path), "--threads", "0"]) == 1
    assert main(["run", "--preset", "no-such-preset"]) == 1
    assert main(["run", "--config", str(tmp_path / "missing.json")]) == 1


def test_run_invalid_replicates_in_file(tmp_path):
    doc = config_to_json(tiny_config())
    doc["replicates"] = 1
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(doc))
    assert main(["run", "--config", str(path)]) == 1


def test_run_malformed_json_config(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    assert main(["run", "--config", str(path)]) == 1


def test_report_deterministic_modulo_timestamp(tmp_path):
    _, path = write_tiny(tmp_path)
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["run", "--config", str(path), "--out", str(a)]) == 0
    assert main(["run", "--config", str(path), "--out", str(b)]) == 0
    da = json.loads((a / "report.json").read_text())
    db = json.loads((b / "report.json").read_text())
    da.pop("generated_at")
    db.pop("generated_at")
    assert da == db
    assert (a / "samples.csv").read_bytes() == (b / "samples.csv").read_bytes()


def test_thread_count_does_not_change_artifacts(tmp_path):
    _, path = write_tiny(tmp_path)
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["run", "--config", str(path), "--out", str(a), "--threads", "1"]) == 0
    assert main(["run", "--config", str(path), "--out", str(b), "--threads", "3"]) == 0
    assert (a / "samples.csv").read_bytes() == (b / "samples.csv").read_bytes()
    assert (a / "ecf.csv").read_bytes() == (b / "ecf.csv").read_bytes()


def test_seed_override_changes_samples(tmp_path):
    _, path = write_tiny(tmp_path)
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["run", "--config", str(path), "--out", str(a)]) == 0
    assert main(["run", "--config", str(path), "--out", str(b), "--seed", "6"]) == 0
    assert (a / "samples.csv").read_bytes() != (b / "samples.csv").read_bytes()
    db = json.loads((b / "report.json").read_text())
    assert db["master_seed"] == 6


# ---------------------------------------------------------------------------
# exactcheck subcommand


def test_exactcheck_bundled_passes(capsys):
    assert main(["exactcheck"]) == 0
    out = capsys.readouterr().out
    assert "[FAIL]" not in out
    assert "torus_parity_powers_0_64" in out


def test_exactcheck_broken_fixture_fails_with_witness(capsys):
    assert main(["exactcheck", "--fixtures", str(BROKEN_FIXTURES)]) == 2
    out = capsys.readouterr().out
    assert "[FAIL]" in out
    assert "witness" in out


def test_exactcheck_missing_dir(tmp_path):
    assert main(["exactcheck", "--fixtures", str(tmp_path / "nowhere")]) == 1


def test_exactcheck_empty_dir(tmp_path):
    assert main(["exactcheck", "--fixtures", str(tmp_path)]) == 1


def test_exactcheck_malformed_fixture(tmp_path):
    (tmp_path / "bad.json").write_text('{"name": "x"}')
    assert main(["exactcheck", "--fixtures", str(tmp_path)]) == 1
    (tmp_path / "bad.json").write_text("not json at all")
    assert main(["exactcheck", "--fixtures", str(tmp_path)]) == 1


# ---------------------------------------------------------------------------
# presets subcommand and parser plumbing


def test_presets_lists_all(capsys):
    assert main(["presets"]) == 0
    out = capsys.readouterr().out
    for name in ("product-iid-d2", "chaos", "bessel", "bessel-wide", "normal-baseline", "convolution"):
        assert name in out


def test_no_subcommand_is_usage_error():
    assert main([]) == 1


def test_unknown_flag_is_usage_error():
    assert main(["run", "--frobnicate"]) == 1


def test_help_exits_zero():
    assert main(["--help"]) == 0
