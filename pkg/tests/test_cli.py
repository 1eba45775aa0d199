"""Command-line runner: presets, validation, exit codes, determinism and output layout."""

import json
import math
from pathlib import Path

import jsonschema
import pytest

from fracpme import load_checkpoint
from fracpme.cli import ConfigError, load_config, load_schema, main, validate_config
from fracpme.experiments import apply_seed_override, expand_cases, run_experiment
from fracpme.presets import PRESETS, get_preset, list_presets
from fracpme.solver import TRAJECTORY_COLUMNS

REPO = Path(__file__).resolve().parents[1]

REQUIRED_PRESETS = {"thm1.3-contraction", "thm1.5-mean-convergence", "sec7.4-zero-mean-decay"}
N_CRITERIA = 12


def small_evolve(**over):
    cfg = {
        "name": "tiny",
        "kind": "evolve",
        "manifold": {"dim": 1, "periods": [2 * math.pi], "grid": [16]},
        "initial": {"recipe": "random", "seed": 4, "band": 3, "offset": 0.5},
        "pde": {"m": 2.0, "sigma": 0.5, "omega": 0.0, "horizon": 0.5, "steps": 10},
        "checks": {"mass": {}, "contraction": {}, "energy": {}},
    }
    cfg.update(over)
    return cfg


def write(path, cfg):
    path.write_text(json.dumps(cfg, indent=2))
    return path


# -- catalog --------------------------------------------------------------------


def test_catalog_contents(capsys):
    names = [n for n, _ in list_presets()]
    assert REQUIRED_PRESETS <= set(names)
    assert len(names) >= N_CRITERIA
    assert all(desc for _, desc in list_presets())
    assert main(["list-presets"]) == 0
    out = capsys.readouterr().out
    for n in names:
        assert n in out


@pytest.mark.parametrize("name", sorted(PRESETS))
def test_presets_roundtrip_and_validate(name):
    cfg = get_preset(name)
    assert json.loads(json.dumps(cfg)) == cfg
    validate_config(cfg, name)
    for case in expand_cases(cfg):
        validate_config(case, name)


def test_get_preset_returns_copies():
    a = get_preset("omega-limit")
    a["pde"]["m"] = 99
    assert get_preset("omega-limit")["pde"]["m"] == 2.0
    with pytest.raises(KeyError, match="available"):
        get_preset("nope")


def test_show_preset(capsys):
    assert main(["show-preset", "linear-exactness"]) == 0
    assert json.loads(capsys.readouterr().out)["name"] == "linear-exactness"
    assert main(["show-preset", "nope"]) == 2


# -- schema --------------------------------------------------------------------------


def test_shipped_schema_matches_package_copy():
    docs = json.loads((REPO / "docs" / "config.schema.json").read_text())
    assert docs == load_schema()
    jsonschema.Draft202012Validator.check_schema(docs)


def test_missing_sigma_names_field(tmp_path, capsys):
    cfg = small_evolve()
    del cfg["pde"]["sigma"]
    path = write(tmp_path / "bad.json", cfg)
    with pytest.raises(ConfigError, match="sigma"):
        load_config(path)
    assert main(["run", "--config", str(path), "--out-dir", str(tmp_path / "out")]) == 2
    err = capsys.readouterr().err
    assert "sigma" in err and "pde" in err


def test_malformed_json_reports_line_and_column(tmp_path, capsys):
    path = tmp_path / "broken.json"
    path.write_text('{\n  "kind": "evolve",\n  "manifold": {"dim": 1,,}\n}\n')
    assert main(["--config", str(path)]) == 2
    err = capsys.readouterr().err
    assert f"{path}:3:" in err and "JSON parse error" in err


@pytest.mark.parametrize("mutate,needle", [
    (lambda c: c["pde"].update(sigma=1.5), "sigma"),
    (lambda c: c.update(kind="dance"), "kind"),
    (lambda c: c["manifold"].update(grid=[7]), "grid"),
    (lambda c: c["initial"].pop("seed"), "seed"),
    (lambda c: c["manifold"].update(dim=4), "dim"),
])
def test_validation_errors(mutate, needle):
    cfg = small_evolve()
    mutate(cfg)
    with pytest.raises(ConfigError, match=needle):
        validate_config(cfg)


def test_unreadable_config(tmp_path, capsys):
    assert main(["run", "--config", str(tmp_path / "missing.json")]) == 2
    assert "cannot read" in capsys.readouterr().err


def test_nothing_to_run(capsys):
    assert main(["run"]) == 2
    assert main([]) == 2


# -- running ------------------------------------------------------------------------------


def test_run_config_writes_reports(tmp_path, capsys):
    path = write(tmp_path / "tiny.json", small_evolve())
    out = tmp_path / "out"
    assert main(["run", "--config", str(path), "--out-dir", str(out)]) == 0
    stdout = capsys.readouterr().out
    assert "PASS tiny" in stdout and "INFO tiny: case00" in stdout
    report = json.loads((out / "tiny" / "report.json").read_text())
    assert report["passed"] is True
    names = [c["name"] for c in report["checks"]]
    assert any(n.endswith(":mass") for n in names) and any(n.endswith(":time-derivative") for n in names)
    csvs = sorted((out / "tiny").glob("*.csv"))
    assert len(csvs) == 1
    lines = csvs[0].read_text().splitlines()
    assert lines[0] == ",".join(TRAJECTORY_COLUMNS) == "t,l1,l2,lmplus1,linf,mean,energy,dissipation"
    assert len(lines) == 12
    assert not list((out / "tiny").glob("*.tmp"))


def test_runs_are_byte_identical(tmp_path):
    path = write(tmp_path / "tiny.json", small_evolve())
    for d in ("a", "b"):
        assert main(["--config", str(path), "--out-dir", str(tmp_path / d)]) == 0
    files = sorted(p.name for p in (tmp_path / "a" / "tiny").iterdir())
    assert files
    for name in files:
        assert (tmp_path / "a" / "tiny" / name).read_bytes() == (tmp_path / "b" / "tiny" / name).read_bytes()


def test_thread_count_does_not_change_outputs(tmp_path):
    cfg = small_evolve(matrix=[{"pde": {"m": 1.5}}, {"pde": {"m": 3.0}}, {"pde": {"m": 0.5}}])
    path = write(tmp_path / "tiny.json", cfg)
    assert main(["--config", str(path), "--out-dir", str(tmp_path / "a"), "--threads", "1"]) == 0
    assert main(["--config", str(path), "--out-dir", str(tmp_path / "b"), "--threads", "3"]) == 0
    for p in (tmp_path / "a" / "tiny").iterdir():
        assert p.read_bytes() == (tmp_path / "b" / "tiny" / p.name).read_bytes()


def test_env_out_dir(tmp_path, monkeypatch):
    path = write(tmp_path / "tiny.json", small_evolve())
    monkeypatch.setenv("FRACPME_OUT_DIR", str(tmp_path / "env"))
    assert main(["--config", str(path)]) == 0
    assert (tmp_path / "env" / "tiny" / "report.json").exists()
    # an explicit flag wins over the environment
    assert main(["--config", str(path), "--out-dir", str(tmp_path / "flag")]) == 0
    assert (tmp_path / "flag" / "tiny" / "report.json").exists()


def test_seed_override(tmp_path):
    cfg = small_evolve()
    assert apply_seed_override(cfg, 99)["initial"]["seed"] == 99
    path = write(tmp_path / "tiny.json", cfg)
    main(["--config", str(path), "--out-dir", str(tmp_path / "a")])
    main(["--config", str(path), "--out-dir", str(tmp_path / "b"), "--seed-override", "99"])
    ra = json.loads((tmp_path / "a" / "tiny" / "report.json").read_text())
    rb = json.loads((tmp_path / "b" / "tiny" / "report.json").read_text())
    assert rb["config"]["initial"]["seed"] == 99 and ra["config"]["initial"]["seed"] == 4


def test_failing_check_exits_1(tmp_path, capsys):
    cfg = small_evolve(checks={"mass": {"per_step": 0.0, "total": -1.0}})
    path = write(tmp_path / "tiny.json", cfg)
    assert main(["--config", str(path), "--out-dir", str(tmp_path / "o")]) == 1
    assert "FAIL tiny" in capsys.readouterr().out
    assert json.loads((tmp_path / "o" / "tiny" / "report.json").read_text())["passed"] is False


def test_solver_failure_exits_2(tmp_path, capsys):
    cfg = small_evolve()
    cfg["initial"]["amplitude"] = 5.0
    cfg["pde"].update(m=3.0, horizon=10.0, newton_max_iter=1)
    path = write(tmp_path / "tiny.json", cfg)
    assert main(["--config", str(path), "--out-dir", str(tmp_path / "o")]) == 2
    assert "solver failure" in capsys.readouterr().out


def test_checkpoint_output(tmp_path):
    cfg = small_evolve(output={"checkpoint": True})
    path = write(tmp_path / "tiny.json", cfg)
    assert main(["--config", str(path), "--out-dir", str(tmp_path / "o")]) == 0
    (ck_path,) = (tmp_path / "o" / "tiny").glob("*.ckpt")
    ck = load_checkpoint(ck_path)
    assert ck.time == pytest.approx(0.5) and ck.config.m == 2.0


def test_fast_presets_pass(tmp_path):
    for name in ("subordination-oracle", "operator-oracles", "exponent-formulas"):
        res = run_experiment(get_preset(name))
        assert res.passed, (name, [c.to_dict() for c in res.checks if not c.passed])


def test_preset_run_via_cli(tmp_path, capsys):
    assert main(["run", "--preset", "exponent-formulas", "--out-dir", str(tmp_path)]) == 0
    assert (tmp_path / "exponent-formulas" / "report.json").exists()
    assert main(["run", "--preset", "nope"]) == 2
