import numpy as np
import pytest
import yaml

from mpuesim.cli import main
from mpuesim.config import SimConfig, config_from_dict, dump_config, load_config
from mpuesim.errors import ConfigError


def test_yaml_roundtrip(tmp_path):
    cfg = SimConfig().with_scenario(grip="DHG", o_p_db=3.0, seed=9)
    dump_config(cfg, tmp_path / "c.yaml")
    assert load_config(tmp_path / "c.yaml") == cfg


def test_unknown_key_and_version(tmp_path):
    with pytest.raises(ConfigError) as exc:
        config_from_dict({"schema_version": 1, "scenario": {"n_ues": 3}, "extra": 1})
    assert any("n_ues" in p for p in exc.value.problems)
    assert any("extra" in p for p in exc.value.problems)
    with pytest.raises(ConfigError, match="schema_version"):
        config_from_dict({})
    with pytest.raises(ConfigError):
        config_from_dict({"schema_version": 2})


def test_type_errors_collected():
    with pytest.raises(ConfigError) as exc:
        config_from_dict({"schema_version": 1,
                          "scenario": {"n_ue": "many", "seed": 1.5},
                          "channel": {"fading": "yes"}})
    assert len(exc.value.problems) == 3


def test_integer_where_float_expected():
    cfg = config_from_dict({"schema_version": 1, "scenario": {"sim_time_s": 2}})
    assert isinstance(cfg.scenario.sim_time_s, float)


def test_semantic_checks():
    probs = SimConfig().with_scenario(sim_time_s=0.015, dt_ms=10.0, translate=7).problems()
    assert len(probs) == 2


def write_cfg(tmp_path, **scenario):
    cfg = SimConfig().with_scenario(n_ue=2, sim_time_s=0.1, **scenario)
    path = tmp_path / "cfg.yaml"
    dump_config(cfg, path)
    return path


def test_cli_run(tmp_path, capsys):
    cfg = write_cfg(tmp_path)
    assert main(["run", "--config", str(cfg), "--seed", "4", "--out", str(tmp_path / "o")]) == 0
    text = capsys.readouterr().out
    assert text.splitlines()[1].startswith("FREE,0.0,0.0,4,")
    assert (tmp_path / "o" / "manifest.json").exists()


def test_cli_sweep(tmp_path):
    cfg = write_cfg(tmp_path)
    out = tmp_path / "s"
    assert main(["sweep", "--config", str(cfg), "--grips", "FREE", "DHG", "--op-db", "0", "3",
                 "--seeds", "2", "--out", str(out)]) == 0
    lines = (out / "summary.csv").read_text().splitlines()
    assert len(lines) == 1 + 2 * 2 * 2


def test_cli_exports(tmp_path):
    assert main(["export-layout", "--out", str(tmp_path / "l.csv")]) == 0
    assert len((tmp_path / "l.csv").read_text().splitlines()) == 22
    assert main(["export-mask", "--grip", "DHG", "--out", str(tmp_path / "m.csv")]) == 0
    rows = (tmp_path / "m.csv").read_text().splitlines()
    assert rows[0] == "panel,az_deg,el_deg,delta_db" and len(rows) == 1 + 3 * 73 * 37
    assert main(["export-pattern", "tx", "--index", "3", "--out", str(tmp_path / "t.csv")]) == 0
    assert main(["export-pattern", "rx", "--panel", "1", "--index", "7", "--grip", "RHB",
                 "--out", str(tmp_path / "r.csv")]) == 0
    assert len((tmp_path / "r.csv").read_text().splitlines()) == 362


def test_cli_config_error(tmp_path, capsys):
    bad = tmp_path / "bad.yaml"
    bad.write_text(yaml.safe_dump({"schema_version": 1, "scenario": {"n_ue": 0, "isd_m": -1}}))
    assert main(["run", "--config", str(bad)]) == 2
    err = capsys.readouterr().err
    assert err.count("config error") == 2
    assert main(["export-mask", "--grip", "XYZ", "--out", str(tmp_path / "x.csv")]) == 2
