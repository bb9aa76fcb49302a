import pytest
from pydantic import ValidationError

from src.config import Config, RunConfig, load_run_config


def test_settings_from_env(monkeypatch):
    monkeypatch.setenv("PQA_CONFIG", "runs/a.yaml")
    monkeypatch.setenv("PQA_OTLP_ENDPOINT", "")
    settings = Config.from_env()
    assert settings.config_file == "runs/a.yaml"
    assert settings.otlp_endpoint is None


def test_missing_file_gives_defaults(tmp_path):
    cfg = load_run_config(tmp_path / "absent.yaml")
    assert cfg == RunConfig()
    assert len(cfg.grid.points("reverse")) == 210


def test_override_skips_unset_flags():
    cfg = RunConfig().override(seed=7, engine={"reads_per_batch": None, "gauges": 3}, ensemble={"sizes": [30]})
    assert cfg.seed == 7
    assert cfg.engine.reads_per_batch == 1500
    assert cfg.engine.gauges == 3
    assert cfg.ensemble.sizes == [30]


def test_override_validates():
    with pytest.raises(ValidationError):
        RunConfig().override(market={"correlation": 1.2})


def test_yaml_round_trip(tmp_path):
    cfg = RunConfig().override(seed=3, anneal={"s_pause": 0.36})
    path = tmp_path / "run.yaml"
    cfg.dump_yaml(path)
    assert load_run_config(path) == cfg
