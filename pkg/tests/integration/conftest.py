"""Fixtures for integration tests."""

import pytest


@pytest.fixture(autouse=True)
def isolated_config(tmp_path, monkeypatch):
    """Keep stored preferences and the seed variable out of every run."""
    config_dir = tmp_path / "config" / "apm-lab"
    monkeypatch.setattr("apm_lab.config.get_config_dir", lambda: config_dir)
    monkeypatch.delenv("APM_LAB_SEED", raising=False)
    return config_dir
