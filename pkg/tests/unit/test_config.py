"""Tests for layered configuration loading"""

import json
from collections.abc import Callable
from pathlib import Path

import pytest

from ledgertopo.utils.config import (
    ConfigFormat,
    ConfigManager,
    PipelineConfig,
    load_config,
)
from ledgertopo.utils.exceptions import ConfigurationError, InvalidConfigError


@pytest.fixture
def manager(tmp_path: Path) -> ConfigManager:
    return ConfigManager(cwd=tmp_path / "project", home=tmp_path / "home")


def write_user_file(manager: ConfigManager, text: str) -> None:
    manager.user_config_file.parent.mkdir(parents=True, exist_ok=True)
    manager.user_config_file.write_text(text)


def write_project_file(manager: ConfigManager, text: str) -> None:
    manager.project_config_file.parent.mkdir(parents=True, exist_ok=True)
    manager.project_config_file.write_text(text)


def test_defaults(manager: ConfigManager) -> None:
    config = manager.load()
    assert config == PipelineConfig()
    assert config.sentiment_terms == ["democrats", "republicans"]


def test_precedence(
    manager: ConfigManager, tmp_path: Path, monkeypatch: pytest.MonkeyPatch
) -> None:
    """Test that each source overrides the ones below it"""
    write_project_file(manager, "hidden_size = 4\nwindow = 3\nepochs = 5\n")
    write_user_file(manager, "window = 5\nepochs = 6\nseed = 1\n")
    monkeypatch.setenv("LTOPO_EPOCHS", "7")
    monkeypatch.setenv("LTOPO_SEED", "2")
    explicit = tmp_path / "run.yaml"
    explicit.write_text("seed: 3\nlayers: 1\n")

    config = manager.load(explicit)
    assert (config.hidden_size, config.window, config.epochs) == (4, 5, 7)
    assert (config.seed, config.layers) == (3, 1)

    manager.update(layers=2, seed=None)
    assert (manager.get("layers"), manager.get("seed")) == (2, 3)
    assert manager.get("missing", "fallback") == "fallback"


class TestEnvironment:
    """``LTOPO_*`` variables"""

    def test_values_are_coerced(
        self, manager: ConfigManager, monkeypatch: pytest.MonkeyPatch
    ) -> None:
        monkeypatch.setenv("LTOPO_STRICT", "true")
        monkeypatch.setenv("LTOPO_LEARNING_RATE", "0.05")
        monkeypatch.setenv("LTOPO_SENTIMENT_TERMS", "bull, bear")
        monkeypatch.setenv("LTOPO_ANCHOR", "2020-01-06T00:00:00Z")
        config = manager.load()
        assert config.strict is True
        assert config.learning_rate == 0.05
        assert config.sentiment_terms == ["bull", "bear"]
        assert config.anchor == "2020-01-06T00:00:00Z"

    def test_bad_boolean(
        self, manager: ConfigManager, monkeypatch: pytest.MonkeyPatch
    ) -> None:
        monkeypatch.setenv("LTOPO_STRICT", "maybe")
        with pytest.raises(InvalidConfigError):
            manager.load()

    def test_unknown_variable_is_ignored(
        self,
        manager: ConfigManager,
        monkeypatch: pytest.MonkeyPatch,
        module_logs: Callable[[str], pytest.LogCaptureFixture],
    ) -> None:
        caplog = module_logs("ledgertopo.utils.config")
        monkeypatch.setenv("LTOPO_HIDEN_SIZE", "3")
        assert manager.load() == PipelineConfig()
        assert "LTOPO_HIDEN_SIZE" in caplog.text


class TestFiles:
    """Reading configuration files"""

    def test_json(self, tmp_path: Path) -> None:
        path = tmp_path / "c.json"
        path.write_text(json.dumps({"top_fraction": 0.05, "motif_mode": "noninduced"}))
        assert ConfigManager.read_config_file(path) == {
            "top_fraction": 0.05,
            "motif_mode": "noninduced",
        }

    def test_empty_yaml(self, tmp_path: Path) -> None:
        path = tmp_path / "c.yml"
        path.write_text("")
        assert ConfigManager.read_config_file(path) == {}

    def test_unknown_key_suggests_a_fix(
        self, manager: ConfigManager, tmp_path: Path
    ) -> None:
        path = tmp_path / "c.toml"
        path.write_text("hiden_size = 3\n")
        with pytest.raises(InvalidConfigError) as info:
            manager.load(path)
        assert info.value.details["unknown"] == ["hiden_size"]
        assert "Did you mean 'hidden_size'" in info.value.suggestions[0]

    def test_nested_tables_are_rejected(self, tmp_path: Path) -> None:
        path = tmp_path / "c.toml"
        path.write_text("[model]\nhidden_size = 3\n")
        with pytest.raises(InvalidConfigError):
            ConfigManager.read_config_file(path)

    def test_unsupported_suffix(self, tmp_path: Path) -> None:
        path = tmp_path / "c.ini"
        path.write_text("a=1\n")
        with pytest.raises(InvalidConfigError):
            ConfigManager.read_config_file(path)

    def test_unreadable_content(self, tmp_path: Path) -> None:
        path = tmp_path / "c.toml"
        path.write_text("hidden_size = = 3\n")
        with pytest.raises(ConfigurationError):
            ConfigManager.read_config_file(path)

    @pytest.mark.parametrize("fmt", list(ConfigFormat))
    def test_save_snapshot(
        self, manager: ConfigManager, tmp_path: Path, fmt: ConfigFormat
    ) -> None:
        """Test that a saved snapshot loads back to the same settings"""
        manager.load()
        manager.update(hidden_size=5, sentiment_terms=["a", "b"], strict=True)
        path = tmp_path / "snap" / f"config.{fmt.value}"
        manager.save(path, fmt)
        data = ConfigManager.read_config_file(path)
        assert "anchor" not in data
        assert PipelineConfig.from_dict(data) == manager.config


class TestValidation:
    """Rejected settings"""

    @pytest.mark.parametrize(
        "changes",
        [
            {"threshold_mode": "median"},
            {"top_filter_mode": "median"},
            {"motif_mode": "partial"},
            {"rank_statistic": "median"},
            {"top_fraction": 0.0},
            {"trader_fraction": 1.5},
            {"anomaly_quantile": 0.0},
            {"alpha": 1.0},
            {"betti_k": 45},
            {"betti_p": 1},
            {"betti_p": 2},
            {"sentiment_terms": ["only"]},
            {"window": 0},
            {"max_workers": 0},
            {"learning_rate": 0.0},
            {"refit_stride": -1},
            {"train_fraction": 0.8, "val_fraction": 0.2},
            {"log_level": "LOUD"},
        ],
    )
    def test_invalid(self, changes: dict) -> None:
        with pytest.raises(InvalidConfigError):
            PipelineConfig(**changes).validate()

    def test_update_is_validated(self, manager: ConfigManager) -> None:
        manager.load()
        with pytest.raises(InvalidConfigError):
            manager.update(motif_mode="partial")
        with pytest.raises(InvalidConfigError):
            manager.update(hiden_size=3)


def test_load_config_reads_project_file(
    tmp_path: Path, monkeypatch: pytest.MonkeyPatch
) -> None:
    monkeypatch.chdir(tmp_path)
    (tmp_path / ".ltopo.toml").write_text("retrains = 3\n")
    _, config = load_config(None, retrains=None, seed=4)
    assert (config.retrains, config.seed) == (3, 4)
