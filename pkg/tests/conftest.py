"""Shared fixtures for the ledger-topo test suite"""

import logging
import os
from collections.abc import Callable, Iterator
from pathlib import Path

import pytest

from ledgertopo.pipeline import build_features, load_ledger
from ledgertopo.synthetic import write_scenario
from ledgertopo.utils.config import ENV_PREFIX
from ledgertopo.utils.paths import RunPaths
from tests.helpers.factories import SmallRun, small_config, small_scenario

LogAttacher = Callable[[str], pytest.LogCaptureFixture]


def pytest_addoption(parser: pytest.Parser) -> None:
    parser.addoption(
        "--run-acceptance",
        action="store_true",
        default=False,
        help="Run full-scale synthetic acceptance tests",
    )


def pytest_collection_modifyitems(
    config: pytest.Config, items: list[pytest.Item]
) -> None:
    if config.getoption("--run-acceptance"):
        return
    skip = pytest.mark.skip(reason="needs --run-acceptance")
    for item in items:
        if "acceptance" in item.keywords:
            item.add_marker(skip)


@pytest.fixture(autouse=True)
def isolated_settings(
    monkeypatch: pytest.MonkeyPatch, tmp_path_factory: pytest.TempPathFactory
) -> None:
    """Keep user config files and LTOPO_* variables out of every test."""
    monkeypatch.setenv("HOME", str(tmp_path_factory.mktemp("home")))
    for key in list(os.environ):
        if key.startswith(ENV_PREFIX):
            monkeypatch.delenv(key)


@pytest.fixture
def module_logs(caplog: pytest.LogCaptureFixture) -> Iterator[LogAttacher]:
    """Attach the capture handler to a ``ledgertopo.*`` logger.

    Library loggers do not propagate, so ``caplog`` only sees their records
    once its handler is added to them directly.
    """
    attached: list[tuple[logging.Logger, int]] = []

    def attach(name: str) -> pytest.LogCaptureFixture:
        logger = logging.getLogger(name)
        attached.append((logger, logger.level))
        logger.setLevel(logging.DEBUG)
        logger.addHandler(caplog.handler)
        return caplog

    yield attach
    for logger, level in attached:
        logger.removeHandler(caplog.handler)
        logger.setLevel(level)


@pytest.fixture(scope="session")
def small_run(tmp_path_factory: pytest.TempPathFactory) -> SmallRun:
    """Synthetic inputs and features shared by the read-only tests."""
    scenario = small_scenario()
    config = small_config(anchor=scenario.anchor)
    paths = RunPaths(tmp_path_factory.mktemp("small_run"))
    data = write_scenario(scenario, paths)
    inputs = load_ledger(paths.transactions, config)
    tables = build_features(inputs, paths.price, paths.issuance, paths.trends, config)
    return SmallRun(scenario, config, paths, data, inputs, tables)


@pytest.fixture
def run_dir(tmp_path: Path) -> Path:
    return tmp_path / "run"
