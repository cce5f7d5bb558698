"""Output directory layout shared by the pipeline commands."""

from pathlib import Path

from ledgertopo.config import (
    ABLATION_FILE,
    ATTRIBUTIONS_FILE,
    CONFIG_SNAPSHOT_FILE,
    FEATURES_FILE,
    ISSUANCE_FILE,
    MARKET_FILE,
    MODEL_FILE,
    MOTIFS_FILE,
    PREDICTIONS_FILE,
    PRICE_FILE,
    RANKS_FILE,
    SCENARIO_FILE,
    SUMMARY_FILE,
    TOPO_FILE,
    TRANSACTIONS_FILE,
    TRENDS_FILE,
)


class RunPaths:
    """Centralized path management for one pipeline run directory.

    Provides consistent access to the sub-directories written by ``synth``,
    ``features``, ``train``, ``predict``, ``shap``, ``ablate`` and ``report``.
    """

    def __init__(self, root: Path):
        """Initialize RunPaths.

        Args:
            root: The run output directory
        """
        self.root = Path(root)

    @property
    def data_dir(self) -> Path:
        """Raw inputs: transactions and auxiliary series."""
        return self.root / "data"

    @property
    def features_dir(self) -> Path:
        return self.root / "features"

    @property
    def models_dir(self) -> Path:
        return self.root / "models"

    @property
    def predictions_dir(self) -> Path:
        return self.root / "predictions"

    @property
    def shap_dir(self) -> Path:
        return self.root / "shap"

    @property
    def ablation_dir(self) -> Path:
        return self.root / "ablation"

    @property
    def reports_dir(self) -> Path:
        return self.root / "reports"

    @property
    def transactions(self) -> Path:
        return self.data_dir / TRANSACTIONS_FILE

    @property
    def price(self) -> Path:
        return self.data_dir / PRICE_FILE

    @property
    def issuance(self) -> Path:
        return self.data_dir / ISSUANCE_FILE

    @property
    def trends(self) -> Path:
        return self.data_dir / TRENDS_FILE

    @property
    def scenario(self) -> Path:
        return self.data_dir / SCENARIO_FILE

    @property
    def topo(self) -> Path:
        return self.features_dir / TOPO_FILE

    @property
    def motifs(self) -> Path:
        return self.features_dir / MOTIFS_FILE

    @property
    def market(self) -> Path:
        return self.features_dir / MARKET_FILE

    @property
    def features(self) -> Path:
        return self.features_dir / FEATURES_FILE

    @property
    def model(self) -> Path:
        return self.models_dir / MODEL_FILE

    @property
    def predictions(self) -> Path:
        return self.predictions_dir / PREDICTIONS_FILE

    @property
    def attributions(self) -> Path:
        return self.shap_dir / ATTRIBUTIONS_FILE

    @property
    def ranks(self) -> Path:
        return self.shap_dir / RANKS_FILE

    @property
    def ablation(self) -> Path:
        return self.ablation_dir / ABLATION_FILE

    @property
    def summary(self) -> Path:
        return self.reports_dir / SUMMARY_FILE

    def report_table(self, name: str) -> Path:
        """A correlation CSV written by ``report``."""
        return self.reports_dir / f"{name}.csv"

    @property
    def config_snapshot(self) -> Path:
        return self.root / CONFIG_SNAPSHOT_FILE

    def ensure_directory(self, path: Path) -> Path:
        """Ensure a directory exists, creating it if necessary.

        Args:
            path: The directory path to ensure exists

        Returns:
            Path: The directory path
        """
        path.mkdir(parents=True, exist_ok=True)
        return path

    def ensure_all(self) -> None:
        """Create every sub-directory of the run layout."""
        for path in (
            self.data_dir,
            self.features_dir,
            self.models_dir,
            self.predictions_dir,
            self.shap_dir,
            self.ablation_dir,
            self.reports_dir,
        ):
            self.ensure_directory(path)


def ensure_parent(path: Path) -> Path:
    """Create the parent directory of an output file and return the file path."""
    path.parent.mkdir(parents=True, exist_ok=True)
    return path
