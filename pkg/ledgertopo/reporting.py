"""Result CSVs and the text summary printed by ``report``."""

import io
from collections.abc import Mapping, Sequence
from pathlib import Path
from typing import Optional

import pandas as pd
from rich.console import Console
from rich.table import Table

from ledgertopo.attribution import RankTable, ShapleyReport
from ledgertopo.config import DECILE_LEVELS
from ledgertopo.evaluation import AblationReport, CorrelationReport
from ledgertopo.forecaster.walk_forward import Prediction
from ledgertopo.topo_features import increment_column
from ledgertopo.utils.exceptions import InputValidationError
from ledgertopo.utils.paths import ensure_parent

PREDICTION_COLUMNS = ("week", "actual", "predicted")
ATTRIBUTION_KEYS = ("seed", "week", "base", "prediction")
SUMMARY_WIDTH = 100


def _write(frame: pd.DataFrame, path: Path) -> Path:
    ensure_parent(path)
    frame.to_csv(path, index=False, lineterminator="\n")
    return path


def _read(path: Path, columns: Sequence[str]) -> pd.DataFrame:
    frame = pd.read_csv(path, float_precision="round_trip")
    missing = [c for c in columns if c not in frame.columns]
    if missing:
        raise InputValidationError(
            f"{path} lacks column(s) {', '.join(missing)}",
            field="header",
            value=list(frame.columns),
        )
    return frame


def write_predictions(predictions: Sequence[Prediction], path: Path) -> Path:
    frame = pd.DataFrame(
        [(p.week, p.actual, p.predicted) for p in predictions],
        columns=PREDICTION_COLUMNS,
    )
    return _write(frame, path)


def read_predictions(path: Path) -> list[Prediction]:
    frame = _read(path, PREDICTION_COLUMNS)
    return [
        Prediction(
            week=int(r["week"]),
            predicted=float(r["predicted"]),
            actual=None if pd.isna(r["actual"]) else float(r["actual"]),
        )
        for r in frame.to_dict(orient="records")
    ]


def attributions_frame(
    reports: Mapping[int, Mapping[int, ShapleyReport]],
) -> pd.DataFrame:
    """One row per (retrain seed, week) with every feature's attribution."""
    records = []
    for seed in sorted(reports):
        for week in sorted(reports[seed]):
            report = reports[seed][week]
            record: dict[str, float] = {
                "seed": seed,
                "week": week,
                "base": report.base,
                "prediction": report.prediction,
            }
            record.update(report.phi)
            records.append(record)
    return pd.DataFrame.from_records(records)


def read_attributions(path: Path) -> dict[int, dict[int, ShapleyReport]]:
    frame = _read(path, ATTRIBUTION_KEYS)
    features = [c for c in frame.columns if c not in ATTRIBUTION_KEYS]
    reports: dict[int, dict[int, ShapleyReport]] = {}
    for r in frame.to_dict(orient="records"):
        seed = int(r["seed"])
        reports.setdefault(seed, {})[int(r["week"])] = ShapleyReport(
            week=int(r["week"]),
            phi={f: float(r[f]) for f in features},
            base=float(r["base"]),
            prediction=float(r["prediction"]),
            seed=seed,
        )
    return reports


def ranks_frame(anomalous: Optional[RankTable], overall: RankTable) -> pd.DataFrame:
    """Feature, average rank over anomalous weeks and over all test weeks."""
    features = list(overall.ranks)
    return pd.DataFrame(
        {
            "feature": features,
            "anomalous_rank": [
                anomalous.ranks[f] if anomalous is not None else None for f in features
            ],
            "all_rank": [overall.ranks[f] for f in features],
            "retrains": overall.retrains,
            "statistic": overall.statistic,
        }
    )


def correlation_frame(report: CorrelationReport) -> pd.DataFrame:
    return pd.DataFrame(
        [
            (
                e.feature,
                e.n,
                e.pearson,
                e.pearson_significant,
                e.spearman,
                e.spearman_significant,
            )
            for e in report.entries
        ],
        columns=["feature", "n", "pearson", "pearson_sig", "spearman", "spearman_sig"],
    )


def ablation_frame(report: AblationReport) -> pd.DataFrame:
    return pd.DataFrame(
        [
            (
                e.feature_set,
                e.rmse_all,
                e.gain_all,
                e.rmse_anomalous,
                e.gain_anomalous,
                e.gain_stderr,
                e.positive_fraction,
                report.retrains,
            )
            for e in report.entries
        ],
        columns=[
            "feature_set",
            "rmse_all",
            "gain_all",
            "rmse_anomalous",
            "gain_anomalous",
            "gain_stderr",
            "positive_fraction",
            "retrains",
        ],
    )


def write_frame(frame: pd.DataFrame, path: Path) -> Path:
    return _write(frame, path)


def _num(value: Optional[float], digits: int = 4) -> str:
    return "n/a" if value is None or pd.isna(value) else f"{value:.{digits}f}"


def _pct(value: Optional[float]) -> str:
    return "n/a" if value is None or pd.isna(value) else f"{100 * value:+.1f}%"


def _sig(flag: bool) -> str:
    return "*" if flag else ""


def motif_table(report: CorrelationReport) -> Table:
    """Motif increments against the target."""
    table = Table(title="Motif correlations with the target")
    for header in ("motif", "Pearson r", "sign", "Spearman rho", "sign"):
        table.add_column(header, justify="left" if header == "motif" else "right")
    for e in report.entries:
        table.add_row(
            e.feature,
            _num(e.pearson),
            _sig(e.pearson_significant),
            _num(e.spearman),
            _sig(e.spearman_significant),
        )
    return table


def feature_table(
    report: CorrelationReport, ranks: Optional[pd.DataFrame] = None
) -> Table:
    """Feature correlations side by side with average SHAP ranks.

    Args:
        report: Correlations of the model features with the target
        ranks: A frame written by :func:`ranks_frame`, if attributions exist
    """
    title = f"Feature correlations (alpha={report.alpha})"
    by_feature: dict[str, dict] = {}
    if ranks is not None:
        retrains = int(ranks["retrains"].iloc[0]) if len(ranks) else 0
        title += f" and SHAP ranks over {retrains} retrain(s)"
        by_feature = {r["feature"]: r for r in ranks.to_dict(orient="records")}
    table = Table(title=title)
    headers = ["feature", "Pearson r", "sign", "Spearman rho", "sign"]
    if ranks is not None:
        headers += ["SHAP rank (anomalous)", "SHAP rank (all)"]
    for header in headers:
        table.add_column(header, justify="left" if header == "feature" else "right")
    for e in report.entries:
        cells = [
            e.feature,
            _num(e.pearson),
            _sig(e.pearson_significant),
            _num(e.spearman),
            _sig(e.spearman_significant),
        ]
        if ranks is not None:
            row = by_feature.get(e.feature, {})
            cells.append(_num(row.get("anomalous_rank"), 2))
            cells.append(_num(row.get("all_rank"), 2))
        table.add_row(*cells)
    return table


def ablation_table(frame: pd.DataFrame) -> Table:
    """RMSE and gains per feature set from a frame written by :func:`ablation_frame`."""
    retrains = int(frame["retrains"].iloc[0]) if len(frame) else 0
    table = Table(title=f"Walk-forward RMSE over {retrains} retrain(s)")
    for header in (
        "feature set",
        "RMSE (all)",
        "gain (all)",
        "RMSE (anomalous)",
        "gain (anomalous)",
        "gain s.e.",
        "gain > 0",
    ):
        table.add_column(header, justify="left" if header == "feature set" else "right")
    for r in frame.to_dict(orient="records"):
        table.add_row(
            r["feature_set"],
            _num(r["rmse_all"]),
            _pct(r["gain_all"]),
            _num(r["rmse_anomalous"]),
            _pct(r["gain_anomalous"]),
            _pct(r["gain_stderr"]).lstrip("+"),
            f"{100 * r['positive_fraction']:.0f}%",
        )
    return table


def grid_table(report: CorrelationReport) -> Table:
    """Pearson r of every ``delta_beta{p}_e{k}`` column, one row per ``p``."""
    table = Table(title="Betti increment correlations with the target (Pearson r)")
    table.add_column("p")
    for k in DECILE_LEVELS:
        table.add_column(f"e{k}", justify="right")
    for p in (0, 1):
        cells = [f"beta{p}"]
        for k in DECILE_LEVELS:
            name = increment_column(p, k)
            if name not in report.features:
                cells.append("n/a")
                continue
            entry = report[name]
            cells.append(_num(entry.pearson, 3) + _sig(entry.pearson_significant))
        table.add_row(*cells)
    return table


def strongest(report: CorrelationReport) -> Optional[str]:
    """Column with the largest ``|r|``, if any coefficient is defined."""
    defined = [e for e in report.entries if e.pearson is not None]
    if not defined:
        return None
    return max(defined, key=lambda e: (abs(e.pearson or 0.0), e.feature)).feature


def read_frame(path: Path, columns: Sequence[str]) -> pd.DataFrame:
    return _read(path, columns)


def render_text(tables: Sequence[Table], notes: Sequence[str] = ()) -> str:
    """Plain-text rendering of ``tables`` at a fixed width."""
    console = Console(
        file=io.StringIO(), record=True, width=SUMMARY_WIDTH, color_system=None
    )
    for table in tables:
        console.print(table)
        console.print()
    for note in notes:
        console.print(note, markup=False, highlight=False)
    return console.export_text()
