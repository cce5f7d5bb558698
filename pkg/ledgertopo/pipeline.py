"""File-level orchestration shared by the CLI commands.

Each stage reads the previous stage's files from a run directory and writes
its own; per-week and per-seed work is dispatched through
:func:`ledgertopo.utils.parallel.run_jobs`.
"""

from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import pandas as pd

from ledgertopo.attribution import (
    ShapleyReport,
    detect_anomalous_weeks,
    explain_weeks,
    training_background,
)
from ledgertopo.config import DECILE_LEVELS, FEATURE_COLUMNS, TARGET_COLUMN, WEEK_COLUMN
from ledgertopo.filtration_homology import BettiSequence, week_betti_sequences
from ledgertopo.forecaster.training import ModelConfig, SplitPlan, TrainedModel, train
from ledgertopo.graph_core import (
    build_digraph,
    filter_top_edges,
    filter_top_records,
    to_undirected,
)
from ledgertopo.ingest import (
    WeekCalendar,
    WeekWindow,
    default_anchor,
    parse_anchor,
    partition_weeks,
    read_issuance_series,
    read_price_series,
    read_transactions,
    read_trends_series,
    weekly_values,
)
from ledgertopo.market_features import (
    COLUMN_FIELDS,
    FeatureRow,
    assemble_features,
    market_components,
)
from ledgertopo.motif_census import (
    MOTIF_IDS,
    MotifCensus,
    census_triads,
    motif_increment,
)
from ledgertopo.topo_features import (
    increment_grid,
    left_increment,
    select_betti_feature,
)
from ledgertopo.utils.config import PipelineConfig
from ledgertopo.utils.exceptions import DegenerateWeekError, InputValidationError
from ledgertopo.utils.logging import get_logger
from ledgertopo.utils.parallel import run_jobs
from ledgertopo.utils.paths import RunPaths, ensure_parent

logger = get_logger(__name__)

MARKET_COLUMNS = tuple(
    c for c in FEATURE_COLUMNS if c not in ("motif_2_inc", "delta_beta0")
)


@dataclass
class LedgerInputs:
    """Weekly windows of a transaction file and the calendar they follow."""

    windows: list[WeekWindow]
    calendar: WeekCalendar
    skipped: dict[str, int] = field(default_factory=dict)

    @property
    def weeks(self) -> list[int]:
        return [w.index for w in self.windows]


def load_ledger(path: Path, config: PipelineConfig) -> LedgerInputs:
    """Parse a transaction CSV and cut it into weeks."""
    report = read_transactions(path, strict=config.strict)
    if report.errors:
        logger.warning(
            f"Skipped {len(report.errors)} malformed line(s): "
            + ", ".join(f"{k}={v}" for k, v in report.skipped.items())
        )
    anchor = parse_anchor(config.anchor) if config.anchor else None
    if anchor is None and report.records:
        anchor = default_anchor(report.records)
    if anchor is None:
        raise InputValidationError(f"{path} holds no valid transaction", field="path")
    windows = partition_weeks(report.records, anchor)
    logger.info(f"{len(windows)} week(s) from anchor {anchor.isoformat()}")
    return LedgerInputs(windows, WeekCalendar(anchor), report.skipped)


@dataclass(frozen=True)
class WeekJob:
    window: WeekWindow
    threshold_mode: str = "aggregated"
    top_fraction: float = 0.01
    top_filter_mode: str = "aggregated"
    motif_mode: str = "induced"


def _week_jobs(windows: Sequence[WeekWindow], config: PipelineConfig) -> list[WeekJob]:
    return [
        WeekJob(
            window=w,
            threshold_mode=config.threshold_mode,
            top_fraction=config.top_fraction,
            top_filter_mode=config.top_filter_mode,
            motif_mode=config.motif_mode,
        )
        for w in windows
    ]


def topology_job(job: WeekJob) -> Optional[tuple[BettiSequence, BettiSequence]]:
    """Both Betti sequences of one week, ``None`` for a week without edges."""
    graph = to_undirected(build_digraph(job.window))
    try:
        return week_betti_sequences(graph, job.threshold_mode, job.window)
    except DegenerateWeekError:
        return None


def motif_job(job: WeekJob) -> MotifCensus:
    """Motif census of one week's top-fraction digraph."""
    if job.top_filter_mode == "raw":
        filtered = filter_top_records(job.window, job.top_fraction)
    else:
        filtered = filter_top_edges(build_digraph(job.window), job.top_fraction)
    return census_triads(filtered, job.motif_mode)


def compute_topology(
    windows: Sequence[WeekWindow], config: PipelineConfig
) -> dict[int, tuple[BettiSequence, BettiSequence]]:
    """Betti sequences per week; weeks without edges are left out."""
    results = run_jobs(topology_job, _week_jobs(windows, config), config.max_workers)
    sequences = {}
    for window, result in zip(windows, results):
        if result is None:
            logger.warning(f"Week {window.index} has no edges; no Betti sequence")
            continue
        sequences[window.index] = result
    return sequences


def betti_feature(
    sequences: Mapping[int, tuple[BettiSequence, BettiSequence]],
    k: int = 40,
    p: int = 0,
) -> dict[int, float]:
    """The model's ``delta_beta0`` column from each week's beta_0 left increment.

    Raises:
        InputValidationError: If ``p`` is not 0 or ``k`` is off the decile grid
    """
    column: dict[int, float] = {}
    for week in sorted(sequences):
        if week - 1 not in sequences:
            continue
        current = next(s for s in sequences[week] if s.p == 0)
        previous = next(s for s in sequences[week - 1] if s.p == 0)
        increment = left_increment(current, previous)
        column[week] = float(select_betti_feature(increment, k, p))
    return column


def compute_motifs(
    windows: Sequence[WeekWindow], config: PipelineConfig
) -> dict[int, MotifCensus]:
    results = run_jobs(motif_job, _week_jobs(windows, config), config.max_workers)
    return {c.week: c for c in results}


def motif_columns(censuses: Mapping[int, MotifCensus]) -> dict[str, dict[int, float]]:
    """``motif_{i}_inc`` per week with a census for the week before."""
    columns: dict[str, dict[int, float]] = {f"motif_{m}_inc": {} for m in MOTIF_IDS}
    for week in sorted(censuses):
        if week - 1 in censuses:
            inc = motif_increment(censuses[week], censuses[week - 1])
            for m in MOTIF_IDS:
                columns[f"motif_{m}_inc"][week] = float(inc[m])
    return columns


@dataclass
class FeatureTables:
    """Every intermediate table of the ``features all`` stage."""

    rows: list[FeatureRow]
    sequences: dict[int, tuple[BettiSequence, BettiSequence]]
    censuses: dict[int, MotifCensus]
    grid: dict[str, dict[int, int]]
    motifs: dict[str, dict[int, float]]
    market: dict[str, dict[int, float]]


def build_features(
    inputs: LedgerInputs,
    price_path: Path,
    issuance_path: Path,
    trends_path: Path,
    config: PipelineConfig,
) -> FeatureTables:
    """Compute topology, motifs and market features and assemble the rows."""
    calendar = inputs.calendar
    prices = weekly_values(read_price_series(price_path), calendar)
    issuance = read_issuance_series(issuance_path)
    trends = {
        term: weekly_values(series, calendar)
        for term, series in read_trends_series(trends_path).items()
    }

    logger.info("Computing Betti sequences")
    sequences = compute_topology(inputs.windows, config)
    grid = increment_grid({w: list(pair) for w, pair in sequences.items()})
    logger.info("Computing motif censuses")
    censuses = compute_motifs(inputs.windows, config)
    motifs = motif_columns(censuses)
    logger.info("Computing market features")
    market = market_components(
        inputs.windows,
        prices,
        issuance,
        trends,
        calendar,
        terms=config.sentiment_terms,
        trader_fraction=config.trader_fraction,
        min_history=config.trader_min_history,
        min_active_weeks=config.trader_min_active_weeks,
        puell_window=config.puell_window,
    )

    components: dict[str, Mapping[int, float]] = dict(market)
    components["motif_2_inc"] = motifs["motif_2_inc"]
    components["delta_beta0"] = betti_feature(
        sequences, config.betti_k, config.betti_p
    )
    rows = assemble_features(components, prices, inputs.weeks)
    return FeatureTables(rows, sequences, censuses, grid, motifs, market)


def topology_frame(
    sequences: Mapping[int, tuple[BettiSequence, BettiSequence]],
) -> pd.DataFrame:
    """One row per week and dimension: ``week, p, beta_e10, ..., beta_e100``."""
    records = []
    for week in sorted(sequences):
        for seq in sequences[week]:
            record: dict[str, int] = {WEEK_COLUMN: week, "p": seq.p}
            record.update({f"beta_e{k}": v for k, v in zip(DECILE_LEVELS, seq.values)})
            records.append(record)
    return pd.DataFrame.from_records(
        records, columns=[WEEK_COLUMN, "p", *(f"beta_e{k}" for k in DECILE_LEVELS)]
    )


def motif_frame(censuses: Mapping[int, MotifCensus]) -> pd.DataFrame:
    increments = motif_columns(censuses)
    records = []
    for week in sorted(censuses):
        record: dict[str, Optional[float]] = {WEEK_COLUMN: week}
        for m in MOTIF_IDS:
            record[f"motif_{m}"] = censuses[week][m]
        for name, values in increments.items():
            record[name] = values.get(week)
        records.append(record)
    return pd.DataFrame.from_records(records)


def market_frame(
    market: Mapping[str, Mapping[int, float]], weeks: Sequence[int]
) -> pd.DataFrame:
    """Market columns per week; undefined values stay empty."""
    frame = pd.DataFrame({WEEK_COLUMN: list(weeks)})
    for column in MARKET_COLUMNS:
        frame[column] = [market.get(column, {}).get(w) for w in weeks]
    return frame


def features_frame(rows: Sequence[FeatureRow]) -> pd.DataFrame:
    records = []
    for row in rows:
        record: dict[str, Optional[float]] = {WEEK_COLUMN: row.week}
        record.update(zip(FEATURE_COLUMNS, row.values()))
        record[TARGET_COLUMN] = row.target
        records.append(record)
    return pd.DataFrame.from_records(
        records, columns=[WEEK_COLUMN, *FEATURE_COLUMNS, TARGET_COLUMN]
    )


def write_frame(frame: pd.DataFrame, path: Path) -> Path:
    ensure_parent(path)
    frame.to_csv(path, index=False, lineterminator="\n")
    return path


def read_feature_rows(path: Path) -> list[FeatureRow]:
    """Rows of a ``features.csv`` written by :func:`features_frame`."""
    frame = pd.read_csv(path, float_precision="round_trip")
    required = (WEEK_COLUMN, *FEATURE_COLUMNS, TARGET_COLUMN)
    missing = [c for c in required if c not in frame.columns]
    if missing:
        raise InputValidationError(
            f"{path} lacks column(s) {', '.join(missing)}",
            field="header",
            value=list(frame.columns),
        )
    rows = []
    for record in frame.to_dict(orient="records"):
        target = record[TARGET_COLUMN]
        rows.append(
            FeatureRow(
                week=int(record[WEEK_COLUMN]),
                target=None if pd.isna(target) else float(target),
                **{COLUMN_FIELDS[c]: float(record[c]) for c in FEATURE_COLUMNS},
            )
        )
    return rows


def write_feature_tables(
    tables: FeatureTables, weeks: Sequence[int], paths: RunPaths
) -> None:
    write_frame(topology_frame(tables.sequences), paths.topo)
    write_frame(motif_frame(tables.censuses), paths.motifs)
    write_frame(market_frame(tables.market, weeks), paths.market)
    write_frame(features_frame(tables.rows), paths.features)


def split_plan(rows: Sequence[FeatureRow], config: PipelineConfig) -> SplitPlan:
    return SplitPlan.from_rows(rows, config.train_fraction, config.val_fraction)


def model_config(
    config: PipelineConfig,
    features: Sequence[str] = FEATURE_COLUMNS,
    seed: Optional[int] = None,
) -> ModelConfig:
    return ModelConfig.from_pipeline(config, len(features), seed)


def anomalous_test_weeks(
    rows: Sequence[FeatureRow], plan: SplitPlan, quantile: float
) -> tuple[int, ...]:
    actual = {
        r.week: r.target
        for r in rows
        if r.week in plan.test_weeks and r.target is not None
    }
    return detect_anomalous_weeks(actual, quantile)


@dataclass(frozen=True)
class ShapJob:
    rows: tuple[FeatureRow, ...]
    plan: SplitPlan
    config: ModelConfig


def shap_job(job: ShapJob) -> tuple[int, dict[int, ShapleyReport]]:
    """Train one retrain and attribute every test week against training windows."""
    model = train(job.rows, job.plan, job.config)
    return job.config.seed, attribute_model(model, job.rows, job.plan)


def attribute_model(
    model: TrainedModel, rows: Sequence[FeatureRow], plan: SplitPlan
) -> dict[int, ShapleyReport]:
    background = training_background(model, rows, plan)
    return explain_weeks(model, rows, plan.test_weeks, background)


def read_topology(path: Path) -> dict[int, list[BettiSequence]]:
    """Betti sequences of a ``topo.csv`` written by :func:`topology_frame`."""
    columns = [f"beta_e{k}" for k in DECILE_LEVELS]
    frame = pd.read_csv(path)
    missing = [c for c in (WEEK_COLUMN, "p", *columns) if c not in frame.columns]
    if missing:
        raise InputValidationError(
            f"{path} lacks column(s) {', '.join(missing)}",
            field="header",
            value=list(frame.columns),
        )
    sequences: dict[int, list[BettiSequence]] = {}
    for record in frame.to_dict(orient="records"):
        week = int(record[WEEK_COLUMN])
        values = tuple(int(record[c]) for c in columns)
        sequence = BettiSequence(week, int(record["p"]), values)
        sequences.setdefault(week, []).append(sequence)
    return sequences


def read_motif_increments(path: Path) -> dict[str, dict[int, float]]:
    """``motif_{i}_inc`` columns of a ``motifs.csv``; empty cells are skipped."""
    frame = pd.read_csv(path, float_precision="round_trip")
    names = [f"motif_{m}_inc" for m in MOTIF_IDS]
    missing = [c for c in (WEEK_COLUMN, *names) if c not in frame.columns]
    if missing:
        raise InputValidationError(
            f"{path} lacks column(s) {', '.join(missing)}",
            field="header",
            value=list(frame.columns),
        )
    return {
        name: {
            int(w): float(v)
            for w, v in zip(frame[WEEK_COLUMN], frame[name])
            if not pd.isna(v)
        }
        for name in names
    }
