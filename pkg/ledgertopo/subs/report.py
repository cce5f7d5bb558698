"""Summary report command"""

from pathlib import Path
from typing import Optional

import click
import pandas as pd
from rich.table import Table

from ledgertopo.evaluation import correlation_report, feature_correlations, target_of
from ledgertopo.pipeline import (
    read_feature_rows,
    read_motif_increments,
    read_topology,
    split_plan,
)
from ledgertopo.reporting import (
    ablation_table,
    correlation_frame,
    feature_table,
    grid_table,
    motif_table,
    read_frame,
    render_text,
    strongest,
    write_frame,
)
from ledgertopo.subs.options import require_file, run_dir_option, run_paths, wrote
from ledgertopo.topo_features import increment_grid
from ledgertopo.utils.config import context_config

RANK_COLUMNS = ("feature", "anomalous_rank", "all_rank", "retrains", "statistic")
ABLATION_COLUMNS = (
    "feature_set",
    "rmse_all",
    "gain_all",
    "positive_fraction",
    "retrains",
)


@click.command()
@run_dir_option
@click.option(
    "--alpha",
    type=click.FloatRange(0, 1, min_open=True, max_open=True),
    default=None,
    help="Significance level",
)
@click.pass_context
def report(ctx: click.Context, run_dir: Path, alpha: Optional[float]) -> None:
    """Correlation, SHAP-rank and ablation tables as CSV plus a text summary

    Correlations are computed over the training weeks. SHAP ranks and
    ablation gains are included when ``shap`` and ``ablate`` have run.
    """
    _, config = context_config(ctx, alpha=alpha)
    paths = run_paths(run_dir)
    rows = read_feature_rows(require_file(paths.features, "features all"))
    plan = split_plan(rows, config)
    train_rows = [r for r in rows if r.week in plan.train_weeks]
    target = target_of(train_rows)

    motifs = correlation_report(
        read_motif_increments(require_file(paths.motifs, "features all")),
        target,
        config.alpha,
    )
    features = feature_correlations(train_rows, config.alpha)
    grid_columns = increment_grid(
        read_topology(require_file(paths.topo, "features all"))
    )
    grid = correlation_report(
        {
            name: {w: float(v) for w, v in values.items()}
            for name, values in grid_columns.items()
        },
        target,
        config.alpha,
    )
    for name, result in (
        ("motif_correlations", motifs),
        ("feature_correlations", features),
        ("betti_correlations", grid),
    ):
        wrote(write_frame(correlation_frame(result), paths.report_table(name)))

    ranks: Optional[pd.DataFrame] = None
    if paths.ranks.exists():
        ranks = read_frame(paths.ranks, RANK_COLUMNS)
    tables: list[Table] = [
        motif_table(motifs),
        feature_table(features, ranks),
        grid_table(grid),
    ]
    if paths.ablation.exists():
        tables.append(ablation_table(read_frame(paths.ablation, ABLATION_COLUMNS)))

    notes = [
        f"{len(train_rows)} training week(s); "
        f"* marks significance at alpha={config.alpha}",
        f"Strongest Betti increment: {strongest(grid) or 'n/a'}",
    ]
    if ranks is not None:
        notes.append(f"SHAP ranks by {ranks['statistic'].iloc[0]} (1 = most important)")
    summary = render_text(tables, notes)
    paths.ensure_directory(paths.reports_dir)
    paths.summary.write_text(summary, encoding="utf-8")
    click.echo(summary, nl=False)
    wrote(paths.summary)
