"""Feature-set ablation command"""

from pathlib import Path
from typing import Optional

import click

from ledgertopo.evaluation import ablation
from ledgertopo.pipeline import model_config, read_feature_rows, split_plan
from ledgertopo.reporting import ablation_frame, write_frame
from ledgertopo.subs.options import (
    require_file,
    run_dir_option,
    run_paths,
    seed_option,
    workers_option,
    wrote,
)
from ledgertopo.utils.config import context_config


@click.command()
@run_dir_option
@click.option(
    "--retrains",
    type=click.IntRange(min=1),
    default=None,
    help="Independent retrains",
)
@click.option(
    "--stride",
    type=click.IntRange(min=0),
    default=None,
    help="Refit every N test weeks; 0 keeps the initial model",
)
@seed_option
@workers_option
@click.pass_context
def ablate(
    ctx: click.Context,
    run_dir: Path,
    retrains: Optional[int],
    stride: Optional[int],
    seed: Optional[int],
    max_workers: Optional[int],
) -> None:
    """Compare walk-forward RMSE of the four feature sets

    Gains are relative to the basic set, on all test weeks and on the
    anomalous ones.
    """
    _, config = context_config(
        ctx, retrains=retrains, refit_stride=stride, seed=seed, max_workers=max_workers
    )
    paths = run_paths(run_dir)
    rows = read_feature_rows(require_file(paths.features, "features all"))
    plan = split_plan(rows, config)
    report = ablation(
        rows,
        plan,
        model_config(config),
        retrains=config.retrains,
        master_seed=config.seed,
        stride=config.refit_stride,
        anomaly_quantile=config.anomaly_quantile,
        max_workers=config.max_workers,
    )
    if report.failed:
        click.echo(f"Excluded {len(report.failed)} failed retrain(s)")
    for e in report.entries:
        click.echo(
            f"  {e.feature_set:<32} RMSE {e.rmse_all:.6f}"
            f"  gain {100 * e.gain_all:+.1f}%"
        )
    wrote(write_frame(ablation_frame(report), paths.ablation))
