"""Shapley attribution command"""

from pathlib import Path
from typing import Optional

import click

from ledgertopo.attribution import RANK_STATISTICS, RankTable, rank_features
from ledgertopo.evaluation import derive_seeds
from ledgertopo.pipeline import (
    ShapJob,
    anomalous_test_weeks,
    model_config,
    read_feature_rows,
    shap_job,
    split_plan,
)
from ledgertopo.reporting import attributions_frame, ranks_frame, write_frame
from ledgertopo.subs.options import (
    require_file,
    run_dir_option,
    run_paths,
    seed_option,
    workers_option,
    wrote,
)
from ledgertopo.utils.config import context_config
from ledgertopo.utils.parallel import run_jobs


@click.command()
@run_dir_option
@click.option(
    "--retrains",
    type=click.IntRange(min=1),
    default=None,
    help="Independent retrains",
)
@seed_option
@workers_option
@click.option(
    "--statistic",
    type=click.Choice(RANK_STATISTICS),
    default=None,
    help="Rank by mean |phi| or by mean phi",
)
@click.pass_context
def shap(
    ctx: click.Context,
    run_dir: Path,
    retrains: Optional[int],
    seed: Optional[int],
    max_workers: Optional[int],
    statistic: Optional[str],
) -> None:
    """Exact Shapley attributions and average SHAP ranks

    Every retrain fits a fresh model and explains each test week; ranks are
    averaged over retrains for the anomalous weeks and for all test weeks.
    """
    _, config = context_config(
        ctx,
        retrains=retrains,
        seed=seed,
        max_workers=max_workers,
        rank_statistic=statistic,
    )
    paths = run_paths(run_dir)
    rows = tuple(read_feature_rows(require_file(paths.features, "features all")))
    plan = split_plan(rows, config)
    jobs = [
        ShapJob(rows=rows, plan=plan, config=model_config(config, seed=s))
        for s in derive_seeds(config.seed, config.retrains)
    ]
    reports = dict(run_jobs(shap_job, jobs, config.max_workers))

    explained = sorted(set.intersection(*(set(r) for r in reports.values())))
    overall = rank_features(reports, explained, config.rank_statistic)
    candidates = anomalous_test_weeks(rows, plan, config.anomaly_quantile)
    anomalous_weeks = [w for w in candidates if w in explained]
    anomalous: Optional[RankTable] = None
    if anomalous_weeks:
        anomalous = rank_features(reports, anomalous_weeks, config.rank_statistic)
    else:
        click.echo("No anomalous test weeks; anomalous ranks left empty")

    click.echo(
        f"{len(reports)} retrain(s) x {len(explained)} test week(s), "
        f"{len(anomalous_weeks)} anomalous"
    )
    for feature, rank in overall.ordered():
        click.echo(f"  {feature:<16} {rank:6.2f}")
    wrote(write_frame(attributions_frame(reports), paths.attributions))
    wrote(write_frame(ranks_frame(anomalous, overall), paths.ranks))
