"""Walk-forward prediction command"""

from pathlib import Path
from typing import Optional

import click

from ledgertopo.evaluation import rmse
from ledgertopo.forecaster import TrainedModel, load_model, walk_forward_predict
from ledgertopo.pipeline import model_config, read_feature_rows, split_plan
from ledgertopo.reporting import write_predictions
from ledgertopo.subs.options import require_file, run_dir_option, run_paths, wrote
from ledgertopo.utils.config import context_config


@click.command()
@run_dir_option
@click.option(
    "--stride",
    type=click.IntRange(min=0),
    default=None,
    help="Refit every N evaluation weeks; 0 keeps the initial model",
)
@click.option(
    "--segment",
    type=click.Choice(["test", "validation"]),
    default="test",
    show_default=True,
)
@click.pass_context
def predict(
    ctx: click.Context, run_dir: Path, stride: Optional[int], segment: str
) -> None:
    """Walk-forward predictions of next-week price increments

    The test segment starts from the trained model when one exists; the
    validation segment always starts from a fit on the training weeks.
    """
    _, config = context_config(ctx, refit_stride=stride)
    paths = run_paths(run_dir)
    rows = read_feature_rows(require_file(paths.features, "features all"))
    plan = split_plan(rows, config)
    initial: Optional[TrainedModel] = None
    if segment == "test" and paths.model.exists():
        initial = load_model(paths.model)
    mconfig = initial.config if initial is not None else model_config(config)

    predictions = walk_forward_predict(
        rows, plan, mconfig, config.refit_stride, segment=segment, initial=initial
    )
    scored = {p.week: p.predicted for p in predictions if p.actual is not None}
    actual = {p.week: p.actual for p in predictions if p.actual is not None}
    if scored:
        click.echo(f"{len(scored)} scored week(s), RMSE {rmse(scored, actual):.6f}")
    unscored = [p for p in predictions if p.actual is None]
    for p in unscored:
        click.echo(f"Forecast for week {p.week}: {p.predicted:+.6f}")
    wrote(write_predictions(predictions, paths.predictions))
