"""Model training command"""

from pathlib import Path
from typing import Optional

import click

from ledgertopo.forecaster import save_model
from ledgertopo.forecaster import train as fit_model
from ledgertopo.pipeline import model_config, read_feature_rows, split_plan
from ledgertopo.subs.options import require_file, run_dir_option, run_paths, wrote
from ledgertopo.utils.config import context_config


@click.command()
@run_dir_option
@click.option("--seed", type=int, default=None, help="Initialization seed")
@click.option("--epochs", type=click.IntRange(min=1), default=None)
@click.option("--hidden-size", type=click.IntRange(min=1), default=None)
@click.option("--layers", type=click.IntRange(min=1), default=None)
@click.option(
    "--window", type=click.IntRange(min=1), default=None, help="Weeks per input"
)
@click.option("--learning-rate", type=float, default=None)
@click.pass_context
def train(
    ctx: click.Context,
    run_dir: Path,
    seed: Optional[int],
    epochs: Optional[int],
    hidden_size: Optional[int],
    layers: Optional[int],
    window: Optional[int],
    learning_rate: Optional[float],
) -> None:
    """Train the LSTM forecaster on the training weeks

    Early stopping uses the validation weeks. The model and a config
    snapshot are written to the run directory.
    """
    manager, config = context_config(
        ctx,
        seed=seed,
        epochs=epochs,
        hidden_size=hidden_size,
        layers=layers,
        window=window,
        learning_rate=learning_rate,
    )
    paths = run_paths(run_dir)
    rows = read_feature_rows(require_file(paths.features, "features all"))
    plan = split_plan(rows, config)
    model = fit_model(rows, plan, model_config(config))
    model.meta["split"] = plan.to_dict()

    click.echo(
        f"Split: {len(plan.train_weeks)} train / {len(plan.val_weeks)} validation / "
        f"{len(plan.test_weeks)} test / {len(plan.forecast_weeks)} forecast weeks"
    )
    click.echo(
        f"Trained {model.epochs_run} epoch(s), "
        f"best validation MSE {model.best_val_loss}"
    )
    dropped = sorted(set(model.feature_names) - set(model.kept_features))
    if dropped:
        click.echo(f"Dropped zero-variance features: {', '.join(dropped)}")
    wrote(save_model(model, paths.model))
    manager.save(paths.config_snapshot)
