"""End-to-end pipeline command"""

from pathlib import Path
from typing import Optional

import click

from ledgertopo.subs.ablate import ablate
from ledgertopo.subs.features.all import all_features
from ledgertopo.subs.options import run_dir_option, seed_option, workers_option
from ledgertopo.subs.predict import predict
from ledgertopo.subs.report import report
from ledgertopo.subs.shap import shap
from ledgertopo.subs.synth import synth
from ledgertopo.subs.train import train


@click.command()
@run_dir_option
@seed_option
@click.option(
    "--synth/--no-synth",
    "generate",
    default=True,
    show_default=True,
    help="Generate synthetic inputs first; otherwise <out>/data must exist",
)
@click.option("--weeks", type=click.IntRange(min=2), default=208, show_default=True)
@click.option("--edges", type=click.IntRange(min=50), default=1200, show_default=True)
@click.option(
    "--coupling",
    type=click.FloatRange(min=0),
    default=0.9,
    show_default=True,
    help="Strength of the planted signal",
)
@click.option("--noise", type=click.FloatRange(min=0), default=0.1, show_default=True)
@click.option("--retrains", type=click.IntRange(min=1), default=None)
@click.option("--epochs", type=click.IntRange(min=1), default=None)
@workers_option
@click.pass_context
def run(
    ctx: click.Context,
    run_dir: Path,
    seed: Optional[int],
    generate: bool,
    weeks: int,
    edges: int,
    coupling: float,
    noise: float,
    retrains: Optional[int],
    epochs: Optional[int],
    max_workers: Optional[int],
) -> None:
    """Run synth, features, train, predict, shap, ablate and report in turn

    Examples:
      ltopo run -o run                       # full synthetic pipeline
      ltopo run -o small --weeks 60 --edges 200 --retrains 2
      ltopo -c ltopo.toml run --no-synth -o real
    """
    root = ctx.find_root()
    root.ensure_object(dict)
    root.obj["OVERRIDES"] = {
        k: v
        for k, v in (
            ("seed", seed),
            ("retrains", retrains),
            ("epochs", epochs),
            ("max_workers", max_workers),
        )
        if v is not None
    }
    if generate:
        click.echo("== synth")
        ctx.invoke(
            synth,
            run_dir=run_dir,
            weeks=weeks,
            edges=edges,
            coupling=coupling,
            noise=noise,
        )
    click.echo("== features all")
    ctx.invoke(all_features, run_dir=run_dir)
    click.echo("== train")
    ctx.invoke(train, run_dir=run_dir)
    click.echo("== predict")
    ctx.invoke(predict, run_dir=run_dir)
    click.echo("== shap")
    ctx.invoke(shap, run_dir=run_dir)
    click.echo("== ablate")
    ctx.invoke(ablate, run_dir=run_dir)
    click.echo("== report")
    ctx.invoke(report, run_dir=run_dir)
