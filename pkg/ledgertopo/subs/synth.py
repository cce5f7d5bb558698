"""Synthetic data command"""

from pathlib import Path
from typing import Optional

import click

from ledgertopo.subs.options import run_dir_option, run_paths, wrote
from ledgertopo.synthetic import SyntheticScenario, write_scenario
from ledgertopo.utils.config import context_config


@click.command()
@run_dir_option
@click.option(
    "--seed", type=int, default=None, help="Generator seed (default: config seed)"
)
@click.option("--weeks", type=click.IntRange(min=2), default=208, show_default=True)
@click.option(
    "--edges",
    type=click.IntRange(min=50),
    default=1200,
    show_default=True,
    help="Wallet pairs per week",
)
@click.option(
    "--coupling",
    type=click.FloatRange(min=0),
    default=0.9,
    show_default=True,
    help="Strength of the planted signal",
)
@click.option("--noise", type=click.FloatRange(min=0), default=0.1, show_default=True)
@click.option("--wallets", type=click.IntRange(min=10), default=3000, show_default=True)
@click.pass_context
def synth(
    ctx: click.Context,
    run_dir: Path,
    seed: Optional[int],
    weeks: int,
    edges: int,
    coupling: float,
    noise: float,
    wallets: int,
) -> None:
    """Generate a synthetic ledger with planted topology-price coupling

    Writes transactions, price, issuance and trends CSVs plus scenario.json
    under <out>/data.
    """
    _, config = context_config(ctx)
    scenario = SyntheticScenario(
        seed=config.seed if seed is None else seed,
        weeks=weeks,
        edges_per_week=edges,
        coupling=coupling,
        noise=noise,
        wallets=wallets,
        top_fraction=config.top_fraction,
        terms=tuple(config.sentiment_terms),
    )
    paths = run_paths(run_dir)
    data = write_scenario(scenario, paths)
    click.echo(
        f"{len(data.transactions)} transactions over {weeks} weeks "
        f"(seed {scenario.seed}, coupling {coupling}, noise {noise})"
    )
    wrote(paths.data_dir)
