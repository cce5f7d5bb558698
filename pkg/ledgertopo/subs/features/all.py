"""Full feature matrix command"""

from pathlib import Path
from typing import Optional

import click

from ledgertopo.pipeline import build_features, load_ledger, write_feature_tables
from ledgertopo.subs.options import (
    require_file,
    run_dir_option,
    run_paths,
    workers_option,
    wrote,
)
from ledgertopo.utils.config import context_config


@click.command("all")
@run_dir_option
@workers_option
@click.pass_context
def all_features(ctx: click.Context, run_dir: Path, max_workers: Optional[int]) -> None:
    """Compute every feature and assemble the weekly feature matrix

    Writes topo.csv, motifs.csv, market.csv and features.csv under
    <out>/features.
    """
    _, config = context_config(ctx, max_workers=max_workers)
    paths = run_paths(run_dir)
    inputs = load_ledger(require_file(paths.transactions, "synth"), config)
    tables = build_features(
        inputs,
        require_file(paths.price, "synth"),
        require_file(paths.issuance, "synth"),
        require_file(paths.trends, "synth"),
        config,
    )
    write_feature_tables(tables, inputs.weeks, paths)
    rows = tables.rows
    click.echo(f"{len(rows)} feature rows, weeks {rows[0].week}-{rows[-1].week}")
    wrote(paths.features_dir)
