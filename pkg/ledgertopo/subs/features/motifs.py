"""Motif census command"""

from pathlib import Path
from typing import Optional

import click

from ledgertopo.pipeline import compute_motifs, load_ledger, motif_frame, write_frame
from ledgertopo.subs.options import (
    require_file,
    run_dir_option,
    run_paths,
    workers_option,
    wrote,
)
from ledgertopo.utils.config import context_config


@click.command()
@run_dir_option
@click.option("--top-fraction", type=float, default=None, help="Fraction of arcs kept")
@click.option("--filter-mode", type=click.Choice(["aggregated", "raw"]), default=None)
@click.option(
    "--motif-mode",
    type=click.Choice(["induced", "noninduced"]),
    default=None,
    help="Count induced or subgraph matches",
)
@workers_option
@click.pass_context
def motifs(
    ctx: click.Context,
    run_dir: Path,
    top_fraction: Optional[float],
    filter_mode: Optional[str],
    motif_mode: Optional[str],
    max_workers: Optional[int],
) -> None:
    """Count motifs 1-3 in every week's top-fraction digraph"""
    _, config = context_config(
        ctx,
        top_fraction=top_fraction,
        top_filter_mode=filter_mode,
        motif_mode=motif_mode,
        max_workers=max_workers,
    )
    paths = run_paths(run_dir)
    inputs = load_ledger(require_file(paths.transactions, "synth"), config)
    censuses = compute_motifs(inputs.windows, config)
    wrote(write_frame(motif_frame(censuses), paths.motifs))
