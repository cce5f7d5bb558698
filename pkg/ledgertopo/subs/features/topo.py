"""Betti sequence command"""

from pathlib import Path
from typing import Optional

import click

from ledgertopo.graph_core import build_digraph, dump_edge_list, to_undirected
from ledgertopo.pipeline import (
    compute_topology,
    load_ledger,
    topology_frame,
    write_frame,
)
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
@click.option(
    "--threshold-mode",
    type=click.Choice(["aggregated", "raw"]),
    default=None,
    help="Decile thresholds over edge weights or raw amounts",
)
@click.option("--dump-edges", is_flag=True, help="Also write per-week edge lists")
@workers_option
@click.pass_context
def topo(
    ctx: click.Context,
    run_dir: Path,
    threshold_mode: Optional[str],
    dump_edges: bool,
    max_workers: Optional[int],
) -> None:
    """Compute beta0 and beta1 at the ten decile scales of every week"""
    _, config = context_config(
        ctx, threshold_mode=threshold_mode, max_workers=max_workers
    )
    paths = run_paths(run_dir)
    inputs = load_ledger(require_file(paths.transactions, "synth"), config)
    sequences = compute_topology(inputs.windows, config)
    wrote(write_frame(topology_frame(sequences), paths.topo))

    if dump_edges:
        edge_dir = paths.ensure_directory(paths.features_dir / "edges")
        for window in inputs.windows:
            graph = to_undirected(build_digraph(window))
            dump_edge_list(graph, edge_dir / f"week_{window.index:04d}.txt")
        wrote(edge_dir)
