"""Transaction ingest command"""

from pathlib import Path
from typing import Optional

import click

from ledgertopo.ingest import write_windows
from ledgertopo.pipeline import load_ledger
from ledgertopo.subs.options import require_file, run_dir_option, run_paths, wrote
from ledgertopo.utils.config import context_config


@click.command()
@click.option(
    "--tx",
    "transactions",
    type=click.Path(exists=True, dir_okay=False, path_type=Path),
    default=None,
    help="Transaction CSV (default: <out>/data/transactions.csv)",
)
@run_dir_option
@click.option("--anchor", default=None, help="Start of week 0 (RFC 3339, UTC offset)")
@click.option("--strict/--lenient", default=None, help="Abort on the first bad line")
@click.pass_context
def ingest(
    ctx: click.Context,
    transactions: Optional[Path],
    run_dir: Path,
    anchor: Optional[str],
    strict: Optional[bool],
) -> None:
    """Parse a transaction CSV and split it into weekly windows

    Writes one CSV per week and a manifest with skipped-line counts under
    <out>/weeks.
    """
    _, config = context_config(ctx, anchor=anchor, strict=strict)
    paths = run_paths(run_dir)
    source = transactions or require_file(paths.transactions, "synth")
    inputs = load_ledger(source, config)
    manifest = write_windows(inputs.windows, run_dir / "weeks", inputs.skipped)
    records = sum(len(w.records) for w in inputs.windows)
    click.echo(f"{records} transactions in {len(inputs.windows)} weeks")
    for reason, count in inputs.skipped.items():
        click.echo(f"  skipped {count} line(s): {reason}")
    wrote(manifest)
