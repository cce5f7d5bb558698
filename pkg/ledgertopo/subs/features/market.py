"""Market feature command"""

from pathlib import Path

import click

from ledgertopo.ingest import (
    read_issuance_series,
    read_price_series,
    read_trends_series,
    weekly_values,
)
from ledgertopo.market_features import market_components
from ledgertopo.pipeline import load_ledger, market_frame, write_frame
from ledgertopo.subs.options import require_file, run_dir_option, run_paths, wrote
from ledgertopo.utils.config import context_config


@click.command()
@run_dir_option
@click.pass_context
def market(ctx: click.Context, run_dir: Path) -> None:
    """Compute price, volume, top-trader, Puell and sentiment features"""
    _, config = context_config(ctx)
    paths = run_paths(run_dir)
    inputs = load_ledger(require_file(paths.transactions, "synth"), config)
    calendar = inputs.calendar
    components = market_components(
        inputs.windows,
        weekly_values(read_price_series(require_file(paths.price, "synth")), calendar),
        read_issuance_series(require_file(paths.issuance, "synth")),
        {
            term: weekly_values(series, calendar)
            for term, series in read_trends_series(
                require_file(paths.trends, "synth")
            ).items()
        },
        calendar,
        terms=config.sentiment_terms,
        trader_fraction=config.trader_fraction,
        min_history=config.trader_min_history,
        min_active_weeks=config.trader_min_active_weeks,
        puell_window=config.puell_window,
    )
    wrote(write_frame(market_frame(components, inputs.weeks), paths.market))
