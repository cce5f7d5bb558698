#!/usr/bin/env python3
"""ledger-topo - Main entry point"""

import sys
from pathlib import Path
from typing import Optional

import click

from ledgertopo import __version__
from ledgertopo.config import CLI_COMMAND, CLI_NAME
from ledgertopo.subs.ablate import ablate
from ledgertopo.subs.features import features
from ledgertopo.subs.ingest import ingest
from ledgertopo.subs.predict import predict
from ledgertopo.subs.report import report
from ledgertopo.subs.run import run
from ledgertopo.subs.shap import shap
from ledgertopo.subs.synth import synth
from ledgertopo.subs.train import train
from ledgertopo.utils.config import config_option, logging_options
from ledgertopo.utils.exceptions import LedgerTopoError
from ledgertopo.utils.logging import LoggingGroup


@click.group(cls=LoggingGroup)
@click.version_option(version=__version__, prog_name=CLI_COMMAND)
@config_option
@logging_options
@click.pass_context
def cli(
    ctx: click.Context,
    config_file: Optional[Path],
    debug: bool,
    verbose: int,
    quiet: bool,
    log_format: Optional[str],
) -> None:
    """ledger-topo - Topological features of ledgers and price forecasting

    Examples:
      ltopo synth -o run            # Generate a synthetic ledger
      ltopo features all -o run     # Betti, motif and market features
      ltopo train -o run            # Fit the LSTM forecaster
      ltopo predict -o run          # Walk-forward test predictions
      ltopo shap -o run             # Shapley attributions and ranks
      ltopo ablate -o run           # Feature-set RMSE comparison
      ltopo report -o run           # Correlation and summary tables

      ltopo run -o run              # Everything above in one go
    """
    ctx.ensure_object(dict)
    ctx.obj["DEBUG"] = debug
    ctx.obj["CONFIG_FILE"] = config_file


# Add a version command that shows version info
@cli.command()
def version() -> None:
    """Show version information"""
    click.echo(f"{CLI_NAME} version: {__version__}")


# Add command groups - sorted alphabetically for consistency
cli.add_command(ablate)
cli.add_command(features)
cli.add_command(ingest)
cli.add_command(predict)
cli.add_command(report)
cli.add_command(run)
cli.add_command(shap)
cli.add_command(synth)
cli.add_command(train)


def main() -> None:
    """Main entry point"""
    try:
        cli(prog_name=CLI_COMMAND, standalone_mode=False)
    except click.exceptions.Abort:
        click.echo("Aborted!", err=True)
        sys.exit(1)
    except click.ClickException as e:
        e.show()
        sys.exit(e.exit_code)
    except LedgerTopoError as e:
        click.echo(f"Error: {e.message}", err=True)
        for suggestion in e.suggestions:
            click.echo(f"  - {suggestion}", err=True)
        sys.exit(1)
    except Exception as e:
        click.echo(f"Error: {e}", err=True)
        sys.exit(1)


if __name__ == "__main__":
    main()
