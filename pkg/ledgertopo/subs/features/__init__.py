"""Feature extraction router"""

import click

from ledgertopo.subs.features.all import all_features
from ledgertopo.subs.features.market import market
from ledgertopo.subs.features.motifs import motifs
from ledgertopo.subs.features.topo import topo


@click.group()
def features() -> None:
    """Weekly feature extraction commands"""
    pass


# Add subcommands
features.add_command(all_features)
features.add_command(market)
features.add_command(motifs)
features.add_command(topo)
