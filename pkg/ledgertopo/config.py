"""Central constants for ledger-topo"""

from ledgertopo import __version__

# Project metadata
PROJECT_NAME = "ledger-topo"
PROJECT_DESCRIPTION = (
    "Weekly topological and market features from ledger transactions, "
    "walk-forward LSTM forecasting and exact Shapley attribution"
)
CLI_NAME = "ledger-topo"
CLI_COMMAND = "ltopo"

# Decile grid of the graph filtration
DECILE_LEVELS = (10, 20, 30, 40, 50, 60, 70, 80, 90, 100)

# Feature matrix columns, in model input order
FEATURE_COLUMNS = (
    "price",
    "price_inc",
    "trade_volume",
    "trade_volume_1%",
    "puell_mult",
    "puell_mult_inc",
    "sent_inc",
    "motif_2_inc",
    "delta_beta0",
)
WEEK_COLUMN = "week"
TARGET_COLUMN = "target"
BASIC_FEATURES = tuple(
    c for c in FEATURE_COLUMNS if c not in ("delta_beta0", "motif_2_inc")
)
FEATURE_SETS = {
    "basic": BASIC_FEATURES,
    "basic+delta_beta0": BASIC_FEATURES + ("delta_beta0",),
    "basic+motif_2_inc": BASIC_FEATURES + ("motif_2_inc",),
    "basic+delta_beta0+motif_2_inc": BASIC_FEATURES + ("motif_2_inc", "delta_beta0"),
}

# Input file headers
TRANSACTION_HEADER = ("timestamp", "sender", "receiver", "amount")
PRICE_HEADER = ("date", "price")
ISSUANCE_HEADER = ("date", "issuance_usd")
TRENDS_HEADER = ("date", "term", "frequency")

# Run directory file names
TRANSACTIONS_FILE = "transactions.csv"
PRICE_FILE = "price.csv"
ISSUANCE_FILE = "issuance.csv"
TRENDS_FILE = "trends.csv"
SCENARIO_FILE = "scenario.json"
MANIFEST_FILE = "manifest.json"
TOPO_FILE = "topo.csv"
MOTIFS_FILE = "motifs.csv"
MARKET_FILE = "market.csv"
FEATURES_FILE = "features.csv"
MODEL_FILE = "model.npz"
PREDICTIONS_FILE = "predictions.csv"
ATTRIBUTIONS_FILE = "attributions.csv"
RANKS_FILE = "ranks.csv"
ABLATION_FILE = "ablation.csv"
SUMMARY_FILE = "summary.txt"
CONFIG_SNAPSHOT_FILE = "config.toml"

__all__ = [
    "PROJECT_NAME",
    "PROJECT_DESCRIPTION",
    "CLI_NAME",
    "CLI_COMMAND",
    "DECILE_LEVELS",
    "FEATURE_COLUMNS",
    "FEATURE_SETS",
    "__version__",
]
