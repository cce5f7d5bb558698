"""Command modules for the ltopo CLI"""

# Note: subcommands are imported individually in main.py.
