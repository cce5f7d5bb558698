"""Options and helpers shared by the pipeline commands"""

from collections.abc import Callable
from pathlib import Path

import click

from ledgertopo.utils.paths import RunPaths


def run_dir_option(f: Callable) -> Callable:
    """Add ``--out/-o``, the run directory every stage reads and writes."""
    return click.option(
        "--out",
        "-o",
        "run_dir",
        type=click.Path(file_okay=False, path_type=Path),
        default=Path("run"),
        show_default=True,
        help="Run directory",
    )(f)


def seed_option(f: Callable) -> Callable:
    return click.option("--seed", type=int, default=None, help="Master seed")(f)


def workers_option(f: Callable) -> Callable:
    return click.option(
        "--workers",
        "-j",
        "max_workers",
        type=click.IntRange(min=1),
        default=None,
        help="Worker processes for per-week and per-seed jobs",
    )(f)


def require_file(path: Path, producer: str) -> Path:
    """Fail with a hint naming the command that writes ``path``."""
    if not path.exists():
        raise click.ClickException(f"{path} not found; run `ltopo {producer}` first")
    return path


def wrote(path: Path) -> None:
    click.echo(f"Wrote {path}")


def run_paths(run_dir: Path) -> RunPaths:
    return RunPaths(run_dir)
