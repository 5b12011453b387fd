#!/usr/bin/env python3

"""This module is the entry for the maskfk command-line interface."""

import logging

import typer
from rich.logging import RichHandler

from maskfk import __version__
from maskfk.commands import console
from maskfk.commands.ising import ising
from maskfk.commands.oracle import oracle
from maskfk.commands.sample import sample
from maskfk.commands.selfcheck import selfcheck
from maskfk.core.config import settings
from maskfk.docs import docs

app = typer.Typer(
    name=settings.app_name,
    help=docs,
    rich_markup_mode="markdown",
    no_args_is_help=True,
    add_completion=False,
)

app.command(name="sample")(sample)
app.command(name="oracle")(oracle)
app.command(name="ising")(ising)
app.command(name="selfcheck")(selfcheck)


def version_callback(value: bool):
    if value:
        console.print(f"{settings.app_name} {__version__}")
        raise typer.Exit()


@app.callback()
def main(
    verbose: bool = typer.Option(False, "--verbose", "-v", help="Debug logging."),
    version: bool = typer.Option(
        False, "--version", callback=version_callback, is_eager=True
    ),
):
    """Installs rich logging before any command runs."""
    logging.basicConfig(
        level=logging.DEBUG if verbose else settings.log_level,
        format="%(message)s",
        datefmt="[%X]",
        handlers=[RichHandler(console=console, rich_tracebacks=True)],
        force=True,
    )
