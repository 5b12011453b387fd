#!/usr/bin/env python3

"""The selfcheck command: the built-in verification suite."""

import time
from typing import Annotated, List

import typer
from rich.table import Table

from maskfk.commands import OutOption, ToleranceOption, console, handle_errors
from maskfk.core.config import settings
from maskfk.exceptions import EXIT_CHECK_FAILED, EXIT_OK
from maskfk.schemas.reports import SelfcheckReport, SelfcheckRow
from maskfk.services.artifacts import write_json
from maskfk.services.checks import CheckResult, full_suite


def render(results: List[CheckResult]) -> Table:
    table = Table(title="maskfk self-check")
    table.add_column("check")
    table.add_column("value", justify="right")
    table.add_column("limit", justify="right")
    table.add_column("result")
    table.add_column("note", style="dim")
    for result in results:
        table.add_row(
            result.name,
            f"{result.value:.3e}",
            f"{result.limit:.1e}",
            "[green]pass[/]" if result.passed else "[bold red]FAIL[/]",
            result.detail,
        )
    return table


@handle_errors
def selfcheck(
    out: OutOption = None,
    tolerance: ToleranceOption = None,
    seed: Annotated[int, typer.Option("--seed", min=0)] = 0,
    inject_sign_flip: Annotated[
        bool, typer.Option("--inject-sign-flip", hidden=True)
    ] = False,
):
    """Runs the reduction, score, oracle and SMC checks on built-in fixtures.

    Exits 1 if any check fails.
    """
    started = time.perf_counter()
    results = full_suite(
        tolerance if tolerance is not None else settings.oracle_tolerance,
        seed=seed,
        weight_scale=-1.0 if inject_sign_flip else 1.0,
    )
    console.print(render(results))

    passed = all(result.passed for result in results)
    if out is not None:
        report = SelfcheckReport(
            success=passed,
            rows=[SelfcheckRow(**vars(result)) for result in results],
            wall_time=time.perf_counter() - started,
        )
        write_json(out / "selfcheck.json", report)
    return EXIT_OK if passed else EXIT_CHECK_FAILED
