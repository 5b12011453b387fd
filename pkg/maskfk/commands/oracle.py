#!/usr/bin/env python3

"""The oracle command: master-equation check of a configured target."""

import logging
from typing import Annotated

import typer

from maskfk.commands import (
    ConfigOption,
    OutOption,
    ToleranceOption,
    build_problem,
    console,
    handle_errors,
    output_dir,
    prepare,
)
from maskfk.core.config import settings
from maskfk.exceptions import EXIT_CHECK_FAILED, EXIT_OK
from maskfk.schemas.reports import OracleReportOut
from maskfk.services.artifacts import write_json
from maskfk.services.oracle import integrate_weighted_fke

logger = logging.getLogger(__name__)


@handle_errors
def oracle(
    config: ConfigOption,
    out: OutOption = None,
    tolerance: ToleranceOption = None,
    no_weights: Annotated[
        bool,
        typer.Option(
            "--no-weights",
            help="Drop the weight term (negative control, expected to fail).",
        ),
    ] = False,
):
    """Integrates the weighted master equation and compares it with the target.

    Writes oracle_report.json. Exits 0 iff the max TV stays within tolerance.
    """
    experiment = prepare(config, "oracle")
    target_dir = output_dir(experiment, out)
    problem = build_problem(experiment)
    settings_section = experiment.oracle

    limit = (
        tolerance
        if tolerance is not None
        else settings_section.tolerance or settings.oracle_tolerance
    )
    report = integrate_weighted_fke(
        problem.data,
        problem.target,
        problem.schedule,
        settings_section.n_grid,
        include_weights=settings_section.include_weights and not no_weights,
        method=settings_section.method,
    )

    document = OracleReportOut.from_report(report, limit)
    write_json(target_dir / "oracle_report.json", document)

    verdict = "[green]passed[/]" if document.passed else "[red]failed[/]"
    console.print(
        f"{report.target}: max TV {report.max_tv:.3e} "
        f"(tolerance {limit:.1e}) {verdict}"
    )
    return EXIT_OK if document.passed else EXIT_CHECK_FAILED
