#!/usr/bin/env python3

"""Shared options, builders and error handling for the CLI commands."""

import functools
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Annotated, List, Optional

import typer
from rich.console import Console

from maskfk.core.config import settings
from maskfk.core.schedule import MaskingSchedule, get_schedule
from maskfk.exceptions import EXIT_OK, ConfigError, MaskFKError
from maskfk.schemas.config import (
    ExperimentConfig,
    GeoAvgTarget,
    ProductTarget,
    RewardTarget,
    load_config,
)
from maskfk.services.correctors import (
    Anneal,
    Base,
    GeoAvg,
    Product,
    Reward,
    TargetSpec,
)
from maskfk.services.data import TabularDataDistribution
from maskfk.services.denoiser import NoisyTabularDenoiser, TabularDenoiser
from maskfk.services.rewards import ConstantBeta, LinearBeta, SeparableReward

logger = logging.getLogger(__name__)

console = Console(stderr=True)

ConfigOption = Annotated[
    Path,
    typer.Option(
        "--config",
        "-c",
        help="JSON experiment document.",
        dir_okay=False,
    ),
]
SeedOption = Annotated[
    Optional[int], typer.Option("--seed", min=0, help="Overrides the run seed.")
]
OutOption = Annotated[
    Optional[Path],
    typer.Option("--out", file_okay=False, help="Overrides the output directory."),
]
ThreadsOption = Annotated[
    Optional[int], typer.Option("--threads", min=1, help="Worker threads.")
]
ToleranceOption = Annotated[
    Optional[float],
    typer.Option("--tolerance", min=0.0, help="Overrides the pass threshold."),
]


@dataclass
class Problem:
    """Everything a run needs, built from a validated document."""

    target: TargetSpec
    denoisers: List[TabularDenoiser]
    data: TabularDataDistribution | None
    schedule: MaskingSchedule


def handle_errors(command):
    """Turns library errors into a message and the matching exit code."""

    @functools.wraps(command)
    def wrapper(*args, **kwargs):
        try:
            code = command(*args, **kwargs)
        except MaskFKError as error:
            console.print(f"[bold red]error[/]: {error.error}")
            logger.debug("Failure detail: %s", error.detail)
            raise typer.Exit(code=error.exit_code) from error
        raise typer.Exit(code=EXIT_OK if code is None else code)

    return wrapper


def prepare(
    config_path: Path,
    task: str,
    *,
    seed: int | None = None,
    threads: int | None = None,
) -> ExperimentConfig:
    """Loads the document and applies the command-line overrides.

    Raises:
        ConfigError: If the document is invalid.
    """
    config = load_config(config_path)
    if config.task != task:
        logger.warning("Config task is %r, running %r", config.task, task)

    updates = {}
    if seed is not None:
        updates["seed"] = seed
    if threads is not None:
        updates["threads"] = threads
    return config.model_copy(update=updates) if updates else config


def output_dir(config: ExperimentConfig, out: Path | None) -> Path:
    path = Path(out) if out is not None else config.output_dir
    if path.exists() and not path.is_dir():
        raise ConfigError(f"Output path {path} is not a directory")
    return path


def resolve_threads(config: ExperimentConfig) -> int:
    return config.threads or settings.threads


def build_denoiser(
    config: ExperimentConfig, data: TabularDataDistribution
) -> TabularDenoiser:
    if config.denoiser.noise_scale > 0:
        return NoisyTabularDenoiser(
            data,
            scale=config.denoiser.noise_scale,
            seed=config.denoiser.noise_seed,
        )
    return TabularDenoiser(data)


def build_problem(config: ExperimentConfig) -> Problem:
    """Instantiates data, denoisers, schedule and target of a document.

    Raises:
        ConfigError: If a section cannot be turned into a valid object.
    """
    schedule = get_schedule(config.schedule, t_min=config.t_min)
    data = config.data.load() if config.data is not None else None
    spec = config.target

    if isinstance(spec, (ProductTarget, GeoAvgTarget)):
        factors = [build_denoiser(config, factor.load()) for factor in spec.factors]
        if isinstance(spec, ProductTarget):
            target = Product(denoisers=factors)
        else:
            target = GeoAvg(denoisers=factors, betas=list(spec.betas))
        return Problem(target=target, denoisers=factors, data=data, schedule=schedule)

    if data is None:
        raise ConfigError(f"A {spec.variant} target needs a data section")
    denoisers = [build_denoiser(config, data)]

    if isinstance(spec, RewardTarget):
        beta = LinearBeta(spec.beta)
        if spec.beta_schedule == "constant":
            beta = ConstantBeta(spec.beta)
        target = Reward(
            reward=SeparableReward(spec.table, data.vocab, data.d),
            beta_schedule=beta,
            scale=spec.scale,
        )
    elif spec.variant == "anneal":
        target = Anneal(spec.beta)
    else:
        target = Base()
    return Problem(target=target, denoisers=denoisers, data=data, schedule=schedule)
