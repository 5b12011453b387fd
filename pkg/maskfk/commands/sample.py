#!/usr/bin/env python3

"""The sample command: weighted SMC generation of a configured target."""

import logging
import time
from typing import Dict, List

import numpy as np

from maskfk.commands import (
    ConfigOption,
    OutOption,
    Problem,
    SeedOption,
    ThreadsOption,
    build_problem,
    handle_errors,
    output_dir,
    prepare,
    resolve_threads,
)
from maskfk.core.states import StateEnumeration
from maskfk.exceptions import CapacityError, ConfigError
from maskfk.schemas.config import ExperimentConfig, TokenStatistic
from maskfk.schemas.reports import SampleSummary
from maskfk.services.artifacts import write_json, write_samples, write_trace
from maskfk.services.oracle import tv_distance, unmasked_target
from maskfk.services.smc import RunResult, WeightedEnsemble, ess, run, snis_estimate

logger = logging.getLogger(__name__)


def default_statistics(vocab_size: int, d: int) -> List[TokenStatistic]:
    """P(x[k] = j) for every position and token."""
    return [
        TokenStatistic(position=k, token=j) for k in range(d) for j in range(vocab_size)
    ]


def token_statistics(
    ensemble: WeightedEnsemble, statistics: List[TokenStatistic]
) -> Dict[str, float]:
    """SNIS estimates of the configured token probabilities.

    Raises:
        ConfigError: If a statistic points outside the sequence or vocabulary.
    """
    estimates = {}
    for stat in statistics:
        if stat.position >= ensemble.d or stat.token >= ensemble.vocab.size:
            raise ConfigError(
                f"Statistic {stat.label} lies outside d={ensemble.d}, "
                f"V={ensemble.vocab.size}"
            )
        hits = ensemble.particles[:, stat.position] == stat.token
        estimates[stat.label] = snis_estimate(ensemble, hits)
    return estimates


def weighted_histogram(ensemble: WeightedEnsemble) -> np.ndarray:
    """The SNIS distribution of the samples over the V^d clean sequences."""
    codes = StateEnumeration(ensemble.vocab.size, ensemble.d)
    return np.bincount(
        codes.index(ensemble.particles),
        weights=ensemble.weights(),
        minlength=codes.size,
    )


def tv_to_target(problem: Problem, ensemble: WeightedEnsemble) -> float | None:
    """TV between the weighted samples and the exact target, if enumerable."""
    try:
        exact = unmasked_target(problem.data, problem.target, problem.schedule)
        return tv_distance(weighted_histogram(ensemble), exact)
    except CapacityError as error:
        logger.warning("Skipping the exact TV check: %s", error.error)
        return None


def simulate(config: ExperimentConfig, problem: Problem) -> RunResult:
    return run(
        problem.target,
        problem.denoisers,
        problem.schedule,
        config.K,
        config.n_steps,
        config.resampling.to_policy(),
        config.seed,
        threads=resolve_threads(config),
        weighted=config.weighted,
        stepping=config.stepping,
    )


@handle_errors
def sample(
    config: ConfigOption,
    seed: SeedOption = None,
    out: OutOption = None,
    threads: ThreadsOption = None,
):
    """Draws K weighted samples of the configured target.

    Writes samples.csv, trace.csv and summary.json to the output directory.
    """
    experiment = prepare(config, "sample", seed=seed, threads=threads)
    target_dir = output_dir(experiment, out)
    problem = build_problem(experiment)

    started = time.perf_counter()
    result = simulate(experiment, problem)
    ensemble = result.ensemble

    statistics = experiment.statistics or default_statistics(
        ensemble.vocab.size, ensemble.d
    )
    estimates = token_statistics(ensemble, statistics)
    tv = tv_to_target(problem, ensemble)
    wall_time = time.perf_counter() - started

    summary = SampleSummary(
        target=problem.target.name,
        K=experiment.K,
        n_steps=experiment.n_steps,
        seed=experiment.seed,
        threads=resolve_threads(experiment),
        weighted=experiment.weighted,
        statistics=estimates,
        terminal_ess=ess(ensemble.log_weights),
        log_normalizer=result.log_normalizer,
        resampling_events=sum(row.resampled for row in result.trace),
        tv_to_target=tv,
        wall_time=wall_time,
    )

    write_samples(target_dir / "samples.csv", ensemble)
    write_trace(target_dir / "trace.csv", result.trace)
    write_json(target_dir / "summary.json", summary)
    logger.info("Wrote samples, trace and summary to %s", target_dir)
