#!/usr/bin/env python3

"""The ising command: desk-scale annealing of a Boltzmann distribution."""

import logging

from maskfk.commands import (
    ConfigOption,
    OutOption,
    SeedOption,
    ThreadsOption,
    handle_errors,
    output_dir,
    prepare,
    resolve_threads,
)
from maskfk.core.schedule import get_schedule
from maskfk.schemas.reports import IsingMetrics
from maskfk.services.artifacts import write_csv, write_json
from maskfk.services.ising import (
    BoltzmannSpec,
    IsingModel,
    anneal_experiment,
    beta_sweep,
    exact_boltzmann,
    replicate_experiment,
)

logger = logging.getLogger(__name__)

SAMPLE_COLUMNS = ("config_hash", "energy", "magnetization", "log_weight")
SWEEP_COLUMNS = (
    "beta_mult",
    "beta_target",
    "mean_energy",
    "exact_mean_energy",
    "mean_magnetization",
    "exact_mean_magnetization",
    "terminal_ess",
)


@handle_errors
def ising(
    config: ConfigOption,
    seed: SeedOption = None,
    out: OutOption = None,
    threads: ThreadsOption = None,
):
    """Anneals an exact Ising denoiser from beta_data to beta_data * beta_mult.

    Writes metrics.json and samples.csv, plus sweep.csv when beta_sweep is
    configured. With more than one replicate, metrics.json also carries the
    seed-replicate means and their bootstrap sigmas; samples.csv holds the
    first replicate.
    """
    experiment = prepare(config, "ising", seed=seed, threads=threads)
    target_dir = output_dir(experiment, out)
    section = experiment.ising

    model = IsingModel(L=section.L, J=section.J, h=section.h)
    spec_data = BoltzmannSpec(model=model, beta=section.beta_data)
    # Fails fast with a capacity error before any sampling starts.
    exact_boltzmann(spec_data)

    smc_params = dict(
        K=experiment.K,
        n_steps=experiment.n_steps,
        policy=experiment.resampling.to_policy(),
        seed=experiment.seed,
        threads=resolve_threads(experiment),
        schedule=get_schedule(experiment.schedule, t_min=experiment.t_min),
    )
    run_params = dict(
        reference_samples=section.reference_samples,
        burn_in=section.burn_in,
        thinning=section.thinning,
        include_guidance=section.include_guidance,
        include_base=section.include_base,
        **smc_params,
    )
    summary = None
    if section.replicates > 1:
        first_seed = run_params.pop("seed")
        summary = replicate_experiment(
            spec_data,
            section.beta_mult,
            section.replicates,
            seed=first_seed,
            **run_params,
        )
        report = summary.reports[0]
    else:
        report = anneal_experiment(spec_data, section.beta_mult, **run_params)
    sweep = beta_sweep(spec_data, section.beta_sweep, **smc_params)

    metrics = IsingMetrics.from_report(report, sweep, summary)
    write_json(target_dir / "metrics.json", metrics)
    samples = report.samples
    write_csv(
        target_dir / "samples.csv",
        SAMPLE_COLUMNS,
        (
            [code, repr(e), repr(m), repr(w)]
            for code, e, m, w in zip(*(samples[key] for key in SAMPLE_COLUMNS))
        ),
    )
    if sweep:
        write_csv(
            target_dir / "sweep.csv",
            SWEEP_COLUMNS,
            ([repr(getattr(row, key)) for key in SWEEP_COLUMNS] for row in sweep),
        )

    logger.info(
        "Mean energy %.4f (exact %.4f), within 3 sigma: %s",
        report.mean_energy,
        report.exact_mean_energy,
        metrics.within_3_sigma,
    )
