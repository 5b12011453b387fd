#!/usr/bin/env python3

"""Weighted particle ensembles driven by corrected reverse processes.

A run starts every particle at the all-mask state with uniform weights, then
alternates corrected reverse steps (log-weights += g * dtau) with resampling
until tau = 1 - t_min. Any mask left at the end is filled from the corrected
posterior.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, List, Literal, Sequence, Tuple

import numpy as np
from numpy.typing import ArrayLike
from scipy.special import logsumexp

from maskfk.core.config import settings
from maskfk.core.random import Stream, generator
from maskfk.core.schedule import MaskingSchedule, clamp_time
from maskfk.core.states import Vocabulary
from maskfk.exceptions import (
    ContractError,
    DegenerateWeightsError,
    DomainError,
    ParticleError,
)
from maskfk.services.correctors import (
    CorrectedDenoiser,
    CorrectedStep,
    TargetSpec,
    correct,
    resolve_denoisers,
)
from maskfk.services.denoiser import Denoiser
from maskfk.services.process import Stepping, advance, force_fill

logger = logging.getLogger(__name__)

Scheme = Literal["multinomial", "systematic"]
Trigger = Literal["every_step", "ess_below", "never"]


@dataclass
class WeightedEnsemble:
    """K particles with their log-weights at reverse time tau.

    Attributes:
        particles: Integer array (K, d) of token sequences.
        log_weights: Array (K,) of unnormalized log-weights.
        vocab: Token vocabulary of the particles.
        tau: Current reverse time.
        rng_seed: Base seed every random stream of the run derives from.
    """

    particles: np.ndarray
    log_weights: np.ndarray
    vocab: Vocabulary
    tau: float = 0.0
    rng_seed: int = 0

    def __post_init__(self):
        self.particles = np.asarray(self.particles, dtype=np.int64)
        self.log_weights = np.asarray(self.log_weights, dtype=np.float64)
        if self.particles.ndim != 2 or self.particles.shape[0] < 1:
            raise ContractError("An ensemble needs a (K, d) particle array with K >= 1")
        if self.log_weights.shape != (self.particles.shape[0],):
            raise ContractError("One log-weight per particle is required")
        if np.any(np.isnan(self.log_weights)) or np.any(self.log_weights == np.inf):
            raise ContractError("Log-weights must not be NaN or +inf")

    @classmethod
    def all_masked(
        cls, vocab: Vocabulary, d: int, K: int, *, seed: int = 0
    ) -> "WeightedEnsemble":
        return cls(
            particles=np.full((K, d), vocab.mask_id, dtype=np.int64),
            log_weights=np.zeros(K),
            vocab=vocab,
            rng_seed=seed,
        )

    @property
    def K(self) -> int:
        return self.particles.shape[0]

    @property
    def d(self) -> int:
        return self.particles.shape[1]

    def weights(self) -> np.ndarray:
        return normalized_weights(self.log_weights)


@dataclass(frozen=True)
class ResamplingPolicy:
    """When and how an ensemble is resampled.

    Attributes:
        scheme: ``multinomial`` or ``systematic``.
        trigger: ``every_step``, ``ess_below`` or ``never``.
        threshold: ESS fraction of K below which ``ess_below`` resamples.
        freeze_tail: Fraction of final steps during which resampling is off.
    """

    scheme: Scheme = "multinomial"
    trigger: Trigger = "every_step"
    threshold: float = 0.5
    freeze_tail: float = 0.0

    def __post_init__(self):
        if self.scheme not in ("multinomial", "systematic"):
            raise ContractError(f"Unknown resampling scheme {self.scheme}")
        if self.trigger not in ("every_step", "ess_below", "never"):
            raise ContractError(f"Unknown resampling trigger {self.trigger}")
        if not 0.0 < self.threshold <= 1.0:
            raise ContractError(
                f"ESS threshold must lie in (0, 1], got {self.threshold}"
            )
        if not 0.0 <= self.freeze_tail < 1.0:
            raise ContractError(
                f"freeze_tail must lie in [0, 1), got {self.freeze_tail}"
            )

    def should_resample(
        self, ess_value: float, K: int, step: int, n_steps: int
    ) -> bool:
        if self.trigger == "never":
            return False
        if step >= n_steps * (1.0 - self.freeze_tail):
            return False
        if self.trigger == "ess_below":
            return ess_value < self.threshold * K
        return True


@dataclass(frozen=True)
class TraceRow:
    """Diagnostics of one step of a run."""

    step: int
    tau: float
    ess: float
    mean_g: float
    resampled: bool
    log_normalizer: float


@dataclass
class RunResult:
    ensemble: WeightedEnsemble
    trace: List[TraceRow] = field(default_factory=list)

    @property
    def log_normalizer(self) -> float:
        """Estimate of log(Z_target / Z_base) accumulated over the run."""
        return float(sum(row.log_normalizer for row in self.trace))


def normalized_weights(log_weights: ArrayLike) -> np.ndarray:
    """Normalizes log-weights after max-subtraction.

    Raises:
        DegenerateWeightsError: If every weight is zero.
    """
    log_weights = np.asarray(log_weights, dtype=np.float64)
    if log_weights.size == 0 or not np.any(np.isfinite(log_weights)):
        raise DegenerateWeightsError(
            n_particles=int(log_weights.size),
            max_log_weight=float(np.max(log_weights, initial=-np.inf)),
        )
    return np.exp(log_weights - logsumexp(log_weights))


def ess(log_weights: ArrayLike) -> float:
    """Effective sample size (sum w)^2 / sum w^2, in [1, K].

    Raises:
        DegenerateWeightsError: If every weight is zero.
    """
    weights = normalized_weights(log_weights)
    return float(1.0 / np.sum(weights**2))


def resample_indices(
    rng: np.random.Generator, weights: ArrayLike, scheme: Scheme, n: int | None = None
) -> np.ndarray:
    """Ancestor indices drawn from normalized weights.

    Both schemes give every particle an expected offspring count of
    n * weight; the systematic scheme uses one uniform for all draws.
    """
    weights = np.asarray(weights, dtype=np.float64)
    n = weights.size if n is None else n
    cumulative = np.cumsum(weights)
    cumulative /= cumulative[-1]

    if scheme == "systematic":
        u = (rng.random() + np.arange(n)) / n
    elif scheme == "multinomial":
        u = rng.random(n)
    else:
        raise ContractError(f"Unknown resampling scheme {scheme}")

    index = np.searchsorted(cumulative, u, side="right")
    return np.clip(index, 0, weights.size - 1)


def resample(
    rng: np.random.Generator, ensemble: WeightedEnsemble, policy: ResamplingPolicy
) -> WeightedEnsemble:
    """Replaces particles by ancestors drawn from their weights.

    Log-weights are reset to -log K.

    Raises:
        DegenerateWeightsError: If every weight is zero.
    """
    weights = ensemble.weights()
    ancestors = resample_indices(rng, weights, policy.scheme)
    logger.debug(
        "Resampled %d particles (%s), %d distinct ancestors",
        ensemble.K,
        policy.scheme,
        np.unique(ancestors).size,
    )
    return replace(
        ensemble,
        particles=ensemble.particles[ancestors],
        log_weights=np.full(ensemble.K, -np.log(ensemble.K)),
    )


def snis_estimate(
    ensemble: WeightedEnsemble, phi: "Callable[[np.ndarray], ArrayLike] | ArrayLike"
) -> float:
    """Self-normalized importance sampling estimate of E[phi].

    Args:
        phi: Either a function mapping the (K, d) particle array to K values
            or the K values themselves.
    """
    weights = ensemble.weights()
    values = phi(ensemble.particles) if callable(phi) else phi
    values = np.asarray(values, dtype=np.float64)
    if values.shape != (ensemble.K,):
        raise ContractError(f"phi must give one value per particle, got {values.shape}")
    return float(np.dot(weights, values))


def _locate_failure(
    target: TargetSpec,
    denoisers: Sequence[Denoiser],
    schedule: MaskingSchedule,
    t: float,
    tau: float,
    tokens: np.ndarray,
    offset: int,
    error: Exception,
) -> ParticleError:
    for k, row in enumerate(tokens):
        try:
            correct(target, denoisers, schedule, t, tau, row[None])
        except Exception as cause:
            return ParticleError(offset + k, cause)
    return ParticleError(offset, error)


def _correct_chunk(
    target: TargetSpec,
    denoisers: Sequence[Denoiser],
    schedule: MaskingSchedule,
    t: float,
    tau: float,
    tokens: np.ndarray,
    offset: int,
) -> CorrectedStep:
    try:
        return correct(target, denoisers, schedule, t, tau, tokens)
    except Exception as error:
        raise _locate_failure(
            target, denoisers, schedule, t, tau, tokens, offset, error
        ) from error


def advance_ensemble(
    ensemble: WeightedEnsemble,
    target: TargetSpec,
    denoisers: Sequence[Denoiser],
    schedule: MaskingSchedule,
    dtau: float,
    *,
    step: int = 0,
    threads: int = 1,
    weighted: bool = True,
    stepping: Stepping = "exponential",
) -> Tuple[WeightedEnsemble, np.ndarray]:
    """One corrected reverse step of every particle.

    Returns the advanced ensemble and the weight g of each particle at its
    pre-step state.
    """
    if dtau <= 0:
        raise DomainError(f"Step length must be positive, got {dtau}")

    t = clamp_time(1.0 - ensemble.tau, schedule.t_min)
    tokens = ensemble.particles
    # Drawn for the full ensemble so chunking never changes a trajectory.
    u = generator(ensemble.rng_seed, Stream.propagate, step).random((2,) + tokens.shape)

    splits = np.array_split(np.arange(ensemble.K), max(threads, 1))
    chunks = [c for c in splits if c.size]

    def work(chunk: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        corrected = _correct_chunk(
            target, denoisers, schedule, t, ensemble.tau, tokens[chunk], int(chunk[0])
        )
        moved = advance(
            tokens[chunk],
            corrected.rates,
            dtau,
            u[0, chunk],
            u[1, chunk],
            stepping=stepping,
        )
        return moved, np.broadcast_to(corrected.g, chunk.shape)

    if len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=len(chunks)) as pool:
            results = list(pool.map(work, chunks))
    else:
        results = [work(chunks[0])]

    particles = np.concatenate([moved for moved, _ in results])
    g = np.concatenate([values for _, values in results])
    log_weights = ensemble.log_weights + g * dtau if weighted else ensemble.log_weights
    advanced = replace(
        ensemble,
        particles=particles,
        log_weights=log_weights,
        tau=ensemble.tau + dtau,
    )
    return advanced, g


def propagate(
    ensemble: WeightedEnsemble,
    target: TargetSpec,
    denoisers: Sequence[Denoiser],
    schedule: MaskingSchedule,
    dtau: float,
    *,
    step: int = 0,
    threads: int = 1,
    stepping: Stepping = "exponential",
) -> WeightedEnsemble:
    """Advances each particle by one corrected reverse step.

    Each log-weight grows by g * dtau with g evaluated at the pre-step state.

    Raises:
        ParticleError: If the correction fails for a particle.
    """
    advanced, _ = advance_ensemble(
        ensemble,
        target,
        denoisers,
        schedule,
        dtau,
        step=step,
        threads=threads,
        stepping=stepping,
    )
    return advanced


def time_grid(n_steps: int, t_min: float) -> np.ndarray:
    """Uniform reverse-time grid from 0 to 1 - t_min with n_steps steps."""
    if n_steps < 1:
        raise DomainError(f"n_steps must be at least 1, got {n_steps}")
    return np.linspace(0.0, 1.0 - t_min, n_steps + 1)


def run(
    target: TargetSpec,
    denoisers: Sequence[Denoiser] | None,
    schedule: MaskingSchedule,
    K: int,
    n_steps: int,
    policy: ResamplingPolicy | None = None,
    seed: int = 0,
    *,
    threads: int | None = None,
    weighted: bool = True,
    stepping: Stepping = "exponential",
) -> RunResult:
    """Generates K weighted samples of the target.

    With ``weighted=False`` the corrected rates are simulated but weights and
    resampling are skipped, which gives the guidance (naive) baseline.

    Products and geometric averages may pass ``denoisers=None`` and use
    the denoisers they hold.

    Raises:
        DomainError: If K or n_steps is below 1.
        ContractError: If the denoisers do not fit the target.
        ParticleError: If a denoiser or reward fails for some particle.
    """
    if K < 1:
        raise DomainError(f"K must be at least 1, got {K}")
    denoisers = resolve_denoisers(target, denoisers)

    policy = policy or ResamplingPolicy()
    threads = threads or settings.threads
    taus = time_grid(n_steps, schedule.t_min)
    vocab = denoisers[0].vocab
    ensemble = WeightedEnsemble.all_masked(vocab, denoisers[0].d, K, seed=seed)
    trace: List[TraceRow] = []

    for step in range(n_steps):
        dtau = float(taus[step + 1] - taus[step])
        previous = ensemble.log_weights - logsumexp(ensemble.log_weights)
        ensemble, g = advance_ensemble(
            ensemble,
            target,
            denoisers,
            schedule,
            dtau,
            step=step,
            threads=threads,
            weighted=weighted,
            stepping=stepping,
        )
        ensemble.tau = float(taus[step + 1])
        increment = float(logsumexp(previous + g * dtau)) if weighted else 0.0

        current_ess = ess(ensemble.log_weights)
        resampled = weighted and policy.should_resample(current_ess, K, step, n_steps)
        if resampled:
            ensemble = resample(
                generator(seed, Stream.resample, step), ensemble, policy
            )
        logger.debug("step %d tau=%.4f ess=%.1f", step, ensemble.tau, current_ess)

        trace.append(
            TraceRow(
                step=step,
                tau=ensemble.tau,
                ess=current_ess,
                mean_g=float(np.mean(g)),
                resampled=resampled,
                log_normalizer=increment,
            )
        )

    filler = CorrectedDenoiser(target, denoisers, schedule, ensemble.tau)
    filled = force_fill(
        generator(seed, Stream.force_fill),
        ensemble.particles,
        filler,
        vocab,
        t=clamp_time(1.0 - ensemble.tau, schedule.t_min),
    )
    ensemble = replace(ensemble, particles=filled)

    logger.info(
        "Ran %s target: K=%d, %d steps, %d resampling events, terminal ESS %.1f",
        target.name,
        K,
        n_steps,
        sum(row.resampled for row in trace),
        ess(ensemble.log_weights),
    )
    return RunResult(ensemble=ensemble, trace=trace)
