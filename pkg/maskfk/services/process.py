#!/usr/bin/env python3

"""Forward (masking) and reverse (demasking) masked-diffusion processes.

Rates are kept in factorized form: for each coordinate k and non-mask token
j, the rate of the jump that sets position k to j. Arrays carry any number
of leading batch axes followed by (d, V); rows of unmasked positions are
zero, so a whole particle ensemble is processed with one call.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Literal

import numpy as np
from numpy.typing import ArrayLike

from maskfk.core.schedule import MaskingSchedule, alpha_ratio
from maskfk.core.states import SequenceState, Vocabulary, as_tokens, is_masked
from maskfk.exceptions import ContractError, DomainError

if TYPE_CHECKING:
    from maskfk.services.denoiser import Denoiser

Stepping = Literal["exponential", "euler"]


@dataclass(frozen=True)
class RatioTable:
    """Probability ratios p_t(x with k set to j) / p_t(x) per masked k.

    Attributes:
        ratios: Array (..., d, V); zero on unmasked rows.
        masked: Boolean array (..., d) of masked coordinates.
    """

    ratios: np.ndarray
    masked: np.ndarray

    def __post_init__(self):
        if self.ratios.shape[:-1] != self.masked.shape:
            raise ContractError(
                f"Ratio rows {self.ratios.shape[:-1]} do not match the mask "
                f"pattern {self.masked.shape}"
            )
        if not np.all(np.isfinite(self.ratios)) or np.any(self.ratios < 0):
            raise ContractError("Ratios must be finite and nonnegative")

    @property
    def positions(self) -> list:
        """Masked coordinates of a single (unbatched) table."""
        return [int(k) for k in np.flatnonzero(self.masked)]

    def at(self, position: int) -> np.ndarray:
        return self.ratios[..., position, :]


@dataclass(frozen=True)
class ReverseRates:
    """Jump rates B(x -> x with position k set to j) per masked k.

    Attributes:
        rates: Array (..., d, V); zero on unmasked rows.
        masked: Boolean array (..., d).
    """

    rates: np.ndarray
    masked: np.ndarray

    @property
    def hazard(self) -> np.ndarray:
        """Per-position total rate lambda_k, shape (..., d)."""
        return self.rates.sum(axis=-1)

    @property
    def total_hazard(self) -> np.ndarray:
        return self.hazard.sum(axis=-1)

    @property
    def positions(self) -> list:
        return [int(k) for k in np.flatnonzero(self.masked)]

    def at(self, position: int) -> np.ndarray:
        return self.rates[..., position, :]


def forward_transition_prob(
    schedule: MaskingSchedule, s: float, t: float, i: int, j: int, vocab: Vocabulary
) -> float:
    """p(x_s = j | x_t = i) of the masking process, for t <= s.

    Raises:
        DomainError: If t > s.
    """
    if t > s:
        raise DomainError(f"Forward kernel needs t <= s, got s={s}, t={t}")

    m = vocab.mask_id
    if i == m:
        return float(j == m)

    survive = alpha_ratio(schedule, s, t)
    return (1.0 - survive) * (j == m) + survive * (i == j)


def forward_kernel(
    schedule: MaskingSchedule, s: float, t: float, vocab: Vocabulary
) -> np.ndarray:
    """The full (V+1) x (V+1) forward transition matrix from t to s."""
    n = vocab.n_symbols
    return np.array(
        [
            [forward_transition_prob(schedule, s, t, i, j, vocab) for j in range(n)]
            for i in range(n)
        ]
    )


def forward_rate(
    schedule: MaskingSchedule, t: float, i: int, j: int, vocab: Vocabulary
) -> float:
    """A_t(i, j) = (1/alpha_t)(d alpha_t/dt)(delta_ij - delta_mj).

    The same expression yields the diagonal, so rows sum to zero.
    """
    m = vocab.mask_id
    return schedule.log_rate_factor(t) * (float(i == j) - float(j == m))


def forward_generator(schedule: MaskingSchedule, t: float, vocab: Vocabulary):
    """The single-coordinate forward rate matrix at time t."""
    n = vocab.n_symbols
    return np.array(
        [[forward_rate(schedule, t, i, j, vocab) for j in range(n)] for i in range(n)]
    )


def _check_time(schedule: MaskingSchedule, t: float):
    if not (schedule.t_min <= t < 1.0):
        raise DomainError(
            f"Reverse-time quantities need t in [{schedule.t_min}, 1), got {t}"
        )


def score_from_denoiser(
    schedule: MaskingSchedule, t: float, posterior: ArrayLike
) -> np.ndarray:
    """Turns demasking probabilities into ratios p_t(j)/p_t(m).

    For j != m the ratio is alpha_t/(1 - alpha_t) * p(x_0 = j | x_t = m).

    Raises:
        DomainError: If t lies outside [t_min, 1).
    """
    _check_time(schedule, t)
    posterior = np.asarray(posterior, dtype=np.float64)
    if np.any(posterior < 0) or not np.all(np.isfinite(posterior)):
        raise ContractError("Posterior entries must be finite and nonnegative")
    return schedule.signal_to_mask(t) * posterior


def reverse_rates(
    schedule: MaskingSchedule,
    t: float,
    state: "SequenceState | ArrayLike",
    ratios: RatioTable,
    vocab: Vocabulary,
) -> ReverseRates:
    """Base reverse-time rates -(1/alpha_t)(d alpha_t/dt) * ratio per masked k.

    Raises:
        ContractError: If the ratios do not cover exactly the masked
            positions of the state.
    """
    masked = is_masked(as_tokens(state), vocab)
    check_coverage(masked, ratios.masked)
    factor = schedule.log_rate_factor(t)
    return ReverseRates(rates=-factor * ratios.ratios, masked=masked)


def check_coverage(masked: np.ndarray, covered: np.ndarray):
    if masked.shape != covered.shape or np.any(masked != covered):
        raise ContractError("Ratios must cover exactly the masked positions")


def unmask_probability(hazard: np.ndarray, dtau: float, stepping: Stepping):
    """Probability that a position with total rate ``hazard`` fires in dtau."""
    if stepping == "euler":
        return np.minimum(hazard * dtau, 1.0)
    return -np.expm1(-hazard * dtau)


def categorical(weights: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Inverse-CDF draw along the last axis from unnormalized weights."""
    cumulative = np.cumsum(weights, axis=-1)
    target = u * cumulative[..., -1]
    index = np.sum(cumulative <= target[..., None], axis=-1)
    return np.minimum(index, weights.shape[-1] - 1)


def advance(
    tokens: np.ndarray,
    rates: ReverseRates,
    dtau: float,
    u_fire: np.ndarray,
    u_token: np.ndarray,
    *,
    stepping: Stepping = "exponential",
) -> np.ndarray:
    """Applies one reverse step given pre-drawn uniforms.

    Args:
        tokens: Integer array (..., d).
        rates: Rates matching the tokens.
        dtau: Step length.
        u_fire: Uniforms (..., d) deciding which positions unmask.
        u_token: Uniforms (..., d) choosing the token of a firing position.
    """
    if dtau <= 0:
        raise DomainError(f"Step length must be positive, got {dtau}")

    hazard = rates.hazard
    fire = rates.masked & (u_fire < unmask_probability(hazard, dtau, stepping))
    fire &= hazard > 0
    chosen = categorical(rates.rates, u_token)
    return np.where(fire, chosen, tokens)


def reverse_step(
    rng: np.random.Generator,
    state: "SequenceState | ArrayLike",
    rates: ReverseRates,
    dtau: float,
    *,
    stepping: Stepping = "exponential",
) -> np.ndarray:
    """Advances a state (or a batch) by one reverse-time step.

    Each masked position k unmasks independently with probability
    1 - exp(-lambda_k dtau) and then takes token j with probability
    proportional to rate_k[j]. Unmasked positions never change.
    """
    tokens = as_tokens(state)
    u = rng.random((2,) + tokens.shape)
    return advance(tokens, rates, dtau, u[0], u[1], stepping=stepping)


def force_fill(
    rng: np.random.Generator,
    state: "SequenceState | ArrayLike",
    denoiser: "Denoiser",
    vocab: Vocabulary,
    *,
    t: float,
) -> np.ndarray:
    """Fills every remaining mask from the denoiser's posterior.

    Positions are filled one at a time in ascending order, re-querying the
    denoiser after each fill so later positions condition on earlier ones.
    Pass a corrected denoiser to fill from the corrected posterior.
    """
    tokens = as_tokens(state).copy()
    batch = tokens.reshape(-1, tokens.shape[-1])
    while True:
        masked = is_masked(batch, vocab)
        rows = np.flatnonzero(masked.any(axis=-1))
        if rows.size == 0:
            break

        pending = batch[rows]
        position = np.argmax(masked[rows], axis=-1)
        probs = denoiser.posterior(pending, t)[np.arange(rows.size), position]
        batch[rows, position] = categorical(probs, rng.random(rows.size))

    return batch.reshape(tokens.shape)
