#!/usr/bin/env python3

"""Corrected reverse-time rates and Feynman-Kac weights.

Every corrector turns the probability ratios of one or more masked-diffusion
denoisers into the rates of a new reverse process plus the weight g that
keeps its marginals on the requested target. All inputs may carry leading
batch axes; g is summed over the masked positions of each state.

Sign convention: ``factor = (1/alpha_t)(d alpha_t/dt)`` is negative for a
decreasing schedule, so base rates are ``-factor * ratio``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Protocol, Sequence, Union

import numpy as np
from numpy.typing import ArrayLike

from maskfk.core.schedule import MaskingSchedule
from maskfk.core.states import SequenceState, Vocabulary, as_tokens, neighbours
from maskfk.exceptions import ContractError
from maskfk.services.denoiser import Denoiser, denoiser_ratios
from maskfk.services.process import RatioTable, ReverseRates, check_coverage
from maskfk.services.rewards import RewardFn, evaluate_reward

BETA_SUM_TOLERANCE = 1e-12


class BetaSchedule(Protocol):
    def __call__(self, tau: float) -> float: ...

    def derivative(self, tau: float) -> float: ...


@dataclass(frozen=True)
class Base:
    """The uncorrected reverse process."""

    name = "base"


@dataclass(frozen=True)
class Anneal:
    """Target proportional to p_t ** beta."""

    beta: float
    name = "anneal"

    def __post_init__(self):
        if not self.beta > 0:
            raise ContractError(f"Anneal beta must be positive, got {self.beta}")


@dataclass(frozen=True)
class Product:
    """Target proportional to the product of the factors' marginals."""

    denoisers: List[Denoiser] = field(default_factory=list)
    name = "product"

    def __post_init__(self):
        if len(self.denoisers) < 2:
            raise ContractError("A product needs at least two denoisers")


@dataclass(frozen=True)
class GeoAvg:
    """Target proportional to prod_n p_t^n ** beta_n with sum(beta_n) = 1."""

    denoisers: List[Denoiser] = field(default_factory=list)
    betas: List[float] = field(default_factory=list)
    name = "geo_avg"

    def __post_init__(self):
        if len(self.denoisers) != len(self.betas) or not self.betas:
            raise ContractError("Geometric averages need one beta per denoiser")
        check_betas(self.betas)


@dataclass(frozen=True)
class Reward:
    """Target proportional to p_t * exp(scale * beta_tau * r)."""

    reward: RewardFn
    beta_schedule: BetaSchedule
    scale: float = 1.0
    name = "reward"

    def beta(self, tau: float) -> float:
        return self.scale * self.beta_schedule(tau)

    def dbeta(self, tau: float) -> float:
        return self.scale * self.beta_schedule.derivative(tau)


TargetSpec = Union[Base, Anneal, Product, GeoAvg, Reward]


@dataclass(frozen=True)
class CorrectedStep:
    """Corrected rates plus the weight g at the current state(s)."""

    rates: ReverseRates
    g: np.ndarray


def check_betas(betas: Sequence[float]):
    if abs(float(np.sum(betas)) - 1.0) > BETA_SUM_TOLERANCE:
        raise ContractError(f"Geometric-average betas must sum to 1, got {betas}")


def _prepare(
    schedule: MaskingSchedule,
    t: float,
    state: "SequenceState | ArrayLike",
    *tables: RatioTable,
):
    tokens = as_tokens(state)
    mask_id = tables[0].ratios.shape[-1]
    masked = tokens == mask_id
    for table in tables:
        check_coverage(masked, table.masked)
    return schedule.log_rate_factor(t), masked, tokens


def _per_state(values: np.ndarray) -> np.ndarray:
    return values.sum(axis=(-2, -1))


def base_step(
    schedule: MaskingSchedule,
    t: float,
    state: "SequenceState | ArrayLike",
    ratios: RatioTable,
) -> CorrectedStep:
    """The uncorrected process: base rates and g = 0."""
    factor, masked, _ = _prepare(schedule, t, state, ratios)
    rates = -factor * ratios.ratios
    return CorrectedStep(
        rates=ReverseRates(rates=rates, masked=masked),
        g=np.zeros(masked.shape[:-1]),
    )


def anneal_step(
    schedule: MaskingSchedule,
    t: float,
    state: "SequenceState | ArrayLike",
    ratios: RatioTable,
    beta: float,
) -> CorrectedStep:
    """Rates for p_t ** beta: the ratios raised to beta, scaled by beta.

    rate_k[j] = -beta * factor * r_k[j] ** beta
    g = beta * factor * sum_k sum_j (r_k[j] - r_k[j] ** beta)

    For a single position under alpha = 1 - t with posterior p this is
    beta * (1 - t) ** (beta - 1) / t ** beta * sum_j p[j] ** beta - beta / t,
    where sum_j p[j] ** beta is the unnormalized softmax of beta * log p.
    """
    factor, masked, _ = _prepare(schedule, t, state, ratios)
    r = ratios.ratios
    powered = r**beta
    rates = -beta * factor * powered
    g = beta * factor * _per_state(r - powered)
    return CorrectedStep(rates=ReverseRates(rates=rates, masked=masked), g=g)


def product_step(
    schedule: MaskingSchedule,
    t: float,
    state: "SequenceState | ArrayLike",
    ratios1: RatioTable,
    ratios2: RatioTable,
    *more: RatioTable,
) -> CorrectedStep:
    """Rates for the product of N >= 2 marginals.

    rate_k[j] = -N * factor * prod_n r_n
    g = factor * sum (sum_n r_n - N * prod_n r_n)

    With two factors this is the two-model product; with more it is the
    geometric average (beta_n = 1/N) annealed by beta = N.
    """
    tables = (ratios1, ratios2) + more
    factor, masked, _ = _prepare(schedule, t, state, *tables)
    n = float(len(tables))
    mixed = tables[0].ratios
    linear = tables[0].ratios
    for table in tables[1:]:
        mixed = mixed * table.ratios
        linear = linear + table.ratios

    rates = -n * factor * mixed
    g = factor * _per_state(linear - n * mixed)
    return CorrectedStep(rates=ReverseRates(rates=rates, masked=masked), g=g)


def geo_avg_step(
    schedule: MaskingSchedule,
    t: float,
    state: "SequenceState | ArrayLike",
    ratios: Sequence[RatioTable],
    betas: Sequence[float],
) -> CorrectedStep:
    """Rates for prod_n p_t^n ** beta_n with betas summing to one.

    rate_k[j] = -factor * prod_n r_n ** beta_n
    g = factor * sum (sum_n beta_n r_n - prod_n r_n ** beta_n)

    Raises:
        ContractError: If the betas do not sum to 1 or the counts differ.
    """
    if len(ratios) != len(betas) or not betas:
        raise ContractError("Geometric averages need one beta per ratio table")
    check_betas(betas)
    factor, masked, _ = _prepare(schedule, t, state, *ratios)

    geometric = ratios[0].ratios ** betas[0]
    arithmetic = betas[0] * ratios[0].ratios
    for table, beta in zip(ratios[1:], betas[1:]):
        geometric = geometric * table.ratios**beta
        arithmetic = arithmetic + beta * table.ratios

    rates = -factor * geometric
    g = factor * _per_state(arithmetic - geometric)
    return CorrectedStep(rates=ReverseRates(rates=rates, masked=masked), g=g)


def reward_step(
    schedule: MaskingSchedule,
    t: float,
    state: "SequenceState | ArrayLike",
    ratios: RatioTable,
    reward: RewardFn,
    beta_t: float,
    dbeta_t: float,
) -> CorrectedStep:
    """Rates tilted by exp(beta_t * (r(x with k set to j) - r(x))).

    g = factor * sum (r - r * tilt) + dbeta_t * r(x)

    The reward is evaluated on the state and on each of its single-position
    demaskings.

    Raises:
        RewardError: If the reward is not finite on any of those states.
    """
    factor, masked, tokens = _prepare(schedule, t, state, ratios)
    vocab = Vocabulary(ratios.ratios.shape[-1])
    current = evaluate_reward(reward, tokens)

    if masked.any():
        candidates = evaluate_reward(reward, neighbours(tokens, vocab))
        delta = np.where(masked[..., None], candidates - current[..., None, None], 0.0)
    else:
        delta = np.zeros(ratios.ratios.shape)

    r = ratios.ratios
    tilted = r * np.exp(beta_t * delta)
    rates = -factor * tilted
    g = factor * _per_state(r - tilted) + dbeta_t * current
    return CorrectedStep(rates=ReverseRates(rates=rates, masked=masked), g=g)


def corrected_posterior(step: CorrectedStep, position: int) -> np.ndarray:
    """The corrected rates of one masked position normalized to probabilities.

    Raises:
        ContractError: If the position is unmasked or its rates are all zero.
    """
    if not np.all(step.rates.masked[..., position]):
        raise ContractError(f"Position {position} is not masked")

    rates = step.rates.at(position)
    totals = rates.sum(axis=-1, keepdims=True)
    if np.any(totals <= 0):
        raise ContractError(f"Corrected rates at position {position} are degenerate")
    return rates / totals


def resolve_denoisers(
    target: TargetSpec, denoisers: Sequence[Denoiser] | None
) -> List[Denoiser]:
    """The denoisers a target consumes, checked against the ones supplied.

    Raises:
        ContractError: If the supplied denoisers do not fit the variant.
    """
    if isinstance(target, (Product, GeoAvg)):
        if denoisers and len(denoisers) != len(target.denoisers):
            raise ContractError(
                f"{target.name} target holds {len(target.denoisers)} denoisers, "
                f"got {len(denoisers)}"
            )
        return list(target.denoisers)

    if not denoisers or len(denoisers) != 1:
        raise ContractError(f"{target.name} target needs exactly one denoiser")
    return list(denoisers)


def correct(
    target: TargetSpec,
    denoisers: Sequence[Denoiser],
    schedule: MaskingSchedule,
    t: float,
    tau: float,
    tokens: np.ndarray,
) -> CorrectedStep:
    """Queries the denoisers at (t, tokens) and applies the target's corrector.

    ``t`` is the clamped forward time used for rates; ``tau`` the reverse
    time that drives reward inverse-temperature schedules.
    """
    tables = [denoiser_ratios(den, schedule, t, tokens) for den in denoisers]
    return correct_from_ratios(target, tables, schedule, t, tau, tokens)


def correct_from_ratios(
    target: TargetSpec,
    tables: Sequence[RatioTable],
    schedule: MaskingSchedule,
    t: float,
    tau: float,
    tokens: np.ndarray,
) -> CorrectedStep:
    """Applies the target's corrector to ratio tables, one per factor."""
    if isinstance(target, Base):
        return base_step(schedule, t, tokens, tables[0])
    if isinstance(target, Anneal):
        return anneal_step(schedule, t, tokens, tables[0], target.beta)
    if isinstance(target, Product):
        return product_step(schedule, t, tokens, *tables)
    if isinstance(target, GeoAvg):
        return geo_avg_step(schedule, t, tokens, tables, target.betas)
    if isinstance(target, Reward):
        return reward_step(
            schedule,
            t,
            tokens,
            tables[0],
            target.reward,
            target.beta(tau),
            target.dbeta(tau),
        )
    raise ContractError(f"Unknown target {target!r}")


class CorrectedDenoiser:
    """Presents a target's corrected per-position posterior as a denoiser.

    Used to close out residual masks at the end of a run.
    """

    def __init__(
        self,
        target: TargetSpec,
        denoisers: Sequence[Denoiser],
        schedule: MaskingSchedule,
        tau: float,
    ):
        self.target = target
        self.denoisers = list(denoisers)
        self.schedule = schedule
        self.tau = tau
        self.vocab = denoisers[0].vocab
        self.d = denoisers[0].d

    def posterior(self, tokens: np.ndarray, t: float) -> np.ndarray:
        """Corrected rates normalized per masked position.

        Raises:
            ContractError: If every corrected rate of a masked position is zero.
        """
        step = correct(self.target, self.denoisers, self.schedule, t, self.tau, tokens)
        rates = step.rates.rates
        totals = rates.sum(axis=-1, keepdims=True)
        if np.any(totals[step.rates.masked] <= 0):
            raise ContractError("Corrected rates vanish at a masked position")
        return np.divide(rates, totals, out=np.zeros_like(rates), where=totals > 0)
