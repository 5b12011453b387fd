#!/usr/bin/env python3

"""Demasking posteriors p(x_0[k] = j | x_t) behind a pluggable interface."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Protocol, Tuple, runtime_checkable

import numpy as np
from numpy.typing import ArrayLike

from maskfk.core.random import Stream, generator
from maskfk.core.schedule import MaskingSchedule
from maskfk.core.states import (
    SequenceState,
    StateEnumeration,
    Vocabulary,
    as_tokens,
    is_masked,
)
from maskfk.exceptions import ContractError, EvidenceError
from maskfk.services.data import NORMALIZATION_TOLERANCE, TabularDataDistribution
from maskfk.services.process import RatioTable, score_from_denoiser


@runtime_checkable
class Denoiser(Protocol):
    """Anything that maps a (batch of) state(s) to demasking posteriors.

    ``posterior`` returns an array of shape (..., d, V): one probability
    vector over non-mask tokens per masked coordinate and zero rows for
    unmasked coordinates.
    """

    vocab: Vocabulary
    d: int

    def posterior(self, tokens: np.ndarray, t: float) -> np.ndarray: ...


@dataclass(frozen=True)
class DenoiserOutput:
    """Per-position demasking posteriors of one state or a batch."""

    probs: np.ndarray
    masked: np.ndarray

    def __post_init__(self):
        sums = self.probs.sum(axis=-1)
        if np.any(self.probs < 0):
            raise ContractError("Posterior entries must be nonnegative")
        if np.any(np.abs(sums[self.masked] - 1.0) > NORMALIZATION_TOLERANCE):
            raise ContractError("Posterior rows must sum to 1")

    @property
    def positions(self) -> list:
        return [int(k) for k in np.flatnonzero(self.masked)]

    def at(self, position: int) -> np.ndarray:
        return self.probs[..., position, :]


def conditional_marginals(
    tensor: np.ndarray, tokens: Tuple[int, ...], mask_id: int
) -> np.ndarray:
    """Exact Bayes posterior of every masked coordinate given the others.

    Slices the data tensor at the observed tokens, then marginalizes the
    remaining masked axes one at a time.

    Raises:
        EvidenceError: If no data sequence matches the observed tokens.
    """
    d = len(tokens)
    V = tensor.shape[0]
    masked = [k for k, tok in enumerate(tokens) if tok == mask_id]
    index = tuple(slice(None) if tok == mask_id else tok for tok in tokens)
    consistent = tensor[index]
    evidence = consistent.sum()
    if evidence <= 0:
        raise EvidenceError(f"No data sequence is consistent with {list(tokens)}")

    out = np.zeros((d, V))
    for axis, position in enumerate(masked):
        others = tuple(a for a in range(len(masked)) if a != axis)
        out[position] = consistent.sum(axis=others) / evidence
    return out


class TabularDenoiser:
    """The exact posterior of an explicit data distribution.

    The posterior depends on the state only: masking is independent of the
    data, so the mask pattern carries no information beyond the observed
    tokens. Results are cached per state.
    """

    def __init__(self, data: TabularDataDistribution, *, cache_size: int = 2**16):
        self.data = data
        self.vocab = data.vocab
        self.d = data.d
        self._tensor = data.tensor
        self._rows = lru_cache(maxsize=cache_size)(self._compute)

    def _compute(self, key: Tuple[int, ...]) -> np.ndarray:
        rows = conditional_marginals(self._tensor, key, self.vocab.mask_id)
        rows.setflags(write=False)
        return rows

    def posterior(self, tokens: ArrayLike, t: float) -> np.ndarray:
        tokens = np.asarray(tokens, dtype=np.int64)
        if tokens.shape[-1] != self.d:
            raise ContractError(f"Expected sequences of length {self.d}")

        flat = tokens.reshape(-1, self.d)
        unique, inverse = np.unique(flat, axis=0, return_inverse=True)
        rows = np.stack([self._rows(tuple(int(tok) for tok in row)) for row in unique])
        return rows[inverse.reshape(-1)].reshape(tokens.shape + (self.vocab.size,))

    def cache_info(self):
        return self._rows.cache_info()


class NoisyTabularDenoiser(TabularDenoiser):
    """The exact posterior perturbed by seeded log-normal noise.

    The perturbation is a deterministic function of the state, so repeated
    queries agree with each other.
    """

    def __init__(
        self,
        data: TabularDataDistribution,
        *,
        scale: float = 0.1,
        seed: int = 0,
        cache_size: int = 2**16,
    ):
        super().__init__(data, cache_size=cache_size)
        self.scale = scale
        self.seed = seed
        self._codes = StateEnumeration(self.vocab.n_symbols, self.d, limit=2**62)

    def _compute(self, key: Tuple[int, ...]) -> np.ndarray:
        rows = conditional_marginals(self._tensor, key, self.vocab.mask_id)
        rng = generator(self.seed, Stream.noise, self._codes.index(key))
        noisy = rows * np.exp(self.scale * rng.standard_normal(rows.shape))
        totals = noisy.sum(axis=-1, keepdims=True)
        noisy = np.divide(noisy, totals, out=np.zeros_like(noisy), where=totals > 0)
        noisy.setflags(write=False)
        return noisy


def exact_posterior(
    data: TabularDataDistribution,
    schedule: MaskingSchedule,
    t: float,
    state: "SequenceState | ArrayLike",
) -> DenoiserOutput:
    """Exact demasking posterior of one state under the data distribution.

    Raises:
        ContractError: If the state has no masked position.
        EvidenceError: If the observed tokens have zero probability.
    """
    tokens = as_tokens(state)
    masked = is_masked(tokens, data.vocab)
    if not masked.any():
        raise ContractError("exact_posterior needs at least one masked position")

    rows = conditional_marginals(
        data.tensor, tuple(int(tok) for tok in tokens), data.vocab.mask_id
    )
    return DenoiserOutput(probs=rows, masked=masked)


def denoiser_ratios(
    denoiser: Denoiser,
    schedule: MaskingSchedule,
    t: float,
    state: "SequenceState | ArrayLike",
) -> RatioTable:
    """Ratios p_t(j)/p_t(m) per masked position from any denoiser."""
    tokens = as_tokens(state)
    probs = denoiser.posterior(tokens, t)
    masked = is_masked(tokens, denoiser.vocab)
    return RatioTable(
        ratios=score_from_denoiser(schedule, t, probs), masked=masked
    )
