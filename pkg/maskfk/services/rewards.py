#!/usr/bin/env python3

"""Reward functions and inverse-temperature schedules for reward tilting."""

from __future__ import annotations

import threading
from typing import Protocol, Sequence, runtime_checkable

import numpy as np
from numpy.typing import ArrayLike

from maskfk.core.random import Stream, generator
from maskfk.core.states import StateEnumeration, Vocabulary
from maskfk.exceptions import ContractError, RewardError


@runtime_checkable
class RewardFn(Protocol):
    """Maps states of shape (..., d) to rewards of shape (...).

    Must be defined on partially masked states too. Implementations that
    are not safe to call from several threads set ``serial = True``.
    """

    serial: bool

    def __call__(self, tokens: np.ndarray) -> np.ndarray: ...


class SeparableReward:
    """r(x) = sum_k phi_k(x[k]) with phi_k(mask) = 0.

    Args:
        table: Per-token values, shape (V,) shared by all positions or
            (d, V) per position.
    """

    serial = False

    def __init__(self, table: ArrayLike, vocab: Vocabulary, d: int):
        table = np.asarray(table, dtype=np.float64)
        if table.ndim == 1:
            table = np.broadcast_to(table, (d, table.size))
        if table.shape != (d, vocab.size):
            raise ContractError("Reward table must have shape (V,) or (d, V)")
        if not np.all(np.isfinite(table)):
            raise RewardError("Reward table holds non-finite values")

        self.vocab = vocab
        self.d = d
        # Extra column for the mask token, which contributes nothing.
        self.table = np.concatenate([table, np.zeros((d, 1))], axis=1)

    def __call__(self, tokens: np.ndarray) -> np.ndarray:
        tokens = np.asarray(tokens, dtype=np.int64)
        return self.table[np.arange(self.d), tokens].sum(axis=-1)


class DenoiserFillReward:
    """Evaluates a reward of clean sequences on partially masked ones.

    Masked positions are filled with a draw from the denoiser posterior of
    the queried state before the wrapped reward is applied. The draw is
    seeded by the state itself, so the result is a function of the state.
    """

    def __init__(self, reward: RewardFn, denoiser, *, seed: int = 0, t: float = 0.5):
        self.reward = reward
        self.denoiser = denoiser
        self.seed = seed
        self.t = t
        self.serial = getattr(reward, "serial", False)
        self._codes = StateEnumeration(
            denoiser.vocab.n_symbols, denoiser.d, limit=2**62
        )

    def _fill(self, tokens: np.ndarray) -> np.ndarray:
        mask_id = self.denoiser.vocab.mask_id
        if not np.any(tokens == mask_id):
            return tokens

        rows = self.denoiser.posterior(tokens, self.t)
        rng = generator(self.seed, Stream.reward, self._codes.index(tokens))
        cumulative = np.cumsum(rows, axis=-1)
        u = rng.random(tokens.shape)[:, None]
        draws = np.minimum(
            np.sum(cumulative <= u * cumulative[:, -1:], axis=-1), rows.shape[-1] - 1
        )
        return np.where(tokens == mask_id, draws, tokens)

    def __call__(self, tokens: np.ndarray) -> np.ndarray:
        tokens = np.asarray(tokens, dtype=np.int64)
        flat = tokens.reshape(-1, tokens.shape[-1])
        filled = np.stack([self._fill(row) for row in flat])
        return np.asarray(self.reward(filled)).reshape(tokens.shape[:-1])


class CallableReward:
    """Adapts a per-sequence Python function to the batched interface."""

    def __init__(self, fn, *, serial: bool = False):
        self.fn = fn
        self.serial = serial

    def __call__(self, tokens: np.ndarray) -> np.ndarray:
        tokens = np.asarray(tokens, dtype=np.int64)
        flat = tokens.reshape(-1, tokens.shape[-1])
        values = np.array([float(self.fn(row)) for row in flat])
        return values.reshape(tokens.shape[:-1])


_serial_lock = threading.Lock()


def evaluate_reward(reward: RewardFn, tokens: np.ndarray) -> np.ndarray:
    """Calls the reward, serializing serial rewards and checking finiteness.

    Raises:
        RewardError: If any value is not finite.
    """
    if getattr(reward, "serial", False):
        with _serial_lock:
            values = np.asarray(reward(tokens), dtype=np.float64)
    else:
        values = np.asarray(reward(tokens), dtype=np.float64)

    if not np.all(np.isfinite(values)):
        bad = values[~np.isfinite(values)]
        raise RewardError(f"Reward returned non-finite values: {bad[:5]}")
    return values


class LinearBeta:
    """beta_tau = final * tau: zero at the start of generation."""

    def __init__(self, final: float = 1.0):
        self.final = final

    def __call__(self, tau: float) -> float:
        return self.final * tau

    def derivative(self, tau: float) -> float:
        return self.final


class ConstantBeta:
    """beta_tau = value for every tau."""

    def __init__(self, value: float = 1.0):
        self.value = value

    def __call__(self, tau: float) -> float:
        return self.value

    def derivative(self, tau: float) -> float:
        return 0.0


def token_reward(values: Sequence[float], vocab: Vocabulary, d: int) -> SeparableReward:
    """Shorthand for the same per-token reward at every position."""
    return SeparableReward(values, vocab, d)
