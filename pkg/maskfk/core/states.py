#!/usr/bin/env python3

"""This module defines the token state space shared by every service."""

from dataclasses import dataclass
from typing import Iterator, Sequence, Tuple

import numpy as np
from numpy.typing import ArrayLike

from maskfk.core.config import settings
from maskfk.exceptions import CapacityError, ContractError


@dataclass(frozen=True)
class Vocabulary:
    """Non-mask tokens ``0..size-1`` plus the mask token ``size``."""

    size: int

    def __post_init__(self):
        if self.size < 1:
            raise ContractError("Vocabulary size must be a positive integer")

    @property
    def mask_id(self) -> int:
        return self.size

    @property
    def n_symbols(self) -> int:
        """Number of symbols including the mask."""
        return self.size + 1


@dataclass(frozen=True)
class SequenceState:
    """A length-d token sequence over the vocabulary and the mask."""

    tokens: Tuple[int, ...]
    vocab: Vocabulary

    def __post_init__(self):
        if len(self.tokens) < 1:
            raise ContractError("A sequence needs at least one position")
        validate_tokens(self.tokens, self.vocab)

    @classmethod
    def of(cls, tokens: ArrayLike, vocab: Vocabulary) -> "SequenceState":
        return cls(tuple(int(tok) for tok in np.asarray(tokens).ravel()), vocab)

    @classmethod
    def all_masked(cls, vocab: Vocabulary, d: int) -> "SequenceState":
        return cls((vocab.mask_id,) * d, vocab)

    @property
    def d(self) -> int:
        return len(self.tokens)

    def array(self) -> np.ndarray:
        return np.asarray(self.tokens, dtype=np.int64)

    def masked_positions(self) -> list:
        return masked_positions(self.array(), self.vocab)

    def with_token(self, position: int, token: int) -> "SequenceState":
        tokens = list(self.tokens)
        tokens[position] = token
        return SequenceState(tuple(tokens), self.vocab)


def as_tokens(state: "SequenceState | ArrayLike") -> np.ndarray:
    """Returns the token array of a state given as a SequenceState or array."""
    if isinstance(state, SequenceState):
        return state.array()
    return np.asarray(state, dtype=np.int64)


def masked_positions(state: "SequenceState | ArrayLike", vocab: Vocabulary) -> list:
    """Returns the ascending coordinates holding the mask token.

    >>> masked_positions([0, 2, 1], Vocabulary(2))
    [1]
    """
    return [int(k) for k in np.flatnonzero(as_tokens(state) == vocab.mask_id)]


def is_masked(tokens: np.ndarray, vocab: Vocabulary) -> np.ndarray:
    """Boolean mask of masked coordinates; works on any leading batch axes."""
    return np.asarray(tokens) == vocab.mask_id


class StateEnumeration:
    """Lexicographic enumeration of every sequence over ``base`` symbols.

    The first coordinate is the most significant digit, so index 0 is the
    all-zero sequence and the last index is the sequence of ``base - 1``.
    """

    def __init__(self, base: int, d: int, *, limit: int | None = None):
        limit = settings.enumeration_limit if limit is None else limit
        if d < 1:
            raise ContractError("Sequence length must be a positive integer")

        size = base**d
        if size > limit:
            raise CapacityError(
                f"{base}^{d} = {size} states exceed the enumeration limit {limit}",
                size=size,
                limit=limit,
            )

        self.base = base
        self.d = d
        self.size = size
        self.place_values = base ** np.arange(d - 1, -1, -1, dtype=np.int64)
        self._states: np.ndarray | None = None

    def __len__(self) -> int:
        return self.size

    def __iter__(self) -> Iterator[np.ndarray]:
        return iter(self.states)

    @property
    def states(self) -> np.ndarray:
        """All states as an integer array of shape (size, d)."""
        if self._states is None:
            codes = np.arange(self.size, dtype=np.int64)[:, None]
            self._states = (codes // self.place_values) % self.base
            self._states.setflags(write=False)
        return self._states

    def index(self, tokens: ArrayLike) -> np.ndarray | int:
        """Maps states (any leading batch axes) to their enumeration index."""
        tokens = np.asarray(tokens, dtype=np.int64)
        codes = tokens @ self.place_values
        return int(codes) if codes.ndim == 0 else codes

    def state(self, index: int) -> np.ndarray:
        """Inverse of :meth:`index`."""
        if not 0 <= index < self.size:
            raise ContractError(f"Index {index} outside [0, {self.size})")
        return (index // self.place_values) % self.base


def enumerate_states(
    vocab: Vocabulary, d: int, *, limit: int | None = None
) -> StateEnumeration:
    """Enumerates all (V+1)^d sequences including the masked ones.

    Raises:
        CapacityError: If (V+1)^d exceeds the enumeration limit.
    """
    return StateEnumeration(vocab.n_symbols, d, limit=limit)


def neighbours(tokens: np.ndarray, vocab: Vocabulary) -> np.ndarray:
    """Every single-position demasking of a batch of states.

    Args:
        tokens: Integer array of shape (..., d).

    Returns:
        Array of shape (..., d, V, d) whose entry [..., k, j, :] is the state
        with position k set to token j. Unmasked positions are included too;
        callers ignore them through the masked-position mask.
    """
    tokens = np.asarray(tokens, dtype=np.int64)
    d = tokens.shape[-1]
    out = np.broadcast_to(
        tokens[..., None, None, :], tokens.shape[:-1] + (d, vocab.size, d)
    ).copy()
    positions = np.arange(d)
    out[..., positions, :, positions] = np.arange(vocab.size)
    return out


def validate_tokens(tokens: Sequence[int], vocab: Vocabulary) -> np.ndarray:
    """Checks every token id lies in [0, mask_id] and returns the array."""
    tokens = np.asarray(tokens, dtype=np.int64)
    if tokens.size and (tokens.min() < 0 or tokens.max() > vocab.mask_id):
        raise ContractError(f"Token ids must lie in [0, {vocab.mask_id}]")
    return tokens


def state_index(vocab: Vocabulary, state: "SequenceState | ArrayLike") -> int:
    """Position of a state in the enumeration of all (V+1)^d sequences."""
    tokens = as_tokens(state)
    codes = StateEnumeration(vocab.n_symbols, tokens.shape[-1], limit=2**62)
    return codes.index(tokens)


def state_from_index(vocab: Vocabulary, d: int, index: int) -> SequenceState:
    """Inverse of :func:`state_index`."""
    codes = StateEnumeration(vocab.n_symbols, d, limit=2**62)
    return SequenceState.of(codes.state(index), vocab)
