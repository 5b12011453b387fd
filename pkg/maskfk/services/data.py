#!/usr/bin/env python3

"""This module defines explicit data distributions over unmasked sequences."""

from __future__ import annotations

import json
from functools import reduce
from pathlib import Path
from typing import Any, Dict, Sequence

import numpy as np
from numpy.typing import ArrayLike

from maskfk.core.config import settings
from maskfk.core.states import StateEnumeration, Vocabulary
from maskfk.exceptions import ConfigError, ContractError

NORMALIZATION_TOLERANCE = 1e-9


class TabularDataDistribution:
    """An explicit probability vector over all V^d unmasked sequences.

    Entries follow the lexicographic enumeration of
    :class:`~maskfk.core.states.StateEnumeration` with base V, so the vector
    reshapes into a tensor with one axis per coordinate. The mask token never
    carries probability.
    """

    def __init__(
        self,
        probs: ArrayLike,
        vocab: Vocabulary,
        d: int,
        *,
        limit: int | None = None,
    ):
        self.vocab = vocab
        self.d = d
        self.enumeration = StateEnumeration(vocab.size, d, limit=limit)

        probs = np.array(probs, dtype=np.float64).ravel()
        if probs.size != self.enumeration.size:
            raise ContractError(
                f"Expected {self.enumeration.size} probabilities for V={vocab.size}, "
                f"d={d}; got {probs.size}"
            )
        if np.any(probs < 0) or not np.all(np.isfinite(probs)):
            raise ContractError("Probabilities must be finite and nonnegative")
        if abs(probs.sum() - 1.0) > NORMALIZATION_TOLERANCE:
            raise ContractError(f"Probabilities sum to {probs.sum()}, not 1")

        self.probs = probs
        self.probs.setflags(write=False)

    @property
    def tensor(self) -> np.ndarray:
        """The probabilities as an array of shape (V,) * d."""
        return self.probs.reshape((self.vocab.size,) * self.d)

    @property
    def states(self) -> np.ndarray:
        return self.enumeration.states

    def prob(self, tokens: ArrayLike) -> float:
        return float(self.probs[self.enumeration.index(tokens)])

    def marginal(self, position: int) -> np.ndarray:
        axes = tuple(a for a in range(self.d) if a != position)
        return self.tensor.sum(axis=axes) if axes else self.tensor.copy()

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        """Draws ``n`` exact samples, shape (n, d)."""
        index = rng.choice(self.probs.size, size=n, p=self.probs)
        return self.states[index]

    def expectation(self, values: ArrayLike) -> float:
        return float(np.dot(self.probs, np.asarray(values, dtype=np.float64)))

    def __repr__(self) -> str:
        return f"TabularDataDistribution(V={self.vocab.size}, d={self.d})"


def normalized(weights: ArrayLike) -> np.ndarray:
    weights = np.asarray(weights, dtype=np.float64)
    return weights / weights.sum()


def from_probs(probs: Sequence[float], V: int, d: int) -> TabularDataDistribution:
    return TabularDataDistribution(probs, Vocabulary(V), d)


def product_data(marginals: Sequence[ArrayLike]) -> TabularDataDistribution:
    """Independent coordinates with the given per-position marginals."""
    marginals = [normalized(m) for m in marginals]
    sizes = {m.size for m in marginals}
    if len(sizes) != 1:
        raise ContractError("Every marginal must cover the same vocabulary")

    probs = reduce(np.multiply.outer, marginals)
    vocab = Vocabulary(sizes.pop())
    return TabularDataDistribution(probs.ravel(), vocab, len(marginals))


def random_data(
    rng: np.random.Generator, V: int, d: int, *, concentration: float = 1.0
) -> TabularDataDistribution:
    """A Dirichlet-distributed joint distribution, for oracle fixtures."""
    probs = rng.dirichlet(np.full(V**d, concentration))
    return TabularDataDistribution(normalized(probs), Vocabulary(V), d)


def load_data(source: str | Path | Dict[str, Any]) -> TabularDataDistribution:
    """Builds a data distribution from a JSON file or an already-parsed dict.

    Two document forms are accepted::

        {"d": 2, "V": 2, "probs": [...]}            # enumeration order
        {"type": "ising", "L": 3, "beta": 0.3, "J": 1.0, "h": 0.0}

    Raises:
        ConfigError: If the document matches neither form.
    """
    if not isinstance(source, dict):
        with open(source, "r") as file:
            source = json.load(file)

    if source.get("type") == "ising":
        from maskfk.services.ising import BoltzmannSpec, IsingModel, exact_boltzmann

        model = IsingModel(
            L=int(source["L"]),
            J=float(source.get("J", 1.0)),
            h=float(source.get("h", 0.0)),
        )
        spec = BoltzmannSpec(model=model, beta=float(source["beta"]))
        return exact_boltzmann(spec, limit=settings.enumeration_limit).data

    try:
        return from_probs(source["probs"], int(source["V"]), int(source["d"]))
    except KeyError as error:
        raise ConfigError(f"Data document is missing the key {error}") from error
