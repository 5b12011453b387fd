#!/usr/bin/env python3

"""This module tests the seeded random streams."""

import numpy as np

from maskfk.core.random import Stream, generator


def test_same_key_same_draws():
    """A (seed, stream, step) key always replays the same numbers."""
    first = generator(7, Stream.propagate, 3).random(5)
    second = generator(7, Stream.propagate, 3).random(5)

    np.testing.assert_array_equal(first, second)


def test_streams_and_steps_are_independent():
    base = generator(7, Stream.propagate, 3).random(5)

    assert not np.allclose(base, generator(7, Stream.resample, 3).random(5))
    assert not np.allclose(base, generator(7, Stream.propagate, 4).random(5))
    assert not np.allclose(base, generator(8, Stream.propagate, 3).random(5))
