#!/usr/bin/env python3

"""Seeded random streams.

Every random draw of a run is keyed by the run seed, a stream id and a step
number, so a run can be replayed exactly whatever the worker count.
"""

from enum import IntEnum

import numpy as np


class Stream(IntEnum):
    """Independent stream families of one run."""

    propagate = 0
    resample = 1
    force_fill = 2
    reference = 3
    noise = 4
    reward = 5
    bootstrap = 6


def generator(seed: int, stream: Stream, step: int = 0) -> np.random.Generator:
    """Returns the Philox generator for ``(seed, stream, step)``."""
    sequence = np.random.SeedSequence(entropy=seed, spawn_key=(int(stream), step))
    return np.random.Generator(np.random.Philox(sequence))
