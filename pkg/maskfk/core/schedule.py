#!/usr/bin/env python3

"""Noise schedules of the masking process.

Each schedule defines alpha_t, the probability that a token is still unmasked
at forward time t, with alpha_0 = 1 (clean) and alpha_1 = 0 (fully masked).
"""

from dataclasses import dataclass
from typing import Callable, Dict, Tuple

import numpy as np

from maskfk.core.config import settings
from maskfk.exceptions import ConfigError, DomainError

TimeFn = Callable[[float], float]


def linear_alpha(t):
    return 1.0 - t


def linear_alpha_derivative(t):
    return -1.0 + 0.0 * t


def cosine_alpha(t):
    return np.cos(np.pi * t / 2.0)


def cosine_alpha_derivative(t):
    return -np.pi / 2.0 * np.sin(np.pi * t / 2.0)


def geometric_alpha(t):
    return (1.0 - t) ** 2


def geometric_alpha_derivative(t):
    return -2.0 * (1.0 - t)


def sine_alpha(t):
    return 1.0 - np.sin(np.pi * t / 2.0)


def sine_alpha_derivative(t):
    return -np.pi / 2.0 * np.cos(np.pi * t / 2.0)


_ALL_SCHEDULES: Dict[str, Tuple[TimeFn, TimeFn]] = {
    "linear": (linear_alpha, linear_alpha_derivative),
    "cosine": (cosine_alpha, cosine_alpha_derivative),
    "geometric": (geometric_alpha, geometric_alpha_derivative),
    "sine": (sine_alpha, sine_alpha_derivative),
}
SCHEDULE_NAMES = tuple(_ALL_SCHEDULES)


@dataclass(frozen=True)
class MaskingSchedule:
    """The noise schedule alpha_t and its time derivative.

    Attributes:
        name: Registry name of the schedule.
        alpha: Map t -> alpha_t, decreasing from 1 at t=0 to 0 at t=1.
        dalpha: Map t -> d(alpha_t)/dt.
        t_min: Clamp used while simulating the reverse process.
    """

    name: str
    alpha: TimeFn
    dalpha: TimeFn
    t_min: float = settings.t_min

    def log_rate_factor(self, t: float) -> float:
        """Returns (1/alpha_t)(d alpha_t/dt), the factor every rate shares.

        The value is negative for a decreasing schedule.
        """
        return float(self.dalpha(t) / self.alpha(t))

    def signal_to_mask(self, t: float) -> float:
        """Returns alpha_t / (1 - alpha_t)."""
        alpha = float(self.alpha(t))
        return alpha / (1.0 - alpha)


def get_schedule(name: str = "", *, t_min: float | None = None) -> MaskingSchedule:
    """Looks up a named schedule.

    Args:
        name: One of ``linear``, ``cosine``, ``geometric`` or ``sine``.
            Falls back to the configured default schedule.
        t_min: Overrides the configured time clamp.

    Raises:
        ConfigError: If the name is unknown.
    """
    name = name or settings.default_schedule
    try:
        alpha, dalpha = _ALL_SCHEDULES[name]
    except KeyError:
        raise ConfigError(f"Unknown noise schedule: {name}") from None

    return MaskingSchedule(
        name=name,
        alpha=alpha,
        dalpha=dalpha,
        t_min=settings.t_min if t_min is None else t_min,
    )


def alpha_ratio(schedule: MaskingSchedule, s: float, t: float) -> float:
    """Returns alpha_s / alpha_t, the survival probability from t to s.

    Raises:
        DomainError: If s < t or either time lies outside [0, 1].
    """
    if not (0.0 <= t <= s <= 1.0):
        raise DomainError(f"alpha_ratio needs 0 <= t <= s <= 1, got s={s}, t={t}")

    if s == t:
        return 1.0

    return float(schedule.alpha(s) / schedule.alpha(t))


def clamp_time(t: float, t_min: float) -> float:
    """Clamps a forward time into [t_min, 1 - t_min] for rate evaluation."""
    return float(min(max(t, t_min), 1.0 - t_min))
