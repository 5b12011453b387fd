#!/usr/bin/env python3

"""This module tests the masking schedules."""

import numpy as np
import pytest

from maskfk.core.schedule import (
    SCHEDULE_NAMES,
    alpha_ratio,
    clamp_time,
    get_schedule,
)
from maskfk.exceptions import ConfigError, DomainError


class TestSchedules:
    @pytest.mark.parametrize("name", SCHEDULE_NAMES)
    def test_boundary_values(self, name):
        """Every schedule starts clean and ends fully masked."""
        schedule = get_schedule(name)

        assert schedule.alpha(0.0) == pytest.approx(1.0)
        assert schedule.alpha(1.0) == pytest.approx(0.0, abs=1e-12)

    @pytest.mark.parametrize("name", SCHEDULE_NAMES)
    def test_derivative_matches_finite_difference(self, name):
        """dalpha agrees with a central difference of alpha."""
        schedule = get_schedule(name)
        t, h = 0.3, 1e-6
        numeric = (schedule.alpha(t + h) - schedule.alpha(t - h)) / (2 * h)

        assert schedule.dalpha(t) == pytest.approx(numeric, rel=1e-6)

    def test_linear_rate_factor(self):
        """For alpha = 1 - t the shared rate factor is -1 / (1 - t)."""
        schedule = get_schedule("linear")

        assert schedule.log_rate_factor(0.5) == pytest.approx(-2.0)
        assert schedule.signal_to_mask(0.5) == pytest.approx(1.0)
        assert schedule.signal_to_mask(0.2) == pytest.approx(4.0)

    def test_unknown_name_is_a_config_error(self):
        """Unknown names raise instead of falling back silently."""
        with pytest.raises(ConfigError):
            get_schedule("triangular")

    def test_t_min_override(self):
        assert get_schedule("cosine", t_min=0.01).t_min == 0.01


class TestTimeHelpers:
    def test_alpha_ratio(self):
        """alpha_s / alpha_t is the survival probability from t to s."""
        schedule = get_schedule("linear")

        assert alpha_ratio(schedule, 0.6, 0.2) == pytest.approx(0.5)
        assert alpha_ratio(schedule, 0.4, 0.4) == 1.0

    @pytest.mark.parametrize("name", SCHEDULE_NAMES)
    def test_alpha_ratio_is_multiplicative(self, name):
        """Survival from t to s factors through any intermediate time r."""
        schedule = get_schedule(name)
        triples = np.sort(np.random.default_rng(0).uniform(0.0, 0.99, (1000, 3)))

        for t, r, s in triples:
            composed = alpha_ratio(schedule, s, r) * alpha_ratio(schedule, r, t)
            assert alpha_ratio(schedule, s, t) == pytest.approx(composed, abs=1e-12)

    def test_alpha_ratio_rejects_reversed_times(self):
        with pytest.raises(DomainError):
            alpha_ratio(get_schedule("linear"), 0.2, 0.6)

    def test_clamp_time(self):
        """Times are clamped into [t_min, 1 - t_min]."""
        assert clamp_time(0.0, 1e-3) == 1e-3
        assert clamp_time(1.0, 1e-3) == pytest.approx(0.999)
        assert clamp_time(0.4, 1e-3) == 0.4
