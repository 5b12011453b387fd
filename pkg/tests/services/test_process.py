#!/usr/bin/env python3

"""This module tests the forward and reverse masking processes."""

import numpy as np
import pytest

from maskfk.core.states import Vocabulary
from maskfk.exceptions import ContractError, DomainError
from maskfk.services.process import (
    RatioTable,
    ReverseRates,
    advance,
    categorical,
    force_fill,
    forward_generator,
    forward_kernel,
    forward_transition_prob,
    reverse_rates,
    reverse_step,
    score_from_denoiser,
    unmask_probability,
)

VOCAB = Vocabulary(2)


class TestForwardProcess:
    def test_kernel_rows_are_distributions(self, schedule):
        kernel = forward_kernel(schedule, 0.7, 0.2, VOCAB)

        np.testing.assert_allclose(kernel.sum(axis=1), 1.0)

    def test_survival_probability(self, schedule):
        """A clean token survives from t to s with probability alpha_s/alpha_t."""
        assert forward_transition_prob(schedule, 0.6, 0.2, 0, 0, VOCAB) == (
            pytest.approx(0.5)
        )
        assert forward_transition_prob(schedule, 0.6, 0.2, 0, 2, VOCAB) == (
            pytest.approx(0.5)
        )
        assert forward_transition_prob(schedule, 0.6, 0.2, 0, 1, VOCAB) == 0.0

    def test_mask_is_absorbing(self, schedule):
        assert forward_transition_prob(schedule, 0.9, 0.1, 2, 2, VOCAB) == 1.0
        assert forward_transition_prob(schedule, 0.9, 0.1, 2, 0, VOCAB) == 0.0

    def test_reversed_times_raise(self, schedule):
        with pytest.raises(DomainError):
            forward_transition_prob(schedule, 0.1, 0.9, 0, 0, VOCAB)

    def test_generator_rows_sum_to_zero(self, schedule):
        matrix = forward_generator(schedule, 0.3, VOCAB)

        np.testing.assert_allclose(matrix.sum(axis=1), 0.0, atol=1e-12)
        assert matrix[0, 2] == pytest.approx(1.0 / 0.7)

    def test_kernel_solves_the_forward_equation(self, schedule):
        """d/ds P(t -> s) = P(t -> s) A_s, checked by a central difference."""
        s, t, h = 0.5, 0.2, 1e-6
        derivative = (
            forward_kernel(schedule, s + h, t, VOCAB)
            - forward_kernel(schedule, s - h, t, VOCAB)
        ) / (2 * h)
        expected = forward_kernel(schedule, s, t, VOCAB) @ forward_generator(
            schedule, s, VOCAB
        )

        np.testing.assert_allclose(derivative, expected, atol=1e-6)


class TestReverseRates:
    def test_score_scales_the_posterior(self, schedule):
        """Ratios are alpha/(1 - alpha) times the posterior."""
        ratios = score_from_denoiser(schedule, 0.2, np.array([[0.25, 0.75]]))

        np.testing.assert_allclose(ratios, [[1.0, 3.0]])

    def test_score_needs_t_inside_the_clamp(self, schedule):
        with pytest.raises(DomainError):
            score_from_denoiser(schedule, 1.0, np.array([[0.5, 0.5]]))

    def test_base_rates(self, schedule):
        table = RatioTable(ratios=np.array([[1.0, 3.0]]), masked=np.array([True]))
        rates = reverse_rates(schedule, 0.5, [2], table, VOCAB)

        np.testing.assert_allclose(rates.rates, [[2.0, 6.0]])
        assert rates.total_hazard == pytest.approx(8.0)

    def test_coverage_mismatch_raises(self, schedule):
        table = RatioTable(ratios=np.zeros((1, 2)), masked=np.array([False]))

        with pytest.raises(ContractError):
            reverse_rates(schedule, 0.5, [2], table, VOCAB)

    def test_negative_ratios_raise(self):
        with pytest.raises(ContractError):
            RatioTable(ratios=np.array([[-1.0, 1.0]]), masked=np.array([True]))


class TestReverseStep:
    def test_unmask_probability(self):
        assert unmask_probability(np.array(2.0), 0.1, "exponential") == (
            pytest.approx(1.0 - np.exp(-0.2))
        )
        assert unmask_probability(np.array(20.0), 0.1, "euler") == 1.0

    def test_categorical_inverse_cdf(self):
        weights = np.array([[1.0, 3.0]])

        assert categorical(weights, np.array([0.2]))[0] == 0
        assert categorical(weights, np.array([0.3]))[0] == 1

    def test_unmasked_positions_never_change(self):
        rates = ReverseRates(
            rates=np.array([[0.0, 0.0], [5.0, 5.0]]), masked=np.array([False, True])
        )
        out = advance(np.array([1, 2]), rates, 1.0, np.zeros(2), np.zeros(2))

        assert out.tolist() == [1, 0]

    def test_zero_hazard_keeps_the_mask(self):
        rates = ReverseRates(rates=np.zeros((1, 2)), masked=np.array([True]))
        out = advance(np.array([2]), rates, 1.0, np.zeros(1), np.zeros(1))

        assert out.tolist() == [2]

    def test_nonpositive_step_raises(self):
        rates = ReverseRates(rates=np.zeros((1, 2)), masked=np.array([True]))

        with pytest.raises(DomainError):
            advance(np.array([2]), rates, 0.0, np.zeros(1), np.zeros(1))

    def test_unmasking_frequency(self):
        """Masked positions fire with probability 1 - exp(-lambda dtau)."""
        rng = np.random.default_rng(0)
        n = 20_000
        rates = ReverseRates(
            rates=np.broadcast_to([[1.0, 1.0]], (n, 1, 2)),
            masked=np.ones((n, 1), dtype=bool),
        )
        out = reverse_step(rng, np.full((n, 1), 2), rates, 0.25)
        fired = np.mean(out != 2)

        assert fired == pytest.approx(1.0 - np.exp(-0.5), abs=0.02)

    def test_force_fill_leaves_no_mask(self, pair_denoiser):
        rng = np.random.default_rng(0)
        tokens = np.array([[2, 2], [0, 2], [1, 1]])
        filled = force_fill(rng, tokens, pair_denoiser, VOCAB, t=0.5)

        assert np.all(filled != 2)
        assert filled[1, 0] == 0
        assert filled[2].tolist() == [1, 1]
