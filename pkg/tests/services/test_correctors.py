#!/usr/bin/env python3

"""This module tests the corrected rates and weights of every target."""

import numpy as np
import pytest

from maskfk.core.states import Vocabulary
from maskfk.exceptions import ContractError, RewardError
from maskfk.services.checks import random_tables, reduction_checks
from maskfk.services.correctors import (
    Anneal,
    Base,
    CorrectedDenoiser,
    GeoAvg,
    Product,
    Reward,
    anneal_step,
    base_step,
    correct,
    corrected_posterior,
    geo_avg_step,
    product_step,
    resolve_denoisers,
    reward_step,
)
from maskfk.services.data import from_probs
from maskfk.services.denoiser import TabularDenoiser
from maskfk.services.process import RatioTable, score_from_denoiser
from maskfk.services.rewards import CallableReward, LinearBeta, SeparableReward

VOCAB = Vocabulary(2)
MASKED = np.array([True])


def table(*values):
    return RatioTable(ratios=np.array([values], dtype=float), masked=MASKED)


# At t = 0.5 the linear schedule has factor (1/alpha)(d alpha/dt) = -2.
T = 0.5


class TestHandComputedSteps:
    def test_base(self, schedule):
        step = base_step(schedule, T, [2], table(1.0, 3.0))

        np.testing.assert_allclose(step.rates.rates, [[2.0, 6.0]])
        assert step.g == 0.0

    def test_anneal(self, schedule):
        """rates = -beta f r^beta and g = beta f sum(r - r^beta)."""
        step = anneal_step(schedule, T, [2], table(1.0, 3.0), 2.0)

        np.testing.assert_allclose(step.rates.rates, [[4.0, 36.0]])
        assert step.g == pytest.approx(24.0)

    def test_anneal_example_from_the_docs(self, schedule):
        step = anneal_step(schedule, T, [2], table(0.8, 0.2), 2.0)

        np.testing.assert_allclose(step.rates.rates, [[2.56, 0.16]])
        assert step.g == pytest.approx(-1.28)

    def test_single_site_anneal_closed_form(self, schedule):
        """With d = 1 and alpha = 1 - t, g follows from sum_j p_j ** beta."""
        rng = np.random.default_rng(7)
        for _ in range(200):
            t, beta = rng.uniform(0.05, 0.95), rng.uniform(0.2, 4.0)
            logits = rng.normal(size=3)
            p = np.exp(logits) / np.exp(logits).sum()
            ratios = score_from_denoiser(schedule, t, p[None, :])
            step = anneal_step(
                schedule, t, [3], RatioTable(ratios=ratios, masked=MASKED), beta
            )
            powered = np.exp(beta * logits).sum() / np.exp(logits).sum() ** beta
            closed = beta * (1 - t) ** (beta - 1) / t**beta * powered - beta / t

            assert step.g == pytest.approx(closed, rel=1e-10)

    def test_product(self, schedule):
        step = product_step(schedule, T, [2], table(1.0, 3.0), table(2.0, 1.0))

        np.testing.assert_allclose(step.rates.rates, [[8.0, 12.0]])
        assert step.g == pytest.approx(6.0)

    def test_geometric_average(self, schedule):
        step = geo_avg_step(
            schedule, T, [2], [table(1.0, 4.0), table(4.0, 1.0)], [0.5, 0.5]
        )

        np.testing.assert_allclose(step.rates.rates, [[4.0, 4.0]])
        assert step.g == pytest.approx(-2.0)

    def test_reward_tilts_towards_high_reward(self, schedule):
        reward = SeparableReward([0.0, 1.0], VOCAB, 1)
        step = reward_step(
            schedule, T, [2], table(1.0, 3.0), reward, np.log(2.0), 0.0
        )

        np.testing.assert_allclose(step.rates.rates, [[2.0, 12.0]])
        assert step.g == pytest.approx(6.0)

    def test_reward_weight_of_a_clean_state(self, schedule):
        """Only the d(beta)/dtau * r(x) term remains without masks."""
        reward = SeparableReward([0.0, 1.0], VOCAB, 1)
        clean = RatioTable(ratios=np.zeros((1, 2)), masked=np.array([False]))
        step = reward_step(schedule, T, [1], clean, reward, 1.0, 0.5)

        np.testing.assert_allclose(step.rates.rates, 0.0)
        assert step.g == pytest.approx(0.5)

    def test_non_finite_reward_raises(self, schedule):
        reward = CallableReward(lambda row: float("nan"))

        with pytest.raises(RewardError):
            reward_step(schedule, T, [2], table(1.0, 3.0), reward, 1.0, 0.0)

    def test_corrected_posterior(self, schedule):
        step = anneal_step(schedule, T, [2], table(1.0, 3.0), 2.0)

        np.testing.assert_allclose(corrected_posterior(step, 0), [0.1, 0.9])

    def test_corrected_posterior_of_unmasked_position_raises(self, schedule):
        clean = RatioTable(ratios=np.zeros((1, 2)), masked=np.array([False]))
        step = base_step(schedule, T, [0], clean)

        with pytest.raises(ContractError):
            corrected_posterior(step, 0)

    def test_coverage_is_checked(self, schedule):
        with pytest.raises(ContractError):
            base_step(schedule, T, [0], table(1.0, 3.0))


class TestReductions:
    def test_identities_on_random_inputs(self):
        """Degenerate anneal, product, geo_avg and reward settings reduce exactly."""
        for result in reduction_checks(seed=3):
            assert result.passed, result

    def test_many_factor_product_of_copies_is_an_anneal(self, schedule):
        rng = np.random.default_rng(2)
        tokens, (ratios,) = random_tables(rng, 500, 3, 4)
        product = product_step(schedule, 0.3, tokens, ratios, ratios, ratios)
        anneal = anneal_step(schedule, 0.3, tokens, ratios, 3.0)

        np.testing.assert_allclose(product.rates.rates, anneal.rates.rates, rtol=1e-12)
        np.testing.assert_allclose(product.g, anneal.g, rtol=1e-10, atol=1e-10)

    def test_batched_weights_have_one_value_per_state(self, schedule):
        tokens, (ratios,) = random_tables(np.random.default_rng(1), 64, 3, 4)

        assert anneal_step(schedule, 0.3, tokens, ratios, 0.5).g.shape == (64,)


class TestTargets:
    def test_anneal_needs_a_positive_beta(self):
        with pytest.raises(ContractError):
            Anneal(0.0)

    def test_product_needs_two_factors(self, pair_denoiser):
        with pytest.raises(ContractError):
            Product(denoisers=[pair_denoiser])

    def test_geo_avg_betas_must_sum_to_one(self, pair_denoiser):
        with pytest.raises(ContractError):
            GeoAvg(denoisers=[pair_denoiser, pair_denoiser], betas=[0.3, 0.6])

    def test_reward_scale_multiplies_beta(self):
        target = Reward(
            reward=SeparableReward([0.0, 1.0], VOCAB, 1),
            beta_schedule=LinearBeta(2.0),
            scale=0.5,
        )

        assert target.beta(0.5) == pytest.approx(0.5)
        assert target.dbeta(0.5) == pytest.approx(1.0)

    def test_resolve_denoisers(self, pair_denoiser, other_pair_data):
        other = TabularDenoiser(other_pair_data)
        product = Product(denoisers=[pair_denoiser, other])

        assert resolve_denoisers(product, None) == [pair_denoiser, other]
        assert resolve_denoisers(Base(), [pair_denoiser]) == [pair_denoiser]
        with pytest.raises(ContractError):
            resolve_denoisers(Base(), [pair_denoiser, other])

    def test_correct_queries_every_factor(
        self, schedule, pair_denoiser, other_pair_data
    ):
        other = TabularDenoiser(other_pair_data)
        tokens = np.array([[2, 2], [0, 2]])
        step = correct(
            Product(denoisers=[pair_denoiser, other]),
            [pair_denoiser, other],
            schedule,
            0.4,
            0.6,
            tokens,
        )

        assert step.rates.rates.shape == (2, 2, 2)
        assert step.g.shape == (2,)
        np.testing.assert_array_equal(step.rates.rates[1, 0], 0.0)

    def test_corrected_denoiser_of_base_is_the_denoiser(self, schedule, pair_denoiser):
        filler = CorrectedDenoiser(Base(), [pair_denoiser], schedule, tau=0.5)
        tokens = np.array([[2, 2], [1, 2]])

        np.testing.assert_allclose(
            filler.posterior(tokens, 0.5), pair_denoiser.posterior(tokens, 0.5)
        )

    def test_corrected_denoiser_rejects_vanishing_rates(self, schedule):
        """Disjoint factors leave nothing to demask into."""
        first = TabularDenoiser(from_probs([1.0, 0.0], V=2, d=1))
        second = TabularDenoiser(from_probs([0.0, 1.0], V=2, d=1))
        target = Product(denoisers=[first, second])
        filler = CorrectedDenoiser(target, [first, second], schedule, tau=0.5)

        with pytest.raises(ContractError):
            filler.posterior(np.array([[2]]), 0.5)
