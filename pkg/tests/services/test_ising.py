#!/usr/bin/env python3

"""This module tests the Ising testbed."""

import numpy as np
import pytest

from maskfk.exceptions import CapacityError, ContractError, DomainError
from maskfk.services.correctors import Anneal
from maskfk.services.ising import (
    CRITICAL_BETA,
    BoltzmannSpec,
    IsingModel,
    anneal_experiment,
    beta_sweep,
    bootstrap_sigma,
    config_hash,
    energy,
    exact_boltzmann,
    glauber_transition_matrix,
    magnetization,
    replicate_experiment,
    row_correlations,
    sample_chain,
    swendsen_wang_step,
    swendsen_wang_transition_matrix,
)
from maskfk.services.oracle import tv_distance, unmasked_target

UP = [1, 1, 1, 1]
CHECKERBOARD = [1, 0, 0, 1]


@pytest.fixture
def small():
    return IsingModel(L=2)


class TestObservables:
    def test_lattice_has_two_bonds_per_site(self, small):
        assert small.bonds.shape == (8, 2)
        assert small.neighbour_table.shape == (4, 4)

    def test_energy(self, small):
        assert energy(small, UP) == -8.0
        assert energy(small, CHECKERBOARD) == 8.0
        assert energy(IsingModel(L=2, h=0.5), UP) == -10.0

    def test_energy_of_a_four_by_four_lattice(self):
        model = IsingModel(L=4)
        up = np.ones(16, dtype=int)
        flipped = up.copy()
        flipped[5] = 0
        checkerboard = (np.add.outer(np.arange(4), np.arange(4)) % 2).ravel()

        assert energy(model, up) == -32.0
        assert energy(model, checkerboard) == 32.0
        assert energy(model, flipped) == -24.0

    def test_batched_energy(self, small):
        np.testing.assert_array_equal(energy(small, [UP, CHECKERBOARD]), [-8.0, 8.0])

    def test_magnetization(self):
        assert magnetization(UP) == 1.0
        assert magnetization([0, 0, 0, 0]) == 1.0
        assert magnetization(CHECKERBOARD) == 0.0

    def test_row_correlations(self):
        model = IsingModel(L=4)
        stripes = np.tile([1, 0, 1, 0], 4)

        np.testing.assert_allclose(row_correlations(model, np.ones(16)), [1.0, 1.0])
        np.testing.assert_allclose(row_correlations(model, stripes), [-1.0, 1.0])

    def test_masked_configurations_are_rejected(self, small):
        with pytest.raises(DomainError):
            energy(small, [1, 2, 1, 1])

    def test_model_validation(self):
        with pytest.raises(ContractError):
            IsingModel(L=1)
        with pytest.raises(ContractError):
            BoltzmannSpec(model=IsingModel(L=2), beta=-0.1)

    def test_config_hash(self):
        assert config_hash(UP) == config_hash(np.array(UP))
        assert config_hash(UP) != config_hash(CHECKERBOARD)
        assert len(config_hash(UP)) == 12


class TestExactBoltzmann:
    def test_infinite_temperature_is_uniform(self, small):
        exact = exact_boltzmann(BoltzmannSpec(model=small, beta=0.0))

        np.testing.assert_allclose(exact.probs, 1.0 / 16)
        assert exact.mean_energy == pytest.approx(0.0)

    def test_ratio_of_ground_state_to_checkerboard(self, small):
        exact = exact_boltzmann(BoltzmannSpec(model=small, beta=0.3))
        ratio = exact.data.prob(UP) / exact.data.prob(CHECKERBOARD)

        assert ratio == pytest.approx(np.exp(0.3 * 16))

    def test_energy_variance_is_the_heat_capacity(self, small):
        """d<E>/d(beta) = -Var(E)."""
        beta, h = 0.3, 1e-5
        low = exact_boltzmann(BoltzmannSpec(model=small, beta=beta - h))
        high = exact_boltzmann(BoltzmannSpec(model=small, beta=beta + h))
        exact = exact_boltzmann(BoltzmannSpec(model=small, beta=beta))
        derivative = (high.mean_energy - low.mean_energy) / (2 * h)

        assert derivative == pytest.approx(-exact.energy_variance, rel=1e-6)

    def test_low_temperature_mass_sits_on_the_ground_states(self):
        exact = exact_boltzmann(BoltzmannSpec(model=IsingModel(L=3), beta=3.0))

        assert exact.data.prob(np.ones(9)) + exact.data.prob(np.zeros(9)) > 0.999

    def test_capacity_limit(self, small):
        with pytest.raises(CapacityError):
            exact_boltzmann(BoltzmannSpec(model=small, beta=0.3), limit=8)

    @pytest.mark.parametrize("L", [2, 3])
    @pytest.mark.parametrize("multiplier", [0.5, 2.0])
    def test_annealed_data_is_the_colder_boltzmann(self, schedule, L, multiplier):
        """p ** m renormalized is the Boltzmann law at beta * m."""
        model = IsingModel(L=L)
        data = exact_boltzmann(BoltzmannSpec(model=model, beta=0.3)).data
        colder = exact_boltzmann(BoltzmannSpec(model=model, beta=0.3 * multiplier))

        np.testing.assert_allclose(
            unmasked_target(data, Anneal(multiplier), schedule),
            colder.probs,
            rtol=1e-10,
        )

    @pytest.mark.parametrize("L", [2, 3, 4])
    def test_zero_field_energy_is_flip_symmetric(self, L):
        """H(sigma) = H(-sigma) when h = 0."""
        model = IsingModel(L=L)
        configs = np.random.default_rng(L).integers(0, 2, size=(500, L * L))
        flipped = energy(model, 1 - configs)
        field = IsingModel(L=L, h=0.5)

        np.testing.assert_array_equal(energy(model, configs), flipped)
        assert energy(field, np.ones(L * L)) != energy(field, np.zeros(L * L))

    def test_zero_field_law_is_flip_symmetric(self):
        exact = exact_boltzmann(BoltzmannSpec(model=IsingModel(L=3), beta=0.7))

        # Flipping every token maps index i to 2^n - 1 - i.
        np.testing.assert_allclose(exact.probs, exact.probs[::-1], rtol=1e-12)


class TestReferenceSamplers:
    @pytest.mark.parametrize("h", [0.0, 0.2])
    def test_glauber_keeps_the_boltzmann_distribution(self, h):
        spec = BoltzmannSpec(model=IsingModel(L=2, h=h), beta=0.4)
        matrix = glauber_transition_matrix(spec)
        probs = exact_boltzmann(spec).probs

        np.testing.assert_allclose(matrix.sum(axis=1), 1.0)
        np.testing.assert_allclose(probs @ matrix, probs, atol=1e-12)

    @pytest.mark.parametrize("h", [0.0, 0.2])
    def test_swendsen_wang_keeps_the_boltzmann_distribution(self, h):
        spec = BoltzmannSpec(model=IsingModel(L=2, h=h), beta=0.4)
        matrix = swendsen_wang_transition_matrix(spec)
        probs = exact_boltzmann(spec).probs

        np.testing.assert_allclose(matrix.sum(axis=1), 1.0)
        np.testing.assert_allclose(probs @ matrix, probs, atol=1e-12)

    def test_swendsen_wang_needs_a_ferromagnet(self):
        spec = BoltzmannSpec(model=IsingModel(L=2, J=-1.0), beta=0.4)

        with pytest.raises(ContractError):
            swendsen_wang_step(np.random.default_rng(0), spec, UP)

    def test_transition_matrix_bond_limit(self):
        spec = BoltzmannSpec(model=IsingModel(L=3), beta=0.4)

        with pytest.raises(CapacityError):
            swendsen_wang_transition_matrix(spec)

    def test_chains_are_seeded(self, small):
        spec = BoltzmannSpec(model=small, beta=0.4)
        first = sample_chain(spec, 50, chains=8, burn_in=10, seed=3)
        second = sample_chain(spec, 50, chains=8, burn_in=10, seed=3)

        assert first.shape == (50, 4)
        assert set(np.unique(first)) <= {0, 1}
        np.testing.assert_array_equal(first, second)

    @pytest.mark.slow
    @pytest.mark.parametrize("sampler", ["swendsen_wang", "glauber"])
    def test_chain_histogram_matches_enumeration(self, sampler):
        spec = BoltzmannSpec(model=IsingModel(L=3), beta=0.4)
        samples = sample_chain(spec, 1_000_000, sampler=sampler, burn_in=500, seed=1)
        exact = exact_boltzmann(spec)
        codes = exact.data.enumeration.index(samples)
        histogram = np.bincount(codes, minlength=512) / len(samples)

        assert tv_distance(histogram, exact.probs) <= 0.02


class TestAnnealing:
    @pytest.mark.slow
    def test_unit_multiplier_reproduces_the_data_moments(self):
        """beta_mult = 1 samples the data distribution itself."""
        spec = BoltzmannSpec(model=IsingModel(L=2), beta=0.3)
        summary = replicate_experiment(spec, 1.0, 20, K=1024, n_steps=50)

        assert summary.exact_mean_energy == pytest.approx(
            exact_boltzmann(spec).mean_energy
        )
        assert summary.within(3.0), summary

    @pytest.mark.slow
    def test_desk_scale_anneal_matches_exact_moments(self):
        """L=4, beta 0.3 -> 0.4 over 20 seeds, against exact enumeration."""
        spec = BoltzmannSpec(model=IsingModel(L=4), beta=0.3)
        summary = replicate_experiment(
            spec, 4.0 / 3.0, 20, K=4096, n_steps=200, include_base=True
        )

        assert summary.reports[0].beta_target == pytest.approx(0.4)
        assert summary.within(3.0), summary
        assert summary.correlation_mse <= 2.0 * summary.base_correlation_mse

    def test_replicates_use_consecutive_seeds(self):
        spec = BoltzmannSpec(model=IsingModel(L=2), beta=0.2)
        summary = replicate_experiment(spec, 2.0, 3, seed=5, K=64, n_steps=10)
        energies = [report.mean_energy for report in summary.reports]

        assert summary.seeds == [5, 6, 7]
        assert [report.seed for report in summary.reports] == [5, 6, 7]
        assert summary.mean_energy == pytest.approx(np.mean(energies))
        assert summary.energy_sigma >= 0.0
        assert summary.base_correlation_mse is None

    def test_one_replicate_has_no_spread(self):
        spec = BoltzmannSpec(model=IsingModel(L=2), beta=0.2)

        with pytest.raises(ContractError):
            replicate_experiment(spec, 2.0, 1, K=64, n_steps=10)

    def test_bootstrap_sigma_of_the_mean(self):
        """The bootstrap spread of a mean shrinks like sd / sqrt(n)."""
        values = np.tile([0.0, 1.0], 50)
        sigma = bootstrap_sigma(values, np.random.default_rng(0), 4000)

        assert sigma == pytest.approx(0.05, rel=0.1)
        with pytest.raises(ContractError):
            bootstrap_sigma([1.0], np.random.default_rng(0))

    def test_report_fields(self):
        spec = BoltzmannSpec(model=IsingModel(L=2), beta=0.3)
        report = anneal_experiment(
            spec,
            2.0,
            K=128,
            n_steps=20,
            reference_samples=64,
            burn_in=10,
            include_guidance=True,
            include_base=True,
        )

        assert report.supercritical == (0.6 > CRITICAL_BETA)
        assert 1.0 - 1e-9 <= report.terminal_ess <= 128.0 + 1e-9
        assert report.w2_energy_mcmc is not None
        assert report.guidance_mean_energy is not None
        assert report.base_correlation_mse is not None
        assert len(report.correlations) == 1
        assert len(report.samples["energy"]) == 128

    def test_sweep_has_one_row_per_multiplier(self):
        spec = BoltzmannSpec(model=IsingModel(L=2), beta=0.2)
        rows = beta_sweep(spec, [0.5, 1.0, 2.0], K=64, n_steps=10)

        assert [row.beta_target for row in rows] == pytest.approx([0.1, 0.2, 0.4])
        assert all(row.terminal_ess <= 64.0 + 1e-9 for row in rows)
