import numpy as np
import pytest

from ndpinfer import (
    EngineOptions,
    Functional,
    ModelConfig,
    ObservationArray,
    UnsupportedQueryError,
    ValidationError,
    WeightedSampleLaw,
    cocluster_matrix,
    estimate,
    expectation,
    law_of,
    new_agent_law,
    parse_query,
    predictive_next,
    probability_below,
    run_batch,
    validate_and_count,
)
from ndpinfer.queries import evaluate_atoms, weighted_se

F = Functional


class TestParse:
    @pytest.mark.parametrize(
        "text",
        [
            "component 5 1",
            "mean_score 50",
            "mean_gap 9 2",
            "contest 9 7",
            "cocluster 1 2",
            "new_agent_component 1",
            "new_agent_mean",
            "indicator_lt component 5 1 0.5",
            "indicator_lt mean_gap 9 2 0",
        ],
    )
    def test_round_trip(self, text):
        f = parse_query(text)
        assert parse_query(str(f)) == f

    @pytest.mark.parametrize("text", ["", "component 5", "frobnicate 1", "contest 1 x", "mean_score 1 2"])
    def test_rejects_malformed(self, text):
        with pytest.raises(UnsupportedQueryError):
            parse_query(text)


class TestLawOf:
    def test_component_mean_matches_direct_average(self, penny_batch):
        law = law_of(penny_batch, F.component(5, 1))
        direct = penny_batch.normalized_weights @ penny_batch.thetas_of_row(4)[:, 1]
        assert expectation(law) == pytest.approx(float(direct), rel=1e-12)

    def test_contest_matches_brute_force(self, penny_batch):
        law = law_of(penny_batch, F.contest(3, 6))
        x = penny_batch.thetas_of_row(2)
        y = penny_batch.thetas_of_row(5)
        brute = np.zeros(penny_batch.K)
        for l in range(2):
            for lp in range(l):
                brute += x[:, l] * y[:, lp]
        np.testing.assert_allclose(law.atoms, brute, rtol=1e-12)

    def test_contest_of_point_mass_with_itself_is_zero(self):
        # no strict win against an identical point mass
        data = validate_and_count([[1] * 30], 2)
        cfg = ModelConfig(kappa=1.0, eps=1e-6, base=(0.5, 0.5))
        batch = run_batch(data, cfg, EngineOptions(K=200, seed=4))
        vals = evaluate_atoms(batch, F.contest(1, 1))
        # theta is numerically a point mass at state 1, so C ~ theta1*theta0 ~ 0
        assert np.all(vals < 1e-4)

    def test_row_index_validated(self, penny_batch):
        with pytest.raises(ValidationError):
            law_of(penny_batch, F.component(8, 1))
        with pytest.raises(ValidationError):
            law_of(penny_batch, F.component(0, 1))

    def test_indicator_composes(self, penny_batch):
        p = expectation(law_of(penny_batch, F.indicator_lt(F.component(5, 1), 0.5)))
        q = probability_below(law_of(penny_batch, F.component(5, 1)), 0.5)
        assert p == pytest.approx(q, abs=1e-12)


class TestNewAgent:
    def test_mixture_linearity(self, penny_batch):
        """Mean of the mixture equals the kappa/(kappa+M) convex combination."""
        law = new_agent_law(penny_batch, F.new_agent_component(1))
        kappa, M = 1.0, 7
        rows = [
            expectation(law_of(penny_batch, F.component(m, 1))) for m in range(1, 8)
        ]
        expected = kappa / (kappa + M) * 0.5 + sum(rows) / (kappa + M)
        assert expectation(law) == pytest.approx(expected, abs=1e-12)

    def test_masses_sum_to_one(self, penny_batch):
        law = new_agent_law(penny_batch, F.new_agent_mean())
        assert law.prior_mass == pytest.approx(1 / 8)
        total = float(law.weights.sum()) + law.prior_mass
        assert total == pytest.approx(1.0, abs=1e-10)

    def test_prior_only_when_no_data(self):
        data = ObservationArray.empty(3)
        cfg = ModelConfig(kappa=2.0, eps=1.0, base=(0.5, 0.25, 0.25))
        batch = run_batch(data, cfg, EngineOptions(K=16, seed=0))
        law = new_agent_law(batch, F.new_agent_component(2))
        assert law.prior_mass == 1.0
        assert expectation(law) == pytest.approx(0.25, abs=1e-12)

    def test_probability_uses_prior_atoms(self, penny_batch):
        law = new_agent_law(penny_batch, F.new_agent_component(1))
        p = probability_below(law, 0.5)
        assert 0.0 < p < 1.0
        # prior contributes mass: removing it changes the probability
        rows_only = WeightedSampleLaw(
            atoms=law.atoms, weights=law.weights / law.weights.sum()
        )
        assert p != pytest.approx(probability_below(rows_only, 0.5), abs=1e-4)

    def test_estimate_matches_law_expectation(self, penny_batch):
        v, se = estimate(penny_batch, F.new_agent_component(1))
        law = new_agent_law(penny_batch, F.new_agent_component(1))
        assert v == pytest.approx(expectation(law), abs=1e-12)
        assert 0 < se < 0.01

    def test_analytic_and_sampled_prior_means_agree(self, penny_batch):
        # both computation paths for the prior component are exposed
        law = new_agent_law(penny_batch, F.new_agent_component(1))
        assert law.prior_mean == pytest.approx(0.5)
        sampled = float(np.mean(law.prior_atoms))
        se = float(np.std(law.prior_atoms)) / np.sqrt(law.prior_atoms.size)
        assert sampled == pytest.approx(law.prior_mean, abs=4 * se)


class TestProbabilityBelow:
    def test_uniform_two_atoms(self):
        law = WeightedSampleLaw(atoms=np.array([0.0, 1.0]), weights=np.array([0.5, 0.5]))
        assert expectation(law) == pytest.approx(0.5)
        assert probability_below(law, 0.5) == pytest.approx(0.5)
        # strict inequality: the atom at the threshold is excluded
        assert probability_below(law, 1.0) == pytest.approx(0.5)
        assert probability_below(law, 1.0 + 1e-12) == pytest.approx(1.0)

    def test_monotone_transform_invariance(self, penny_batch):
        """Doubling atoms and threshold preserves sub-threshold mass exactly."""
        law = law_of(penny_batch, F.mean_score(2))
        doubled = WeightedSampleLaw(atoms=2.0 * law.atoms, weights=law.weights)
        for t in (0.3, 0.5, 0.9):
            assert probability_below(law, t) == probability_below(doubled, 2.0 * t)


class TestCocluster:
    def test_single_row(self):
        data = validate_and_count([[0, 1]], 2)
        batch = run_batch(data, ModelConfig(kappa=1.0, eps=1.0, base=(0.5, 0.5)), EngineOptions(K=64, seed=1))
        np.testing.assert_allclose(cocluster_matrix(batch), [[1.0]])

    def test_symmetry_unit_diagonal_and_range(self, penny_batch):
        C = cocluster_matrix(penny_batch)
        np.testing.assert_array_equal(C, C.T)
        np.testing.assert_allclose(np.diag(C), 1.0, atol=1e-12)
        assert np.all(C >= 0) and np.all(C <= 1 + 1e-12)

    def test_tiny_kappa_forces_coclustering(self):
        from ndpinfer import enumerate_posterior, exact_expectation

        data = validate_and_count([[1], [1]], 2)
        cfg = ModelConfig(kappa=1e-8, eps=1.0, base=(0.5, 0.5))
        exact = exact_expectation(
            enumerate_posterior(data, cfg), F.cocluster(1, 2), data, cfg
        )
        assert exact > 0.999
        batch = run_batch(data, cfg, EngineOptions(K=2000, seed=3))
        C = cocluster_matrix(batch)
        assert C[0, 1] == pytest.approx(exact, abs=1e-3)

    def test_matches_functional_path(self, penny_batch):
        C = cocluster_matrix(penny_batch)
        v, _ = estimate(penny_batch, F.cocluster(2, 6))
        assert C[1, 5] == pytest.approx(v, rel=1e-10)


class TestPredictiveNext:
    def test_sums_to_one(self, penny_batch):
        for m in (1, 4, 7, 8):
            vec = predictive_next(penny_batch, m)
            assert vec.sum() == pytest.approx(1.0, abs=1e-10)

    def test_single_row_matches_dirichlet_posterior_mean(self):
        data = validate_and_count([[1, 1, 0, 2]], 3)
        cfg = ModelConfig(kappa=1.0, eps=2.0, base=(0.3, 0.4, 0.3))
        batch = run_batch(data, cfg, EngineOptions(K=30_000, seed=8))
        got = predictive_next(batch, 1)
        alpha = 2.0 * np.array([0.3, 0.4, 0.3]) + np.array([1, 2, 1])
        np.testing.assert_allclose(got, alpha / alpha.sum(), atol=3e-3)

    def test_no_data_new_agent_returns_base(self):
        data = ObservationArray.empty(4)
        cfg = ModelConfig(kappa=1.5, eps=1.0, base=(0.1, 0.2, 0.3, 0.4))
        batch = run_batch(data, cfg, EngineOptions(K=8, seed=0))
        np.testing.assert_allclose(predictive_next(batch, 1), cfg.base_array, atol=1e-15)


def test_weighted_se_uniform_reduces_to_classic():
    rng = np.random.Generator(np.random.Philox(1))
    a = rng.random(500)
    w = np.full(500, 1 / 500)
    classic = a.std() / np.sqrt(500)
    assert weighted_se(a, w) == pytest.approx(classic, rel=1e-10)
