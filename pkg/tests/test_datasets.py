import numpy as np
import pytest

from ndpinfer import UnknownScenarioError, load_scenario

# printed per-product averages from the review table, for transcription checks
REVIEW_AVERAGES = [
    2.98, 2.11, 2.46, 2.83, 2.77, 2.35, 1.69, 2.61, 2.16, 2.13,
    3.03, 2.86, 2.07, 1.86, 2.52, 2.84, 2.12, 2.75, 1.13, 2.23,
    2.94, 2.17, 2.18, 3.06, 2.53, 4.06, 2.94, 2.07, 1.93, 2.71,
    1.5, 2.43, 3.0, 2.0, 2.0, 1.64, 3.27, 1.73, 1.55, 3.2,
    2.11, 1.5, 1.8, 1.5, 1.67, 2.67, 1.33, 3.0, 3.0, 3.5,
]


def test_unknown_name():
    with pytest.raises(UnknownScenarioError):
        load_scenario("nope")


class TestPennies:
    def test_shape_and_params(self, pennies):
        assert pennies.data.M == 7
        assert set(pennies.data.row_lengths) == {5}
        assert pennies.config.kappa == 1.0 and pennies.config.eps == 1.0

    def test_totals(self, pennies):
        # 35 flips, 23 heads
        assert pennies.data.counts.sum() == 35
        assert pennies.data.counts[:, 1].sum() == 23

    def test_coin_five(self, pennies):
        np.testing.assert_array_equal(pennies.data.counts[4], [4, 1])


class TestTacks:
    def test_shape(self):
        sc = load_scenario("tacks_k1")
        assert sc.data.M == 320
        assert set(sc.data.row_lengths) == {9}
        np.testing.assert_array_equal(sc.data.counts[0], [2, 7])
        assert sc.config.eps == 2.0 and sc.config.kappa == 1.0

    def test_kappa_ten_variant(self):
        a = load_scenario("tacks_k1")
        b = load_scenario("tacks_k10")
        np.testing.assert_array_equal(a.data.counts, b.data.counts)
        assert b.config.kappa == 10.0


class TestReviews:
    def test_params(self):
        sc = load_scenario("reviews")
        assert sc.data.M == 50 and sc.data.L == 5
        assert sc.config.kappa == 10.0 and sc.config.eps == 5.0
        assert sc.config.state_values == (1.0, 2.0, 3.0, 4.0, 5.0)
        assert sc.log_scale_factor == 28.8

    def test_averages_match_printed_table(self):
        sc = load_scenario("reviews")
        stars = np.arange(1, 6)
        for m in range(50):
            counts = sc.data.counts[m]
            avg = float(stars @ counts) / counts.sum()
            assert avg == pytest.approx(REVIEW_AVERAGES[m], abs=0.005), f"product {m + 1}"

    def test_population_summary(self):
        sc = load_scenario("reviews")
        n = sc.data.counts.sum()
        stars = np.arange(1, 6)
        grand = float((sc.data.counts * stars).sum())
        assert round(grand / n, 1) == 2.4
        assert round(n / 50) == 23


class TestGames:
    def test_rows_and_binning(self):
        sc = load_scenario("games3")
        assert sc.data.M == 10 and sc.data.L == 500
        assert list(sc.data.row_lengths) == [25, 20, 10, 7, 5, 4, 4, 2, 1, 1]
        assert sc.row_names[8] == "Asparagus Soda"
        assert sc.trim == 26 and sc.log_scale_factor == 42.0

    def test_rows_match_leaderboard_statistics(self):
        # per-player game counts, high scores, and rounded average scores
        sc = load_scenario("games3")
        lboard = {
            "Vertigo Gal": (25, 475, 207),
            "Potato Log": (20, 87, 30),
            "The Thing": (10, 40, 24),
            "The Matrix": (7, 78, 35),
            "Running Stardust": (5, 65, 44),
            "Goat Radish": (4, 51, 33),
            "Pumpkins": (4, 117, 79),
            "Sweet Rolls": (2, 65, 46),
            "Asparagus Soda": (1, 86, 86),
            "The Pianist Spider": (1, 62, 62),
        }
        for m, name in enumerate(sc.row_names):
            n, hi, avg = lboard[name]
            labels = np.repeat(np.arange(500), sc.data.counts[m])
            assert labels.size == n
            assert labels.max() == hi
            assert round(labels.mean()) == avg

    def test_games2_differs_from_games1_in_two_scores(self):
        a = load_scenario("games1")
        b = load_scenario("games2")
        diff = b.data.counts.astype(int) - a.data.counts.astype(int)
        # The Matrix (row 8): 15 -> 14; Goat Radish (row 9): 38 -> 39
        assert diff[7, 15] == -1 and diff[7, 14] == 1
        assert diff[8, 38] == -1 and diff[8, 39] == 1
        rows_changed = np.flatnonzero(np.abs(diff).sum(axis=1))
        assert rows_changed.tolist() == [7, 8]

    def test_base_is_discretized_gamer(self):
        from ndpinfer.datasets import GAMER_PARAMS
        from ndpinfer.gamer import discretize

        sc = load_scenario("games1")
        np.testing.assert_allclose(
            sc.config.base_array, discretize(GAMER_PARAMS, 500), rtol=1e-12
        )


def test_all_scenarios_have_consistent_dimensions():
    for name in ("pennies", "tacks_k1", "tacks_k10", "reviews", "games1", "games2", "games3"):
        sc = load_scenario(name)
        assert sc.data.L == sc.config.L
        assert sc.K >= 1
        for t in sc.targets:
            t.functional  # parses
