"""Built-in example datasets and scenario configurations.

Each scenario bundles an observation array, a model configuration, the
engine defaults it was studied with, and the reference values its queries
are expected to reproduce (used by the regression tests with generous
Monte Carlo bands).  The underlying data ships as plain-text resources in
the package's ingestion formats, so the scenarios double as format
fixtures; ``ndpinfer examples export`` writes them back out to disk.

Scenarios:

* ``pennies``    -- 7 coins x 5 flips, kappa = eps = 1, uniform base.
* ``tacks_k1``   -- 320 thumbtacks x 9 flicks, eps = 2, kappa = 1.
* ``tacks_k10``  -- same data with kappa = 10.
* ``reviews``    -- 50 products, 5-star ratings, kappa = 10, eps = 5;
                    state values 1..5 so mean scores read in stars.
* ``games1/2/3`` -- 10 players' video game scores on 0..499 (scores are
                    rounded integers capped at 499), kappa = eps = 1,
                    base from the discretized gamer distribution
                    Gamer(7/3, 28, 3).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from .errors import UnknownScenarioError
from .gamer import GamerParams, discretize
from .model import ModelConfig, ObservationArray, bin_continuous, load_counts_csv
from .queries import Functional, parse_query

GAMER_PARAMS = GamerParams(r=7.0 / 3.0, c=28.0, alpha=3.0)
GAMES_L = 500

SCENARIO_NAMES = ("pennies", "tacks_k1", "tacks_k10", "reviews", "games1", "games2", "games3")


@dataclass(frozen=True)
class Target:
    """A documented query with the reference value it should reproduce."""

    query: str
    value: float
    tolerance: float
    kind: str = "expectation"  # or "probability_below:<threshold>"

    @property
    def functional(self) -> Functional:
        return parse_query(self.query)


@dataclass(frozen=True)
class Scenario:
    name: str
    data: ObservationArray
    config: ModelConfig
    K: int
    log_scale_factor: float = 0.0
    trim: int = 0
    targets: tuple[Target, ...] = ()
    ess_reference: float | None = None
    row_names: tuple[str, ...] = field(default=(), compare=False)


def _resource_text(filename: str) -> str:
    return (resources.files("ndpinfer.data") / filename).read_text(encoding="utf-8")


def _counts_data(filename: str, L: int) -> ObservationArray:
    import io

    return load_counts_csv(io.StringIO(_resource_text(filename)), L)


def _games_data(filename: str) -> tuple[ObservationArray, tuple[str, ...]]:
    """Raw integer scores binned onto 0..499 with the cap cell at 499."""
    import csv
    import io

    reader = csv.reader(io.StringIO(_resource_text(filename)))
    header = next(reader)
    assert header == ["row_id", "score"]
    order: list[str] = []
    by_id: dict[str, list[float]] = {}
    for rec in reader:
        if not rec:
            continue
        rid, score = rec[0], float(rec[1])
        if rid not in by_id:
            by_id[rid] = []
            order.append(rid)
        by_id[rid].append(score)
    edges = np.arange(1, GAMES_L) - 0.5
    data = bin_continuous([by_id[r] for r in order], edges)
    return data, tuple(order)


def _pennies() -> Scenario:
    data = _counts_data("pennies.csv", 2)
    config = ModelConfig(kappa=1.0, eps=1.0, base=(0.5, 0.5))
    targets = (
        Target("new_agent_component 1", 0.633, 0.02),
        Target("component 5 1", 0.461, 0.02),
        Target("indicator_lt component 5 1 0.5", 0.481, 0.03),
    )
    return Scenario(
        name="pennies", data=data, config=config, K=10_000,
        targets=targets, ess_reference=6067.0,
    )


def _tacks(kappa: float, ess_ref: float) -> Scenario:
    data = _counts_data("tacks.csv", 2)
    config = ModelConfig(kappa=kappa, eps=2.0, base=(0.5, 0.5))
    return Scenario(
        name="tacks_k%g" % kappa, data=data, config=config, K=10_000,
        ess_reference=ess_ref,
    )


def _reviews() -> Scenario:
    data = _counts_data("reviews.csv", 5)
    config = ModelConfig(
        kappa=10.0, eps=5.0, base=(0.2,) * 5, state_values=(1.0, 2.0, 3.0, 4.0, 5.0)
    )
    targets = (
        Target("new_agent_mean", 2.54, 0.20),
        Target("mean_score 50", 2.83, 0.25),
        Target("mean_score 26", 3.8, 0.3),
    )
    return Scenario(
        name="reviews", data=data, config=config, K=100_000,
        log_scale_factor=28.8, targets=targets, ess_reference=561.0,
    )


# Long-term mean-score references per data row, from the studied leaderboards.
_GAMES1_NDP_AVG = (38, 39, 32, 80, 55, 52, 40, 43, 71, 37)
_GAMES2_NDP_AVG = (38, 39, 31, 84, 62, 51, 39, 28, 43, 37)
_GAMES3_NDP_AVG = (198, 31, 26, 37, 45, 34, 72, 52, 67, 56)


def _games(which: int) -> Scenario:
    data, names = _games_data(f"games{which}.csv")
    config = ModelConfig(
        kappa=1.0, eps=1.0, base=tuple(discretize(GAMER_PARAMS, GAMES_L))
    )
    avg = {1: _GAMES1_NDP_AVG, 2: _GAMES2_NDP_AVG, 3: _GAMES3_NDP_AVG}[which]
    targets = [
        Target(f"mean_score {m}", float(avg[m - 1]), 10.0) for m in range(1, 11)
    ]
    ess_ref = {1: 326.0, 2: 1099.0, 3: 207.0}[which]
    if which == 3:
        targets += [
            Target("indicator_lt mean_gap 9 2 0", 0.049, 0.05),
            Target("contest 9 2", 0.786, 0.08),
            Target("indicator_lt mean_gap 9 7 0", 0.625, 0.10),
            Target("contest 9 7", 0.484, 0.08),
        ]
    return Scenario(
        name=f"games{which}", data=data, config=config, K=40_000,
        log_scale_factor=42.0, trim={1: 0, 2: 2, 3: 26}[which],
        targets=tuple(targets), ess_reference=ess_ref, row_names=names,
    )


_BUILDERS = {
    "pennies": _pennies,
    "tacks_k1": lambda: _tacks(1.0, 244.0),
    "tacks_k10": lambda: _tacks(10.0, 388.0),
    "reviews": _reviews,
    "games1": lambda: _games(1),
    "games2": lambda: _games(2),
    "games3": lambda: _games(3),
}


def load_scenario(name: str) -> Scenario:
    """Load a built-in scenario by name; see SCENARIO_NAMES."""
    try:
        builder = _BUILDERS[name]
    except KeyError:
        raise UnknownScenarioError(
            f"unknown scenario {name!r}; choose from {', '.join(SCENARIO_NAMES)}"
        ) from None
    return builder()
