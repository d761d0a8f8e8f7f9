"""Posterior inference for row-exchangeable arrays under a nested
Dirichlet process prior on a finite state space, via sequential
imputation (weighted Monte Carlo), with an exact partition-enumeration
oracle for small instances."""

from .datasets import Scenario, load_scenario
from .engine import (
    EngineOptions,
    SimulationBatch,
    WeightedSimulation,
    ess,
    ess_from_log,
    run_batch,
    simulate_one,
    trim_heaviest,
)
from .errors import (
    DegenerateBatchError,
    DegenerateLawError,
    DomainError,
    NdpError,
    OracleCapError,
    UnknownScenarioError,
    UnsupportedQueryError,
    ValidationError,
)
from .gamer import GamerParams
from .kde import KdeCurve, kde, scott_bandwidth, scott_factor
from .model import (
    ModelConfig,
    ObservationArray,
    bin_continuous,
    validate_and_count,
)
from .oracle import PartitionPosterior, enumerate_posterior, exact_expectation
from .queries import (
    Functional,
    WeightedSampleLaw,
    cocluster_matrix,
    estimate,
    expectation,
    law_of,
    new_agent_law,
    parse_query,
    predictive_next,
    probability_below,
)

__version__ = "0.1.0"

__all__ = [
    "DegenerateBatchError",
    "DegenerateLawError",
    "DomainError",
    "EngineOptions",
    "Functional",
    "GamerParams",
    "KdeCurve",
    "ModelConfig",
    "NdpError",
    "ObservationArray",
    "OracleCapError",
    "PartitionPosterior",
    "Scenario",
    "SimulationBatch",
    "UnknownScenarioError",
    "UnsupportedQueryError",
    "ValidationError",
    "WeightedSampleLaw",
    "WeightedSimulation",
    "bin_continuous",
    "cocluster_matrix",
    "enumerate_posterior",
    "ess",
    "ess_from_log",
    "estimate",
    "exact_expectation",
    "expectation",
    "kde",
    "law_of",
    "load_scenario",
    "new_agent_law",
    "parse_query",
    "predictive_next",
    "probability_below",
    "run_batch",
    "scott_bandwidth",
    "scott_factor",
    "simulate_one",
    "trim_heaviest",
    "validate_and_count",
]
