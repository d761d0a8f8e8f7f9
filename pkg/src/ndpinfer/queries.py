"""Posterior summaries of a simulation batch.

A :class:`Functional` names a scalar map of the simulated row vectors.
Row indices in functionals are 1-based (matching the data tables the
queries come from); state labels are 0-based.  Kinds:

* ``component m l``          -- theta_{m,l}
* ``mean_score m``           -- sum_l v_l * theta_{m,l} with the config's
                                state values v (labels by default)
* ``mean_gap m1 m2``         -- mean_score(m1) - mean_score(m2)
* ``contest m1 m2``          -- sum_{l > l'} theta_{m1,l} * theta_{m2,l'},
                                the win probability of row m1 in a single
                                head-to-head draw (ties count as losses)
* ``new_agent_component l``  -- theta_{M+1,l} of an unobserved row
* ``new_agent_mean``         -- mean score of an unobserved row
* ``indicator_lt <inner> t`` -- 1{inner < t}
* ``cocluster i j``          -- 1{rows i and j share a cluster root}

``law_of`` turns a batch and functional into a weighted sample law;
new-agent laws are prior/posterior mixtures carrying mass kappa/(kappa+M)
on the base-measure pushforward, represented by an auxiliary seeded Monte
Carlo sample (and, for linear functionals, an analytic prior mean).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dirichlet import sample_dirichlet
from .engine import SimulationBatch
from .errors import UnsupportedQueryError, ValidationError

# Mixes the batch seed into the auxiliary prior-sample stream.
_PRIOR_STREAM_TAG = 0x9E3779B9

DEFAULT_PRIOR_DRAWS = 10_000

_ROW_KINDS = {"component", "mean_score", "mean_gap", "contest", "cocluster"}
_NEW_AGENT_KINDS = {"new_agent_component", "new_agent_mean"}


@dataclass(frozen=True)
class Functional:
    kind: str
    row: int = 0
    row2: int = 0
    state: int = 0
    threshold: float = 0.0
    inner: "Functional | None" = None

    # -- constructors -------------------------------------------------
    @staticmethod
    def component(m: int, l: int) -> "Functional":
        return Functional("component", row=m, state=l)

    @staticmethod
    def mean_score(m: int) -> "Functional":
        return Functional("mean_score", row=m)

    @staticmethod
    def mean_gap(m1: int, m2: int) -> "Functional":
        return Functional("mean_gap", row=m1, row2=m2)

    @staticmethod
    def contest(m1: int, m2: int) -> "Functional":
        return Functional("contest", row=m1, row2=m2)

    @staticmethod
    def new_agent_component(l: int) -> "Functional":
        return Functional("new_agent_component", state=l)

    @staticmethod
    def new_agent_mean() -> "Functional":
        return Functional("new_agent_mean")

    @staticmethod
    def cocluster(i: int, j: int) -> "Functional":
        return Functional("cocluster", row=i, row2=j)

    @staticmethod
    def indicator_lt(inner: "Functional", threshold: float) -> "Functional":
        return Functional("indicator_lt", threshold=float(threshold), inner=inner)

    # -- rendering / parsing ------------------------------------------
    def __str__(self) -> str:
        k = self.kind
        if k == "component":
            return f"component {self.row} {self.state}"
        if k == "mean_score":
            return f"mean_score {self.row}"
        if k in ("mean_gap", "contest", "cocluster"):
            return f"{k} {self.row} {self.row2}"
        if k == "new_agent_component":
            return f"new_agent_component {self.state}"
        if k == "new_agent_mean":
            return "new_agent_mean"
        if k == "indicator_lt":
            return f"indicator_lt {self.inner} {self.threshold:g}"
        raise UnsupportedQueryError(f"unknown functional kind {k!r}")

    @property
    def is_new_agent(self) -> bool:
        return self.kind in _NEW_AGENT_KINDS or (
            self.kind == "indicator_lt" and self.inner is not None and self.inner.is_new_agent
        )


def parse_query(text: str) -> Functional:
    """Parse the flat whitespace-separated query language (see README)."""
    tokens = text.split()
    f, rest = _parse_tokens(tokens)
    if rest:
        raise UnsupportedQueryError(f"trailing tokens {rest!r} in query {text!r}")
    return f


def _parse_tokens(tokens: list[str]):
    if not tokens:
        raise UnsupportedQueryError("empty query")
    kind, rest = tokens[0], tokens[1:]

    def take_ints(n):
        nonlocal rest
        if len(rest) < n:
            raise UnsupportedQueryError(f"query verb {kind!r} needs {n} argument(s)")
        vals = []
        for tok in rest[:n]:
            try:
                vals.append(int(tok))
            except ValueError:
                raise UnsupportedQueryError(f"expected integer, got {tok!r}") from None
        rest = rest[n:]
        return vals

    if kind == "component":
        m, l = take_ints(2)
        return Functional.component(m, l), rest
    if kind == "mean_score":
        (m,) = take_ints(1)
        return Functional.mean_score(m), rest
    if kind in ("mean_gap", "contest", "cocluster"):
        a, b = take_ints(2)
        return Functional(kind, row=a, row2=b), rest
    if kind == "new_agent_component":
        (l,) = take_ints(1)
        return Functional.new_agent_component(l), rest
    if kind == "new_agent_mean":
        return Functional.new_agent_mean(), rest
    if kind == "indicator_lt":
        inner, rest2 = _parse_tokens(rest)
        if not rest2:
            raise UnsupportedQueryError("indicator_lt needs a threshold")
        try:
            thr = float(rest2[0])
        except ValueError:
            raise UnsupportedQueryError(f"bad threshold {rest2[0]!r}") from None
        return Functional.indicator_lt(inner, thr), rest2[1:]
    raise UnsupportedQueryError(f"unknown query verb {kind!r}")


@dataclass(frozen=True)
class WeightedSampleLaw:
    """Atoms with weights, plus an optional prior mixture component.

    ``weights`` sum to 1 - ``prior_mass``; the prior component (mass
    ``prior_mass``) is represented by equally weighted ``prior_atoms`` and,
    when the functional is linear, an analytic ``prior_mean``.
    """

    atoms: np.ndarray
    weights: np.ndarray
    prior_mass: float = 0.0
    prior_atoms: np.ndarray | None = None
    prior_mean: float | None = None

    def __post_init__(self):
        atoms = np.asarray(self.atoms, dtype=float)
        weights = np.asarray(self.weights, dtype=float)
        if atoms.shape != weights.shape or atoms.ndim != 1:
            raise ValidationError("atoms and weights must be 1-d arrays of equal length")
        if self.prior_mass > 0 and self.prior_atoms is None:
            raise ValidationError("a prior component needs Monte Carlo atoms")
        total = float(weights.sum()) + self.prior_mass
        if abs(total - 1.0) > 1e-10:
            raise ValidationError(f"law mass sums to {total!r}, not 1")
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "weights", weights)

    def all_atoms(self) -> tuple[np.ndarray, np.ndarray]:
        """Atoms and weights with the prior sample folded in."""
        if self.prior_mass == 0.0:
            return self.atoms, self.weights
        pa = np.asarray(self.prior_atoms, dtype=float)
        pw = np.full(pa.size, self.prior_mass / pa.size)
        return np.concatenate([self.atoms, pa]), np.concatenate([self.weights, pw])


def _check_row(batch: SimulationBatch, m: int) -> int:
    if not (1 <= m <= batch.M):
        raise ValidationError(f"row index {m} outside [1, {batch.M}]")
    return m - 1


def _check_state(batch: SimulationBatch, l: int) -> int:
    if not (0 <= l < batch.L):
        raise ValidationError(f"state label {l} outside [0, {batch.L})")
    return l


def _contest_values(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    # sum_{l > l'} x_l y_{l'} = sum_l x_l * cumsum(y)_{l-1}
    cy = np.cumsum(y, axis=1)
    return np.einsum("kl,kl->k", x[:, 1:], cy[:, :-1])


def evaluate_atoms(batch: SimulationBatch, f: Functional) -> np.ndarray:
    """Evaluate a (non new-agent) functional on every simulation."""
    kind = f.kind
    if kind == "component":
        m = _check_row(batch, f.row)
        l = _check_state(batch, f.state)
        return batch.thetas_of_row(m)[:, l].astype(float)
    if kind == "mean_score":
        m = _check_row(batch, f.row)
        return batch.thetas_of_row(m) @ batch.config.values_array
    if kind == "mean_gap":
        v = batch.config.values_array
        a = batch.thetas_of_row(_check_row(batch, f.row)) @ v
        b = batch.thetas_of_row(_check_row(batch, f.row2)) @ v
        return a - b
    if kind == "contest":
        x = batch.thetas_of_row(_check_row(batch, f.row))
        y = batch.thetas_of_row(_check_row(batch, f.row2))
        return _contest_values(x, y)
    if kind == "cocluster":
        i = _check_row(batch, f.row)
        j = _check_row(batch, f.row2)
        return (batch.cluster_of[:, i] == batch.cluster_of[:, j]).astype(float)
    if kind == "indicator_lt":
        return (evaluate_atoms(batch, f.inner) < f.threshold).astype(float)
    if kind in _NEW_AGENT_KINDS:
        raise UnsupportedQueryError(
            f"{kind} describes an unobserved row; use new_agent_law or estimate"
        )
    raise UnsupportedQueryError(f"unknown functional kind {kind!r}")


def law_of(batch: SimulationBatch, f: Functional) -> WeightedSampleLaw:
    """Weighted law of a functional of the simulated row vectors.

    New-agent functionals are delegated to :func:`new_agent_law`.
    """
    if f.is_new_agent:
        return new_agent_law(batch, f)
    return WeightedSampleLaw(atoms=evaluate_atoms(batch, f), weights=batch.normalized_weights)


def _single_vector_eval(f: Functional, thetas: np.ndarray, values: np.ndarray) -> np.ndarray:
    """Evaluate a new-agent functional on an (n, L) array of simplex draws."""
    if f.kind == "new_agent_component":
        return thetas[:, f.state].astype(float)
    if f.kind == "new_agent_mean":
        return thetas @ values
    if f.kind == "indicator_lt":
        return (_single_vector_eval(f.inner, thetas, values) < f.threshold).astype(float)
    raise UnsupportedQueryError(f"{f.kind} is not a functional of a single row vector")


def _as_new_agent(f: Functional) -> Functional:
    """Allow component/mean_score with the row ignored, per-row semantics."""
    if f.kind == "component":
        return Functional.new_agent_component(f.state)
    if f.kind == "mean_score":
        return Functional.new_agent_mean()
    if f.kind in _NEW_AGENT_KINDS:
        return f
    if f.kind == "indicator_lt":
        return Functional.indicator_lt(_as_new_agent(f.inner), f.threshold)
    raise UnsupportedQueryError(f"{f.kind} cannot be read as a new-agent functional")


def _row_functional(f: Functional, m: int) -> Functional:
    if f.kind == "new_agent_component":
        return Functional.component(m, f.state)
    if f.kind == "new_agent_mean":
        return Functional.mean_score(m)
    if f.kind == "indicator_lt":
        return Functional.indicator_lt(_row_functional(f.inner, m), f.threshold)
    raise UnsupportedQueryError(f"{f.kind} has no per-row counterpart")


def _prior_rng(batch: SimulationBatch, prior_seed: int | None) -> np.random.Generator:
    if prior_seed is None:
        seq = np.random.SeedSequence((batch.seed, _PRIOR_STREAM_TAG))
    else:
        seq = np.random.SeedSequence(prior_seed)
    return np.random.Generator(np.random.Philox(seq))


def sample_prior(
    batch: SimulationBatch, n: int, prior_seed: int | None = None
) -> np.ndarray:
    """(n, L) seeded draws from the base-measure row prior Dir(eps * p)."""
    rng = _prior_rng(batch, prior_seed)
    alpha = batch.config.eps * batch.config.base_array
    return np.vstack([sample_dirichlet(alpha, rng) for _ in range(n)])


def _prior_linear_mean(f: Functional, config) -> float | None:
    """Analytic prior pushforward mean for linear functionals, else None."""
    if f.kind == "new_agent_component":
        return float(config.base[f.state])
    if f.kind == "new_agent_mean":
        return float(config.base_array @ config.values_array)
    return None


def new_agent_law(
    batch: SimulationBatch,
    f: Functional,
    prior_draws: int = DEFAULT_PRIOR_DRAWS,
    prior_seed: int | None = None,
) -> WeightedSampleLaw:
    """Law of a functional of an unobserved row's distribution.

    A mixture with mass kappa/(kappa+M) on the prior pushforward
    (represented by ``prior_draws`` seeded Monte Carlo draws from
    Dir(eps*p), plus an analytic mean when the functional is linear) and
    mass 1/(kappa+M) on each observed row's weighted law.
    """
    f = _as_new_agent(f)
    kappa, M = batch.config.kappa, batch.M
    prior_mass = kappa / (kappa + M)
    values = batch.config.values_array
    if f.kind == "new_agent_component":
        _check_state(batch, f.state)
    prior_thetas = sample_prior(batch, prior_draws, prior_seed)
    prior_atoms = _single_vector_eval(f, prior_thetas, values)
    if M == 0:
        atoms = np.empty(0)
        weights = np.empty(0)
    else:
        per_row = [evaluate_atoms(batch, _row_functional(f, m)) for m in range(1, M + 1)]
        atoms = np.concatenate(per_row)
        weights = np.tile(batch.normalized_weights / (kappa + M), M)
    return WeightedSampleLaw(
        atoms=atoms,
        weights=weights,
        prior_mass=prior_mass,
        prior_atoms=prior_atoms,
        prior_mean=_prior_linear_mean(f, batch.config),
    )


def expectation(law: WeightedSampleLaw) -> float:
    """Weighted mean of the law; uses the analytic prior mean when known."""
    val = float(law.weights @ law.atoms) if law.atoms.size else 0.0
    if law.prior_mass > 0:
        pm = law.prior_mean
        if pm is None:
            pm = float(np.mean(law.prior_atoms))
        val += law.prior_mass * pm
    return val


def probability_below(law: WeightedSampleLaw, threshold: float) -> float:
    """Weighted mass of atoms strictly below the threshold.

    The prior component contributes through its Monte Carlo atoms.
    """
    val = float(law.weights[law.atoms < threshold].sum()) if law.atoms.size else 0.0
    if law.prior_mass > 0:
        pa = np.asarray(law.prior_atoms)
        val += law.prior_mass * float(np.mean(pa < threshold))
    return val


def weighted_se(atoms, normalized_weights) -> float:
    """Delta-method standard error of a self-normalized weighted mean."""
    a = np.asarray(atoms, dtype=float)
    w = np.asarray(normalized_weights, dtype=float)
    mean = float(w @ a)
    return float(np.sqrt(np.sum((w * (a - mean)) ** 2)))


def estimate(
    batch: SimulationBatch,
    f: Functional,
    prior_draws: int = DEFAULT_PRIOR_DRAWS,
    prior_seed: int | None = None,
) -> tuple[float, float]:
    """Posterior expectation of a functional with its Monte Carlo SE.

    For new-agent functionals the per-simulation row average is used so the
    SE respects the common weights, and an independent prior-sample term is
    added when the prior pushforward mean is not analytic.
    """
    if not f.is_new_agent:
        atoms = evaluate_atoms(batch, f)
        return float(batch.normalized_weights @ atoms), weighted_se(
            atoms, batch.normalized_weights
        )
    fna = _as_new_agent(f)
    kappa, M = batch.config.kappa, batch.M
    values = batch.config.values_array
    row_part = np.zeros(batch.K)
    for m in range(1, M + 1):
        row_part += evaluate_atoms(batch, _row_functional(fna, m))
    row_part /= kappa + M
    val = float(batch.normalized_weights @ row_part)
    se_sq = weighted_se(row_part, batch.normalized_weights) ** 2
    prior_mass = kappa / (kappa + M)
    pm = _prior_linear_mean(fna, batch.config)
    if pm is None:
        prior_atoms = _single_vector_eval(
            fna, sample_prior(batch, prior_draws, prior_seed), values
        )
        pm = float(np.mean(prior_atoms))
        se_sq += (prior_mass**2) * float(np.var(prior_atoms)) / prior_atoms.size
    val += prior_mass * pm
    return val, float(np.sqrt(se_sq))


def cocluster_matrix(batch: SimulationBatch) -> np.ndarray:
    """(M, M) weighted co-clustering frequencies; symmetric, unit diagonal."""
    M, K = batch.M, batch.K
    C = np.zeros((M, M))
    w = batch.normalized_weights
    step = max(1, (1 << 22) // max(1, M * M))
    for start in range(0, K, step):
        stop = min(K, start + step)
        block = batch.cluster_of[start:stop]
        eq = block[:, :, None] == block[:, None, :]
        C += np.einsum("k,kij->ij", w[start:stop], eq)
    return C


def predictive_next(batch: SimulationBatch, m: int) -> np.ndarray:
    """Posterior predictive state distribution for row m's next observation.

    ``m`` in [1, M] targets an observed row; ``m = M + 1`` targets an
    unobserved row (the kappa/(kappa+M) prior mixture with analytic prior
    mean p).  The result is a probability vector.
    """
    w = batch.normalized_weights
    if m == batch.M + 1:
        kappa, M = batch.config.kappa, batch.M
        vec = kappa / (kappa + M) * batch.config.base_array
        for i in range(M):
            vec = vec + (w @ batch.thetas_of_row(i)) / (kappa + M)
        return vec
    i = _check_row(batch, m)
    return w @ batch.thetas_of_row(i)
