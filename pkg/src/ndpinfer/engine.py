"""The sequential-imputation engine.

One weighted simulation imputes the latent row distributions one row at a
time.  At row m (1-based) with previously simulated vectors
theta*_1..theta*_{m-1}:

* row weights  t_{mi} = prod_l (theta*_{il})^{ybar_{ml}}  for i < m, and
  t_{mm} = kappa * B(eps*p + ybar_m) / B(eps*p);
* an index i is drawn with probability t_{mi} / sum_j t_{mj};
* if i < m the new vector aliases theta*_i (sharing its cluster root),
  otherwise a fresh draw from Dir(eps*p + ybar_m) starts a new cluster;
* the log total weight accumulates log sum_j t_{mj} - log(kappa + m - 1).

Everything is carried in log space; the optional reporting rescale
``c^M M!`` (log scale factor log c) is applied at batch level only and
never changes normalized weights.

Reproducibility: simulations are generated in fixed-size chunks, chunk c
drawing from its own counter-based stream spawned from (seed, c).  Chunk
boundaries depend only on (K, M, L), so results are bitwise identical for
any thread count.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .dirichlet import log_marginal_likelihood
from .errors import DegenerateBatchError, ValidationError
from .model import ModelConfig, ObservationArray

# Stand-in for log(0) that keeps 0 * log(0) = 0 in dot products while
# exp(LOG_ZERO - anything_finite) is still exactly 0.
LOG_ZERO = -1.0e300

# Target element count for per-chunk work arrays; keeps peak memory flat
# across problem sizes without affecting results (chunking is part of the
# deterministic layout, never of the semantics).
_CHUNK_TARGET_ELEMS = 1 << 21
_CHUNK_MAX = 4096
_CHUNK_MIN = 32


def _chunk_size(M: int, L: int) -> int:
    return max(_CHUNK_MIN, min(_CHUNK_MAX, _CHUNK_TARGET_ELEMS // max(1, M * L)))


@dataclass(frozen=True)
class EngineOptions:
    """Batch-level knobs: simulation count, seed, reporting scale, threads."""

    K: int
    seed: int = 0
    log_scale_factor: float = 0.0
    threads: int = 1

    def __post_init__(self):
        if self.K < 1:
            raise ValidationError(f"K must be at least 1, got {self.K}")
        if self.seed < 0:
            raise ValidationError(f"seed must be a nonnegative integer, got {self.seed}")
        if self.threads < 1:
            raise ValidationError(f"threads must be at least 1, got {self.threads}")


@dataclass(frozen=True)
class WeightedSimulation:
    """One simulated vector of row distributions with its provenance.

    ``thetas`` is (M, L); ``cluster_of`` maps each row to the 0-based index
    of the row where its vector was freshly drawn (its cluster root), so
    ``cluster_of[0] == 0`` and aliased rows are bitwise-identical copies.
    ``log_weight`` is the log total weight before any reporting rescale.
    """

    thetas: np.ndarray
    cluster_of: np.ndarray
    log_weight: float


class SimulationBatch:
    """K weighted simulations plus normalized weights and ESS statistics.

    Row vectors are stored deduplicated: ``root_thetas`` holds every
    freshly drawn vector and ``row_slot[k, m]`` indexes row m of simulation
    k into it, so cluster aliasing is structural (aliased rows share a
    slot).  ``cluster_of[k, m]`` is the 0-based root row.
    """

    def __init__(
        self,
        config: ModelConfig,
        data: ObservationArray,
        seed: int,
        log_scale_factor: float,
        log_weights: np.ndarray,
        cluster_of: np.ndarray,
        row_slot: np.ndarray,
        root_thetas: np.ndarray,
        trimmed: int = 0,
    ):
        self.config = config
        self.data = data
        self.seed = int(seed)
        self.log_scale_factor = float(log_scale_factor)
        self.log_weights = np.asarray(log_weights, dtype=float)
        self.cluster_of = cluster_of
        self.row_slot = row_slot
        self.root_thetas = root_thetas
        self.trimmed = int(trimmed)
        if not np.all(np.isfinite(self.log_weights)):
            raise DegenerateBatchError("batch contains non-finite log weights")
        shifted = np.exp(self.log_weights - self.log_weights.max())
        self.normalized_weights = shifted / shifted.sum()
        self.ess_prime, self.ess_double_prime = ess(shifted)
        total = float(self.normalized_weights.sum())
        if abs(total - 1.0) > 1e-10:
            raise DegenerateBatchError(f"normalized weights sum to {total!r}")

    @property
    def K(self) -> int:
        return int(self.log_weights.size)

    @property
    def M(self) -> int:
        return int(self.cluster_of.shape[1])

    @property
    def L(self) -> int:
        return int(self.root_thetas.shape[1])

    @property
    def scaled_log_weights(self) -> np.ndarray:
        """Log weights including the c^M M! reporting rescale."""
        M = self.M
        return self.log_weights + M * self.log_scale_factor + float(gammaln(M + 1))

    def thetas_of_row(self, m: int) -> np.ndarray:
        """(K, L) array of theta*_m across simulations; ``m`` is 0-based."""
        if not (0 <= m < self.M):
            raise ValidationError(f"row index {m} outside [0, {self.M})")
        return self.root_thetas[self.row_slot[:, m]]

    def sim(self, k: int) -> WeightedSimulation:
        """Materialize simulation ``k`` (0-based) as a WeightedSimulation."""
        if not (0 <= k < self.K):
            raise ValidationError(f"simulation index {k} outside [0, {self.K})")
        return WeightedSimulation(
            thetas=self.root_thetas[self.row_slot[k]],
            cluster_of=self.cluster_of[k].copy(),
            log_weight=float(self.log_weights[k]),
        )

    def sims(self):
        for k in range(self.K):
            yield self.sim(k)


def _row_inputs(data: ObservationArray, config: ModelConfig):
    """Per-row constants: float counts, posterior Dirichlet params, log t_mm."""
    if data.L != config.L:
        raise ValidationError(f"data has L={data.L} but config has L={config.L}")
    counts_f = data.counts.astype(float)
    alphas = config.eps * config.base_array[None, :] + counts_f
    log_t_self = np.array(
        [
            np.log(config.kappa) + log_marginal_likelihood(data.counts[m], config.eps, config.base)
            for m in range(data.M)
        ]
    )
    return counts_f, alphas, log_t_self


def _simulate_chunk(counts_f, alphas, log_t_self, kappa, rng, B):
    """Advance B simulations through all M rows; vectorized across sims.

    State is kept per cluster root rather than per row: a row joining an
    existing cluster i contributes t_{mi} through its root's vector, so
    the categorical over i collapses to a categorical over roots with the
    root's member count as a multiplicity factor.  Identical in law to the
    per-row draw and linear rather than quadratic in M for clustered data.

    Returns (log_w, cluster, row_slot, flat_roots) where row_slot indexes
    into the chunk-local flat_roots array (k-major, root-minor order).
    """
    M, L = counts_f.shape
    root_theta = np.empty((M, B, L))  # slot r valid for sim k when r < n_roots[k]
    root_log_theta = np.empty((M, B, L))
    root_row = np.zeros((M, B), dtype=np.int32)  # data row where slot was drawn
    members = np.zeros((M, B))
    row_slot_t = np.empty((M, B), dtype=np.int64)  # root slot of each data row
    n_roots = np.zeros(B, dtype=np.int64)
    log_w = np.zeros(B)
    sims = np.arange(B)
    for m in range(M):
        R = int(n_roots.max()) if m else 0
        lt = np.empty((R + 1, B))
        if R:
            np.matmul(
                root_log_theta[:R].reshape(R * B, L), counts_f[m], out=lt[:R].reshape(R * B)
            )
            live = members[:R] > 0
            lt[:R][live] += np.log(members[:R][live])
            lt[:R][~live] = LOG_ZERO
        lt[R] = log_t_self[m]
        mx = lt.max(axis=0)
        cum = np.cumsum(np.exp(lt - mx[None, :]), axis=0)
        tot = cum[-1]
        log_w += mx + np.log(tot) - np.log(kappa + m)
        # u in (0, 1]: a zero-weight slot can never be selected.
        u = 1.0 - rng.random(B)
        choice = (cum < (u * tot)[None, :]).sum(axis=0)
        # Fresh Dirichlet draws happen unconditionally so the stream layout
        # per chunk is fixed; joined simulations discard theirs.
        g = rng.standard_gamma(alphas[m], size=(B, L))
        gsum = g.sum(axis=1)
        if not np.all(gsum > 0):
            raise DegenerateBatchError("gamma variates underflowed to a zero-sum draw")
        fresh = choice >= R
        fk = sims[fresh]
        slot = np.where(fresh, n_roots, choice)
        if fk.size:
            new = g[fk] / gsum[fk, None]
            root_theta[slot[fk], fk] = new
            with np.errstate(divide="ignore"):
                root_log_theta[slot[fk], fk] = np.maximum(np.log(new), LOG_ZERO)
            root_row[slot[fk], fk] = m
            n_roots[fk] += 1
        members[slot, sims] += 1.0
        row_slot_t[m] = slot
    base = np.concatenate(([0], np.cumsum(n_roots)))
    row_slot = base[:-1, None] + row_slot_t.T
    cluster = root_row[row_slot_t, sims[None, :]].T.astype(np.int32)
    valid = (np.arange(M)[None, :] < n_roots[:, None])  # (B, M) slots in use
    flat_roots = root_theta.transpose(1, 0, 2)[valid]
    return log_w, cluster, row_slot.astype(np.int64), flat_roots


def simulate_one(
    data: ObservationArray, config: ModelConfig, rng: np.random.Generator
) -> WeightedSimulation:
    """Generate a single weighted simulation from an explicit random stream."""
    counts_f, alphas, log_t_self = _row_inputs(data, config)
    log_w, cluster, row_slot, flat = _simulate_chunk(
        counts_f, alphas, log_t_self, config.kappa, rng, 1
    )
    return WeightedSimulation(
        thetas=flat[row_slot[0]], cluster_of=cluster[0], log_weight=float(log_w[0])
    )


def run_batch(
    data: ObservationArray, config: ModelConfig, options: EngineOptions
) -> SimulationBatch:
    """Generate K independent weighted simulations with reproducible streams.

    The result is bitwise identical for a fixed (data, config, options.seed)
    regardless of ``options.threads``.
    """
    counts_f, alphas, log_t_self = _row_inputs(data, config)
    K = options.K
    chunk = _chunk_size(data.M, data.L)
    n_chunks = (K + chunk - 1) // chunk
    children = np.random.SeedSequence(options.seed).spawn(n_chunks)

    def work(c):
        B = min(chunk, K - c * chunk)
        rng = np.random.Generator(np.random.Philox(children[c]))
        return _simulate_chunk(counts_f, alphas, log_t_self, config.kappa, rng, B)

    if options.threads > 1 and n_chunks > 1:
        with ThreadPoolExecutor(max_workers=options.threads) as pool:
            parts = list(pool.map(work, range(n_chunks)))
    else:
        parts = [work(c) for c in range(n_chunks)]

    log_w = np.concatenate([p[0] for p in parts])
    cluster = np.concatenate([p[1] for p in parts], axis=0)
    offsets = np.concatenate(([0], np.cumsum([p[3].shape[0] for p in parts])))
    row_slot = np.concatenate(
        [p[2] + offsets[i] for i, p in enumerate(parts)], axis=0
    )
    # Copy chunk roots into one preallocated store, releasing each chunk as
    # it lands; keeps peak memory near the final footprint.
    root_thetas = np.empty((int(offsets[-1]), data.L))
    for i in range(len(parts)):
        root_thetas[offsets[i] : offsets[i + 1]] = parts[i][3]
        parts[i] = None
    return SimulationBatch(
        config=config,
        data=data,
        seed=options.seed,
        log_scale_factor=options.log_scale_factor,
        log_weights=log_w,
        cluster_of=cluster,
        row_slot=row_slot,
        root_thetas=root_thetas,
    )


def recompute_log_weight(sim: WeightedSimulation, data: ObservationArray, config: ModelConfig):
    """Re-evaluate the log total weight of a simulation from its stored thetas.

    Independent of the forward pass: a plain per-row loop over the weight
    definition, used as a consistency oracle in tests.
    """
    counts_f, _, log_t_self = _row_inputs(data, config)
    M = data.M
    with np.errstate(divide="ignore"):
        log_theta = np.maximum(np.log(sim.thetas), LOG_ZERO)
    total = 0.0
    for m in range(M):
        terms = [float(log_theta[i] @ counts_f[m]) for i in range(m)]
        terms.append(float(log_t_self[m]))
        mx = max(terms)
        total += mx + np.log(np.exp(np.asarray(terms) - mx).sum()) - np.log(config.kappa + m)
    return total


def ess(weights) -> tuple[float, float]:
    """Effective sample sizes (K_e', K_e'') of a nonnegative weight vector.

    K_e' = (sum W)^2 / sum W^2 and
    K_e'' = ((K - 1) / (K - K_e'/K)) * K_e'; for K = 1 both are 1.
    """
    w = np.asarray(weights, dtype=float)
    if w.ndim != 1 or w.size == 0:
        raise ValidationError("weights must be a nonempty 1-d vector")
    if np.any(w < 0) or not np.all(np.isfinite(w)):
        raise ValidationError("weights must be finite and nonnegative")
    if not np.any(w > 0):
        raise DegenerateBatchError("all weights are zero")
    K = w.size
    total = w.sum()
    ke1 = float(total * total / (w @ w))
    if K == 1:
        return ke1, ke1
    ke2 = float((K - 1) / (K - ke1 / K) * ke1)
    return ke1, ke2


def ess_from_log(log_weights) -> tuple[float, float]:
    """ESS from unnormalized log weights via a max-shifted exponential."""
    lw = np.asarray(log_weights, dtype=float)
    if lw.ndim != 1 or lw.size == 0:
        raise ValidationError("log weights must be a nonempty 1-d vector")
    mx = lw.max()
    if not np.isfinite(mx):
        raise DegenerateBatchError("all log weights are -inf")
    return ess(np.exp(lw - mx))


def trim_heaviest(batch: SimulationBatch, n: int) -> SimulationBatch:
    """Drop the n largest-weight simulations, renormalize, recompute ESS.

    ESS is recomputed with the post-trim count K - n.  Ties are broken by
    simulation index (stable sort), so the result is deterministic.  The
    number of trimmed simulations is recorded in provenance.
    """
    if n < 0:
        raise ValidationError(f"trim count must be nonnegative, got {n}")
    if n >= batch.K:
        raise ValidationError(f"cannot trim {n} of {batch.K} simulations")
    if n == 0:
        return batch
    order = np.argsort(batch.log_weights, kind="stable")
    keep = np.sort(order[: batch.K - n])
    return SimulationBatch(
        config=batch.config,
        data=batch.data,
        seed=batch.seed,
        log_scale_factor=batch.log_scale_factor,
        log_weights=batch.log_weights[keep],
        cluster_of=batch.cluster_of[keep],
        row_slot=batch.row_slot[keep],
        root_thetas=batch.root_thetas,
        trimmed=batch.trimmed + n,
    )
