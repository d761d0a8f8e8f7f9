"""Exact posterior computation for small instances by partition enumeration.

The latent clustering of rows follows a Chinese-restaurant-process prior:
a partition pi of the M rows has prior probability proportional to
kappa^{|pi|} * prod_{B in pi} (|B| - 1)!.  Given the partition, each block
shares one row distribution drawn from Dir(eps * p), so the block's
marginal likelihood is the Dirichlet-multinomial probability of its summed
counts.  Enumerating all set partitions therefore yields the exact
posterior -- feasible only for small M (the partition count is the Bell
number B_M), which is precisely what makes this module useful as ground
truth for the Monte Carlo engine.

Derivation note: the CRP form follows from iterating the one-step
predictive rule of the row-level Dirichlet process; the constant
prod_{m=0}^{M-1} (kappa + m) cancels in normalization and is omitted.

Partitions are generated in restricted-growth-string lexicographic order,
so outputs are deterministic and golden files are stable.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .errors import OracleCapError, UnsupportedQueryError, ValidationError
from .model import ModelConfig, ObservationArray
from .queries import Functional

# Bell(12) = 4,213,597 partitions: the largest instance enumerated rather
# than refused.
MAX_EXACT_ROWS = 12

_BELL = [1, 1, 2, 5, 15, 52, 203, 877, 4140, 21147, 115975, 678570, 4213597, 27644437]


@dataclass(frozen=True)
class PartitionPosterior:
    """All set partitions of the rows with normalized log posterior weights.

    ``block_masks[p]`` is a tuple of row bitmasks (bit m = 0-based row m)
    for partition p, in restricted-growth lexicographic order.
    """

    M: int
    block_masks: tuple[tuple[int, ...], ...]
    log_post_weights: np.ndarray

    @property
    def partition_count(self) -> int:
        return len(self.block_masks)

    def blocks_as_sets(self, p: int) -> list[list[int]]:
        """Partition p as lists of 1-based row indices."""
        out = []
        for mask in self.block_masks[p]:
            out.append([m + 1 for m in range(self.M) if mask >> m & 1])
        return out

    def top(self, n: int) -> list[tuple[list[list[int]], float]]:
        order = np.argsort(self.log_post_weights, kind="stable")[::-1][:n]
        return [(self.blocks_as_sets(int(p)), float(np.exp(self.log_post_weights[p]))) for p in order]


def _partitions(M: int):
    """Yield set partitions of range(M) as tuples of bitmasks (RGS order)."""
    blocks: list[int] = []

    def rec(m):
        if m == M:
            yield tuple(blocks)
            return
        bit = 1 << m
        for i in range(len(blocks)):
            blocks[i] |= bit
            yield from rec(m + 1)
            blocks[i] &= ~bit
        blocks.append(bit)
        yield from rec(m + 1)
        blocks.pop()

    yield from rec(0)


def _subset_tables(data: ObservationArray, config: ModelConfig):
    """Per-subset pooled counts and log marginal likelihoods via bitmask DP."""
    M, L = data.M, data.L
    counts = data.counts.astype(np.int64)
    sub = np.zeros((1 << M, L), dtype=np.int64)
    for mask in range(1, 1 << M):
        low = mask & -mask
        sub[mask] = sub[mask ^ low] + counts[low.bit_length() - 1]
    alpha0 = config.eps * config.base_array
    log_beta0 = float(gammaln(alpha0).sum() - gammaln(alpha0.sum()))
    a = alpha0[None, :] + sub
    log_ml = gammaln(a).sum(axis=1) - gammaln(a.sum(axis=1)) - log_beta0
    return sub, np.asarray(log_ml, dtype=float)


def enumerate_posterior(data: ObservationArray, config: ModelConfig) -> PartitionPosterior:
    """Normalized exact posterior over all row partitions."""
    if data.L != config.L:
        raise ValidationError(f"data has L={data.L} but config has L={config.L}")
    M = data.M
    if M < 1:
        raise ValidationError("exact enumeration needs at least one row")
    if M > MAX_EXACT_ROWS:
        raise OracleCapError(
            f"exact enumeration refused for M={M}: Bell({M}) = "
            f"{_bell(M)} partitions exceeds the M <= {MAX_EXACT_ROWS} cap "
            f"(Bell({MAX_EXACT_ROWS}) = {_BELL[MAX_EXACT_ROWS]})"
        )
    _, log_ml = _subset_tables(data, config)
    log_kappa = np.log(config.kappa)
    lgam = gammaln(np.arange(1, M + 1))  # log (n-1)! for block size n
    masks = []
    logw = []
    for blocks in _partitions(M):
        total = 0.0
        for mask in blocks:
            total += log_kappa + lgam[mask.bit_count() - 1] + log_ml[mask]
        masks.append(blocks)
        logw.append(total)
    logw = np.asarray(logw)
    shifted = logw - logw.max()
    log_norm = np.log(np.exp(shifted).sum())
    return PartitionPosterior(
        M=M, block_masks=tuple(masks), log_post_weights=shifted - log_norm
    )


def _bell(M: int) -> int:
    if M < len(_BELL):
        return _BELL[M]
    row = [1]
    for _ in range(M):
        nxt = [row[-1]]
        for v in row:
            nxt.append(nxt[-1] + v)
        row = nxt
    return row[0]


def _block_of(blocks: tuple[int, ...], m0: int) -> int:
    bit = 1 << m0
    for mask in blocks:
        if mask & bit:
            return mask
    raise AssertionError("row missing from partition")


def exact_expectation(
    posterior: PartitionPosterior,
    f: Functional,
    data: ObservationArray,
    config: ModelConfig,
) -> float:
    """Exact posterior expectation of a supported functional.

    Supported: component, mean_score, mean_gap, contest, cocluster,
    new_agent_component, new_agent_mean.  Within one block the shared
    vector is Dir(alpha) with alpha = eps*p + pooled counts, so means are
    alpha_l / alpha_0 and mixed second moments alpha_l alpha_{l'} /
    (alpha_0 (alpha_0 + 1)); across blocks moments factor by independence.
    Distribution-level queries (probability_below) have no closed form
    here and are refused.
    """
    kind = f.kind
    if kind == "component":
        return float(_component_means(posterior, data, config, f.row)[f.state])
    if kind == "mean_score":
        return float(
            _component_means(posterior, data, config, f.row) @ config.values_array
        )
    if kind == "mean_gap":
        v = config.values_array
        return float(
            _component_means(posterior, data, config, f.row) @ v
            - _component_means(posterior, data, config, f.row2) @ v
        )
    if kind == "contest":
        return _exact_contest(posterior, data, config, f.row, f.row2)
    if kind == "cocluster":
        return _exact_cocluster(posterior, f.row, f.row2)
    if kind == "new_agent_component":
        kappa, M = config.kappa, posterior.M
        val = kappa / (kappa + M) * config.base[f.state]
        for m in range(1, M + 1):
            val += float(_component_means(posterior, data, config, m)[f.state]) / (kappa + M)
        return float(val)
    if kind == "new_agent_mean":
        kappa, M = config.kappa, posterior.M
        v = config.values_array
        val = kappa / (kappa + M) * float(config.base_array @ v)
        for m in range(1, M + 1):
            val += float(_component_means(posterior, data, config, m) @ v) / (kappa + M)
        return float(val)
    raise UnsupportedQueryError(
        f"exact oracle does not support {kind!r} (no closed-form moments)"
    )


def _check_row_index(posterior: PartitionPosterior, m: int) -> int:
    if not (1 <= m <= posterior.M):
        raise ValidationError(f"row index {m} outside [1, {posterior.M}]")
    return m - 1


def _posterior_alpha(data: ObservationArray, config: ModelConfig, mask: int) -> np.ndarray:
    pooled = np.zeros(data.L, dtype=np.int64)
    for m in range(data.M):
        if mask >> m & 1:
            pooled += data.counts[m]
    return config.eps * config.base_array + pooled


def _component_means(
    posterior: PartitionPosterior, data: ObservationArray, config: ModelConfig, m: int
) -> np.ndarray:
    """E[theta_m | Y] as a vector, mixing block means over partitions."""
    m0 = _check_row_index(posterior, m)
    prob_by_mask: dict[int, float] = {}
    for blocks, lw in zip(posterior.block_masks, posterior.log_post_weights):
        mask = _block_of(blocks, m0)
        prob_by_mask[mask] = prob_by_mask.get(mask, 0.0) + float(np.exp(lw))
    out = np.zeros(data.L)
    for mask, prob in prob_by_mask.items():
        alpha = _posterior_alpha(data, config, mask)
        out += prob * alpha / alpha.sum()
    return out


def _contest_of_means(x: np.ndarray, y: np.ndarray) -> float:
    cy = np.cumsum(y)
    return float(x[1:] @ cy[:-1])


def _exact_contest(posterior, data, config, m1: int, m2: int) -> float:
    i0 = _check_row_index(posterior, m1)
    j0 = _check_row_index(posterior, m2)
    prob_same: dict[int, float] = {}
    prob_diff: dict[tuple[int, int], float] = {}
    for blocks, lw in zip(posterior.block_masks, posterior.log_post_weights):
        p = float(np.exp(lw))
        bi = _block_of(blocks, i0)
        bj = _block_of(blocks, j0)
        if bi == bj:
            prob_same[bi] = prob_same.get(bi, 0.0) + p
        else:
            key = (bi, bj)
            prob_diff[key] = prob_diff.get(key, 0.0) + p
    val = 0.0
    for mask, p in prob_same.items():
        alpha = _posterior_alpha(data, config, mask)
        a0 = alpha.sum()
        # E[theta_l theta_{l'}] = alpha_l alpha_{l'} / (a0 (a0 + 1)), l != l'
        ca = np.cumsum(alpha)
        val += p * float(alpha[1:] @ ca[:-1]) / (a0 * (a0 + 1.0))
    for (mi, mj), p in prob_diff.items():
        ai = _posterior_alpha(data, config, mi)
        aj = _posterior_alpha(data, config, mj)
        val += p * _contest_of_means(ai / ai.sum(), aj / aj.sum())
    return val


def _exact_cocluster(posterior: PartitionPosterior, i: int, j: int) -> float:
    i0 = _check_row_index(posterior, i)
    j0 = _check_row_index(posterior, j)
    if i0 == j0:
        return 1.0
    total = 0.0
    for blocks, lw in zip(posterior.block_masks, posterior.log_post_weights):
        if _block_of(blocks, i0) == _block_of(blocks, j0):
            total += float(np.exp(lw))
    return total


def exact_cocluster_matrix(
    posterior: PartitionPosterior, data: ObservationArray, config: ModelConfig
) -> np.ndarray:
    """(M, M) exact co-clustering probabilities."""
    M = posterior.M
    C = np.eye(M)
    for i in range(1, M + 1):
        for j in range(i + 1, M + 1):
            C[i - 1, j - 1] = C[j - 1, i - 1] = _exact_cocluster(posterior, i, j)
    return C
