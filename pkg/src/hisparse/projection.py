"""Exact best (s, sigma)-sparse approximation.

Two greedy stages, which together are exact for the squared-error objective:
threshold each block to its sigma_i largest-modulus entries, then keep the s
blocks whose *thresholded* energy is largest. Ties (equal modulus inside a
block, equal thresholded energy between blocks) resolve to the lower index.
"""

import numpy as np

from .model import BlockVector, HiSupport

__all__ = ["block_threshold", "project_hi_sparse", "top_k_indices"]


def top_k_indices(values, k):
    """Indices of the k largest entries of a nonnegative 1-d array.

    Deterministic: among equal values the smaller index wins. Average O(n)
    via partial selection; only boundary ties are inspected.
    """
    values = np.asarray(values)
    n = values.size
    if k >= n:
        return np.arange(n)
    if k <= 0:
        return np.arange(0)
    # k-th largest value is the selection threshold
    thr = np.partition(values, n - k)[n - k]
    sure = np.flatnonzero(values > thr)
    fill = np.flatnonzero(values == thr)[: k - sure.size]
    return np.sort(np.concatenate([sure, fill]))


def block_threshold(v, sigma):
    """Keep the sigma largest-modulus entries of v, zero the rest.

    Returns (thresholded copy, kept indices). Kept indices are ascending;
    ties keep the smaller index.
    """
    v = np.asarray(v)
    if not 1 <= sigma <= v.size:
        raise ValueError(f"sigma={sigma} out of range for block of length {v.size}")
    keep = top_k_indices(np.abs(v), sigma)
    out = np.zeros_like(v)
    out[keep] = v[keep]
    return out, keep


def project_hi_sparse(x, pattern):
    """Best (s, sigma)-sparse approximation of a block vector.

    Returns (projected BlockVector, HiSupport of its nonzeros). The support
    contains only genuinely nonzero entries, so it can be smaller than the
    full (s, sigma) budget.
    """
    if not x.conforms_to(pattern):
        raise ValueError(
            f"block dims {x.block_dims} do not match pattern {pattern.block_dims}"
        )
    kept = []
    energies = np.empty(x.num_blocks)
    for i, (b, sg) in enumerate(zip(x.blocks, pattern.sigma)):
        tb, idx = block_threshold(b, sg)
        kept.append((tb, idx))
        energies[i] = np.sum(np.abs(b[idx]) ** 2)
    winners = set(top_k_indices(energies, pattern.s).tolist())

    blocks = []
    entries = []
    for i, (tb, idx) in enumerate(kept):
        if i in winners:
            blocks.append(tb)
            for k in idx:
                if tb[k] != 0:
                    entries.append((i, int(k)))
        else:
            blocks.append(np.zeros_like(tb))
    return BlockVector(blocks), HiSupport(tuple(entries))
