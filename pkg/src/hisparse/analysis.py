"""Isometry and incoherence constants, by exact enumeration or Monte Carlo.

Exact values enumerate every admissible support and take extreme eigenvalues
of the restricted Gram matrices; enumeration caps raise instead of silently
truncating, so an "exact" label can be trusted. Monte Carlo variants report
lower bounds (a maximum over random sparse probes).
"""

import itertools
import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "RipEstimate",
    "EnumerationCapExceeded",
    "exact_rip",
    "monte_carlo_rip",
    "exact_hirip",
    "monte_carlo_hirip",
    "pairwise_incoherence",
]

DEFAULT_ENUMERATION_CAP = 1_000_000
# support *pairs* grow quadratically, so the pairwise check gets more room
DEFAULT_PAIR_CAP = 5_000_000


class EnumerationCapExceeded(ValueError):
    pass


@dataclass(frozen=True)
class RipEstimate:
    """Distortion constant plus how it was obtained.

    kind is "exactEnumeration" (trials == 0) or "monteCarloLowerBound".
    """

    value: float
    kind: str
    trials: int = 0

    def __post_init__(self):
        if self.value < 0:
            raise ValueError("estimate must be nonnegative")
        if self.kind == "exactEnumeration" and self.trials != 0:
            raise ValueError("exact estimates carry trials == 0")


def _gram_extremes(C):
    """(lambda_min, lambda_max) of C^H C."""
    G = C.conj().T @ C
    w = np.linalg.eigvalsh(G)
    return float(w[0]), float(w[-1])


def exact_rip(B, sigma, cap=DEFAULT_ENUMERATION_CAP):
    """Sharp sigma-sparse isometry constant of a dense matrix, by enumeration.

    delta = max over all sigma-column submatrices S of
    max(lambda_max(S^H S) - 1, 1 - lambda_min(S^H S)).
    """
    B = np.asarray(B)
    n = B.shape[1]
    if not 1 <= sigma <= n:
        raise ValueError(f"sigma={sigma} out of range for {n} columns")
    count = math.comb(n, sigma)
    if count > cap:
        raise EnumerationCapExceeded(
            f"{count} supports exceed the cap {cap}; use monte_carlo_rip instead"
        )
    if sigma == 1:
        norms2 = np.sum(np.abs(B) ** 2, axis=0)
        delta = float(np.max(np.abs(norms2 - 1.0)))
        return RipEstimate(delta, "exactEnumeration")
    delta = 0.0
    for S in itertools.combinations(range(n), sigma):
        lo, hi = _gram_extremes(B[:, S])
        delta = max(delta, hi - 1.0, 1.0 - lo)
    return RipEstimate(delta, "exactEnumeration")


def monte_carlo_rip(B, sigma, trials, rng):
    """Lower bound on the sigma-RIP constant from random sparse unit probes."""
    B = np.asarray(B)
    n = B.shape[1]
    if not 1 <= sigma <= n:
        raise ValueError(f"sigma={sigma} out of range for {n} columns")
    if trials < 1:
        raise ValueError("trials must be at least 1")
    worst = 0.0
    for _ in range(trials):
        S = rng.permutation(n)[:sigma]
        v = _unit_coefficients(sigma, np.iscomplexobj(B), rng)
        worst = max(worst, abs(float(np.linalg.norm(B[:, S] @ v)) ** 2 - 1.0))
    return RipEstimate(worst, "monteCarloLowerBound", trials)


def _hier_support_count(pattern):
    total = 0
    for S in itertools.combinations(range(pattern.num_blocks), pattern.s):
        prod = 1
        for i in S:
            prod *= math.comb(pattern.block_dims[i], pattern.sigma[i])
        total += prod
    return total


def _support_columns(H, block_set, inner_sets):
    M, m = H.num_slots, H.block_rows
    pieces = []
    for i, inner in zip(block_set, inner_sets):
        Bk = H.blocks[i][:, np.asarray(inner, dtype=int)]
        pieces.append(
            (H.mixing[:, i][:, None, None] * Bk[None, :, :]).reshape(M * m, len(inner))
        )
    return np.concatenate(pieces, axis=1)


def exact_hirip(H, pattern, cap=DEFAULT_ENUMERATION_CAP):
    """Sharp (s, sigma) constant of a hierarchical operator.

    Enumerates maximal admissible supports (exactly s blocks, sigma_i entries
    in each); smaller supports are dominated by eigenvalue interlacing.
    """
    if pattern.block_dims != H.block_dims:
        raise ValueError("pattern dims do not match operator dims")
    count = _hier_support_count(pattern)
    if count > cap:
        raise EnumerationCapExceeded(
            f"{count} hierarchical supports exceed the cap {cap}; "
            "use monte_carlo_hirip instead"
        )
    delta = 0.0
    for S in itertools.combinations(range(pattern.num_blocks), pattern.s):
        inner_choices = [
            itertools.combinations(range(pattern.block_dims[i]), pattern.sigma[i])
            for i in S
        ]
        for inner_sets in itertools.product(*inner_choices):
            lo, hi = _gram_extremes(_support_columns(H, S, inner_sets))
            delta = max(delta, hi - 1.0, 1.0 - lo)
    return RipEstimate(delta, "exactEnumeration")


def _unit_coefficients(size, want_complex, rng):
    if want_complex:
        v = rng.standard_normal(size) + 1j * rng.standard_normal(size)
    else:
        v = rng.standard_normal(size)
    nv = np.linalg.norm(v)
    while nv == 0.0:  # astronomically unlikely
        v = rng.standard_normal(size)
        nv = np.linalg.norm(v)
    return v / nv


def monte_carlo_hirip(H, pattern, trials, rng):
    """Lower bound on the (s, sigma) constant from random hi-sparse unit probes.

    Each trial draws a uniform admissible support (s blocks, sigma_i inner
    indices) and spherical coefficients; the estimate is the running maximum
    of |  ||Hx||^2 - 1 |, hence nondecreasing in trials for nested seeds.
    """
    if pattern.block_dims != H.block_dims:
        raise ValueError("pattern dims do not match operator dims")
    if trials < 1:
        raise ValueError("trials must be at least 1")
    want_complex = np.iscomplexobj(H.mixing) or any(
        np.iscomplexobj(B) for B in H.blocks
    )
    worst = 0.0
    for _ in range(trials):
        S = np.sort(rng.permutation(pattern.num_blocks)[: pattern.s])
        inner_sets = [
            np.sort(rng.permutation(pattern.block_dims[i])[: pattern.sigma[i]])
            for i in S
        ]
        total = sum(len(k) for k in inner_sets)
        v = _unit_coefficients(total, want_complex, rng)
        C = _support_columns(H, S, inner_sets)
        worst = max(worst, abs(float(np.linalg.norm(C @ v)) ** 2 - 1.0))
    return RipEstimate(worst, "monteCarloLowerBound", trials)


def _max_singular_2x2(m11, m12, m21, m22):
    """Vectorized largest singular value of [[m11, m12], [m21, m22]]."""
    t = (np.abs(m11) ** 2 + np.abs(m12) ** 2 + np.abs(m21) ** 2 + np.abs(m22) ** 2)
    det2 = np.abs(m11 * m22 - m12 * m21) ** 2
    disc = np.maximum(t * t - 4.0 * det2, 0.0)
    return np.sqrt(0.5 * (t + np.sqrt(disc)))


def pairwise_incoherence(Bi, Bj, sigma, cap=DEFAULT_PAIR_CAP, trials=20000, rng=None):
    """Largest |<Bi u, Bj v>| over sigma-sparse unit vectors u, v.

    Exact when the number of support pairs fits under the cap: the value is
    the maximum top singular value of (Bi|_S)^H (Bj|_T) over all sigma-sized
    supports S, T. Over the cap, falls back to a Monte Carlo lower bound
    over random support pairs (requires rng); the result's kind records
    which route was taken.
    """
    Bi, Bj = np.asarray(Bi), np.asarray(Bj)
    if Bi.shape[0] != Bj.shape[0]:
        raise ValueError("operators must share the measurement dimension")
    ni, nj = Bi.shape[1], Bj.shape[1]
    if not (1 <= sigma <= ni and 1 <= sigma <= nj):
        raise ValueError(f"sigma={sigma} out of range")
    G = Bi.conj().T @ Bj
    pair_count = math.comb(ni, sigma) * math.comb(nj, sigma)

    if pair_count <= cap:
        if sigma == 1:
            return RipEstimate(float(np.max(np.abs(G))), "exactEnumeration")
        if sigma == 2:
            s1, s2 = np.triu_indices(ni, k=1)
            t1, t2 = np.triu_indices(nj, k=1)
            best = 0.0
            chunk = max(1, int(2_000_000 // max(1, t1.size)))
            for lo in range(0, s1.size, chunk):
                sl = slice(lo, lo + chunk)
                m11 = G[s1[sl][:, None], t1[None, :]]
                m12 = G[s1[sl][:, None], t2[None, :]]
                m21 = G[s2[sl][:, None], t1[None, :]]
                m22 = G[s2[sl][:, None], t2[None, :]]
                best = max(best, float(np.max(_max_singular_2x2(m11, m12, m21, m22))))
            return RipEstimate(best, "exactEnumeration")
        best = 0.0
        for S in itertools.combinations(range(ni), sigma):
            GS = G[np.asarray(S)]
            for T in itertools.combinations(range(nj), sigma):
                best = max(best, float(np.linalg.svd(GS[:, T], compute_uv=False)[0]))
        return RipEstimate(best, "exactEnumeration")

    if rng is None:
        raise EnumerationCapExceeded(
            f"{pair_count} support pairs exceed the cap {cap} and no rng was "
            "given for the Monte Carlo fallback"
        )
    best = 0.0
    for _ in range(trials):
        S = rng.permutation(ni)[:sigma]
        T = rng.permutation(nj)[:sigma]
        best = max(best, float(np.linalg.svd(G[np.ix_(S, T)], compute_uv=False)[0]))
    return RipEstimate(best, "monteCarloLowerBound", trials)
