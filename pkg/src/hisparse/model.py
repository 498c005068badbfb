"""Core domain types for two-level hierarchically sparse signals.

A signal is split into N blocks of lengths n_1..n_N. It is (s, sigma)-sparse
when at most s blocks contain nonzeros and block i holds at most sigma_i of
them. These types are shared by the projection, solver, analysis and
simulation layers.
"""

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "SparsityPattern",
    "BlockVector",
    "HiSupport",
    "is_hi_sparse",
    "support_of",
]


@dataclass(frozen=True)
class SparsityPattern:
    """Two-level sparsity budget: `s` active blocks, `sigma[i]` nonzeros in block i.

    `block_dims[i]` is the ambient length of block i. All indices 0-based.
    """

    s: int
    sigma: tuple
    block_dims: tuple

    def __post_init__(self):
        object.__setattr__(self, "sigma", tuple(int(v) for v in self.sigma))
        object.__setattr__(self, "block_dims", tuple(int(v) for v in self.block_dims))
        if len(self.sigma) != len(self.block_dims) or len(self.block_dims) < 1:
            raise ValueError(
                "sigma and block_dims must have equal, positive length "
                f"(got {len(self.sigma)} and {len(self.block_dims)})"
            )
        n_blocks = len(self.block_dims)
        if not 1 <= self.s <= n_blocks:
            raise ValueError(f"s must be in [1, {n_blocks}], got {self.s}")
        for i, (sg, nd) in enumerate(zip(self.sigma, self.block_dims)):
            if not 1 <= sg <= nd:
                raise ValueError(
                    f"sigma[{i}]={sg} must be in [1, block_dims[{i}]={nd}]"
                )

    @classmethod
    def uniform(cls, num_blocks, block_len, s, sigma):
        """All blocks share one length and one per-block sparsity."""
        return cls(s, (sigma,) * num_blocks, (block_len,) * num_blocks)

    @property
    def num_blocks(self):
        return len(self.block_dims)

    @property
    def total_dim(self):
        return sum(self.block_dims)


class BlockVector:
    """A dense signal stored as a tuple of per-block 1-d arrays.

    Arrays are copied on construction and marked read-only; instances are
    safe to share across threads. Scalars are float64 or complex128.
    """

    __slots__ = ("blocks",)

    def __init__(self, blocks):
        arrs = []
        for b in blocks:
            a = np.array(b, copy=True)
            if a.ndim != 1:
                raise ValueError("each block must be one-dimensional")
            if np.iscomplexobj(a):
                a = a.astype(np.complex128, copy=False)
            else:
                a = a.astype(np.float64, copy=False)
            a.setflags(write=False)
            arrs.append(a)
        if not arrs:
            raise ValueError("need at least one block")
        self.blocks = tuple(arrs)

    @classmethod
    def zeros(cls, block_dims, dtype=np.float64):
        return cls([np.zeros(n, dtype=dtype) for n in block_dims])

    @classmethod
    def from_flat(cls, flat, block_dims):
        """Split a flat array into consecutive blocks of the given lengths."""
        flat = np.asarray(flat).ravel()
        if flat.size != sum(block_dims):
            raise ValueError(
                f"flat length {flat.size} != sum(block_dims) {sum(block_dims)}"
            )
        offsets = np.concatenate(([0], np.cumsum(block_dims)))
        return cls([flat[offsets[i]:offsets[i + 1]] for i in range(len(block_dims))])

    @property
    def block_dims(self):
        return tuple(b.size for b in self.blocks)

    @property
    def num_blocks(self):
        return len(self.blocks)

    @property
    def total_dim(self):
        return sum(b.size for b in self.blocks)

    @property
    def is_complex(self):
        return any(np.iscomplexobj(b) for b in self.blocks)

    def flatten(self):
        return np.concatenate(self.blocks)

    def norm(self):
        return float(np.linalg.norm(self.flatten()))

    def conforms_to(self, pattern):
        return self.block_dims == pattern.block_dims

    def __eq__(self, other):
        if not isinstance(other, BlockVector):
            return NotImplemented
        return self.block_dims == other.block_dims and all(
            np.array_equal(a, b) for a, b in zip(self.blocks, other.blocks)
        )

    def __repr__(self):
        return f"BlockVector(block_dims={self.block_dims}, complex={self.is_complex})"


@dataclass(frozen=True)
class HiSupport:
    """A set of (block index, inner index) pairs, kept sorted for determinism."""

    entries: tuple = field(default=())

    def __post_init__(self):
        ents = tuple(sorted({(int(i), int(k)) for i, k in self.entries}))
        object.__setattr__(self, "entries", ents)

    @classmethod
    def empty(cls):
        return cls(())

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def __contains__(self, pair):
        return tuple(pair) in set(self.entries)

    def block_indices(self):
        """Distinct active blocks, ascending."""
        return sorted({i for i, _ in self.entries})

    def by_block(self):
        """dict block -> sorted inner indices."""
        out = {}
        for i, k in self.entries:
            out.setdefault(i, []).append(k)
        return out

    def satisfies(self, pattern):
        """True iff this support fits inside the (s, sigma) budget."""
        per_block = self.by_block()
        if len(per_block) > pattern.s:
            return False
        for i, inner in per_block.items():
            if i < 0 or i >= pattern.num_blocks:
                return False
            if len(inner) > pattern.sigma[i]:
                return False
            if any(k < 0 or k >= pattern.block_dims[i] for k in inner):
                return False
        return True


def support_of(x):
    """Exact support of a block vector: every (i, k) with x_i[k] != 0.

    Zero detection is exact equality; threshold beforehand if tolerance is
    wanted.
    """
    entries = []
    for i, b in enumerate(x.blocks):
        for k in np.flatnonzero(b):
            entries.append((i, int(k)))
    return HiSupport(tuple(entries))


def is_hi_sparse(x, pattern):
    """True iff at most `s` blocks are nonzero and block i has <= sigma_i nonzeros."""
    if not x.conforms_to(pattern):
        raise ValueError(
            f"block dims {x.block_dims} do not match pattern {pattern.block_dims}"
        )
    active = 0
    for b, sg in zip(x.blocks, pattern.sigma):
        nnz = int(np.count_nonzero(b))
        if nnz > 0:
            active += 1
            if nnz > sg:
                return False
    return active <= pattern.s
