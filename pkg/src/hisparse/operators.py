"""Hierarchical measurement operators and their random ensembles.

An operator pairs an M x N mixing matrix with N block operators of shape
m x n_i. Acting on a block vector x it produces a length M*m measurement

    y[j*m + k] = sum_i mixing[j, i] * (blocks[i] @ x_i)[k],

i.e. the column for entry (i, k) is kron(mixing[:, i], blocks[i][:, k]).
When every block operator equals B this reduces to the Kronecker product
mixing (x) B. Measurements are plain 1-d arrays of length M*m; slot j
occupies y[j*m : (j+1)*m].
"""

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
import scipy.linalg

from .model import BlockVector

__all__ = [
    "HierarchicalOperator",
    "RestrictedLsqResult",
    "restricted_least_squares",
    "restricted_columns",
    "make_gaussian_mixing",
    "make_gaussian_block",
    "make_subsampled_dft",
    "from_descriptor",
]

DENSE_ELEMENT_CAP = 2**24

# relative diagonal threshold below which a pivoted QR is called rank-deficient
_RANK_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class HierarchicalOperator:
    """Immutable pairing of a mixing matrix with per-block operators."""

    mixing: np.ndarray
    blocks: tuple

    def __post_init__(self):
        A = np.array(self.mixing, copy=True)
        if A.ndim != 2 or A.size == 0:
            raise ValueError("mixing matrix must be 2-d and nonempty")
        if not np.all(np.isfinite(A)):
            raise ValueError("mixing matrix has non-finite entries")
        blocks = tuple(np.array(B, copy=True) for B in self.blocks)
        if len(blocks) != A.shape[1]:
            raise ValueError(
                f"number of block operators {len(blocks)} != mixing columns {A.shape[1]}"
            )
        rows = {B.shape[0] for B in blocks}
        if any(B.ndim != 2 for B in blocks) or len(rows) != 1:
            raise ValueError("block operators must be 2-d with identical row counts")
        for B in blocks:
            if not np.all(np.isfinite(B)):
                raise ValueError("block operator has non-finite entries")
        A.setflags(write=False)
        for B in blocks:
            B.setflags(write=False)
        object.__setattr__(self, "mixing", A)
        object.__setattr__(self, "blocks", blocks)

    @property
    def num_slots(self):
        """M: rows of the mixing matrix."""
        return self.mixing.shape[0]

    @property
    def num_blocks(self):
        """N: columns of the mixing matrix == number of block operators."""
        return self.mixing.shape[1]

    @property
    def block_rows(self):
        """m: shared row count of the block operators."""
        return self.blocks[0].shape[0]

    @property
    def block_dims(self):
        return tuple(B.shape[1] for B in self.blocks)

    @property
    def shape(self):
        return (self.num_slots * self.block_rows, sum(self.block_dims))

    @property
    def dtype(self):
        return np.result_type(self.mixing, *self.blocks)

    def apply(self, x):
        """Measure a block vector; returns a 1-d array of length M*m."""
        if x.block_dims != self.block_dims:
            raise ValueError(
                f"signal dims {x.block_dims} do not match operator dims {self.block_dims}"
            )
        dt = np.result_type(self.dtype, *(b.dtype for b in x.blocks))
        U = np.empty((self.num_blocks, self.block_rows), dtype=dt)
        for i, (B, xi) in enumerate(zip(self.blocks, x.blocks)):
            U[i] = B @ xi
        return np.asarray(self.mixing @ U, dtype=dt).ravel()

    def adjoint(self, y):
        """Adjoint action on a measurement: block i gets B_i^* sum_j conj(A[j,i]) y_j."""
        y = np.asarray(y).ravel()
        M, m = self.num_slots, self.block_rows
        if y.size != M * m:
            raise ValueError(f"measurement length {y.size} != M*m = {M * m}")
        T = self.mixing.conj().T @ y.reshape(M, m)
        return BlockVector([B.conj().T @ T[i] for i, B in enumerate(self.blocks)])

    def dense(self, max_elements=DENSE_ELEMENT_CAP):
        """Materialize the full (M*m) x (sum n_i) matrix. Guarded by an element cap."""
        rows, cols = self.shape
        if rows * cols > max_elements:
            raise ValueError(
                f"dense matrix would hold {rows * cols} elements, over the cap "
                f"{max_elements}; raise max_elements to force"
            )
        out = np.empty((rows, cols), dtype=self.dtype)
        ofs = 0
        for i, B in enumerate(self.blocks):
            ni = B.shape[1]
            col = self.mixing[:, i]
            # (M, m, n_i) -> (M*m, n_i); kron(col, B[:, k]) columnwise
            out[:, ofs:ofs + ni] = (col[:, None, None] * B[None, :, :]).reshape(rows, ni)
            ofs += ni

        return out


def restricted_columns(H, support):
    """Columns of the dense operator for the given support entries.

    Column order follows the support's sorted (block, inner) order.
    """
    M, m = H.num_slots, H.block_rows
    per_block = support.by_block()
    pieces = []
    for i in sorted(per_block):
        if i >= H.num_blocks:
            raise ValueError(f"support block {i} out of range (N={H.num_blocks})")
        idx = np.asarray(per_block[i], dtype=int)
        Bk = H.blocks[i][:, idx]
        pieces.append((H.mixing[:, i][:, None, None] * Bk[None, :, :]).reshape(M * m, idx.size))
    if not pieces:
        return np.zeros((M * m, 0), dtype=H.dtype)
    return np.concatenate(pieces, axis=1)


class RestrictedLsqResult(NamedTuple):
    estimate: BlockVector
    rank_deficient: bool


def _scatter(H, support, coeffs, dtype):
    blocks = [np.zeros(n, dtype=dtype) for n in H.block_dims]
    for (i, k), c in zip(support, coeffs):
        blocks[i][k] = c
    return BlockVector(blocks)


def _solve_qr(C, y):
    """Least squares via pivoted QR; SVD fallback gives the minimum-norm
    solution when the columns are rank-deficient."""
    Q, R, perm = scipy.linalg.qr(C, mode="economic", pivoting=True, check_finite=False)
    diag = np.abs(np.diag(R))
    if diag.size and diag[0] > 0 and diag[-1] > _RANK_TOL * diag[0]:
        z = scipy.linalg.solve_triangular(R, Q.conj().T @ y, check_finite=False)
        out = np.empty_like(z)
        out[perm] = z
        return out, False
    sol = scipy.linalg.lstsq(C, y, lapack_driver="gelsd", check_finite=False)[0]
    return sol, True


def _solve_gram(H, y, support):
    """Normal equations with the Gram assembled from Kronecker factors.

    G[(i,k),(j,l)] = <a_i, a_j> * <B_i e_k, B_j e_l> costs O(m c^2) instead of
    the O(M m c^2) of factorizing the restricted columns; worth it at the
    simulation scale where M*m >> m. Falls back to QR when the Gram is not
    numerically positive definite.
    """
    per_block = support.by_block()
    act = sorted(per_block)
    counts = [len(per_block[i]) for i in act]
    U = np.concatenate(
        [H.blocks[i][:, np.asarray(per_block[i], dtype=int)] for i in act], axis=1
    )
    Aact = H.mixing[:, act]
    AG = Aact.conj().T @ Aact
    G = np.repeat(np.repeat(AG, counts, axis=0), counts, axis=1) * (U.conj().T @ U)

    M, m = H.num_slots, H.block_rows
    T = Aact.conj().T @ np.asarray(y).reshape(M, m).astype(G.dtype, copy=False)
    rhs = np.concatenate(
        [H.blocks[i][:, np.asarray(per_block[i], dtype=int)].conj().T @ T[r]
         for r, i in enumerate(act)]
    )
    cho = scipy.linalg.cho_factor(G, check_finite=False)
    return scipy.linalg.cho_solve(cho, rhs, check_finite=False)


def restricted_least_squares(H, y, support, method="qr"):
    """Minimize ||y - H x|| over x supported on the given entries.

    Off-support coordinates are exactly zero. `method` is "qr" (pivoted
    orthogonal factorization of the restricted columns) or "gram"
    (Kronecker-factored normal equations, faster when M is large; falls back
    to "qr" if the Gram is numerically singular). A rank-deficient column
    set yields the minimum-norm solution and sets the flag.
    """
    y = np.asarray(y).ravel()
    M, m = H.num_slots, H.block_rows
    if y.size != M * m:
        raise ValueError(f"measurement length {y.size} != M*m = {M * m}")
    dtype = np.result_type(H.dtype, y.dtype)
    if len(support) == 0:
        return RestrictedLsqResult(BlockVector.zeros(H.block_dims, dtype=dtype), False)
    if len(support) > M * m:
        raise ValueError(
            f"support size {len(support)} exceeds measurement dimension {M * m}"
        )

    if method == "gram":
        try:
            coeffs = _solve_gram(H, y.astype(dtype, copy=False), support)
            return RestrictedLsqResult(_scatter(H, support, coeffs, dtype), False)
        except scipy.linalg.LinAlgError:
            pass
    elif method != "qr":
        raise ValueError(f"unknown method {method!r}")

    C = restricted_columns(H, support)
    coeffs, deficient = _solve_qr(C, y.astype(dtype, copy=False))
    return RestrictedLsqResult(_scatter(H, support, coeffs, dtype), deficient)


def make_gaussian_mixing(M, N, variance, rng, field="complex"):
    """i.i.d. Gaussian mixing matrix with E|entry|^2 = variance.

    Complex entries have independent real/imaginary parts of variance/2 each.
    """
    if variance <= 0:
        raise ValueError("variance must be positive")
    if field == "complex":
        z = rng.standard_normal((M, N)) + 1j * rng.standard_normal((M, N))
        return z * math.sqrt(variance / 2.0)
    if field == "real":
        return rng.standard_normal((M, N)) * math.sqrt(variance)
    raise ValueError(f"field must be 'real' or 'complex', got {field!r}")


def make_gaussian_block(m, n, rng, variance=None, field="real"):
    """i.i.d. Gaussian block operator; default variance 1/m gives unit
    expected column energy."""
    if variance is None:
        variance = 1.0 / m
    return make_gaussian_mixing(m, n, variance, rng, field=field)


def make_subsampled_dft(m, n, rng, replace=True, phase="sign"):
    """Random rows of the n-point DFT, modulated and scaled to unit column energy.

    Each of the m rows is drawn uniformly from the n DFT rows (independently,
    with replacement by default; `replace=False` samples distinct rows),
    multiplied by a random sign and scaled so every entry has modulus
    m^(-1/2). Column energies are then exactly 1, the normalization under
    which isometry constants are meaningful. With m == n, replace=False and
    phase="none" the result is unitary.

    phase: "sign" (uniform +-1), "uniform" (uniform complex phase), or
    "none" (all +1).
    """
    if m < 1 or n < 1:
        raise ValueError(f"need m, n >= 1, got m={m}, n={n}")
    if replace:
        rows = rng.integers(0, n, size=m)
    else:
        if m > n:
            raise ValueError("cannot sample more distinct rows than n")
        rows = rng.permutation(n)[:m]
    if phase == "sign":
        mods = (rng.integers(0, 2, size=m) * 2 - 1).astype(np.float64)
    elif phase == "uniform":
        mods = np.exp(2j * np.pi * rng.random(m))
    elif phase == "none":
        mods = np.ones(m)
    else:
        raise ValueError(f"phase must be 'sign', 'uniform' or 'none', got {phase!r}")
    F_rows = np.exp((-2j * np.pi / n) * np.outer(rows, np.arange(n)))
    return (mods[:, None] * F_rows) / math.sqrt(m)


def from_descriptor(mixing_desc, blocks_desc):
    """Rebuild an operator from the serializable descriptors used in configs.

    Block operator i uses the seed stream (blocks_desc["seed"], i), so a
    stored descriptor replays the exact operator without storing matrices.
    """
    md = dict(mixing_desc)
    if md.pop("ensemble") != "gaussian":
        raise ValueError("mixing ensemble must be 'gaussian'")
    rng = np.random.default_rng(np.random.SeedSequence(md.pop("seed")))
    A = make_gaussian_mixing(md.pop("M"), md.pop("N"), md.pop("variance"),
                             rng, field=md.pop("field", "complex"))
    if md:
        raise ValueError(f"unknown mixing descriptor keys: {sorted(md)}")

    bd = dict(blocks_desc)
    ensemble = bd.pop("ensemble")
    seed = bd.pop("seed")
    m, n = bd.pop("m"), bd.pop("n")
    N = A.shape[1]
    blocks = []
    for i in range(N):
        brng = np.random.default_rng(np.random.SeedSequence((seed, i)))
        if ensemble == "subsampled_dft":
            blocks.append(make_subsampled_dft(
                m, n, brng,
                replace=bd.get("replace", True), phase=bd.get("phase", "sign")))
        elif ensemble == "gaussian":
            blocks.append(make_gaussian_block(
                m, n, brng, variance=bd.get("variance"), field=bd.get("field", "real")))
        else:
            raise ValueError(f"unknown block ensemble {ensemble!r}")
    extra = set(bd) - {"replace", "phase", "variance", "field"}
    if extra:
        raise ValueError(f"unknown block descriptor keys: {sorted(extra)}")
    return HierarchicalOperator(A, tuple(blocks))
