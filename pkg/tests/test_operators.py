import numpy as np
import pytest

from hisparse import (
    BlockVector,
    HierarchicalOperator,
    HiSupport,
    make_gaussian_block,
    make_gaussian_mixing,
    make_subsampled_dft,
    restricted_least_squares,
    support_of,
)
from hisparse.operators import from_descriptor, restricted_columns


def random_operator(rng, M=None, N=None, m=None, dims=None, complex_=False):
    M = M or int(rng.integers(1, 5))
    N = N or int(rng.integers(1, 5))
    m = m or int(rng.integers(1, 5))
    dims = dims or [int(rng.integers(1, 5)) for _ in range(N)]

    def mat(r, c):
        a = rng.standard_normal((r, c))
        return a + 1j * rng.standard_normal((r, c)) if complex_ else a

    return HierarchicalOperator(mat(M, N), tuple(mat(m, d) for d in dims))


def random_signal(rng, dims, complex_=False):
    blocks = [rng.standard_normal(d) for d in dims]
    if complex_:
        blocks = [b + 1j * rng.standard_normal(b.size) for b in blocks]
    return BlockVector(blocks)


def test_construction_validation():
    with pytest.raises(ValueError):
        HierarchicalOperator(np.ones((2, 2)), (np.ones((2, 3)),))  # N mismatch
    with pytest.raises(ValueError):
        HierarchicalOperator(np.ones((2, 2)), (np.ones((2, 3)), np.ones((3, 3))))
    with pytest.raises(ValueError):
        HierarchicalOperator(np.array([[np.inf]]), (np.ones((1, 1)),))


def test_apply_zero_and_hand_example():
    H = HierarchicalOperator(np.array([[1.0, 2.0]]),
                             (np.array([[1.0]]), np.array([[1.0]])))
    assert np.array_equal(H.apply(BlockVector([(0.0,), (0.0,)])), [0.0])
    assert np.array_equal(H.apply(BlockVector([(3.0,), (5.0,)])), [13.0])


def test_apply_matches_dense():
    rng = np.random.default_rng(0)
    for k in range(60):
        H = random_operator(rng, complex_=bool(k % 2))
        x = random_signal(rng, H.block_dims, complex_=bool(k % 3 == 0))
        y = H.apply(x)
        yd = H.dense() @ x.flatten()
        assert np.linalg.norm(y - yd) <= 1e-12 * max(1.0, np.linalg.norm(yd))


def test_apply_linearity():
    rng = np.random.default_rng(1)
    H = random_operator(rng, complex_=True)
    x = random_signal(rng, H.block_dims, complex_=True)
    z = random_signal(rng, H.block_dims, complex_=True)
    a, b = 1.7 - 0.3j, -0.8j
    combo = BlockVector([a * xb + b * zb for xb, zb in zip(x.blocks, z.blocks)])
    lhs = H.apply(combo)
    rhs = a * H.apply(x) + b * H.apply(z)
    assert np.linalg.norm(lhs - rhs) <= 1e-12 * max(1.0, np.linalg.norm(rhs))


def test_adjoint_zero_and_single_block():
    rng = np.random.default_rng(2)
    B = rng.standard_normal((3, 5))
    H = HierarchicalOperator(np.array([[1.0]]), (B,))
    assert np.allclose(H.adjoint(np.zeros(3)).flatten(), 0.0)
    y = rng.standard_normal(3)
    assert np.allclose(H.adjoint(y).flatten(), B.T @ y)


def test_adjoint_identity_random():
    rng = np.random.default_rng(3)
    for k in range(60):
        H = random_operator(rng, complex_=bool(k % 2))
        x = random_signal(rng, H.block_dims, complex_=bool(k % 2))
        y = rng.standard_normal(H.shape[0])
        if k % 2:
            y = y + 1j * rng.standard_normal(y.size)
        lhs = np.vdot(y, H.apply(x))
        rhs = np.vdot(H.adjoint(y).flatten(), x.flatten())
        scale = np.linalg.norm(H.apply(x)) * np.linalg.norm(y)
        assert abs(lhs - rhs) <= 1e-10 * max(scale, 1e-30)


def test_dense_kronecker_special_case():
    rng = np.random.default_rng(4)
    for _ in range(20):
        M, N, m, n = (int(v) for v in rng.integers(1, 5, size=4))
        A = rng.standard_normal((M, N)) + 1j * rng.standard_normal((M, N))
        B = rng.standard_normal((m, n))
        H = HierarchicalOperator(A, (B,) * N)
        assert np.max(np.abs(H.dense() - np.kron(A, B))) <= 1e-14


def test_dense_identity_reduction():
    n = 3
    H = HierarchicalOperator(np.eye(n), tuple(np.eye(n) for _ in range(n)))
    assert np.array_equal(H.dense(), np.eye(n * n))


def test_dense_single_slot_row_layout():
    rng = np.random.default_rng(5)
    A = rng.standard_normal((1, 3))
    Bs = tuple(rng.standard_normal((1, 2)) for _ in range(3))
    H = HierarchicalOperator(A, Bs)
    expected = np.concatenate([A[0, i] * Bs[i][0] for i in range(3)])
    assert np.allclose(H.dense()[0], expected, atol=1e-15)


def test_dense_cap():
    H = HierarchicalOperator(np.ones((2, 2)), (np.ones((2, 3)), np.ones((2, 3))))
    with pytest.raises(ValueError, match="cap"):
        H.dense(max_elements=10)


def test_restricted_columns_order():
    rng = np.random.default_rng(6)
    H = random_operator(rng, M=2, N=3, m=2, dims=[3, 3, 3])
    supp = HiSupport(((2, 1), (0, 2), (0, 0)))
    C = restricted_columns(H, supp)
    D = H.dense()
    # sorted entry order: (0,0) -> flat 0, (0,2) -> flat 2, (2,1) -> flat 7
    assert np.allclose(C, D[:, [0, 2, 7]])


@pytest.mark.parametrize("method", ["qr", "gram"])
def test_restricted_lsq_recovers_exact_data(method):
    # full rank needs at most m active entries per block (a block's columns
    # span an m-dimensional slice of the measurement space)
    rng = np.random.default_rng(7)
    for k in range(30):
        H = random_operator(rng, M=4, N=3, m=3, dims=[4, 4, 4], complex_=bool(k % 2))
        blocks = []
        for b in random_signal(rng, H.block_dims, complex_=bool(k % 2)).blocks:
            keep = rng.permutation(4)[: rng.integers(0, 4)]
            masked = np.zeros_like(b)
            masked[keep] = b[keep]
            blocks.append(masked)
        x = BlockVector(blocks)
        supp = support_of(x)
        if len(supp) == 0:
            continue
        res = restricted_least_squares(H, H.apply(x), supp, method=method)
        assert np.linalg.norm(res.estimate.flatten() - x.flatten()) <= 1e-10
        assert not res.rank_deficient


def test_restricted_lsq_empty_support():
    rng = np.random.default_rng(8)
    H = random_operator(rng)
    res = restricted_least_squares(H, np.zeros(H.shape[0]), HiSupport.empty())
    assert res.estimate.norm() == 0.0


def test_restricted_lsq_identity_projects_coordinates():
    n = 4
    H = HierarchicalOperator(np.eye(2), tuple(np.eye(n) for _ in range(2)))
    y = np.arange(1.0, 2 * n + 1)
    supp = HiSupport(((0, 1), (1, 3)))
    res = restricted_least_squares(H, y, supp)
    expected = np.zeros(2 * n)
    expected[1] = y[1]
    expected[n + 3] = y[n + 3]
    assert np.allclose(res.estimate.flatten(), expected)


@pytest.mark.parametrize("method", ["qr", "gram"])
def test_restricted_lsq_residual_orthogonality(method):
    rng = np.random.default_rng(9)
    for _ in range(20):
        H = random_operator(rng, M=3, N=3, m=3, dims=[4, 4, 4], complex_=True)
        y = rng.standard_normal(H.shape[0]) + 1j * rng.standard_normal(H.shape[0])
        supp = HiSupport(((0, 0), (0, 3), (1, 2), (2, 1)))
        res = restricted_least_squares(H, y, supp, method=method)
        C = restricted_columns(H, supp)
        r = y - H.apply(res.estimate)
        assert np.linalg.norm(C.conj().T @ r) <= 1e-8 * np.linalg.norm(y)


def test_restricted_lsq_gram_matches_qr():
    rng = np.random.default_rng(10)
    for _ in range(20):
        H = random_operator(rng, M=4, N=4, m=3, dims=[5, 5, 5, 5], complex_=True)
        y = rng.standard_normal(H.shape[0]) + 1j * rng.standard_normal(H.shape[0])
        supp = HiSupport(((0, 0), (1, 1), (1, 4), (3, 2)))
        a = restricted_least_squares(H, y, supp, method="qr")
        b = restricted_least_squares(H, y, supp, method="gram")
        assert np.allclose(a.estimate.flatten(), b.estimate.flatten(), atol=1e-10)


def test_restricted_lsq_rank_deficient_minimum_norm():
    # duplicated columns make the restricted set singular; the minimum-norm
    # solution splits the coefficient evenly and the flag reports it
    B = np.array([[1.0, 1.0], [0.0, 0.0]])
    H = HierarchicalOperator(np.array([[1.0]]), (B,))
    y = np.array([2.0, 0.0])
    res = restricted_least_squares(H, y, HiSupport(((0, 0), (0, 1))))
    assert res.rank_deficient
    assert np.allclose(res.estimate.flatten(), [1.0, 1.0])


def test_restricted_lsq_support_larger_than_measurements():
    H = HierarchicalOperator(np.array([[1.0]]), (np.array([[1.0, 2.0]]),))
    with pytest.raises(ValueError, match="support size"):
        restricted_least_squares(H, np.ones(1), HiSupport(((0, 0), (0, 1))))


def test_gaussian_mixing_variance_and_determinism():
    rng = np.random.default_rng(11)
    A = make_gaussian_mixing(400, 300, 0.7, rng, field="complex")
    assert abs(np.mean(np.abs(A) ** 2) - 0.7) <= 0.05 * 0.7
    Ar = make_gaussian_mixing(400, 300, 0.7, np.random.default_rng(1), field="real")
    assert abs(np.var(Ar) - 0.7) <= 0.05 * 0.7

    a = make_gaussian_mixing(5, 6, 0.25, np.random.default_rng(123))
    b = make_gaussian_mixing(5, 6, 0.25, np.random.default_rng(123))
    assert np.array_equal(a, b)
    with pytest.raises(ValueError):
        make_gaussian_mixing(2, 2, 0.0, rng)


def test_gaussian_mixing_quarter_variance_case():
    # variance 1/sqrt(N) at N = 16 is 0.25
    N = 16
    rng = np.random.default_rng(12)
    A = make_gaussian_mixing(2500, N, 1 / np.sqrt(N), rng)
    assert abs(np.mean(np.abs(A) ** 2) - 0.25) <= 0.05 * 0.25


def test_gaussian_block_unit_column_energy():
    rng = np.random.default_rng(13)
    B = make_gaussian_block(50, 2000, rng)
    energies = np.sum(np.abs(B) ** 2, axis=0)
    assert abs(np.mean(energies) - 1.0) <= 0.05
    a = make_gaussian_block(4, 5, np.random.default_rng(7))
    b = make_gaussian_block(4, 5, np.random.default_rng(7))
    assert np.array_equal(a, b)


def test_subsampled_dft_full_mode_unitary():
    rng = np.random.default_rng(14)
    n = 16
    B = make_subsampled_dft(n, n, rng, replace=False, phase="none")
    x = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    assert abs(np.linalg.norm(B @ x) - np.linalg.norm(x)) <= 1e-12 * np.linalg.norm(x)


def test_subsampled_dft_row_and_column_norms():
    rng = np.random.default_rng(15)
    m, n = 8, 32
    B = make_subsampled_dft(m, n, rng)
    # every entry has modulus m^(-1/2): rows have norm sqrt(n/m), columns norm 1
    assert np.allclose(np.linalg.norm(B, axis=1), np.sqrt(n / m), atol=1e-12)
    assert np.allclose(np.sum(np.abs(B) ** 2, axis=0), 1.0, atol=1e-12)


def test_subsampled_dft_determinism_and_phases():
    a = make_subsampled_dft(4, 8, np.random.default_rng(3))
    b = make_subsampled_dft(4, 8, np.random.default_rng(3))
    assert np.array_equal(a, b)
    u = make_subsampled_dft(4, 8, np.random.default_rng(3), phase="uniform")
    assert np.allclose(np.abs(u), 1 / np.sqrt(4), atol=1e-12)
    with pytest.raises(ValueError):
        make_subsampled_dft(4, 8, np.random.default_rng(0), phase="bogus")
    with pytest.raises(ValueError):
        make_subsampled_dft(9, 8, np.random.default_rng(0), replace=False)


def test_from_descriptor_replay():
    mixing = {"ensemble": "gaussian", "M": 3, "N": 4, "variance": 0.5,
              "field": "complex", "seed": 21}
    blocks = {"ensemble": "subsampled_dft", "m": 4, "n": 8, "seed": 9}
    H1 = from_descriptor(mixing, blocks)
    H2 = from_descriptor(mixing, blocks)
    assert np.array_equal(H1.mixing, H2.mixing)
    assert all(np.array_equal(a, b) for a, b in zip(H1.blocks, H2.blocks))
    # per-block seeds differ
    assert not np.array_equal(H1.blocks[0], H1.blocks[1])
    with pytest.raises(ValueError):
        from_descriptor({**mixing, "bogus": 1}, blocks)
