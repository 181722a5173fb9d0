import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings, strategies as st

from ppgmres import (NumericalError, OpCounter, SparseMatrix, UsageError, diagonal, ilu0_apply,
                     ilu0_factor, identity, matvec)


def tridiag(n, seed=0):
    rng = np.random.default_rng(seed)
    return SparseMatrix(sp.diags([rng.uniform(-1, 1, n - 1), rng.uniform(3, 4, n),
                                  rng.uniform(-1, 1, n - 1)], [-1, 0, 1]))


def diag_dominant(n, density, seed):
    rng = np.random.default_rng(seed)
    M = sp.random(n, n, density=density, random_state=rng, data_rvs=rng.standard_normal).tocsr()
    rowsum = np.asarray(abs(M).sum(axis=1)).ravel()
    return SparseMatrix(M + sp.diags(rowsum + 1.0))


def pattern(M):
    M = sp.csr_matrix(M)
    return set(zip(*M.nonzero()))


def test_tridiagonal_is_exact_lu():
    A = tridiag(30)
    for shift in (0.0, 0.3):
        f = ilu0_factor(A, shift)
        err = abs(f.L @ f.U - A.shifted(shift).csr).max()
        assert err <= 1e-12 * A.norm_inf()


def test_diagonal_factors():
    A = diagonal([2.0, 3.0, 5.0])
    f = ilu0_factor(A, 0.5)
    np.testing.assert_array_equal(f.L.toarray(), np.eye(3))
    np.testing.assert_array_equal(f.U.toarray(), np.diag([2.5, 3.5, 5.5]))


@pytest.mark.parametrize("seed", range(3))
def test_product_matches_on_pattern(seed):
    A = diag_dominant(50, 0.1, seed)
    f = ilu0_factor(A)
    LU = (f.L @ f.U).toarray()
    D = A.toarray()
    for i, j in pattern(A.csr):
        assert LU[i, j] == pytest.approx(D[i, j], rel=1e-12, abs=1e-12 * A.norm_inf())


@settings(max_examples=20, deadline=None)
@given(n=st.integers(2, 60), seed=st.integers(0, 1000), shift=st.floats(0, 2))
def test_ilu0_invariants(n, seed, shift):
    A = diag_dominant(n, 0.15, seed)
    f = ilu0_factor(A, shift)
    S = A.shifted(shift)
    # zero fill-in and unit lower factor
    assert pattern(f.L - sp.identity(n)) | pattern(f.U) <= pattern(S.csr) | set((i, i) for i in range(n))
    np.testing.assert_array_equal(f.L.diagonal(), np.ones(n))
    assert np.all(np.abs(f.U.diagonal()) > 1e-14 * A.norm_inf())
    LU = (f.L @ f.U).toarray()
    D = S.toarray()
    for i, j in pattern(S.csr):
        assert abs(LU[i, j] - D[i, j]) <= 1e-11 * max(1.0, S.norm_inf())


def test_apply_identity_factors():
    f = ilu0_factor(identity(4))
    v = np.arange(4.0)
    np.testing.assert_array_equal(ilu0_apply(f, v), v)


def test_apply_inverts_tridiagonal():
    A = tridiag(40, seed=3)
    f = ilu0_factor(A, 0.2)
    v = np.random.default_rng(1).standard_normal(40)
    w = matvec(A.shifted(0.2), ilu0_apply(f, v))
    assert np.linalg.norm(w - v) <= 1e-10 * np.linalg.norm(v)


def test_apply_vs_dense_triangular_solves():
    A = diag_dominant(50, 0.1, 7)
    f = ilu0_factor(A)
    v = np.random.default_rng(2).standard_normal(50)
    from scipy.linalg import solve_triangular
    ref = solve_triangular(f.U.toarray(), solve_triangular(f.L.toarray(), v, lower=True,
                                                            unit_diagonal=True))
    np.testing.assert_allclose(ilu0_apply(f, v), ref, rtol=1e-12, atol=1e-12)


def test_apply_counts_no_mvps():
    f = ilu0_factor(tridiag(10))
    ctr = OpCounter()
    f.solve(np.ones(10), ctr)
    assert ctr.mvps == 0 and ctr.daxpys == 2


def test_zero_pivot():
    A = SparseMatrix(np.array([[0.0, 1.0], [1.0, 0.0]]))
    with pytest.raises(NumericalError, match="larger shift"):
        ilu0_factor(A)
    ilu0_factor(A, shift=2.0)


def test_negative_shift():
    with pytest.raises(UsageError):
        ilu0_factor(identity(2), -1.0)


def test_apply_dimension():
    with pytest.raises(UsageError):
        ilu0_apply(ilu0_factor(identity(3)), np.ones(2))
