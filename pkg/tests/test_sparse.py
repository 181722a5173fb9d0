import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ppgmres import (MatrixMarketError, OpCounter, SparseMatrix, UnsupportedFormatError,
                     UsageError, bidiag_power, biharmonic, diag_power, diagonal, gen_test_matrix,
                     identity, matvec, read_matrix_market, write_matrix_market)

from conftest import random_sparse


def dense_from_structure(A):
    """Expand CSR arrays by hand, independent of scipy's toarray."""
    D = np.zeros((A.n, A.n))
    for i in range(A.n):
        for k in range(A.indptr[i], A.indptr[i + 1]):
            D[i, A.indices[k]] += A.data[k]
    return D


def test_matvec_identity_and_diagonal():
    ctr = OpCounter()
    assert np.array_equal(matvec(identity(3), np.array([1.0, 2.0, 3.0]), ctr), [1, 2, 3])
    assert np.array_equal(matvec(diagonal([1.0, 2.0, 3.0]), np.ones(3), ctr), [1, 2, 3])
    assert ctr.mvps == 2


def test_matvec_random_matches_dense_oracle():
    A = random_sparse(5, 0.4, seed=3)
    v = np.random.default_rng(0).standard_normal(5)
    ref = dense_from_structure(A) @ v
    assert np.linalg.norm(matvec(A, v) - ref) <= 1e-14 * max(np.linalg.norm(ref), 1)


@settings(max_examples=40, deadline=None)
@given(n=st.integers(1, 50), density=st.floats(0.05, 0.6), seed=st.integers(0, 10_000))
def test_matvec_property(n, density, seed):
    A = random_sparse(n, density, seed)
    v = np.random.default_rng(seed + 1).standard_normal(n)
    ref = dense_from_structure(A) @ v
    assert np.linalg.norm(matvec(A, v) - ref) <= 1e-13 * max(np.linalg.norm(ref), 1e-300) + 1e-300


def test_matvec_dimension_mismatch():
    with pytest.raises(UsageError):
        matvec(identity(3), np.ones(4))


def test_structure_invariants():
    A = random_sparse(30, 0.2, seed=1)
    assert np.all(np.diff(A.indptr) >= 0)
    assert A.indices.min() >= 0 and A.indices.max() < A.n
    for i in range(A.n):
        row = A.indices[A.indptr[i]:A.indptr[i + 1]]
        assert np.all(np.diff(row) > 0)


def test_diag_power_values():
    A = diag_power(4, 2)
    assert np.array_equal(A.diagonal(), [0.25, 1.0, 2.25, 4.0])
    assert A.nnz == 4


def test_bidiag_power_values():
    A = bidiag_power(3, 1, 0.2).toarray()
    np.testing.assert_allclose(np.diag(A), [1 / 3, 2 / 3, 1.0], rtol=0, atol=1e-15)
    np.testing.assert_array_equal(np.diag(A, 1), [0.2, 0.2])
    assert bidiag_power(3, 1, 0.2).nnz == 5


@pytest.mark.parametrize("n", [1, 7, 100])
def test_generator_nnz_counts(n):
    assert diag_power(n, 1.5).nnz == n
    assert bidiag_power(n, 1.5).nnz == 2 * n - 1


def stencil_row(nx, ny, ix, iy):
    """Explicit finite-difference expansion of -u_xxxx - u_yyyy + u_xxx at one node."""
    h = 1.0 / (nx + 1)
    row = {}

    def add(jx, jy, c):
        if 0 <= jx < nx and 0 <= jy < ny:
            k = jy * nx + jx
            row[k] = row.get(k, 0.0) + c

    # -u_xxxx: -(u[-2] - 4u[-1] + 6u[0] - 4u[1] + u[2])/h^4
    for off, c in zip(range(-2, 3), (1, -4, 6, -4, 1)):
        add(ix + off, iy, -c / h ** 4)
        add(ix, iy + off, -c / h ** 4)
    # u_xxx: (u[2] - 2u[1] + 2u[-1] - u[-2]) / (2h^3)
    for off, c in ((2, 1.0), (1, -2.0), (-1, 2.0), (-2, -1.0)):
        add(ix + off, iy, c / (2 * h ** 3))
    return row


def test_biharmonic_center_row_matches_stencil_oracle():
    A = biharmonic(3, 3).toarray()
    assert A.shape == (9, 9)
    expected = np.zeros(9)
    for k, c in stencil_row(3, 3, 1, 1).items():
        expected[k] = c
    np.testing.assert_allclose(A[4], expected, rtol=1e-14)


def test_biharmonic_all_rows_larger_grid():
    nx = ny = 7
    A = biharmonic(nx, ny).toarray()
    for iy in range(ny):
        for ix in range(nx):
            expected = np.zeros(nx * ny)
            for k, c in stencil_row(nx, ny, ix, iy).items():
                expected[k] = c
            np.testing.assert_allclose(A[iy * nx + ix], expected, rtol=1e-13, atol=1e-6)


def test_biharmonic_interior_nonzeros():
    A = biharmonic(9, 9)
    counts = np.diff(A.indptr)
    # two 5-point 1-D stencils sharing the center
    assert counts.max() == 9


@pytest.mark.parametrize("kind,params", [("diag_power", dict(n=0, p=1)),
                                         ("biharmonic", dict(nx=0)),
                                         ("nope", {}),
                                         ("diag_power", dict(n=3, q=1))])
def test_generator_errors(kind, params):
    with pytest.raises(UsageError):
        gen_test_matrix(kind, **params)


def test_gen_dispatch():
    A = gen_test_matrix("bidiag_power", n=5, p=1.25, s=0.2)
    assert A.nnz == 9


def write(tmp_path, text, name="m.mtx"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_read_handwritten(tmp_path):
    p = write(tmp_path, "%%MatrixMarket matrix coordinate real general\n% c\n2 2 2\n1 1 2.0\n2 2 3.0\n")
    A = read_matrix_market(p)
    np.testing.assert_array_equal(A.toarray(), np.diag([2.0, 3.0]))


def test_read_symmetric_expands(tmp_path):
    p = write(tmp_path, "%%MatrixMarket matrix coordinate real symmetric\n3 3 4\n"
                        "1 1 4.0\n2 1 -1.5\n3 2 0.25\n3 3 2.0\n")
    A = read_matrix_market(p)
    D = A.toarray()
    assert A.symmetric
    assert np.array_equal(D, D.T)
    assert A.nnz == 6


def test_read_sums_duplicates(tmp_path):
    p = write(tmp_path, "%%MatrixMarket matrix coordinate real general\n2 2 3\n1 1 1.0\n1 1 2.5\n2 1 1.0\n")
    A = read_matrix_market(p)
    assert A.toarray()[0, 0] == 3.5
    assert A.nnz == 2


@pytest.mark.parametrize("header,err", [
    ("%%MatrixMarket matrix coordinate complex general", UnsupportedFormatError),
    ("%%MatrixMarket matrix coordinate pattern general", UnsupportedFormatError),
    ("%%MatrixMarket matrix array real general", UnsupportedFormatError),
    ("%%MatrixMarket matrix coordinate real hermitian", UnsupportedFormatError),
    ("%MatrixMarket matrix coordinate real", MatrixMarketError),
    ("garbage", MatrixMarketError),
])
def test_read_bad_headers(tmp_path, header, err):
    p = write(tmp_path, header + "\n2 2 1\n1 1 1.0\n")
    with pytest.raises(err):
        read_matrix_market(p)


def test_read_truncated_body(tmp_path):
    p = write(tmp_path, "%%MatrixMarket matrix coordinate real general\n2 2 3\n1 1 1.0\n")
    with pytest.raises(MatrixMarketError):
        read_matrix_market(p)


@settings(max_examples=20, deadline=None)
@given(n=st.integers(1, 30), seed=st.integers(0, 1000))
def test_roundtrip(tmp_path_factory, n, seed):
    A = random_sparse(n, 0.3, seed)
    p = tmp_path_factory.mktemp("rt") / "a.mtx"
    write_matrix_market(p, A, comment="roundtrip")
    B = read_matrix_market(p)
    assert np.array_equal(A.indptr, B.indptr)
    assert np.array_equal(A.indices, B.indices)
    assert np.array_equal(A.data, B.data)


def test_sparse_matrix_rejects_nonsquare():
    with pytest.raises(UsageError):
        SparseMatrix(np.ones((2, 3)))
