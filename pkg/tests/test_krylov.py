import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ppgmres import (ArnoldiData, NumericalError, OpCounter, UsageError, arnoldi_cycle,
                     diag_power, diagonal, harmonic_ritz_values, hessenberg_eigenvalues,
                     hessenberg_lstsq, identity, matvec)
from ppgmres.krylov import clean_conjugates

from conftest import random_sparse, well_conditioned


def test_identity_breaks_down_immediately():
    ad = arnoldi_cycle(identity(5), np.arange(1.0, 6.0), 4)
    assert ad.d == 1
    np.testing.assert_allclose(ad.H, [[1.0], [0.0]], atol=1e-15)
    assert ad.breakdown


def test_diag3_full_cycle_against_qr_of_krylov_matrix():
    A = diagonal([1.0, 2.0, 3.0])
    b = np.ones(3) / np.sqrt(3)
    ad = arnoldi_cycle(A, b, 3)
    D = A.toarray()
    K = np.column_stack([b, D @ b, D @ D @ b])
    Qk, _ = np.linalg.qr(K)
    V3 = ad.V[:, :ad.d]
    # same subspace: projector onto the Krylov space equals V V^T
    np.testing.assert_allclose(V3 @ V3.T, Qk @ Qk.T, atol=1e-12)
    np.testing.assert_allclose(V3.T @ V3, np.eye(ad.d), atol=1e-12)
    assert np.linalg.norm(D @ V3 - ad.V @ ad.H) <= 1e-12


def test_counter_mvps():
    ctr = OpCounter()
    A = diag_power(100, 2)
    arnoldi_cycle(A, np.random.default_rng(0).standard_normal(100), 10, ctr)
    assert ctr.mvps == 10


def test_counter_mgs_tallies():
    ctr = OpCounter()
    d = 6
    arnoldi_cycle(diag_power(50, 1), np.ones(50), d, ctr)
    # initial norm + scale, then per step j: j+1 projections + 1 norm, j+1 axpys + 1 scale
    assert ctr.dots == 1 + sum(j + 2 for j in range(d))
    assert ctr.daxpys == 1 + sum(j + 2 for j in range(d))


def test_zero_start_rejected():
    with pytest.raises(UsageError):
        arnoldi_cycle(identity(3), np.zeros(3), 2)


@settings(max_examples=25, deadline=None)
@given(n=st.integers(10, 200), d=st.integers(1, 30), seed=st.integers(0, 10_000))
def test_arnoldi_relation_property(n, d, seed):
    A = random_sparse(n, 0.1, seed, shift=1.0)
    b = np.random.default_rng(seed).standard_normal(n)
    ad = arnoldi_cycle(A, b, min(d, n))
    D = A.toarray()
    k = ad.d
    lhs = D @ ad.V[:, :k]
    assert np.linalg.norm(lhs - ad.V @ ad.H) <= 1e-9 * np.linalg.norm(D) * np.sqrt(k)


def test_orthonormal_columns_well_conditioned():
    A = well_conditioned(150, seed=4)
    ad = arnoldi_cycle(A, np.random.default_rng(4).standard_normal(150), 30)
    V = ad.V
    assert np.abs(V.T @ V - np.eye(V.shape[1])).max() <= 1e-8


def test_lstsq_by_hand():
    y, res = hessenberg_lstsq(np.array([[1.0], [0.0]]), 1.0)
    np.testing.assert_allclose(y, [1.0])
    assert res == 0.0
    y, res = hessenberg_lstsq(np.array([[1.0], [1.0]]), 1.0)
    np.testing.assert_allclose(y, [0.5])
    assert res == pytest.approx(np.sqrt(2) / 2, rel=1e-15)


def test_lstsq_random_vs_normal_equations():
    rng = np.random.default_rng(11)
    H = np.triu(rng.standard_normal((6, 5)), -1)
    beta = 1.7
    rhs = np.zeros(6)
    rhs[0] = beta
    y_oracle = np.linalg.solve(H.T @ H, H.T @ rhs)
    y, res = hessenberg_lstsq(H, beta)
    assert np.linalg.norm(y - y_oracle) <= 1e-10
    assert res == pytest.approx(np.linalg.norm(rhs - H @ y_oracle), rel=1e-10)


def test_lstsq_shape_error():
    with pytest.raises(UsageError):
        hessenberg_lstsq(np.ones((3, 3)), 1.0)


def test_gmres_residual_identity():
    A = well_conditioned(120, seed=7)
    b = np.random.default_rng(7).standard_normal(120)
    ad = arnoldi_cycle(A, b, 20)
    y, res = hessenberg_lstsq(ad.H, ad.beta)
    x = ad.V[:, :ad.d] @ y
    true = np.linalg.norm(b - A.toarray() @ x)
    assert res == pytest.approx(true, rel=1e-8)


def test_eigenvalues_trivial():
    np.testing.assert_allclose(hessenberg_eigenvalues([[2.0]]), [2.0])
    ev = hessenberg_eigenvalues([[0.0, -1.0], [1.0, 0.0]])
    assert sorted(ev, key=lambda z: z.imag) == [-1j, 1j]


def test_eigenvalues_random_vs_charpoly_roots():
    rng = np.random.default_rng(5)
    M = np.triu(rng.standard_normal((8, 8)), -1)
    # characteristic polynomial via Faddeev-LeVerrier, then its roots
    n = 8
    coeffs = [1.0]
    Mk = np.zeros_like(M)
    for k in range(1, n + 1):
        Mk = M @ Mk + coeffs[-1] * np.eye(n)
        coeffs.append(-np.trace(M @ Mk) / k)
    oracle = np.roots(coeffs)
    ev = hessenberg_eigenvalues(M)
    for z in oracle:
        assert np.min(np.abs(ev - z)) <= 1e-8 * max(1, abs(z))
    assert len(ev) == 8


def test_eigenvalues_conjugate_pairs_exact():
    rng = np.random.default_rng(2)
    M = np.triu(rng.standard_normal((12, 12)), -1)
    ev = hessenberg_eigenvalues(M)
    nonreal = ev[ev.imag != 0]
    for z in nonreal:
        assert np.conj(z) in nonreal


def test_eigenvalues_nonfinite():
    with pytest.raises(NumericalError):
        hessenberg_eigenvalues([[np.nan]])


def test_clean_conjugates_snaps_pairs():
    vals = np.array([1 + 1e-15j, 2 + 1j, 2 - 1j + 1e-14])
    out = clean_conjugates(vals)
    assert out[0] == 1.0
    assert out[1] == np.conj(out[2])


def test_harmonic_ritz_on_invariant_space():
    A = diagonal([1.0, 2.0, 3.0])
    ad = arnoldi_cycle(A, np.array([1.0, 0.7, 0.4]), 3)
    theta = np.sort(harmonic_ritz_values(ad).real)
    np.testing.assert_allclose(theta, [1, 2, 3], atol=1e-10)


def test_harmonic_ritz_scaled_identity():
    ad = arnoldi_cycle(diagonal(np.full(4, 2.0)), np.ones(4), 1)
    np.testing.assert_allclose(harmonic_ritz_values(ad), [2.0])


def test_harmonic_ritz_vs_power_basis_oracle():
    n, d = 50, 4
    A = diag_power(n, 1)
    lam = A.diagonal()
    b = np.random.default_rng(3).standard_normal(n)
    ad = arnoldi_cycle(A, b, d)
    theta = harmonic_ritz_values(ad)
    # min ||b - sum c_k A^k b|| over k = 1..d in the power basis (normal equations)
    K = np.column_stack([lam ** k * b for k in range(1, d + 1)])
    c = np.linalg.solve(K.T @ K, K.T @ b)
    roots = np.roots(np.concatenate([-c[::-1], [1.0]]))
    for z in roots:
        assert np.min(np.abs(theta - z)) <= 1e-6 * abs(z)


def test_harmonic_ritz_conjugate_closed():
    A = well_conditioned(80, seed=9, noise=1.0)
    ad = arnoldi_cycle(A, np.random.default_rng(9).standard_normal(80), 16)
    theta = harmonic_ritz_values(ad)
    assert np.any(theta.imag != 0)
    assert sorted(theta, key=lambda z: (z.real, z.imag)) == \
        sorted(np.conj(theta), key=lambda z: (z.real, z.imag))


def test_harmonic_ritz_singular_block():
    H = np.array([[0.0, 1.0], [1.0, 0.0], [0.0, 1.0]])
    H[:2, :2] = [[0.0, 0.0], [1.0, 0.0]]
    ad = ArnoldiData(V=np.eye(3), H=H, beta=1.0, d=2)
    with pytest.raises(NumericalError, match="lower the degree"):
        harmonic_ritz_values(ad)


def test_residual_polynomial_consistency():
    from ppgmres import apply_pi, PolyPreconditioner
    A = well_conditioned(100, seed=21)
    b = np.random.default_rng(21).standard_normal(100)
    ad = arnoldi_cycle(A, b, 12)
    y, _ = hessenberg_lstsq(ad.H, ad.beta)
    r = b - A.toarray() @ (ad.V[:, :ad.d] @ y)
    from ppgmres import modified_leja_order
    pp = PolyPreconditioner(modified_leja_order(harmonic_ritz_values(ad)), None, A)
    assert np.linalg.norm(apply_pi(pp, b) - r) <= 1e-8 * np.linalg.norm(r)
