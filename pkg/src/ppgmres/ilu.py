"""ILU(0) with an optional diagonal shift, used as a right preconditioner."""
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu, spsolve_triangular

from .errors import NumericalError, UsageError
from .sparse import SparseMatrix

__all__ = ["Ilu0Factors", "ilu0_factor", "ilu0_apply", "PIVOT_TOL"]

PIVOT_TOL = 1e-14


@dataclass(frozen=True)
class Ilu0Factors:
    """``L`` unit lower and ``U`` upper triangular, both CSR, with ``L U ~ A + shift I``.

    ``L`` is stored with its unit diagonal.
    """

    L: sp.csr_matrix
    U: sp.csr_matrix
    shift: float
    _solvers: tuple = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_solvers", (_triangular_solver(self.L, lower=True),
                                              _triangular_solver(self.U, lower=False)))

    @property
    def n(self):
        return self.L.shape[0]

    def solve(self, v, ctr=None):
        return ilu0_apply(self, v, ctr)


def ilu0_factor(A, shift=0.0):
    """Incomplete LU with zero fill-in of ``A + shift*I`` (IKJ variant).

    Raises :class:`NumericalError` on a pivot with
    ``|u_ii| <= 1e-14 * ||A||_inf``; a larger shift usually helps.
    """
    if not isinstance(A, SparseMatrix):
        A = SparseMatrix(A)
    if shift < 0:
        raise UsageError("shift must be nonnegative")
    M = A.shifted(shift)
    n = M.n
    indptr = M.indptr.copy()
    indices = M.indices.copy()
    data = M.data.copy()
    tol = PIVOT_TOL * max(A.norm_inf(), np.finfo(float).tiny)

    diag = np.full(n, -1, dtype=np.int64)
    for i in range(n):
        row = indices[indptr[i]:indptr[i + 1]]
        hit = np.flatnonzero(row == i)
        if hit.size:
            diag[i] = indptr[i] + hit[0]

    for i in range(n):
        lo, hi = indptr[i], indptr[i + 1]
        cols = indices[lo:hi]
        pos = {int(c): lo + t for t, c in enumerate(cols)}
        for t in range(lo, hi):
            k = indices[t]
            if k >= i:
                break
            if diag[k] < 0:
                raise NumericalError(f"zero pivot at row {k}; try a larger shift")
            data[t] /= data[diag[k]]
            lik = data[t]
            for s in range(diag[k] + 1, indptr[k + 1]):
                p = pos.get(int(indices[s]))
                if p is not None:
                    data[p] -= lik * data[s]
        if diag[i] < 0 or abs(data[diag[i]]) <= tol:
            raise NumericalError(f"zero pivot at row {i}; try a larger shift")

    LU = sp.csr_matrix((data, indices, indptr), shape=(n, n))
    L = sp.tril(LU, k=-1, format="csr") + sp.identity(n, format="csr")
    U = sp.triu(LU, k=0, format="csr")
    L.sort_indices()
    U.sort_indices()
    return Ilu0Factors(L=L, U=U, shift=float(shift))


def _triangular_solver(T, lower):
    # SuperLU on an already triangular matrix with natural ordering and no
    # pivoting is a plain substitution in compiled code.
    n = T.shape[0]
    ident = np.arange(n)
    try:
        lu = splu(T.tocsc(), permc_spec="NATURAL", diag_pivot_thresh=0.0,
                  options=dict(SymmetricMode=True))
        if np.array_equal(lu.perm_r, ident) and np.array_equal(lu.perm_c, ident):
            return lu.solve
    except RuntimeError:
        pass
    return lambda v: spsolve_triangular(T, v, lower=lower, unit_diagonal=lower)


def ilu0_apply(f, v, ctr=None):
    """``U^{-1} L^{-1} v``; charged as two daxpys (one per triangular sweep)."""
    v = np.asarray(v, dtype=np.float64)
    if v.shape != (f.n,):
        raise UsageError(f"vector of shape {v.shape} does not match n={f.n}")
    lsolve, usolve = f._solvers
    x = usolve(lsolve(v))
    if ctr is not None:
        ctr.daxpys += 2
    return x
