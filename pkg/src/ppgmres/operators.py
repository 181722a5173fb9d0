"""
Linear operators seen by the Krylov kernels.

Every operator exposes ``n`` and ``matvec(v, ctr)``; the counter is charged
in units of products with the *original* matrix, so a degree-d polynomial
operator costs d mvps per application.
"""
import numpy as np

from .errors import UsageError
from .sparse import SparseMatrix, matvec

__all__ = ["LinearOperator", "MatrixOperator", "RightPreconditioned", "FunctionOperator",
           "as_operator"]


class LinearOperator:
    """Abstract square operator of dimension ``n``."""

    n = None

    def matvec(self, v, ctr=None):
        raise NotImplementedError

    def __call__(self, v, ctr=None):
        return self.matvec(v, ctr)

    def to_dense(self):
        """Dense representation by applying the operator to the identity (small n only)."""
        cols = [self.matvec(e) for e in np.eye(self.n)]
        return np.column_stack(cols)


class MatrixOperator(LinearOperator):
    """The bare matrix: one mvp per application."""

    def __init__(self, A):
        if not isinstance(A, SparseMatrix):
            A = SparseMatrix(A)
        self.A = A
        self.n = A.n

    def matvec(self, v, ctr=None):
        return matvec(self.A, v, ctr)

    def __repr__(self):
        return f"MatrixOperator({self.A!r})"


class RightPreconditioned(LinearOperator):
    """``v -> A M^{-1} v`` for a standard preconditioner ``M`` (e.g. ILU(0)).

    ``M`` must provide ``solve(v, ctr)``.
    """

    def __init__(self, A, M):
        self.inner = as_operator(A)
        self.M = M
        self.n = self.inner.n

    def matvec(self, v, ctr=None):
        return self.inner.matvec(self.M.solve(v, ctr), ctr)


class FunctionOperator(LinearOperator):
    """Wrap a plain callable ``f(v, ctr)``."""

    def __init__(self, n, fn):
        self.n = int(n)
        self._fn = fn

    def matvec(self, v, ctr=None):
        return self._fn(v, ctr)


def as_operator(A):
    """Coerce a SparseMatrix, scipy sparse matrix or dense array to a LinearOperator."""
    if isinstance(A, LinearOperator):
        return A
    if isinstance(A, SparseMatrix):
        return MatrixOperator(A)
    try:
        return MatrixOperator(SparseMatrix(A))
    except (TypeError, ValueError) as exc:
        raise UsageError(f"cannot interpret {type(A).__name__} as a linear operator: {exc}")
