"""
Sparse matrix storage, counted matrix-vector products, synthetic test
matrices and Matrix Market coordinate I/O.

Storage is compressed sparse row with ascending column order inside each
row and no duplicate entries; the heavy lifting is done by
``scipy.sparse.csr_matrix``.
"""
import numpy as np
import scipy.sparse as sp

from .errors import MatrixMarketError, UnsupportedFormatError, UsageError

try:  # compiled kernel without the per-call dispatch of ``csr_matrix.__matmul__``
    from scipy.sparse._sparsetools import csr_matvec as _csr_matvec
except ImportError:  # pragma: no cover
    _csr_matvec = None

__all__ = [
    "SparseMatrix",
    "matvec",
    "from_triplets",
    "identity",
    "diagonal",
    "diag_power",
    "bidiag_power",
    "biharmonic",
    "gen_test_matrix",
    "read_matrix_market",
    "write_matrix_market",
]


class SparseMatrix:
    """Real square matrix in compressed row storage.

    Parameters
    ----------
    csr : scipy.sparse matrix or array_like
        Anything ``scipy.sparse.csr_matrix`` accepts. Duplicates are summed
        and column indices sorted on construction.
    symmetric : bool
        Symmetry flag carried over from a Matrix Market header. Informational
        only; storage is always full.
    """

    def __init__(self, csr, symmetric=False):
        m = sp.csr_matrix(csr, dtype=np.float64)
        if m.shape[0] != m.shape[1]:
            raise UsageError(f"matrix must be square, got shape {m.shape}")
        m.sum_duplicates()
        m.sort_indices()
        self._csr = m
        self.symmetric = bool(symmetric)

    @property
    def n(self):
        return self._csr.shape[0]

    @property
    def shape(self):
        return self._csr.shape

    @property
    def nnz(self):
        return self._csr.nnz

    @property
    def indptr(self):
        return self._csr.indptr

    @property
    def indices(self):
        return self._csr.indices

    @property
    def data(self):
        return self._csr.data

    @property
    def csr(self):
        """The underlying ``scipy.sparse.csr_matrix`` (do not mutate)."""
        return self._csr

    def dot(self, v):
        """Uncounted product; prefer :func:`matvec` inside solvers."""
        return self._csr @ v

    def __matmul__(self, v):
        return self._csr @ v

    def toarray(self):
        return self._csr.toarray()

    def diagonal(self):
        return self._csr.diagonal()

    def shifted(self, shift):
        """Return ``A + shift*I`` as a new matrix (pattern gains the diagonal)."""
        return SparseMatrix(self._csr + shift * sp.identity(self.n, format="csr"),
                            symmetric=self.symmetric)

    def norm_inf(self):
        return float(abs(self._csr).sum(axis=1).max()) if self.nnz else 0.0

    def norm_fro(self):
        return float(np.sqrt(np.sum(self._csr.data ** 2)))

    def __repr__(self):
        return f"SparseMatrix(n={self.n}, nnz={self.nnz})"


def matvec(A, v, ctr=None):
    """Return ``A @ v`` and charge one matrix-vector product to ``ctr``."""
    v = np.asarray(v)
    if v.shape != (A.n,):
        raise UsageError(f"vector of shape {v.shape} does not match n={A.n}")
    if ctr is not None:
        ctr.mvps += 1
    m = A.csr
    if _csr_matvec is None or v.dtype != np.float64:
        return m @ v
    out = np.zeros(A.n)
    _csr_matvec(A.n, A.n, m.indptr, m.indices, m.data, v, out)
    return out


def from_triplets(n, rows, cols, vals, symmetric=False):
    """Assemble from 0-based coordinate triplets, summing duplicates."""
    rows = np.asarray(rows, dtype=np.int64)
    cols = np.asarray(cols, dtype=np.int64)
    if n < 1:
        raise UsageError("n must be at least 1")
    if rows.size and (rows.min() < 0 or rows.max() >= n or cols.min() < 0 or cols.max() >= n):
        raise UsageError("triplet index out of range")
    coo = sp.coo_matrix((np.asarray(vals, dtype=np.float64), (rows, cols)), shape=(n, n))
    return SparseMatrix(coo.tocsr(), symmetric=symmetric)


# ---------------------------------------------------------------------------
# Generators
# ---------------------------------------------------------------------------

def identity(n):
    return diagonal(np.ones(n))


def diagonal(d):
    d = np.asarray(d, dtype=np.float64)
    if d.ndim != 1 or d.size < 1:
        raise UsageError("diagonal needs a nonempty 1-D array")
    return SparseMatrix(sp.diags(d, format="csr"))


def diag_power(n, p):
    """Diagonal matrix with entries ``i**p / n`` for ``i = 1..n``."""
    if n < 1:
        raise UsageError("n must be at least 1")
    i = np.arange(1, n + 1, dtype=np.float64)
    return diagonal(i ** p / n)


def bidiag_power(n, p, s=0.2):
    """``diag_power(n, p)`` plus a constant superdiagonal ``s``."""
    if n < 1:
        raise UsageError("n must be at least 1")
    i = np.arange(1, n + 1, dtype=np.float64)
    m = sp.diags([i ** p / n, np.full(n - 1, float(s))], [0, 1], shape=(n, n), format="csr")
    return SparseMatrix(m)


_D4 = np.array([1.0, -4.0, 6.0, -4.0, 1.0])
_D3 = np.array([-1.0, 2.0, 0.0, -2.0, 1.0]) / 2.0


def _band_1d(m, stencil, scale):
    offs = np.arange(-2, 3)
    return sp.diags([np.full(m - abs(k), c * scale) for k, c in zip(offs, stencil)],
                    offs, shape=(m, m), format="csr")


def biharmonic(nx, ny=None):
    """Finite differences for ``-u_xxxx - u_yyyy + u_xxx`` on the unit square.

    Uniform spacing ``h = 1/(nx+1)`` in both directions (so ``nx == ny`` is
    the natural choice), Dirichlet zero boundary, unknowns ordered row by
    row with x varying fastest. Fourth differences use ``[1,-4,6,-4,1]/h^4``
    and the third difference ``[-1,2,0,-2,1]/(2h^3)``.
    """
    ny = nx if ny is None else ny
    if nx < 1 or ny < 1:
        raise UsageError("grid counts must be positive")
    h = 1.0 / (nx + 1)
    dxxxx = _band_1d(nx, _D4, h ** -4)
    dyyyy = _band_1d(ny, _D4, h ** -4)
    dxxx = _band_1d(nx, _D3, h ** -3)
    ix, iy = sp.identity(nx, format="csr"), sp.identity(ny, format="csr")
    A = -sp.kron(iy, dxxxx) - sp.kron(dyyyy, ix) + sp.kron(iy, dxxx)
    A = sp.csr_matrix(A)
    A.eliminate_zeros()
    return SparseMatrix(A)


_GENERATORS = {
    "diag_power": (diag_power, {"n": int, "p": float}),
    "bidiag_power": (bidiag_power, {"n": int, "p": float, "s": float}),
    "biharmonic": (biharmonic, {"nx": int, "ny": int}),
}


def gen_test_matrix(kind, **params):
    """Dispatch to one of the named generators.

    >>> gen_test_matrix("diag_power", n=4, p=2).diagonal()
    array([0.25, 1.  , 2.25, 4.  ])
    """
    try:
        fn, types = _GENERATORS[kind]
    except KeyError:
        raise UsageError(f"unknown matrix kind {kind!r}; choose from {sorted(_GENERATORS)}")
    unknown = set(params) - set(types)
    if unknown:
        raise UsageError(f"unknown parameters for {kind}: {sorted(unknown)}")
    try:
        return fn(**{k: types[k](v) for k, v in params.items()})
    except TypeError as exc:
        raise UsageError(f"bad parameters for {kind}: {exc}")


# ---------------------------------------------------------------------------
# Matrix Market
# ---------------------------------------------------------------------------

def read_matrix_market(path):
    """Read a real coordinate Matrix Market file (general or symmetric).

    Symmetric files are expanded to full storage. Duplicate entries are
    summed.
    """
    with open(path, "r") as fh:
        header = fh.readline()
        parts = header.strip().split()
        if len(parts) != 5 or parts[0].lower() != "%%matrixmarket":
            raise MatrixMarketError(f"{path}: malformed header {header.strip()!r}")
        obj, fmt, field, sym = (p.lower() for p in parts[1:])
        if obj != "matrix":
            raise MatrixMarketError(f"{path}: object {obj!r} is not a matrix")
        if fmt != "coordinate":
            raise UnsupportedFormatError(f"{path}: only coordinate format is supported, got {fmt!r}")
        if field not in ("real", "integer", "double"):
            raise UnsupportedFormatError(f"{path}: field {field!r} not supported (real only)")
        if sym not in ("general", "symmetric"):
            raise UnsupportedFormatError(f"{path}: symmetry {sym!r} not supported")

        line = fh.readline()
        while line and (line.startswith("%") or not line.strip()):
            line = fh.readline()
        try:
            nrows, ncols, nnz = (int(t) for t in line.split())
        except ValueError:
            raise MatrixMarketError(f"{path}: malformed size line {line.strip()!r}")
        if nrows != ncols:
            raise UsageError(f"{path}: matrix is {nrows}x{ncols}, not square")
        body = fh.read()

    tokens = body.split()
    if len(tokens) != 3 * nnz:
        raise MatrixMarketError(f"{path}: expected {nnz} entries, found {len(tokens) / 3:g}")
    try:
        arr = np.array(tokens, dtype=np.float64).reshape(nnz, 3)
    except ValueError:
        raise MatrixMarketError(f"{path}: non-numeric entry")
    rows = arr[:, 0].astype(np.int64) - 1
    cols = arr[:, 1].astype(np.int64) - 1
    vals = arr[:, 2]
    symmetric = sym == "symmetric"
    if symmetric:
        off = rows != cols
        rows, cols, vals = (np.concatenate([rows, cols[off]]),
                            np.concatenate([cols, rows[off]]),
                            np.concatenate([vals, vals[off]]))
    try:
        return from_triplets(nrows, rows, cols, vals, symmetric=symmetric)
    except UsageError as exc:
        raise MatrixMarketError(f"{path}: {exc}")


def write_matrix_market(path, A, comment=None):
    """Write ``A`` as a general real coordinate file (full storage, 1-based)."""
    coo = A.csr.tocoo()
    with open(path, "w") as fh:
        fh.write("%%MatrixMarket matrix coordinate real general\n")
        if comment:
            for line in str(comment).splitlines():
                fh.write(f"% {line}\n")
        fh.write(f"{A.n} {A.n} {coo.nnz}\n")
        for i, j, v in zip(coo.row, coo.col, coo.data):
            fh.write(f"{i + 1} {j + 1} {float(v)!r}\n")
