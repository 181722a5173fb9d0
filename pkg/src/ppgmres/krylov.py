"""
Arnoldi with modified Gram-Schmidt, Hessenberg least squares by plane
rotations, and harmonic Ritz values.

Counting convention (used everywhere in the package): every projection
coefficient and every norm is one dot product, every vector update or
scaling is one daxpy.
"""
import math
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
from scipy.linalg.blas import daxpy, ddot

from .errors import NumericalError, UsageError
from .operators import as_operator

__all__ = [
    "ArnoldiData",
    "arnoldi_cycle",
    "mgs_step",
    "GivensLSQ",
    "hessenberg_lstsq",
    "hessenberg_eigenvalues",
    "harmonic_ritz_values",
    "clean_conjugates",
    "BREAKDOWN_TOL",
]

BREAKDOWN_TOL = 1e-14
REAL_TOL = 1e-13


@dataclass
class ArnoldiData:
    """Result of one Arnoldi cycle: ``A V[:, :d] = V H`` with ``H`` of shape (d+1, d).

    ``d`` is the effective degree; it is smaller than requested when the
    Krylov space became invariant. On breakdown the last column of ``V`` is
    zero.
    """

    V: np.ndarray
    H: np.ndarray
    beta: float
    d: int

    @property
    def breakdown(self):
        return not np.any(self.V[:, self.d])


def mgs_step(op, Q, H, j, ctr=None, w=None):
    """Extend the basis by one vector; returns ``h_{j+1,j}``.

    ``Q`` stores basis vectors as *rows*; ``Q[:j+1]`` must be orthonormal.
    Fills ``H[:j+2, j]`` and ``Q[j+1]`` (left as zero when the new norm is
    exactly zero). A precomputed ``w`` replaces ``op @ Q[j]`` (flexible
    variants).
    """
    if w is None:
        w = op.matvec(Q[j], ctr)
    w = np.array(w, dtype=np.float64)
    for i in range(j + 1):
        qi = Q[i]
        h = ddot(qi, w)
        w = daxpy(qi, w, a=-h)
        H[i, j] = h
    hnext = np.sqrt(ddot(w, w))
    H[j + 1, j] = hnext
    if ctr is not None:
        ctr.dots += j + 2
        ctr.daxpys += j + 1
    if hnext > 0:
        Q[j + 1] = w / hnext
        if ctr is not None:
            ctr.daxpys += 1
    else:
        Q[j + 1] = 0.0
    return hnext


def arnoldi_cycle(op, b, d, ctr=None):
    """Run ``d`` steps of Arnoldi (modified Gram-Schmidt, no reorthogonalization).

    Stops early, with ``d_eff = j``, if ``h_{j+1,j} <= 1e-14 * ||H||_F``.
    At most ``n`` steps are taken; past that point rounding makes the basis
    vectors meaningless and ``H_d`` singular.
    """
    op = as_operator(op)
    b = np.asarray(b, dtype=np.float64)
    if d < 1:
        raise UsageError("degree must be at least 1")
    if b.shape != (op.n,):
        raise UsageError(f"start vector of shape {b.shape} does not match n={op.n}")
    beta = float(np.sqrt(b @ b))
    if ctr is not None:
        ctr.dots += 1
    if beta == 0.0:
        raise UsageError("zero starting vector")
    d = min(d, op.n)
    Q = np.zeros((d + 1, op.n))
    H = np.zeros((d + 1, d))
    Q[0] = b / beta
    if ctr is not None:
        ctr.daxpys += 1
    for j in range(d):
        hnext = mgs_step(op, Q, H, j, ctr)
        if hnext <= BREAKDOWN_TOL * np.linalg.norm(H[: j + 2, : j + 1]):
            Q[j + 1] = 0.0
            return ArnoldiData(Q[: j + 2].T.copy(), H[: j + 2, : j + 1].copy(), beta, j + 1)
    return ArnoldiData(Q.T, H, beta, d)


class GivensLSQ:
    """Incremental QR of a growing (k+1) x k Hessenberg matrix by plane rotations.

    After each :meth:`add_column` the attribute :attr:`resnorm` holds
    ``min_y ||beta e_1 - H y||`` for the columns seen so far.
    """

    def __init__(self, beta, maxcols):
        self.R = np.zeros((maxcols + 1, maxcols))
        self.g = [float(beta)]
        self.c = []
        self.s = []
        self.k = 0

    @property
    def resnorm(self):
        return abs(self.g[self.k])

    def add_column(self, h):
        """Append column ``h`` (length k+2) of the Hessenberg matrix."""
        k = self.k
        col = [float(t) for t in h[: k + 2]]
        cs, sn = self.c, self.s
        for i in range(k):
            ci, si = cs[i], sn[i]
            a, b = col[i], col[i + 1]
            col[i] = ci * a + si * b
            col[i + 1] = -si * a + ci * b
        a, b = col[k], col[k + 1]
        r = math.hypot(a, b)
        c, s = (1.0, 0.0) if r == 0.0 else (a / r, b / r)
        cs.append(c)
        sn.append(s)
        col[k], col[k + 1] = r, 0.0
        self.R[: k + 2, k] = col
        gk = self.g[k]
        self.g[k] = c * gk
        self.g.append(-s * gk)
        self.k = k + 1
        return self.resnorm

    def solve(self, k=None):
        """Least-squares coefficients for the first ``k`` columns (default all)."""
        k = self.k if k is None else k
        if k == 0:
            return np.zeros(0)
        R = self.R[:k, :k]
        g = np.array(self.g[:k])
        if np.any(np.diag(R) == 0.0):
            # rank deficient: fall back to a minimum-norm solve
            return np.linalg.lstsq(R, g, rcond=None)[0]
        return sla.solve_triangular(R, g)


def hessenberg_lstsq(H, beta):
    """Minimize ``||beta e_1 - H y||`` for a (j+1) x j upper Hessenberg ``H``.

    Returns ``(y, resnorm)``.
    """
    H = np.asarray(H, dtype=np.float64)
    if H.ndim != 2 or H.shape[0] != H.shape[1] + 1:
        raise UsageError(f"expected a (j+1) x j Hessenberg matrix, got {H.shape}")
    j = H.shape[1]
    lsq = GivensLSQ(beta, j)
    for k in range(j):
        lsq.add_column(H[: k + 2, k])
    return lsq.solve(), lsq.resnorm


def clean_conjugates(vals, tol=REAL_TOL):
    """Zero tiny imaginary parts and make conjugate pairs exact.

    Values with ``|imag| <= tol*|value|`` become real. The remaining complex
    values are matched greedily with their nearest conjugate; the pair is
    replaced by ``(z, conj(z))`` with ``z`` the member having positive
    imaginary part, in the position of the first member.
    """
    vals = np.array(vals, dtype=np.complex128).ravel()
    small = np.abs(vals.imag) <= tol * np.abs(vals)
    vals[small] = vals[small].real
    out = vals.copy()
    pending = [i for i in range(vals.size) if vals[i].imag != 0.0]
    taken = set()
    for i in pending:
        if i in taken:
            continue
        others = [k for k in pending if k != i and k not in taken]
        if not others:
            raise NumericalError(f"complex value {vals[i]} has no conjugate partner")
        k = min(others, key=lambda k: abs(vals[k] - np.conj(vals[i])))
        z = 0.5 * (vals[i] + np.conj(vals[k]))
        z = complex(z.real, abs(z.imag))
        out[i], out[k] = z, np.conj(z)
        taken.update((i, k))
    return out


def hessenberg_eigenvalues(M):
    """All eigenvalues of a small real upper Hessenberg matrix.

    Complex eigenvalues come back in exact conjugate pairs. Raises
    :class:`NumericalError` if the QR iteration does not converge.
    """
    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape[0] < 1:
        raise UsageError(f"expected a nonempty square matrix, got {M.shape}")
    if not np.all(np.isfinite(M)):
        raise NumericalError("non-finite entries in Hessenberg matrix")
    try:
        w = sla.eigvals(M, overwrite_a=False, check_finite=False)
    except sla.LinAlgError as exc:
        raise NumericalError(f"Hessenberg QR iteration did not converge: {exc}")
    return clean_conjugates(w)


def harmonic_ritz_values(ad):
    """Roots of the GMRES residual polynomial of an Arnoldi cycle.

    These are the eigenvalues of ``H_d + h_{d+1,d}^2 f e_d^T`` with
    ``H_d^T f = e_d``.
    """
    d = ad.d
    if d < 1:
        raise UsageError("need at least one Arnoldi step")
    Hd = ad.H[:d, :d]
    hnext = ad.H[d, d - 1]
    scale = np.linalg.norm(ad.H)
    with warnings.catch_warnings():
        # singularity is detected and reported below
        warnings.simplefilter("ignore", sla.LinAlgWarning)
        lu, piv = sla.lu_factor(Hd.T, check_finite=False)
    if np.min(np.abs(np.diag(lu))) <= np.finfo(float).eps * scale:
        raise NumericalError("harmonic Ritz values undefined (H_d is singular); lower the degree")
    ed = np.zeros(d)
    ed[-1] = 1.0
    f = sla.lu_solve((lu, piv), ed, check_finite=False)
    M = Hd.copy()
    M[:, -1] += hnext ** 2 * f
    theta = hessenberg_eigenvalues(M)
    if np.any(np.abs(theta) <= np.finfo(float).eps * scale):
        raise NumericalError("zero harmonic Ritz value; the polynomial cannot satisfy pi(0)=1")
    return theta
