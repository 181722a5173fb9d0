"""
Krylov solvers: restarted and unrestarted GMRES, polynomial preconditioned
GMRES (fixed, changing and double polynomials), flexible GMRES with GMRES(d)
inner cycles, and BiCGStab.

All solvers start from ``x0 = 0``, stop on the relative residual
``||r||/||b|| <= tol`` and return ``(x, SolveReport)``. Op counts include
polynomial construction and one final true-residual product. The optional
stability check is a diagnostic run before the solve; its cost is kept in
``SolveReport.stch_cost`` and not added to the totals.
"""
import math
import time
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .counters import OpCounter
from .errors import BasisLimitError, NumericalError, UsageError
from .krylov import BREAKDOWN_TOL, GivensLSQ, arnoldi_cycle, hessenberg_lstsq, mgs_step
from .operators import RightPreconditioned, as_operator
from .polynomial import PhiOperator, apply_p, build_polynomial, compose_double, stability_check

__all__ = [
    "SolveReport",
    "gmres_restarted",
    "gmres_inf",
    "pp_gmres",
    "double_pp_gmres",
    "pp_gmres_changing",
    "fgmres",
    "bicgstab",
    "PolynomialPreconditioner",
    "cheby_estimate",
    "chebyshev_t",
    "StabilityWarning",
]

DEFAULT_MAX_BASIS = 2000
BICG_BREAKDOWN = 1e-30
_TINY = np.finfo(np.float64).tiny


class StabilityWarning(UserWarning):
    """The stability check predicts a residual floor above the threshold."""


@dataclass
class SolveReport:
    """Outcome and cost of one solve.

    ``converged`` refers to the solver's own stopping test (the shortcut
    residual for GMRES variants); ``final_relres`` is always the true
    ``||b - A x|| / ||b||`` recomputed at the end. When the two disagree by
    more than a factor of ten, ``reason`` says so.
    """

    converged: bool = False
    cycles: int = 0
    counter: OpCounter = field(default_factory=OpCounter)
    final_relres: float = float("nan")
    history: list = field(default_factory=list)
    iterations: int = 0
    stch: Optional[float] = None
    wall_time: float = 0.0
    reason: str = ""
    label: str = ""
    construction: OpCounter = field(default_factory=OpCounter)
    stch_cost: OpCounter = field(default_factory=OpCounter)
    max_pof: Optional[float] = None
    basis_size: int = 0
    fallbacks: int = 0
    residual: Optional[np.ndarray] = field(default=None, repr=False)
    polynomial: object = field(default=None, repr=False)
    stability: object = field(default=None, repr=False)

    @property
    def mvps(self):
        return self.counter.mvps

    @property
    def daxpys(self):
        return self.counter.daxpys

    @property
    def dots(self):
        return self.counter.dots

    @property
    def vops(self):
        return self.counter.vops


def _norm(v, ctr):
    ctr.dots += 1
    return float(np.sqrt(v @ v))


def _prepare(b, n):
    b = np.asarray(b, dtype=np.float64)
    if b.shape != (n,):
        raise UsageError(f"right-hand side of shape {b.shape} does not match n={n}")
    return b


def _note_stall(rep, tol):
    if rep.converged and rep.final_relres > 10 * tol:
        rep.reason = (f"shortcut residual converged but the true residual stalled at "
                      f"{rep.final_relres:.2e}")


def _true_residual(A_op, b, x, bnorm, ctr):
    r = b - A_op.matvec(x, ctr)
    ctr.daxpys += 1
    return _norm(r, ctr) / bnorm


def gmres_restarted(op, b, m=50, tol=1e-8, max_cycles=1000, ctr=None, *,
                    true_residual=True, max_basis=DEFAULT_MAX_BASIS):
    """GMRES(m) with modified Gram-Schmidt and plane-rotation least squares.

    Parameters
    ----------
    op : operator-like
    b : ndarray
    m : int or None
        Restart length. ``None`` or ``math.inf`` runs unrestarted GMRES with
        at most ``max_basis`` basis vectors; running out raises
        :class:`BasisLimitError`.
    tol : float
        Relative residual tolerance, checked with the shortcut residual
        after every iteration.
    max_cycles : int
    ctr : OpCounter, optional
        Accumulates costs; a fresh one is used when omitted.
    true_residual : bool
        Recompute ``||b - op x||`` at the end (one extra application).

    Returns
    -------
    (x, SolveReport)
    """
    t0 = time.perf_counter()
    op = as_operator(op)
    b = _prepare(b, op.n)
    if not tol > 0:
        raise UsageError("tol must be positive")
    ctr = OpCounter() if ctr is None else ctr
    c0 = ctr.copy()
    unrestarted = m is None or m == math.inf
    if unrestarted:
        m, max_cycles = int(max_basis), 1
    m = int(m)
    if m < 1:
        raise UsageError("restart length must be at least 1")

    rep = SolveReport()
    x = np.zeros(op.n)
    bnorm = _norm(b, ctr)
    if bnorm == 0.0:
        rep.converged, rep.final_relres, rep.reason = True, 0.0, "zero right-hand side"
        rep.counter = ctr - c0
        rep.residual = b.copy()
        return x, rep

    r, beta = b.copy(), bnorm
    target = tol * bnorm
    rep.history.append(1.0)
    for cycle in range(max_cycles):
        rep.cycles += 1
        Q = np.zeros((m + 1, op.n))
        H = np.zeros((m + 1, m))
        Q[0] = r / beta
        ctr.daxpys += 1
        lsq = GivensLSQ(beta, m)
        k = 0
        done = False
        for j in range(m):
            hnext = mgs_step(op, Q, H, j, ctr)
            res = lsq.add_column(H[: j + 2, j])
            k = j + 1
            rep.iterations += 1
            if res <= target:
                done = True
                break
            if hnext <= BREAKDOWN_TOL * np.linalg.norm(H[: j + 2, : j + 1]):
                break
        rep.basis_size = max(rep.basis_size, k)
        y = lsq.solve(k)
        x += y @ Q[:k]
        z = -H[: k + 1, :k] @ y
        z[0] += beta
        r = z @ Q[: k + 1]
        # components on strongly damped modes drift into the subnormal range
        # over many restarts, where every later flop runs far slower
        r[np.abs(r) < _TINY] = 0.0
        ctr.daxpys += 2 * k + 1
        beta = _norm(r, ctr)
        rep.history.append(beta / bnorm)
        if done or beta <= target:
            rep.converged = True
            rep.reason = "converged"
            break
        if beta == 0.0:
            break
    else:
        rep.reason = f"not converged in {max_cycles} cycles"

    if unrestarted and not rep.converged:
        raise BasisLimitError(f"unrestarted GMRES exceeded {m} basis vectors "
                              f"(relative residual {beta / bnorm:.3e})")
    if not rep.reason:
        rep.reason = "stagnated (Krylov breakdown without convergence)"
    rep.residual = r
    if true_residual:
        rep.final_relres = _true_residual(op, b, x, bnorm, ctr)
    else:
        rep.final_relres = beta / bnorm
    rep.counter = ctr - c0
    rep.wall_time = time.perf_counter() - t0
    return x, rep


def gmres_inf(op, b, tol=1e-8, ctr=None, *, max_basis=DEFAULT_MAX_BASIS):
    """Unrestarted GMRES; see :func:`gmres_restarted`."""
    return gmres_restarted(op, b, None, tol, 1, ctr, max_basis=max_basis)


# ---------------------------------------------------------------------------
# Polynomial preconditioned GMRES
# ---------------------------------------------------------------------------

def _base_operator(A, precond):
    A_op = as_operator(A)
    return A_op, (RightPreconditioned(A_op, precond) if precond is not None else A_op)


def pp_gmres(A, b, d, m=50, tol=1e-8, rng_seed=None, *, precond=None, max_cycles=1000,
             stability_control=True, check_stability=True, stch_threshold=None,
             reduce_degree=False, start=None, max_basis=DEFAULT_MAX_BASIS):
    """GMRES(m) right-preconditioned by the degree-``d`` GMRES polynomial.

    Solves ``phi(A M^{-1}) y = b`` and recovers ``x = M^{-1} p(A M^{-1}) y``
    (``M`` omitted when ``precond`` is None).

    Parameters
    ----------
    precond : object with ``solve(v, ctr)``, optional
        Standard right preconditioner such as :class:`~ppgmres.ilu.Ilu0Factors`.
    stch_threshold : float, optional
        Warn (:class:`StabilityWarning`) when the stability check exceeds it.
    reduce_degree : bool
        When the threshold is exceeded, halve the degree and rebuild.
    start : ndarray, optional
        Use this vector instead of a random one to generate the polynomial.
    m : int or None
        ``None`` for unrestarted outer GMRES.
    """
    t0 = time.perf_counter()
    A_op, op = _base_operator(A, precond)
    b = _prepare(b, op.n)
    ctr = OpCounter()
    stch_cost = OpCounter()
    while True:
        pp, srep = build_polynomial(op, d, rng_seed, start=start,
                                    stability_control=stability_control, ctr=ctr)
        if check_stability:
            srep.stch = stability_check(pp, srep.start, stch_cost)
        if stch_threshold is None or srep.stch is None or srep.stch <= stch_threshold:
            break
        warnings.warn(f"stability check {srep.stch:.2e} exceeds {stch_threshold:.2e} "
                      f"for degree {pp.label}", StabilityWarning, stacklevel=2)
        if not reduce_degree or d <= 1:
            break
        d = max(1, d // 2)

    y, rep = gmres_restarted(PhiOperator(pp), b, m, tol, max_cycles, ctr,
                             true_residual=False, max_basis=max_basis)
    x = apply_p(pp, y, ctr)
    if precond is not None:
        x = precond.solve(x, ctr)
    bnorm = np.linalg.norm(b)
    rep.final_relres = _true_residual(A_op, b, x, bnorm, ctr) if bnorm > 0 else 0.0
    _note_stall(rep, tol)
    rep.counter = ctr
    rep.construction = srep.construction
    rep.stch = srep.stch
    rep.stch_cost = stch_cost
    rep.max_pof = srep.max_pof
    rep.label = pp.label
    rep.wall_time = time.perf_counter() - t0
    rep.polynomial = pp
    rep.stability = srep
    return x, rep


def double_pp_gmres(A, b, d1, d2, m=50, tol=1e-8, rng_seed=None, *, precond=None,
                    max_cycles=1000, stability_control=True, check_stability=True,
                    max_basis=DEFAULT_MAX_BASIS):
    """PP-GMRES with the composite polynomial ``phi2(phi1(A))``.

    ``x = p1(A) p2(phi1(A)) z`` after solving ``phi2(phi1(A)) z = b``.
    """
    t0 = time.perf_counter()
    A_op, op = _base_operator(A, precond)
    b = _prepare(b, op.n)
    ctr = OpCounter()
    dp = compose_double(op, d1, d2, rng_seed, stability_control=stability_control, ctr=ctr)
    stch = None
    stch_cost = OpCounter()
    if check_stability:
        w = dp.inner_report.start
        r1 = w - op.matvec(dp.apply_p(w, stch_cost), stch_cost)
        r2 = dp.apply_pi(w, stch_cost)
        stch_cost.daxpys += 2
        stch = _norm(r1 - r2, stch_cost)
    z, rep = gmres_restarted(dp.forward(), b, m, tol, max_cycles, ctr,
                             true_residual=False, max_basis=max_basis)
    x = dp.apply_p(z, ctr)
    if precond is not None:
        x = precond.solve(x, ctr)
    bnorm = np.linalg.norm(b)
    rep.final_relres = _true_residual(A_op, b, x, bnorm, ctr) if bnorm > 0 else 0.0
    _note_stall(rep, tol)
    rep.counter = ctr
    rep.construction = dp.construction
    rep.stch = stch
    rep.stch_cost = stch_cost
    rep.max_pof = max(dp.inner_report.max_pof, dp.outer_report.max_pof)
    rep.label = dp.label
    rep.wall_time = time.perf_counter() - t0
    rep.polynomial = dp
    return x, rep


def pp_gmres_changing(A, b, d, m=50, tol=1e-8, rng_seed=None, *, precond=None,
                      max_cycles=1000, stability_control=True):
    """PP-GMRES whose polynomial is rebuilt from the current residual every cycle.

    A cycle whose construction fails reuses the previous polynomial (counted
    in ``report.fallbacks``). ``rng_seed`` is unused and kept for a uniform
    signature.
    """
    t0 = time.perf_counter()
    A_op, op = _base_operator(A, precond)
    b = _prepare(b, op.n)
    ctr = OpCounter()
    report = SolveReport(label=str(d))
    x = np.zeros(op.n)
    bnorm = _norm(b, ctr)
    if bnorm == 0.0:
        report.converged, report.final_relres, report.reason = True, 0.0, "zero right-hand side"
        report.counter = ctr
        return x, report
    r, rnorm = b.copy(), bnorm
    report.history.append(1.0)
    pp = None
    for cycle in range(max_cycles):
        report.cycles += 1
        try:
            pp, srep = build_polynomial(op, d, start=r, stability_control=stability_control,
                                        ctr=ctr)
            report.construction.add(srep.construction)
        except NumericalError:
            if pp is None:
                raise
            report.fallbacks += 1
        y, sub = gmres_restarted(PhiOperator(pp), r, m, tol * bnorm / rnorm, 1, ctr,
                                 true_residual=False)
        dx = apply_p(pp, y, ctr)
        if precond is not None:
            dx = precond.solve(dx, ctr)
        x += dx
        ctr.daxpys += 1
        report.iterations += sub.iterations
        r = sub.residual
        rnorm = float(np.linalg.norm(r))
        report.history.append(rnorm / bnorm)
        if rnorm <= tol * bnorm:
            report.converged, report.reason = True, "converged"
            break
    else:
        report.reason = f"not converged in {max_cycles} cycles"
    report.final_relres = _true_residual(A_op, b, x, bnorm, ctr)
    _note_stall(report, tol)
    report.counter = ctr
    report.wall_time = time.perf_counter() - t0
    return x, report


# ---------------------------------------------------------------------------
# FGMRES
# ---------------------------------------------------------------------------

def _gmres_cycle_solution(op, v, d, ctr):
    """One GMRES(d) cycle from zero on ``op z = v`` with no stopping test."""
    ad = arnoldi_cycle(op, v, d, ctr)
    y, _ = hessenberg_lstsq(ad.H, ad.beta)
    ctr.daxpys += ad.d
    return ad.V[:, : ad.d] @ y


def fgmres(A, b, inner_d, m=50, tol=1e-8, max_cycles=1000, ctr=None):
    """Flexible GMRES(m); each outer iteration is preconditioned by one GMRES(inner_d) cycle.

    The inner cycle runs on the bare matrix with no tolerance, so each
    outer iteration costs ``inner_d + 1`` mvps.
    """
    t0 = time.perf_counter()
    A_op = as_operator(A)
    b = _prepare(b, A_op.n)
    if inner_d < 1:
        raise UsageError("inner degree must be at least 1")
    ctr = OpCounter() if ctr is None else ctr
    c0 = ctr.copy()
    n = A_op.n
    rep = SolveReport(label=str(inner_d))
    x = np.zeros(n)
    bnorm = _norm(b, ctr)
    if bnorm == 0.0:
        rep.converged, rep.final_relres, rep.reason = True, 0.0, "zero right-hand side"
        rep.counter = ctr - c0
        return x, rep
    r, beta = b.copy(), bnorm
    target = tol * bnorm
    rep.history.append(1.0)
    for cycle in range(max_cycles):
        rep.cycles += 1
        Q = np.zeros((m + 1, n))
        Z = np.zeros((m, n))
        H = np.zeros((m + 1, m))
        Q[0] = r / beta
        ctr.daxpys += 1
        lsq = GivensLSQ(beta, m)
        k, done = 0, False
        for j in range(m):
            Z[j] = _gmres_cycle_solution(A_op, Q[j], inner_d, ctr)
            hnext = mgs_step(A_op, Q, H, j, ctr, w=A_op.matvec(Z[j], ctr))
            res = lsq.add_column(H[: j + 2, j])
            k = j + 1
            rep.iterations += 1
            if res <= target:
                done = True
                break
            if hnext <= BREAKDOWN_TOL * np.linalg.norm(H[: j + 2, : j + 1]):
                break
        y = lsq.solve(k)
        x += y @ Z[:k]
        z = -H[: k + 1, :k] @ y
        z[0] += beta
        r = z @ Q[: k + 1]
        # components on strongly damped modes drift into the subnormal range
        # over many restarts, where every later flop runs far slower
        r[np.abs(r) < _TINY] = 0.0
        ctr.daxpys += 2 * k + 1
        beta = _norm(r, ctr)
        rep.history.append(beta / bnorm)
        if done or beta <= target:
            rep.converged, rep.reason = True, "converged"
            break
    else:
        rep.reason = f"not converged in {max_cycles} cycles"
    rep.final_relres = _true_residual(A_op, b, x, bnorm, ctr)
    rep.counter = ctr - c0
    rep.wall_time = time.perf_counter() - t0
    return x, rep


# ---------------------------------------------------------------------------
# BiCGStab
# ---------------------------------------------------------------------------

class PolynomialPreconditioner:
    """Adapter so a polynomial ``p(A)`` can serve as a right preconditioner ``M^{-1}``."""

    def __init__(self, pp):
        self.pp = pp

    def solve(self, v, ctr=None):
        return apply_p(self.pp, v, ctr)


def bicgstab(A, b, tol=1e-8, max_iter=10000, ctr=None, *, precond=None):
    """BiCGStab, optionally right preconditioned by ``precond.solve``.

    Two operator applications per iteration. Breakdown (``|rho|``,
    ``|omega|`` or the ``alpha`` denominator below 1e-30) ends the run
    unconverged.
    """
    t0 = time.perf_counter()
    A_op = as_operator(A)
    b = _prepare(b, A_op.n)
    if not tol > 0:
        raise UsageError("tol must be positive")
    ctr = OpCounter() if ctr is None else ctr
    c0 = ctr.copy()
    M = (lambda v: precond.solve(v, ctr)) if precond is not None else (lambda v: v)
    rep = SolveReport()
    x = np.zeros(A_op.n)
    bnorm = _norm(b, ctr)
    if bnorm == 0.0:
        rep.converged, rep.final_relres, rep.reason = True, 0.0, "zero right-hand side"
        rep.counter = ctr - c0
        return x, rep
    target = tol * bnorm
    r = b.copy()
    rhat = b.copy()
    rho = alpha = omega = 1.0
    v = np.zeros_like(b)
    p = np.zeros_like(b)
    rep.history.append(1.0)
    rep.reason = f"not converged in {max_iter} iterations"
    for it in range(max_iter):
        rep.cycles += 1
        rho_new = rhat @ r
        ctr.dots += 1
        if abs(rho_new) < BICG_BREAKDOWN:
            rep.reason = "breakdown: rho vanished"
            break
        beta = (rho_new / rho) * (alpha / omega)
        rho = rho_new
        p = r + beta * (p - omega * v)
        ctr.daxpys += 2
        phat = M(p)
        v = A_op.matvec(phat, ctr)
        rv = rhat @ v
        ctr.dots += 1
        if abs(rv) < BICG_BREAKDOWN:
            rep.reason = "breakdown: shadow residual orthogonal to A p"
            break
        alpha = rho / rv
        s = r - alpha * v
        ctr.daxpys += 1
        snorm = _norm(s, ctr)
        if snorm <= target:
            x += alpha * phat
            ctr.daxpys += 1
            rep.history.append(snorm / bnorm)
            rep.converged, rep.reason = True, "converged"
            break
        shat = M(s)
        t = A_op.matvec(shat, ctr)
        tt = t @ t
        omega = (t @ s) / tt if tt > 0 else 0.0
        ctr.dots += 2
        x += alpha * phat + omega * shat
        r = s - omega * t
        ctr.daxpys += 3
        rnorm = _norm(r, ctr)
        rep.history.append(rnorm / bnorm)
        if rnorm <= target:
            rep.converged, rep.reason = True, "converged"
            break
        if abs(omega) < BICG_BREAKDOWN:
            rep.reason = "breakdown: omega vanished"
            break
    rep.iterations = rep.cycles
    rep.final_relres = _true_residual(A_op, b, x, bnorm, ctr)
    rep.counter = ctr - c0
    rep.wall_time = time.perf_counter() - t0
    return x, rep


# ---------------------------------------------------------------------------
# Chebyshev model
# ---------------------------------------------------------------------------

def chebyshev_t(m, x):
    """Chebyshev polynomial of the first kind, ``T_m(x)`` for ``x >= 1``."""
    return math.cosh(m * math.acosh(x))


def cheby_estimate(a, b, m, d):
    """Idealized per-cycle residual reduction with and without a degree-d polynomial.

    Assumes a real positive spectrum in ``[a, b]`` with ``b >> a`` and the
    first-order expansion ``T_m(1 + delta) ~ 1 + m^2 delta``.

    Returns
    -------
    plain : float
        ``1 - 2 m^2 a / b``, one GMRES(m) cycle (m mvps).
    pp : float
        ``1 - 2 d^2 m^2 a / b``, one PP(d)-GMRES(m) cycle (m d mvps).
    speedup : float
        Ratio of residual reduction per mvp under the same model; equals
        ``d`` identically.
    """
    if not a > 0:
        raise UsageError("the lower spectrum bound must be positive")
    if not b > a:
        raise UsageError("need 0 < a < b")
    if m < 1 or d < 1:
        raise UsageError("m and d must be at least 1")
    q = 2.0 * m * m * a / b
    plain = 1.0 - q
    pp = 1.0 - d * d * q
    # (d^2 q / (m d)) / (q / m) simplifies to d exactly
    speedup = float(d)
    return plain, pp, speedup
