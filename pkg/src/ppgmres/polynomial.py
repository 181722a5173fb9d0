"""
The GMRES-polynomial preconditioner.

One Arnoldi cycle on a random vector gives the residual polynomial
``pi(a) = prod_i (1 - a/theta_i)`` whose roots are harmonic Ritz values.
The preconditioned operator is ``phi(A) = I - pi(A) = A p(A)`` and the
solution map is ``p(A)``. Both are applied in factored form from the same
ordered root list, combining conjugate pairs so that all arithmetic stays
real.
"""
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .counters import OpCounter
from .errors import InvariantError, UsageError
from .krylov import ArnoldiData, arnoldi_cycle, harmonic_ritz_values
from .operators import LinearOperator, as_operator

__all__ = [
    "PolyPreconditioner",
    "StabilityReport",
    "PhiOperator",
    "DoublePolyPreconditioner",
    "modified_leja_order",
    "compute_pof",
    "added_root_count",
    "add_stability_roots",
    "apply_pi",
    "apply_phi",
    "apply_p",
    "build_polynomial",
    "stability_check",
    "compose_double",
    "format_degree_label",
    "parse_degree_label",
]

LEJA_TIE_TOL = 1e-12
POF_THRESHOLD_DIGITS = 4.0
POF_STEP_DIGITS = 14.0


# ---------------------------------------------------------------------------
# Root lists
# ---------------------------------------------------------------------------

def _units(roots):
    """Group a conjugate-adjacent root list into real roots and pairs.

    Returns a list of ``(start_index, size)`` with ``size`` 1 or 2.
    """
    out = []
    i, d = 0, len(roots)
    while i < d:
        if roots[i].imag == 0.0:
            out.append((i, 1))
            i += 1
        else:
            if i + 1 >= d or roots[i + 1] != np.conj(roots[i]):
                raise InvariantError(f"root {roots[i]} at position {i} is not followed by its conjugate")
            out.append((i, 2))
            i += 2
    return out


@dataclass(frozen=True)
class PolyPreconditioner:
    """Factored GMRES polynomial over a base operator.

    Attributes
    ----------
    roots : ndarray of complex
        Leja-ordered roots, conjugate pairs adjacent, added copies in place.
    added : ndarray of bool
        Marks the roots inserted for stability.
    op : LinearOperator
        The operator the polynomial is a polynomial *in* (``A``, ``A M^{-1}``
        or an inner ``phi``).
    """

    roots: np.ndarray
    added: np.ndarray
    op: LinearOperator

    def __post_init__(self):
        roots = np.asarray(self.roots, dtype=np.complex128).ravel()
        added = np.zeros(roots.size, dtype=bool) if self.added is None else np.asarray(self.added, bool)
        if roots.size < 1:
            raise InvariantError("polynomial needs at least one root")
        if added.shape != roots.shape:
            raise InvariantError("added mask does not match root list")
        if np.any(roots == 0):
            raise InvariantError("zero root: pi(0) = 1 cannot hold")
        units = _units(roots)
        object.__setattr__(self, "roots", roots)
        object.__setattr__(self, "added", added)
        object.__setattr__(self, "op", as_operator(self.op))
        # (is_pair, 1/theta) for real roots, (is_pair, a, 1/|theta|^2) for pairs
        plan = []
        for i, size in units:
            t = roots[i]
            if size == 1:
                plan.append((False, 1.0 / t.real, 0.0))
            else:
                plan.append((True, t.real, 1.0 / (t.real ** 2 + t.imag ** 2)))
        object.__setattr__(self, "_plan", tuple(plan))

    @property
    def degree(self):
        return self.roots.size

    @property
    def degree_added(self):
        return int(self.added.sum())

    @property
    def degree_original(self):
        return self.degree - self.degree_added

    @property
    def n(self):
        return self.op.n

    @property
    def label(self):
        return format_degree_label(self.degree_original, self.degree_added)

    @property
    def n_real(self):
        return int(np.sum(self.roots.imag == 0))

    @property
    def n_complex(self):
        return self.degree - self.n_real

    def without_added(self):
        """The same polynomial with the stability roots stripped."""
        keep = ~self.added
        return PolyPreconditioner(self.roots[keep], None, self.op)

    # scalar forms ---------------------------------------------------------

    def pi_scalar(self, alpha):
        """Evaluate ``pi`` at real or complex points with the factored form."""
        alpha = np.asarray(alpha)
        out = np.ones(alpha.shape, dtype=np.result_type(alpha, np.float64))
        for is_pair, a, s in self._plan:
            if is_pair:
                out = out * (1.0 + (alpha * alpha - 2.0 * a * alpha) * s)
            else:
                out = out * (1.0 - alpha * a)
        return out

    def phi_scalar(self, alpha):
        """Evaluate ``phi = 1 - pi`` pointwise; exactly zero at the origin."""
        return 1.0 - self.pi_scalar(alpha)

    def export_rows(self):
        """Rows ``(index, re, im, is_added)`` in application order."""
        return [(i, float(t.real), float(t.imag), int(a))
                for i, (t, a) in enumerate(zip(self.roots, self.added))]


class PhiOperator(LinearOperator):
    """``v -> phi(op) v`` for a polynomial preconditioner."""

    def __init__(self, pp):
        self.pp = pp
        self.n = pp.n

    def matvec(self, v, ctr=None):
        return apply_phi(self.pp, v, ctr)


@dataclass
class StabilityReport:
    """What happened while building a polynomial.

    ``pof`` and ``added_counts`` are indexed like the Leja-ordered original
    roots; ``placements`` lists the final positions of the inserted roots.
    """

    pof: np.ndarray
    added_counts: np.ndarray
    placements: list
    stch: Optional[float] = None
    construction: OpCounter = field(default_factory=OpCounter)
    seed: Optional[int] = None
    d_requested: int = 0
    arnoldi: Optional[ArnoldiData] = None
    start: Optional[np.ndarray] = None

    @property
    def max_pof(self):
        return float(np.max(self.pof)) if self.pof.size else 1.0


# ---------------------------------------------------------------------------
# Ordering and stability control
# ---------------------------------------------------------------------------

def _conj_partner(vals, i, remaining):
    target = np.conj(vals[i])
    best = min((k for k in remaining if k != i), key=lambda k: abs(vals[k] - target), default=None)
    if best is None:
        raise UsageError(f"value {vals[i]} has no conjugate in the list")
    return best


def modified_leja_order(vals):
    """Greedy modified Leja ordering of a conjugate-closed set.

    The first point has maximal modulus; each next point maximizes the sum
    of log-distances to the points already chosen. A chosen non-real point
    is immediately followed by its conjugate. Near-ties (relative 1e-12)
    go to the lower input index.
    """
    vals = np.asarray(vals, dtype=np.complex128).ravel()
    if vals.size == 0:
        raise UsageError("cannot order an empty list")
    remaining = list(range(vals.size))
    order = []
    score = np.zeros(vals.size)

    def take(i):
        order.append(i)
        remaining.remove(i)
        with np.errstate(divide="ignore"):
            score[:] += np.log(np.abs(vals - vals[i]))

    def pick(key):
        best = max(key[k] for k in remaining)
        tol = LEJA_TIE_TOL * max(1.0, abs(best)) if np.isfinite(best) else 0.0
        return min(k for k in remaining if key[k] >= best - tol)

    while remaining:
        i = pick(np.abs(vals) if not order else score)
        take(i)
        if vals[i].imag != 0.0:
            take(_conj_partner(vals, i, remaining))
    return vals[order]


def compute_pof(roots, k):
    """Product of other factors ``prod_{i != k} |1 - theta_k/theta_i|`` (via logs)."""
    roots = np.asarray(roots, dtype=np.complex128)
    if np.any(roots == 0):
        raise UsageError("zero root in pof computation")
    others = np.delete(roots, k)
    if others.size == 0:
        return 1.0
    with np.errstate(divide="ignore"):
        return float(np.exp(np.sum(np.log(np.abs(1.0 - roots[k] / others)))))


def _log10_pof_all(roots):
    roots = np.asarray(roots, dtype=np.complex128)
    ratio = np.abs(1.0 - roots[:, None] / roots[None, :])
    np.fill_diagonal(ratio, 1.0)
    with np.errstate(divide="ignore"):
        return np.sum(np.log10(ratio), axis=1)


def _count_from_log10(log_pof):
    x = (log_pof - POF_THRESHOLD_DIGITS) / POF_STEP_DIGITS
    return 0 if x <= 0 else int(np.floor(x)) + 1


def added_root_count(pof):
    """Least integer greater than ``(log10(pof) - 4)/14``, floored at zero."""
    return 0 if pof <= 0 else _count_from_log10(np.log10(pof))


def add_stability_roots(roots):
    """Insert extra copies of roots with large ``pof``.

    For a root needing ``c`` copies and sitting at unit position ``q`` of a
    list currently ``L`` units long, copy ``j < c`` goes to position
    ``round(q + j*(L-q)/c)`` and copy ``c`` to the end. Positions count
    units (a conjugate pair is one unit) so pairs never split.

    Returns ``(roots, added_mask, report)``.
    """
    roots = np.asarray(roots, dtype=np.complex128).ravel()
    units = _units(roots)
    log_pof = _log10_pof_all(roots)
    pof = 10.0 ** log_pof
    counts = np.zeros(roots.size, dtype=int)
    for i, size in units:
        counts[i:i + size] = _count_from_log10(log_pof[i])

    # work list of units: (roots tuple, is_added, origin unit id)
    work = [(tuple(roots[i:i + size]), False, u) for u, (i, size) in enumerate(units)]
    for u, (i, size) in enumerate(units):
        c = counts[i]
        if c == 0:
            continue
        q = next(pos for pos, w in enumerate(work) if w[2] == u and not w[1])
        L = len(work)
        copy = (tuple(roots[i:i + size]), True, u)
        positions = [int(round(q + j * (L - q) / c)) for j in range(1, c)]
        work.append(copy)
        for pos in sorted(positions, reverse=True):
            work.insert(pos, copy)

    new_roots = np.array([t for w in work for t in w[0]], dtype=np.complex128)
    added = np.array([w[1] for w in work for _ in w[0]], dtype=bool)
    placements = [int(k) for k in np.flatnonzero(added)]
    report = StabilityReport(pof=pof, added_counts=counts, placements=placements)
    return new_roots, added, report


# ---------------------------------------------------------------------------
# Application
# ---------------------------------------------------------------------------

def _check_dim(pp, v):
    v = np.asarray(v, dtype=np.float64)
    if v.shape != (pp.n,):
        raise UsageError(f"vector of shape {v.shape} does not match n={pp.n}")
    return v


def apply_pi(pp, v, ctr=None):
    """``pi(A) v = prod_i (I - A/theta_i) v``; one mvp per root."""
    v = _check_dim(pp, v)
    op = pp.op
    poly = v.copy()
    nd = 0
    for is_pair, a, s in pp._plan:
        product = op.matvec(poly, ctr)
        if not is_pair:
            poly -= a * product
            nd += 1
        else:
            temp = op.matvec(product, ctr) - (2.0 * a) * product
            poly += s * temp
            nd += 2
    if ctr is not None:
        ctr.daxpys += nd
    return poly


def apply_phi(pp, v, ctr=None):
    """``phi(A) v = v - pi(A) v``."""
    v = _check_dim(pp, v)
    poly = apply_pi(pp, v, ctr)
    if ctr is not None:
        ctr.daxpys += 1
    return v - poly


def apply_p(pp, v, ctr=None):
    """``p(A) v`` from the telescoped sum ``p = sum_k u_k``.

    ``u_k = (1/theta_k) prod_{i<k} (1 - a/theta_i)``; conjugate pairs are
    combined so that ``u_k + u_{k+1}`` contributes ``(2a - A)/|theta|^2``
    times the running product. Uses ``d - 1`` mvps and
    ``2r + 3c/2 - 1`` daxpys for ``r`` real and ``c`` non-real roots.
    """
    v = _check_dim(pp, v)
    op = pp.op
    plan = pp._plan
    last = len(plan) - 1
    product = v.copy()
    poly = np.zeros_like(v)
    nd = 0
    for u, (is_pair, a, s) in enumerate(plan):
        if not is_pair:
            poly += a * product
            nd += 1
            if u < last:
                product -= a * op.matvec(product, ctr)
                nd += 1
        else:
            temp = (2.0 * a) * product - op.matvec(product, ctr)
            poly += s * temp
            nd += 2
            if u < last:
                product -= s * op.matvec(temp, ctr)
                nd += 1
    if ctr is not None:
        ctr.daxpys += nd
    return poly


# ---------------------------------------------------------------------------
# Construction
# ---------------------------------------------------------------------------

def build_polynomial(op, d, rng_seed=None, *, start=None, stability_control=True, ctr=None):
    """Build the degree-``d`` GMRES polynomial preconditioner over ``op``.

    Parameters
    ----------
    op : operator-like
        ``A`` or ``A M^{-1}`` (or any LinearOperator).
    d : int
        Requested degree; the effective degree drops on happy breakdown.
    rng_seed : int, Generator or None
        Seeds the standard-normal start vector. Ignored if ``start`` given.
    start : array, optional
        Explicit start vector (problem right-hand side, current residual).
    stability_control : bool
        Add roots for large ``pof`` values.
    ctr : OpCounter, optional
        Charged with the construction cycle as well.

    Returns
    -------
    (PolyPreconditioner, StabilityReport)
    """
    op = as_operator(op)
    if d < 1:
        raise UsageError("degree must be at least 1")
    if start is None:
        rng = np.random.default_rng(rng_seed)
        start = rng.standard_normal(op.n)
    start = np.asarray(start, dtype=np.float64)
    nrm = np.linalg.norm(start)
    if nrm == 0.0:
        raise UsageError("zero starting vector")
    start = start / nrm
    cost = OpCounter()
    ad = arnoldi_cycle(op, start, d, cost)
    theta = harmonic_ritz_values(ad)
    ordered = modified_leja_order(theta)
    if stability_control:
        roots, added, report = add_stability_roots(ordered)
    else:
        roots, added = ordered, np.zeros(ordered.size, dtype=bool)
        report = StabilityReport(pof=10.0 ** _log10_pof_all(ordered),
                                 added_counts=np.zeros(ordered.size, dtype=int), placements=[])
    report.construction = cost
    report.seed = rng_seed if isinstance(rng_seed, (int, np.integer)) else None
    report.d_requested = d
    report.arnoldi = ad
    report.start = start
    if ctr is not None:
        ctr.add(cost)
    return PolyPreconditioner(roots, added, op), report


def stability_check(pp, b, ctr=None):
    """``||(b - A p(A) b) - pi(A) b||``: two algebraically equal residuals.

    Estimates the residual floor PP-GMRES can reach with this polynomial.
    """
    b = _check_dim(pp, b)
    r1 = b - pp.op.matvec(apply_p(pp, b, ctr), ctr)
    r2 = apply_pi(pp, b, ctr)
    if ctr is not None:
        ctr.daxpys += 2
        ctr.dots += 1
    return float(np.linalg.norm(r1 - r2))


@dataclass
class DoublePolyPreconditioner:
    """Composite ``phi2(phi1(A))`` with solution map ``p1(A) p2(phi1(A))``."""

    inner: PolyPreconditioner
    outer: PolyPreconditioner
    inner_report: StabilityReport
    outer_report: StabilityReport

    @property
    def n(self):
        return self.inner.n

    @property
    def degree(self):
        return self.inner.degree * self.outer.degree

    @property
    def label(self):
        return f"{self.inner.label}x{self.outer.label}"

    @property
    def construction(self):
        return self.inner_report.construction.copy().add(self.outer_report.construction)

    def forward(self):
        """The preconditioned operator ``phi2(phi1(A))``."""
        return PhiOperator(self.outer)

    def apply_phi(self, v, ctr=None):
        return apply_phi(self.outer, v, ctr)

    def apply_pi(self, v, ctr=None):
        return apply_pi(self.outer, v, ctr)

    def apply_p(self, v, ctr=None):
        return apply_p(self.inner, apply_p(self.outer, v, ctr), ctr)

    def phi_scalar(self, alpha):
        return self.outer.phi_scalar(self.inner.phi_scalar(alpha))


def compose_double(op, d1, d2, rng_seed=None, *, stability_control=True, ctr=None):
    """Double polynomial: ``phi1`` from GMRES(d1) on ``A``, ``phi2`` from GMRES(d2) on ``phi1(A)``.

    Both start vectors are standard normal draws from one generator seeded
    with ``rng_seed``.
    """
    if d1 < 1 or d2 < 1:
        raise UsageError("both degrees must be at least 1")
    rng = np.random.default_rng(rng_seed)
    op = as_operator(op)
    pp1, rep1 = build_polynomial(op, d1, start=rng.standard_normal(op.n),
                                 stability_control=stability_control, ctr=ctr)
    pp2, rep2 = build_polynomial(PhiOperator(pp1), d2, start=rng.standard_normal(op.n),
                                 stability_control=stability_control, ctr=ctr)
    rep1.seed = rep2.seed = rng_seed if isinstance(rng_seed, (int, np.integer)) else None
    return DoublePolyPreconditioner(pp1, pp2, rep1, rep2)


# ---------------------------------------------------------------------------
# Labels
# ---------------------------------------------------------------------------

def format_degree_label(d, added=0):
    return f"{d}+{added}" if added else str(d)


def parse_degree_label(label):
    """``"150+2" -> (150, 2)``, ``"25" -> (25, 0)``."""
    s = str(label).replace(" ", "")
    head, _, tail = s.partition("+")
    try:
        d = int(head)
        k = int(tail) if tail else 0
    except ValueError:
        raise UsageError(f"bad degree label {label!r}")
    if d < 1 or k < 0:
        raise UsageError(f"bad degree label {label!r}")
    return d, k
