"""Why the polynomial should come from a random vector.

A start vector with no components along a few eigenvectors produces a
polynomial that knows nothing about those eigenvalues. Here four
eigenvalues near 1.5 are hidden from the skewed start, and the resulting
phi sends them far away, so PP-GMRES stalls. A random start sees them.
"""
import numpy as np

from ppgmres import build_polynomial, diagonal, pp_gmres

lam = np.concatenate([np.linspace(0.1, 0.5, 496), [1.49, 1.5, 1.5005, 1.51]])
A = diagonal(lam)
b = np.random.default_rng(2).standard_normal(500)
b /= np.linalg.norm(b)

skewed = np.random.default_rng(3).standard_normal(500)
skewed[-4:] = 0.0

for name, kw in (("random", dict(rng_seed=5)), ("skewed", dict(start=skewed))):
    pp, _ = build_polynomial(A, 15, **kw)
    hidden = np.abs(pp.phi_scalar(lam[-4:]))
    x, rep = pp_gmres(A, b, 15, m=50, tol=1e-10, max_cycles=100, **kw)
    print(f"{name:7s} |phi| at the hidden cluster {hidden.max():9.2e}   "
          f"cycles {rep.cycles:3d}   true relres {rep.final_relres:.1e}")
    if rep.reason != "converged":
        print(f"        {rep.reason}")
