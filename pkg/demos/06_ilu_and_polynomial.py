"""Polynomial preconditioning on top of ILU(0).

The polynomial is built for the ILU-preconditioned operator A M^{-1}, so
each application of phi costs d products with A and d triangular solve
pairs. Restarted GMRES with ILU alone is the baseline.
"""
import numpy as np

from ppgmres import RightPreconditioned, biharmonic, gmres_restarted, ilu0_factor, pp_gmres

A = biharmonic(60)
M = ilu0_factor(A, shift=0.5)
b = np.random.default_rng(0).standard_normal(A.n)
b /= np.linalg.norm(b)

x, rep = gmres_restarted(RightPreconditioned(A, M), b, m=50, tol=1e-8, max_cycles=2000)
print(f"ILU only:       cycles {rep.cycles:5d}  mvps {rep.mvps:7d}  vops {rep.vops:9d}  "
      f"converged {rep.converged}")
for d in (5, 20, 40):
    x, rep = pp_gmres(A, b, d, m=50, tol=1e-8, rng_seed=0, precond=M, max_cycles=2000)
    print(f"ILU + PP({rep.label:>5}): cycles {rep.cycles:5d}  mvps {rep.mvps:7d}  "
          f"vops {rep.vops:9d}  relres {rep.final_relres:.1e}")
