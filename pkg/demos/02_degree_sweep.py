"""Higher degree means fewer restarts and much less orthogonalization.

PP(d)-GMRES(50) on a diagonal matrix with eigenvalues i^2/n. Matrix-vector
products fall as the degree grows, and vector operations (the dot products
and daxpys of Gram-Schmidt) fall much faster.
"""
import numpy as np

from ppgmres import diag_power, pp_gmres

n = 2000
A = diag_power(n, 2)
b = np.random.default_rng(0).standard_normal(n)
b /= np.linalg.norm(b)

print(f"{'degree':>7} {'cycles':>7} {'mvps':>8} {'vops':>10} {'relres':>9}")
for d in (2, 4, 8, 16, 32, 64):
    x, rep = pp_gmres(A, b, d, m=50, tol=1e-10, rng_seed=0, max_cycles=20000)
    print(f"{rep.label:>7} {rep.cycles:7d} {rep.mvps:8d} {rep.vops:10d} {rep.final_relres:9.1e}")
