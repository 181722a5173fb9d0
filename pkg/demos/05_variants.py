"""Double polynomials, changing polynomials and flexible GMRES.

A composite of two degree-10 polynomials reaches degree 100 with about a
tenth of the construction work of a single degree-100 polynomial, which
shows up as far fewer dot products. Rebuilding the polynomial every cycle
(the changing variant) is compared with FGMRES whose inner solver is a
plain GMRES(d) cycle.
"""
import numpy as np

from ppgmres import biharmonic, diag_power, double_pp_gmres, fgmres, pp_gmres, pp_gmres_changing

A = biharmonic(40)
b = np.random.default_rng(0).standard_normal(A.n)
b /= np.linalg.norm(b)
_, dbl = double_pp_gmres(A, b, 10, 10, m=50, tol=1e-10, rng_seed=0)
_, sgl = pp_gmres(A, b, 100, m=50, tol=1e-10, rng_seed=0)
print("biharmonic 40x40")
for rep in (dbl, sgl):
    print(f"  {rep.label:>7}: cycles {rep.cycles:3d} mvps {rep.mvps:6d} dots {rep.dots:6d} "
          f"(construction {rep.construction.dots})")

A = diag_power(2000, 2)
b = np.random.default_rng(1).standard_normal(A.n)
b /= np.linalg.norm(b)
print("diag_power(2000, 2), d = 10")
for name, run in (("PP-GMRES", lambda: pp_gmres(A, b, 10, 50, 1e-10, 7, max_cycles=5000)),
                  ("changing", lambda: pp_gmres_changing(A, b, 10, 50, 1e-10, max_cycles=5000)),
                  ("FGMRES", lambda: fgmres(A, b, 10, 50, 1e-10, max_cycles=5000))):
    _, rep = run()
    print(f"  {name:9s} cycles {rep.cycles:4d} mvps {rep.mvps:7d} vops {rep.vops:9d}")
