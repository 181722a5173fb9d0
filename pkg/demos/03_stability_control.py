"""An outstanding eigenvalue makes the factored polynomial unstable.

One eigenvalue at 30 sits far from a cluster in [0.05, 1]. The harmonic
Ritz value next to it gets a huge pof (product of other factors), and
without control the solve stalls or blows up. Adding copies of that root
flattens the polynomial there and restores full accuracy.

The stability check only exercises the right-hand side itself, so it is a
warning sign rather than a guarantee: at d = 10 it stays at rounding level
even though the uncontrolled solve stalls.
"""
import numpy as np
import scipy.sparse as sp

from ppgmres import SparseMatrix, build_polynomial, pp_gmres, stability_check

n = 1000
lam = np.concatenate([np.linspace(0.05, 1.0, n - 1), [30.0]])
A = SparseMatrix(sp.diags(lam) + sp.diags(np.full(n - 1, 0.02), 1))
b = np.random.default_rng(1).standard_normal(n)
b /= np.linalg.norm(b)

print(f"{'degree':>7} {'max pof':>9} {'StCh':>9} {'relres':>9}")
for d in (10, 20, 25):
    for control in (False, True):
        pp, rep = build_polynomial(A, d, 3, stability_control=control)
        stch = stability_check(pp, b)
        x, sol = pp_gmres(A, b, d, m=50, tol=1e-14, rng_seed=3, stability_control=control,
                          max_cycles=100)
        print(f"{pp.label:>7} {rep.max_pof:9.1e} {stch:9.1e} {sol.final_relres:9.1e}")
