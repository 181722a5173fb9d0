"""Build a GMRES polynomial and look at what it does to a spectrum.

The polynomial phi(alpha) = 1 - pi(alpha) is built from one short GMRES run
with a random start vector. Its roots are the harmonic Ritz values, applied
in modified Leja order. A good phi squeezes the whole spectrum towards 1.
"""
import numpy as np

from ppgmres import apply_p, apply_pi, build_polynomial, diag_power

A = diag_power(1000, 2)  # eigenvalues i^2/n, from 1e-3 up to 1000
lam = A.diagonal()

pp, rep = build_polynomial(A, 12, rng_seed=0)
print(f"degree {pp.label}, {pp.n_real} real and {pp.n_complex} complex roots")
print("first roots in application order:", np.round(pp.roots[:4].real, 4))
print(f"largest pof {rep.max_pof:.2e} (no roots added below 1e4)")

phi = pp.phi_scalar(lam).real
print(f"spectrum of A:      [{lam.min():.2e}, {lam.max():.2e}]  ratio {lam.max() / lam.min():.1e}")
print(f"spectrum of phi(A): [{phi.min():.2e}, {phi.max():.2e}]  ratio {phi.max() / phi.min():.1e}")

# p(A) b is the GMRES(d) iterate for the start vector and pi(A) b its residual
b = rep.start
x = apply_p(pp, b)
r = apply_pi(pp, b)
print(f"||b - A p(A) b - pi(A) b|| = {np.linalg.norm(b - A @ x - r):.1e}")
