"""
ppgmres: GMRES with a polynomial preconditioner built from the GMRES
residual polynomial, applied in factored form through its harmonic Ritz
roots, with automatic root-adding for stability.

>>> import numpy as np
>>> from ppgmres import diag_power, pp_gmres
>>> A = diag_power(500, 1)
>>> b = np.ones(500)
>>> x, rep = pp_gmres(A, b, d=10, m=20, tol=1e-10, rng_seed=0)
>>> rep.converged
True
"""
from .counters import OpCounter
from .errors import (BasisLimitError, InvariantError, MatrixMarketError, NumericalError,
                     PPGMRESError, UnsupportedFormatError, UsageError)
from .ilu import Ilu0Factors, ilu0_apply, ilu0_factor
from .krylov import (ArnoldiData, GivensLSQ, arnoldi_cycle, harmonic_ritz_values,
                     hessenberg_eigenvalues, hessenberg_lstsq)
from .operators import LinearOperator, MatrixOperator, RightPreconditioned, as_operator
from .polynomial import (DoublePolyPreconditioner, PhiOperator, PolyPreconditioner,
                         StabilityReport, add_stability_roots, added_root_count, apply_p,
                         apply_phi, apply_pi, build_polynomial, compose_double, compute_pof,
                         format_degree_label, modified_leja_order, parse_degree_label,
                         stability_check)
from .solvers import (PolynomialPreconditioner, SolveReport, StabilityWarning, bicgstab,
                      cheby_estimate, chebyshev_t, double_pp_gmres, fgmres, gmres_inf,
                      gmres_restarted, pp_gmres, pp_gmres_changing)
from .sparse import (SparseMatrix, bidiag_power, biharmonic, diag_power, diagonal,
                     from_triplets, gen_test_matrix, identity, matvec, read_matrix_market,
                     write_matrix_market)

__version__ = "0.1.0"
