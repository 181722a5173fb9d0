import os
import sys
from pathlib import Path

import numpy as np
import pytest
import scipy.sparse as sp

from ppgmres import SparseMatrix

DATA_DIR = Path(os.environ.get("PPGMRES_DATA", Path(__file__).resolve().parent.parent / "data"))


def random_sparse(n, density, seed, shift=0.0):
    rng = np.random.default_rng(seed)
    m = sp.random(n, n, density=density, random_state=rng, data_rvs=rng.standard_normal)
    return SparseMatrix(m + shift * sp.identity(n))


def well_conditioned(n, seed, spread=10.0, noise=0.3, density=0.1):
    """Nonsymmetric matrix with eigenvalues in the right half plane, many complex."""
    rng = np.random.default_rng(seed)
    d = np.linspace(1.0, spread, n)
    m = sp.random(n, n, density=density, random_state=rng, data_rvs=rng.standard_normal)
    return SparseMatrix(sp.diags(d) + noise * spread / np.sqrt(n * density) * m)


def mm_file(name):
    for cand in (DATA_DIR / f"{name}.mtx", DATA_DIR / f"{name.lower()}.mtx"):
        if cand.exists():
            return cand
    return None


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(results):
        terminalreporter.write_line(results[num])
