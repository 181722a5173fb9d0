"""
Benchmark harness behind the ``ppgmres`` command.

Subcommands
-----------
solve           one solve, one CSV row
sweep           one row per degree
stability-scan  every degree with root-adding off and on
poly-graph      phi sampled on a real interval, plus the root list
spectrum        dense eigenvalues, their phi images and CDF columns
export-matrix   write the configured matrix as a Matrix Market file

A matrix comes from exactly one of ``--gen kind:k=v,...``, ``--mm PATH`` or
``--preset NAME``. Relative output paths are resolved against
``$PPGMRES_OUTDIR`` when it is set; relative ``.mtx`` names that do not
exist are looked up in ``$PPGMRES_DATA``.

Exit status: 0 converged, 2 not converged, 1 usage or I/O error.
"""
import argparse
import csv
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import PPGMRESError, UsageError
from .ilu import ilu0_factor
from .operators import RightPreconditioned, as_operator
from .polynomial import PolyPreconditioner, build_polynomial
from .solvers import (bicgstab, double_pp_gmres, fgmres, gmres_inf, gmres_restarted,
                      pp_gmres, pp_gmres_changing)
from .sparse import gen_test_matrix, identity, read_matrix_market, write_matrix_market

__all__ = ["BenchConfig", "BenchRow", "CSV_COLUMNS", "PRESETS", "main", "run_config",
           "build_parser"]

EXIT_OK, EXIT_USAGE, EXIT_NOT_CONVERGED = 0, 1, 2
CSV_COLUMNS = ["degree", "added", "cycles", "mvps", "daxpys", "dots", "vops", "stch",
               "final_relres", "time_ms"]
SOLVERS = ("gmres", "gmres-inf", "pp-gmres", "double", "changing", "fgmres", "bicgstab")
SPECTRUM_CAP = 2500

# Experiment presets. Values the user passes explicitly win over these.
PRESETS = {
    "e20r0100": dict(mm="E20r0100.mtx", ilu=True, shift=0.01, m=50, tol=1e-8,
                     note="ILU(0) of A + 0.01 I"),
    "olm1000": dict(mm="olm1000.mtx", ilu=True, shift=0.0, m=50, tol=1e-12, max_cycles=200,
                    note="ILU(0), no shift; the interesting part is the residual floor"),
    "memplus": dict(mm="memplus.mtx", m=50, tol=1e-8,
                    note="pass the distributed right-hand side with --rhs PATH if available; "
                         "which variant the published run used is unknown"),
    "biharmonic": dict(gen="biharmonic:nx=200,ny=200", m=50, tol=1e-10,
                       note="add --ilu to factor A + 0.5 I"),
    "biharmonic-ilu": dict(gen="biharmonic:nx=200,ny=200", ilu=True, shift=0.5, m=50,
                           tol=1e-10, note="ILU(0) of A + 0.5 I"),
    "diag-p": dict(gen="diag_power:n=20000,p=2", m=50, tol=1e-10,
                   note="diagonal i^2/n; change p with --gen"),
}


@dataclass
class BenchConfig:
    gen: Optional[str] = None
    mm: Optional[str] = None
    rhs: str = "random"
    solver: str = "pp-gmres"
    d: int = 1
    d2: int = 1
    m: Optional[float] = 50
    tol: float = 1e-8
    seed: Optional[int] = None
    ilu: bool = False
    shift: float = 0.0
    max_cycles: int = 1000
    stability_control: bool = True
    check_stability: bool = True
    stch_threshold: Optional[float] = None
    reduce_degree: bool = False
    max_basis: int = 2000

    def validate(self):
        if (self.gen is None) == (self.mm is None):
            raise UsageError("give exactly one matrix source (--gen, --mm or --preset)")
        if not self.tol > 0:
            raise UsageError("tol must be positive")
        if self.solver not in SOLVERS:
            raise UsageError(f"unknown solver {self.solver!r}")
        if self.d < 1 or self.d2 < 1:
            raise UsageError("degrees must be at least 1")
        return self


@dataclass
class BenchRow:
    degree: str
    added: int
    cycles: int
    mvps: int
    daxpys: int
    dots: int
    vops: int
    stch: float
    final_relres: float
    time_ms: float
    converged: bool = False
    reason: str = ""
    failed: bool = False

    def as_list(self):
        return [self.degree, self.added, self.cycles, self.mvps, self.daxpys, self.dots,
                self.vops, _fmt(self.stch), _fmt(self.final_relres), f"{self.time_ms:.1f}"]


def _fmt(x):
    return "" if x is None else f"{x:.6e}"


# ---------------------------------------------------------------------------
# Inputs
# ---------------------------------------------------------------------------

def parse_gen(spec):
    """``"diag_power:n=100,p=1"`` -> ``("diag_power", {"n": "100", "p": "1"})``."""
    kind, _, rest = spec.partition(":")
    params = {}
    for item in filter(None, rest.split(",")):
        key, eq, val = item.partition("=")
        if not eq:
            raise UsageError(f"bad generator parameter {item!r}; expected key=value")
        params[key.strip()] = val.strip()
    return kind.strip(), params


def parse_degrees(text):
    """``"2,4,8"`` or ``"1..256"`` (powers of two from the low end)."""
    text = (text or "").strip()
    if not text:
        raise UsageError("empty degree list")
    out = []
    for part in text.split(","):
        part = part.strip()
        if ".." in part:
            lo, hi = (int(t) for t in part.split(".."))
            if lo < 1 or hi < lo:
                raise UsageError(f"bad degree range {part!r}")
            k = lo
            while k <= hi:
                out.append(k)
                k *= 2
        elif part:
            out.append(int(part))
    if not out:
        raise UsageError("empty degree list")
    if min(out) < 1:
        raise UsageError("degrees must be at least 1")
    return out


def _resolve_input(path):
    p = Path(path)
    if p.exists() or p.is_absolute():
        return p
    data = os.environ.get("PPGMRES_DATA")
    if data:
        for cand in (Path(data) / p, Path(data) / p.name.lower()):
            if cand.exists():
                return cand
    return p


def resolve_output(path):
    if path is None or path == "-":
        return None
    p = Path(path)
    outdir = os.environ.get("PPGMRES_OUTDIR")
    if outdir and not p.is_absolute():
        p = Path(outdir) / p
    p.parent.mkdir(parents=True, exist_ok=True)
    return p


def load_matrix(cfg):
    if cfg.gen is not None:
        kind, params = parse_gen(cfg.gen)
        return gen_test_matrix(kind, **params)
    path = _resolve_input(cfg.mm)
    if not path.exists():
        raise FileNotFoundError(f"matrix file {cfg.mm} not found (set PPGMRES_DATA?)")
    return read_matrix_market(path)


def load_rhs(cfg, n):
    """Right-hand side normalized to unit length."""
    if cfg.rhs == "random":
        # a stream distinct from the polynomial's start vector
        b = np.random.default_rng([1, 0 if cfg.seed is None else cfg.seed]).standard_normal(n)
    elif cfg.rhs == "ones":
        b = np.ones(n)
    else:
        b = _read_vector(_resolve_input(cfg.rhs))
        if b.size != n:
            raise UsageError(f"right-hand side has length {b.size}, matrix has n={n}")
    return b / np.linalg.norm(b)


def _read_vector(path):
    """Plain whitespace-separated numbers or a Matrix Market array file."""
    with open(path) as fh:
        lines = [ln for ln in fh if ln.strip() and not ln.startswith("%")]
    if lines and len(lines[0].split()) == 2 and len(lines) > 1:
        lines = lines[1:]  # array header "n 1"
    return np.array(" ".join(lines).split(), dtype=np.float64)


def build_precond(A, cfg):
    return ilu0_factor(A, cfg.shift) if cfg.ilu else None


# ---------------------------------------------------------------------------
# Running
# ---------------------------------------------------------------------------

def run_solver(A, b, cfg, precond=None):
    """Dispatch on ``cfg.solver``; returns ``(x, SolveReport)``."""
    s = cfg.solver
    m = None if cfg.m is None or cfg.m == math.inf else int(cfg.m)
    if s == "pp-gmres":
        return pp_gmres(A, b, cfg.d, m, cfg.tol, cfg.seed, precond=precond,
                        max_cycles=cfg.max_cycles, stability_control=cfg.stability_control,
                        check_stability=cfg.check_stability, stch_threshold=cfg.stch_threshold,
                        reduce_degree=cfg.reduce_degree, max_basis=cfg.max_basis)
    if s == "double":
        return double_pp_gmres(A, b, cfg.d, cfg.d2, m, cfg.tol, cfg.seed, precond=precond,
                               max_cycles=cfg.max_cycles,
                               stability_control=cfg.stability_control,
                               check_stability=cfg.check_stability, max_basis=cfg.max_basis)
    if s == "changing":
        return pp_gmres_changing(A, b, cfg.d, m or 50, cfg.tol, cfg.seed, precond=precond,
                                 max_cycles=cfg.max_cycles,
                                 stability_control=cfg.stability_control)
    if s == "fgmres":
        if precond is not None:
            raise UsageError("fgmres does not take an ILU preconditioner")
        return fgmres(A, b, cfg.d, m or 50, cfg.tol, cfg.max_cycles)
    if s == "bicgstab":
        return bicgstab(A, b, cfg.tol, cfg.max_cycles, precond=precond)
    op = RightPreconditioned(as_operator(A), precond) if precond is not None else A
    if s == "gmres-inf" or m is None:
        x, rep = gmres_inf(op, b, cfg.tol, max_basis=cfg.max_basis)
    else:
        x, rep = gmres_restarted(op, b, m, cfg.tol, cfg.max_cycles)
    if precond is not None:
        # the residual of A M^{-1} y is already the residual of x = M^{-1} y
        x = precond.solve(x, rep.counter)
    rep.label = "1"
    return x, rep


def report_row(rep, cfg):
    pp = rep.polynomial
    if cfg.solver in ("pp-gmres", "double") and pp is not None:
        label = rep.label
        added = (pp.degree_added if isinstance(pp, PolyPreconditioner)
                 else pp.inner.degree_added + pp.outer.degree_added)
    elif cfg.solver in ("changing", "fgmres"):
        label, added = str(cfg.d), 0
    else:
        label, added = "1", 0
    c = rep.counter
    return BenchRow(label, added, rep.cycles, c.mvps, c.daxpys, c.dots, c.vops, rep.stch,
                    rep.final_relres, 1000.0 * rep.wall_time, rep.converged, rep.reason)


def failed_row(cfg, exc):
    nan = float("nan")
    return BenchRow(str(cfg.d), 0, 0, 0, 0, 0, 0, None, nan, 0.0, False,
                    f"{type(exc).__name__}: {exc}", failed=True)


def run_config(cfg, A=None, b=None, precond=None):
    """Solve once and return a :class:`BenchRow`; errors become a failed row."""
    try:
        if A is None:
            A = load_matrix(cfg)
        if b is None:
            b = load_rhs(cfg, A.n)
        if precond is None and cfg.ilu:
            precond = build_precond(A, cfg)
        _, rep = run_solver(A, b, cfg, precond)
        return report_row(rep, cfg)
    except PPGMRESError as exc:
        return failed_row(cfg, exc)


def _run_many(cfgs, jobs):
    """Rows in configuration order; matrices are loaded once per worker call."""
    if jobs and jobs > 1 and len(cfgs) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(run_config, cfgs))
    A = load_matrix(cfgs[0])
    b = load_rhs(cfgs[0], A.n)
    M = build_precond(A, cfgs[0])
    return [run_config(c, A, b, M) for c in cfgs]


# ---------------------------------------------------------------------------
# Output
# ---------------------------------------------------------------------------

class _Sink:
    def __init__(self, path):
        self.path = resolve_output(path)
        self.fh = open(self.path, "w", newline="") if self.path else sys.stdout
        self.writer = csv.writer(self.fh, lineterminator="\n")

    def row(self, values):
        self.writer.writerow(values)

    def close(self):
        if self.path:
            self.fh.close()
            print(f"wrote {self.path}", file=sys.stderr)


def summary(row, cfg):
    status = "converged" if row.converged else "NOT converged"
    text = (f"{cfg.solver} degree {row.degree}: {status} in {row.cycles} cycles, "
            f"{row.mvps} mvps, {row.vops} vops ({row.dots} dots), "
            f"true relres {row.final_relres:.3e}")
    if row.stch is not None:
        text += f", StCh {row.stch:.2e}"
    if row.reason and row.reason != "converged":
        text += f" [{row.reason}]"
    return text


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_solve(cfg, args):
    row = run_config(cfg)
    sink = _Sink(args.out)
    sink.row(CSV_COLUMNS)
    sink.row(row.as_list())
    sink.close()
    print(summary(row, cfg), file=sys.stderr)
    if row.failed:
        return EXIT_USAGE
    return EXIT_OK if row.converged else EXIT_NOT_CONVERGED


def cmd_sweep(cfg, args):
    degrees = parse_degrees(args.degrees)
    cfgs = [replace(cfg, d=d) for d in degrees]
    rows = _run_many(cfgs, args.jobs)
    sink = _Sink(args.out)
    sink.row(CSV_COLUMNS)
    for c, row in zip(cfgs, rows):
        sink.row(row.as_list())
        print(summary(row, c), file=sys.stderr)
    sink.close()
    return EXIT_OK if all(r.converged for r in rows) else EXIT_NOT_CONVERGED


def cmd_stability_scan(cfg, args):
    degrees = parse_degrees(args.degrees)
    cfg = replace(cfg, solver="pp-gmres", check_stability=True)
    cfgs = [replace(cfg, d=d, stability_control=on) for d in degrees for on in (False, True)]
    A = load_matrix(cfg)
    b = load_rhs(cfg, A.n)
    M = build_precond(A, cfg)
    sink = _Sink(args.out)
    sink.row(["degree", "added", "control", "max_pof", "stch", "final_relres", "cycles", "mvps"])
    for c in cfgs:
        try:
            _, rep = run_solver(A, b, c, M)
            sink.row([rep.label, rep.polynomial.degree_added, int(c.stability_control),
                      _fmt(rep.max_pof), _fmt(rep.stch), _fmt(rep.final_relres),
                      rep.cycles, rep.mvps])
        except PPGMRESError as exc:
            print(f"degree {c.d}: {exc}", file=sys.stderr)
            sink.row([c.d, "", int(c.stability_control), "", "", "", 0, 0])
    sink.close()
    return EXIT_OK


def _polynomial_for(cfg, args):
    if args.roots:
        try:
            roots = [complex(t.replace(" ", "").replace("i", "j")) for t in args.roots.split(",")]
        except ValueError:
            raise UsageError(f"bad root list {args.roots!r}")
        return PolyPreconditioner(np.array(roots), None, identity(1))
    A = load_matrix(cfg)
    M = build_precond(A, cfg)
    op = RightPreconditioned(as_operator(A), M) if M is not None else A
    pp, _ = build_polynomial(op, cfg.d, cfg.seed, stability_control=cfg.stability_control)
    return pp


def _write_roots(pp, sink):
    sink.row(["index", "re", "im", "is_added"])
    for idx, re, im, added in pp.export_rows():
        sink.row([idx, repr(re), repr(im), added])


def cmd_poly_graph(cfg, args):
    pp = _polynomial_for(cfg, args)
    try:
        lo, hi = (float(t) for t in args.interval.split(","))
    except ValueError:
        raise UsageError(f"bad interval {args.interval!r}; expected lo,hi")
    if args.samples < 1:
        raise UsageError("need at least one sample")
    alphas = np.linspace(lo, hi, args.samples)
    phi = pp.phi_scalar(alphas)
    sink = _Sink(args.out)
    sink.row(["alpha", "phi"])
    for a, f in zip(alphas, phi):
        sink.row([repr(float(a)), repr(float(f))])
    if args.roots_out:
        sink.close()
        rsink = _Sink(args.roots_out)
        _write_roots(pp, rsink)
        rsink.close()
    else:
        sink.fh.write("\n")
        _write_roots(pp, sink)
        sink.close()
    return EXIT_OK


def cmd_spectrum(cfg, args):
    A = load_matrix(cfg)
    if A.n > args.cap:
        raise UsageError(f"n={A.n} exceeds the dense eigensolve cap {args.cap} (raise --cap)")
    lam = np.linalg.eigvals(A.toarray())
    M = build_precond(A, cfg)
    if M is not None:
        op = RightPreconditioned(as_operator(A), M)
        base = np.linalg.eigvals(op.to_dense())
    else:
        op, base = A, lam
    cols = ["re", "im"]
    data = [lam.real, lam.imag]
    if M is not None:
        cols += ["prec_re", "prec_im"]
        data += [base.real, base.imag]
    if cfg.d > 1 or args.with_phi:
        pp, _ = build_polynomial(op, cfg.d, cfg.seed, stability_control=cfg.stability_control)
        phi = pp.phi_scalar(base.astype(complex))
        cols += ["phi_re", "phi_im"]
        data += [phi.real, phi.imag]
        mapped = np.abs(phi)
    else:
        mapped = None
    n = lam.size
    cols += ["cdf", "abs_sorted"]
    data += [np.arange(1, n + 1) / n, np.sort(np.abs(base))]
    if mapped is not None:
        cols.append("phi_abs_sorted")
        data.append(np.sort(mapped))
    sink = _Sink(args.out)
    sink.row(cols)
    for i in range(n):
        sink.row([repr(float(col[i])) for col in data])
    sink.close()
    return EXIT_OK


def cmd_export_matrix(cfg, args):
    A = load_matrix(cfg)
    path = resolve_output(args.out)
    if path is None:
        raise UsageError("export-matrix needs --out PATH")
    write_matrix_market(path, A, comment=f"exported by ppgmres from {cfg.gen or cfg.mm}")
    print(f"wrote {path} (n={A.n}, nnz={A.nnz})", file=sys.stderr)
    return EXIT_OK


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------

def _add_common(p, degrees=False):
    src = p.add_argument_group("matrix source (exactly one)")
    src.add_argument("--gen", help="generator, e.g. diag_power:n=2000,p=2 or biharmonic:nx=40")
    src.add_argument("--mm", help="Matrix Market coordinate file")
    src.add_argument("--preset", choices=sorted(PRESETS), help="experiment preset")
    p.add_argument("--rhs", default=None, help="random (default), ones, or a vector file")
    p.add_argument("--solver", choices=SOLVERS, default=None)
    if degrees:
        p.add_argument("--degrees", required=True, help="2,4,8 or 1..256 (doubling)")
    p.add_argument("--d", type=int, default=None, help="polynomial degree (inner for double)")
    p.add_argument("--d2", type=int, default=None, help="outer degree for --solver double")
    p.add_argument("--m", default=None, help="restart length, or inf")
    p.add_argument("--tol", type=float, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--ilu", action="store_true", default=None, help="compose with ILU(0)")
    p.add_argument("--shift", type=float, default=None, help="diagonal shift before ILU(0)")
    p.add_argument("--max-cycles", type=int, default=None)
    p.add_argument("--max-basis", type=int, default=None)
    p.add_argument("--no-stability-control", action="store_true",
                   help="do not add roots for large pof")
    p.add_argument("--no-stch", action="store_true", help="skip the stability check")
    p.add_argument("--stch-threshold", type=float, default=None)
    p.add_argument("--reduce-degree", action="store_true",
                   help="halve the degree while StCh exceeds the threshold")
    p.add_argument("--out", default=None, help="output CSV (default stdout)")


def build_parser():
    parser = argparse.ArgumentParser(prog="ppgmres", description=__doc__.split("\n\n")[0].strip(),
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="run one solve")
    _add_common(p)

    p = sub.add_parser("sweep", help="one row per degree")
    _add_common(p, degrees=True)
    p.add_argument("--jobs", type=int, default=1, help="parallel worker processes")

    p = sub.add_parser("stability-scan", help="degrees with root-adding off and on")
    _add_common(p, degrees=True)

    p = sub.add_parser("poly-graph", help="sample phi on a real interval")
    _add_common(p)
    p.add_argument("--roots", help="explicit comma-separated roots instead of a matrix, e.g. 1,2+1j,2-1j")
    p.add_argument("--interval", default="0,1")
    p.add_argument("--samples", type=int, default=201)
    p.add_argument("--roots-out", default=None, help="separate file for the root list")

    p = sub.add_parser("spectrum", help="dense eigenvalues and their phi images")
    _add_common(p)
    p.add_argument("--cap", type=int, default=SPECTRUM_CAP)
    p.add_argument("--with-phi", action="store_true", help="map through phi even for d = 1")

    p = sub.add_parser("export-matrix", help="write the matrix as Matrix Market")
    _add_common(p)
    return parser


def config_from_args(args):
    preset = dict(PRESETS[args.preset]) if args.preset else {}
    preset.pop("note", None)
    if args.gen is not None or args.mm is not None:
        preset.pop("gen", None)
        preset.pop("mm", None)

    def pick(name, default):
        val = getattr(args, name, None)
        if val is not None:
            return val
        return preset.get(name, default)

    m = pick("m", 50)
    if isinstance(m, str):
        m = math.inf if m.lower() in ("inf", "none") else int(m)
    return BenchConfig(
        gen=pick("gen", None), mm=pick("mm", None), rhs=pick("rhs", "random"),
        solver=pick("solver", "pp-gmres"), d=pick("d", 1), d2=pick("d2", 1), m=m,
        tol=pick("tol", 1e-8), seed=pick("seed", None), ilu=bool(pick("ilu", False)),
        shift=pick("shift", 0.0), max_cycles=pick("max_cycles", 1000),
        stability_control=not args.no_stability_control, check_stability=not args.no_stch,
        stch_threshold=args.stch_threshold, reduce_degree=args.reduce_degree,
        max_basis=pick("max_basis", 2000),
    )


COMMANDS = {
    "solve": cmd_solve,
    "sweep": cmd_sweep,
    "stability-scan": cmd_stability_scan,
    "poly-graph": cmd_poly_graph,
    "spectrum": cmd_spectrum,
    "export-matrix": cmd_export_matrix,
}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = config_from_args(args)
        if not (args.command == "poly-graph" and args.roots):
            cfg.validate()
        return COMMANDS[args.command](cfg, args)
    except (PPGMRESError, OSError, ValueError) as exc:
        print(f"ppgmres: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
