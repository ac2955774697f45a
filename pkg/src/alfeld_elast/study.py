"""Convergence studies on the unit cube: errors, rates, CSV and VTK output."""
import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .assembly import disp_values, elementwise_l2_projection, subcell_quadrature
from .dof_numbering import METHODS, BasisCache, build_dof_map, canonical_interpolant, stress_nodal
from .materials import ComplianceTensor, manufactured_case
from .mesh import alfeld_split, generate_cube_mesh, red_refine
from .methods import run_method, w_l2
from .postprocess import PostprocessedField, postprocess_displacement

CSV_COLUMNS = ["level", "n", "h", "ndof_sigma", "ndof_u", "err_sigma_A", "err_sigma_L2", "err_u_L2",
               "err_Pu_L2", "err_ustar_L2", "err_Pi_sigma_A", "rate_sigma_A", "rate_u", "rate_Pu",
               "rate_ustar"]
RATE_FLOOR = 1e-14
CEA_TOL = 1e-8
ERROR_DEGREE = 6


class StudyError(RuntimeError):
    """A level failed; ``report`` holds the rows computed before it."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


@dataclass
class StudyConfig:
    method: str
    levels: list
    material: ComplianceTensor
    postprocess: bool = False
    out: str = None
    case: str = "trig"
    error_degree: int = ERROR_DEGREE
    f_degree: int = 6
    seed: int = 0

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        self.levels = [int(n) for n in self.levels]
        if not self.levels or any(n < 1 for n in self.levels):
            raise ValueError("levels must be positive integers")
        if any(b <= a for a, b in zip(self.levels, self.levels[1:])):
            raise ValueError("levels must be strictly increasing")
        if self.postprocess and self.method not in ("jkm", "p0"):
            raise ValueError("postprocessing is available for jkm and p0 only")


@dataclass
class ErrorReport:
    rows: list = field(default_factory=list)
    complete: bool = True
    message: str = ""

    def column(self, name):
        return np.array([np.nan if r.get(name) is None else r[name] for r in self.rows], dtype=float)

    def rates(self, name):
        """Observed orders log(e_k/e_{k+1}) / log(h_k/h_{k+1}) for adjacent levels."""
        e = self.column(name)
        h = self.column("h")
        return np.array([_rate(e[i], e[i + 1], h[i], h[i + 1]) for i in range(len(e) - 1)])


def _rate(e0, e1, h0, h1):
    if not (np.isfinite(e0) and np.isfinite(e1)) or min(e0, e1) <= RATE_FLOOR:
        return np.nan
    return math.log(e0 / e1) / math.log(h0 / h1)


# ---------------------------------------------------------------------------
# error norms

def _a_norm(material, quad, D):
    return float(np.sqrt(max(np.einsum("ckq,ckqij,ckqij->", quad.weights, material.apply(D), D), 0.0)))


def _l2(quad, D):
    flat = D.reshape(D.shape[:3] + (-1,))
    return float(np.sqrt(np.einsum("ckq,ckqi,ckqi->", quad.weights, flat, flat)))


def _at_points(quad, nodal):
    return np.einsum("qs,cks...->ckq...", quad.mu, nodal)


def error_norms(solution, case, pp=None, degree=ERROR_DEGREE):
    """One row of errors of ``solution`` (and optionally u*) against a manufactured case.

    Keys follow the CSV columns; ``err_sigma_Pi_A`` (= ‖Πσ−σ‖_𝒜) and ``cea_ok``
    record the per-run Céa-type check.  Entries that do not apply are None.
    """
    cx = solution.complex
    table = solution.table
    mat = solution.material
    quad = subcell_quadrature(cx, degree)
    X = quad.points.reshape(-1, 3)
    shape = quad.points.shape[:3]
    S = case.sigma(X).reshape(shape + (3, 3))
    Sh = _at_points(quad, solution.stress_nodal())
    U = case.u(X).reshape(shape + (3,))
    Uh = disp_values(table.disp_kind, cx, solution.disp_coeffs(), quad)
    PU = elementwise_l2_projection("W", cx, case.u, quad=quad).reshape(-1, 4, 3)
    row = {
        "h": float(cx.parent.diameters.max()),
        "ndof_sigma": int(table.n_stress),
        "ndof_u": int(table.ndof_u),
        "err_sigma_A": _a_norm(mat, quad, S - Sh),
        "err_sigma_L2": _l2(quad, S - Sh),
        "err_u_L2": _l2(quad, U - Uh),
        "err_Pu_L2": w_l2(cx, PU - solution.disp_means()),
        "err_ustar_L2": None,
        "err_Pi_sigma_A": None,
        "err_sigma_Pi_A": None,
        "cea_ok": None,
    }
    if pp is not None:
        Us = disp_values("P2", cx, pp.coeffs, quad)
        row["err_ustar_L2"] = _l2(quad, U - Us)
    if table.variant != "bdm":
        pi = canonical_interpolant(case.sigma, table)
        Spi = _at_points(quad, stress_nodal(table, pi))
        row["err_Pi_sigma_A"] = _a_norm(mat, quad, Spi - Sh)
        row["err_sigma_Pi_A"] = _a_norm(mat, quad, Spi - S)
        row["cea_ok"] = bool(row["err_Pi_sigma_A"] <= row["err_sigma_Pi_A"] + CEA_TOL)
    return row


# ---------------------------------------------------------------------------
# studies

def cube_complex(n):
    return alfeld_split(generate_cube_mesh(n))


def solve_level(method, n, material, case, postprocess=False, cache=None, f_degree=6,
                degree=ERROR_DEGREE):
    cx = cube_complex(n)
    sol = run_method(method, cx, material, case.f, cache=cache, f_degree=f_degree)
    pp = postprocess_displacement(sol, allow_p0=True) if postprocess else None
    row = error_norms(sol, case, pp, degree)
    row["n"] = n
    row["residual"] = sol.diagnostics["residual"]
    if "equilibrium" in sol.diagnostics:
        row["equilibrium"] = sol.diagnostics["equilibrium"]
    return row, sol, pp


def _add_rates(report):
    for name, col in (("rate_sigma_A", "err_sigma_A"), ("rate_u", "err_u_L2"),
                      ("rate_Pu", "err_Pu_L2"), ("rate_ustar", "err_ustar_L2")):
        r = report.rates(col)
        report.rows[0][name] = None
        for i, v in enumerate(r):
            report.rows[i + 1][name] = None if np.isnan(v) else float(v)


def convergence_study(config, log=None):
    """Solve on every level of ``config``, compute errors and rates, write the CSV if asked."""
    case = manufactured_case(config.material, config.case)
    report = ErrorReport()
    cache = BasisCache()
    for i, n in enumerate(config.levels):
        try:
            row, _, _ = solve_level(config.method, n, config.material, case, config.postprocess,
                                    cache, config.f_degree, config.error_degree)
        except Exception as exc:  # noqa: BLE001 - any failure aborts the study
            report.complete = False
            report.message = f"level n={n} failed: {exc}"
            if report.rows:
                _add_rates(report)
            if config.out:
                write_csv(report, config.out)
            raise StudyError(report.message, report) from exc
        row["level"] = i
        report.rows.append(row)
        if log:
            log(f"n={n}: err_sigma_A={row['err_sigma_A']:.4e} err_u={row['err_u_L2']:.4e}")
    _add_rates(report)
    if config.out:
        write_csv(report, config.out)
    return report


def _fmt(v):
    if v is None or (isinstance(v, float) and not np.isfinite(v)):
        return ""
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return f"{v:.10e}"


def csv_text(report):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in report.rows:
        w.writerow([_fmt(r.get(c)) for c in CSV_COLUMNS])
    if not report.complete:
        buf.write(f"# INCOMPLETE: {report.message}\n")
    return buf.getvalue()


def write_csv(report, path):
    with open(path, "w", newline="") as fh:
        fh.write(csv_text(report))


def read_csv(path):
    with open(path) as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    return list(csv.DictReader(lines))


def robustness_study(method, levels, nus, E=1.0, case="divfree", cache=None):
    """L² and 𝒜-norm stress errors for each Poisson ratio and level.

    Returns a dict with ``rows`` (nu, n, err_sigma_L2, err_sigma_A), per-level
    ``ratio`` of each nu's L² error to the first nu's, and per-nu σ ``rates``.
    """
    cache = cache or BasisCache()
    rows, table = [], {}
    for nu in nus:
        mat = ComplianceTensor.from_young(E, nu)
        c = manufactured_case(mat, case)
        for n in levels:
            row, _, _ = solve_level(method, n, mat, c, cache=cache)
            table[nu, n] = row
            rows.append({"nu": nu, "n": n, "err_sigma_L2": row["err_sigma_L2"],
                         "err_sigma_A": row["err_sigma_A"]})
    ratio = {(nu, n): table[nu, n]["err_sigma_L2"] / table[nus[0], n]["err_sigma_L2"]
             for nu in nus for n in levels}
    rates = {}
    for nu in nus:
        for key in ("err_sigma_L2", "err_sigma_A"):
            e = [table[nu, n][key] for n in levels]
            h = [table[nu, n]["h"] for n in levels]
            rates[nu, key] = [_rate(e[i], e[i + 1], h[i], h[i + 1]) for i in range(len(levels) - 1)]
    return {"rows": rows, "ratio": ratio, "rates": rates}


# ---------------------------------------------------------------------------
# discrete-data superconvergence experiment for the p0 method

def _cellwise_field(values):
    """Callable returning ``values[g]`` for points arriving in equal consecutive groups g."""
    values = np.asarray(values)

    def f(x):
        per = len(x) // len(values)
        if per * len(values) != len(x):
            raise ValueError("points are not grouped by cell")
        return np.repeat(values, per, axis=0)
    return f


def nested_reference_complex(cx, red=False):
    """Alfeld split of the coarse subtets (optionally red-refined first).

    Returns the fine complex and, per fine macro cell, the coarse subtet containing it.
    """
    macro = cx.refined
    parent = np.arange(macro.ncells)
    if red:
        macro, parent = red_refine(macro)
    return alfeld_split(macro), parent


def discrete_data_study(levels, material, red=False, case="trig", cache=None):
    """p0 with data f = P f_case ∈ W_h against a nested reference solve with the same data.

    For each coarse level n the reference is p0 on the Alfeld split of the
    coarse subtets (red-refined if ``red``), so the coarse piecewise-constant
    load is exactly representable there.  Returns rows with
    ``err = ‖P_n(u_ref − û_n)‖`` and the rates between adjacent levels.
    """
    cache = cache or BasisCache()
    mc = manufactured_case(material, case)
    rows = []
    for n in levels:
        cx = cube_complex(n)
        fw = elementwise_l2_projection("W", cx, mc.f).reshape(-1, 3)  # per coarse subtet
        coarse = run_method("p0", cx, material, _cellwise_field(fw), cache=cache)
        fine_cx, parent = nested_reference_complex(cx, red)
        ref = run_method("p0", fine_cx, material, _cellwise_field(fw[parent]), cache=cache)
        # coarse-subtet means of the reference displacement
        vol = fine_cx.subvolumes
        num = np.zeros((len(fw), 3))
        np.add.at(num, parent, np.einsum("ck,cki->ci", vol, ref.disp_means()))
        den = np.zeros(len(fw))
        np.add.at(den, parent, vol.sum(axis=1))
        Pref = (num / den[:, None]).reshape(-1, 4, 3)
        err = w_l2(cx, Pref - coarse.disp_means())
        rows.append({"n": n, "h": float(cx.parent.diameters.max()), "err": err,
                     "equilibrium": coarse.diagnostics["equilibrium"],
                     "ref_size": ref.diagnostics["size"]})
    rates = [_rate(a["err"], b["err"], a["h"], b["h"]) for a, b in zip(rows, rows[1:])]
    return {"rows": rows, "rates": rates}


# ---------------------------------------------------------------------------
# VTK output

def export_vtk(obj, path):
    """Legacy ASCII VTK of the split mesh with subtet-averaged stress and displacement."""
    if isinstance(obj, PostprocessedField):
        cx = obj.complex
        quad = subcell_quadrature(cx, 2)
        U = disp_values("P2", cx, obj.coeffs, quad)
        disp = np.einsum("ckq,ckqi->cki", quad.weights, U) / cx.subvolumes[..., None]
        stress = None
    else:
        cx = obj.complex
        S = obj.stress_nodal().mean(axis=2)  # (nc, 4, 3, 3)
        stress = np.stack([S[..., 0, 0], S[..., 1, 1], S[..., 2, 2],
                           S[..., 1, 2], S[..., 0, 2], S[..., 0, 1]], axis=-1).reshape(-1, 6)
        disp = obj.disp_means()
    mesh = cx.refined
    disp = disp.reshape(-1, 3)
    out = ["# vtk DataFile Version 3.0", "alfeld-elast solution", "ASCII", "DATASET UNSTRUCTURED_GRID",
           f"POINTS {len(mesh.vertices)} double"]
    out += [" ".join(f"{v:.16e}" for v in p) for p in mesh.vertices]
    nc = mesh.ncells
    out.append(f"CELLS {nc} {5 * nc}")
    out += ["4 " + " ".join(str(int(i)) for i in c) for c in mesh.cells]
    out.append(f"CELL_TYPES {nc}")
    out += ["10"] * nc
    out.append(f"CELL_DATA {nc}")
    if stress is not None:
        out.append("FIELD stress_fields 1")
        out.append(f"stress 6 {nc} double")
        out += [" ".join(f"{v:.16e}" for v in s) for s in stress]
    out.append("VECTORS displacement double")
    out += [" ".join(f"{v:.16e}" for v in d) for d in disp]
    with open(path, "w") as fh:
        fh.write("\n".join(out) + "\n")
    return path


def read_vtk_counts(path):
    """(number of points, number of cells) from a legacy VTK file written by :func:`export_vtk`."""
    npts = ncells = None
    with open(path) as fh:
        for line in fh:
            if line.startswith("POINTS"):
                npts = int(line.split()[1])
            elif line.startswith("CELLS"):
                ncells = int(line.split()[1])
    return npts, ncells
