"""End-to-end drivers for the five discrete methods and the weak-symmetry equivalence harness."""
from dataclasses import dataclass, field

import numpy as np

from .assembly import P1_MASS, assemble, disp_mean_matrices, subcell_quadrature
from .dof_numbering import METHODS, BasisCache, build_dof_map, stress_divergence, stress_nodal
from .linear_solver import Factorization, nested_dissection

EQUIV_TOL = 1e-7


@dataclass
class DiscreteSolution:
    """Solved coefficients of one method with the table they refer to."""
    method: str
    table: object
    material: object
    x: np.ndarray
    alpha: float = 1.0
    diagnostics: dict = field(default_factory=dict)

    @property
    def complex(self):
        return self.table.complex

    @property
    def sigma(self):
        return self.x[: self.table.n_stress]

    @property
    def u(self):
        t = self.table
        return self.x[t.n_stress: t.n_stress + t.n_disp]

    @property
    def rotation(self):
        t = self.table
        return self.x[t.n_stress + t.n_disp:]

    def stress_nodal(self):
        return stress_nodal(self.table, self.x)

    def stress_divergence(self):
        return stress_divergence(self.table, self.x)

    def disp_coeffs(self):
        """Displacement coefficients per macro cell, (nc, nd)."""
        return self.u[self.table.cell_disp - self.table.n_stress]

    def disp_means(self):
        """Subcell means of the displacement, (nc, 4, 3)."""
        Wd = disp_mean_matrices(self.table)
        return np.einsum("cwm,cm->cw", Wd, self.disp_coeffs()).reshape(-1, 4, 3)


def solver_ordering(table):
    """Nested-dissection ordering of the table's unknowns."""
    cx = table.complex
    nc = cx.parent.ncells
    cell_dofs = [table.cell_stress.reshape(nc, -1), table.cell_disp]
    if table.cell_rot is not None:
        cell_dofs.append(table.cell_rot.reshape(nc, -1))
    centroids = cx.parent.cell_points().mean(axis=1)
    return nested_dissection(nc, centroids, cell_dofs, table.size)


def run_method(method, cx, material, f, alpha=1.0, weaksym_disp="W", cache=None, table=None,
               f_degree=6):
    """Assemble and solve ``method`` on the Alfeld complex ``cx`` with load ``f(x) -> (npts, 3)``."""
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}")
    table = table or build_dof_map(cx, method, weaksym_disp=weaksym_disp, cache=cache or BasisCache())
    A, b = assemble(method, table, material, f, alpha=alpha, f_degree=f_degree)
    fact = Factorization(A, solver_ordering(table))
    x = fact.solve(b)
    sol = DiscreteSolution(method, table, material, x, alpha)
    sol.diagnostics["residual"] = fact.residual
    sol.diagnostics["size"] = table.size
    if method == "p0" and f is not None:
        sol.diagnostics["equilibrium"] = equilibrium_defect(sol, f, f_degree)
    if method == "weaksym":
        S = sol.stress_nodal()
        sk = 0.5 * (S - np.swapaxes(S, -1, -2))
        sol.diagnostics["skew_ratio"] = nodal_l2(cx, sk) / max(nodal_l2(cx, S), 1e-300)
    return sol


def equilibrium_defect(sol, f, degree=6):
    """max |div sigma_h - P f| over subcells, relative to max |P f|."""
    cx = sol.complex
    quad = subcell_quadrature(cx, degree)
    F = f(quad.points.reshape(-1, 3)).reshape(quad.points.shape)
    Pf = np.einsum("ckq,ckqi->cki", quad.weights, F) / cx.subvolumes[..., None]
    d = sol.stress_divergence()
    return float(np.abs(d - Pf).max() / max(np.abs(Pf).max(), 1e-300))


def nodal_l2(cx, S):
    """L2 norm of a piecewise-linear field given by nodal values (nc, 4, 4, ...)."""
    S = S.reshape(S.shape[:3] + (-1,))
    val = np.einsum("ck,ab,ckai,ckbi->", cx.subvolumes, P1_MASS, S, S)
    return float(np.sqrt(max(val, 0.0)))


def p1_vertex_l2(cx, U):
    """L2 norm of a macro-P1 vector field from vertex values (nc, 4, 3)."""
    vol = cx.parent.volumes
    return float(np.sqrt(np.einsum("c,ab,cai,cbi->", vol, P1_MASS, U, U)))


def w_l2(cx, W):
    """L2 norm of a subcell-constant field (nc, 4, 3)."""
    return float(np.sqrt(np.einsum("ck,cki,cki->", cx.subvolumes, W, W)))


def _rel(a, b):
    return a / max(b, 1e-300)


def equivalence_check(cx, material, f, alphas=(1.0, 2.0)):
    """Compare weak symmetry against p0 (W_h displacements) and jkm (V_h displacements).

    Returns a report dict with relative stress and displacement discrepancies
    for each scaling of the skew compliance, and an overall ``status``.
    """
    report = {"entries": []}
    cache = BasisCache()
    ref = {"W": run_method("p0", cx, material, f, cache=cache),
           "V": run_method("jkm", cx, material, f, cache=cache)}
    for kind, base in ref.items():
        Sb = base.stress_nodal()
        nb = nodal_l2(cx, Sb)
        for alpha in alphas:
            ws = run_method("weaksym", cx, material, f, alpha=alpha, weaksym_disp=kind, cache=cache)
            ds = _rel(nodal_l2(cx, ws.stress_nodal() - Sb), nb)
            if kind == "W":
                du = _rel(w_l2(cx, ws.disp_means() - base.disp_means()), w_l2(cx, base.disp_means()))
            else:
                Ub = base.disp_coeffs().reshape(-1, 4, 3)
                Uw = ws.disp_coeffs().reshape(-1, 4, 3)
                du = _rel(p1_vertex_l2(cx, Uw - Ub), p1_vertex_l2(cx, Ub))
            report["entries"].append({
                "pair": f"{base.method}/weaksym-{kind}", "alpha": alpha,
                "stress": ds, "displacement": du,
                "skew_ratio": ws.diagnostics["skew_ratio"],
            })
    worst = max(max(e["stress"], e["displacement"]) for e in report["entries"])
    report["worst"] = worst
    report["status"] = "PASS" if worst <= EQUIV_TOL else "FAIL"
    return report
