"""Global degree-of-freedom tables and canonical stress interpolants.

Global ordering: stress unknowns, then displacement unknowns, then rotation
unknowns (weak symmetry only).  Facet stress DOFs are numbered
``facet_id * nk + j`` so both cells of a facet agree without communication;
cell-mean DOFs (full variant) follow all facet DOFs.
"""
import dataclasses
from dataclasses import dataclass

import numpy as np

from .local_spaces import (
    NSHAPE, FacetInfo, LocalSpaceError, SplitGeometry, build_stress_basis,
    cell_mean_dofs, facet_kappas, local_facet_info, rigid_ops,
)
from .quadrature import simplex_rule

METHODS = ("jkm", "p0", "reduced", "reduced2", "weaksym")
STRESS_VARIANT = {"jkm": "full", "p0": "full", "reduced": "reduced", "reduced2": "reduced2"}
DISP_KIND = {"jkm": "V", "p0": "W", "reduced": "R", "reduced2": "C"}
DISP_LOCAL = {"V": 12, "W": 12, "R": 6, "C": 3}
FACET_NK = {"full": 9, "reduced": 6, "reduced2": 3}


def _geometry_key(P, z, *extra):
    parts = [np.round(P - P[0], 13).tobytes(), np.round(z - P[0], 13).tobytes()]
    parts += [np.ascontiguousarray(e).tobytes() for e in extra]
    return b"|".join(parts)


class BasisCache:
    """Reuses local constructions on translated copies of the same cell.

    Structured meshes repeat a handful of shapes, so caching by relative
    coordinates, facet normals and facet vertex order avoids rebuilding
    identical local bases.
    """

    def __init__(self):
        self.stress = {}
        self.rigid = {}
        self.hits = 0
        self.misses = 0

    def stress_basis(self, P, z, variant, info, cell):
        order = np.argsort(info.global_ids, kind="stable")
        key = (variant, _geometry_key(P, z, np.round(info.normals, 13), info.vertex_order, order))
        base = self.stress.get(key)
        if base is None:
            self.misses += 1
            base = build_stress_basis(P, variant, info, z, cell)
            self.stress[key] = base
        else:
            self.hits += 1
        nk = FACET_NK[variant]
        kinds = [("facet", int(info.global_ids[i]), j) for i in order for j in range(nk)]
        kinds += base.dof_kinds[len(kinds):]
        return dataclasses.replace(base, cell=cell, dof_kinds=kinds)

    def rigid_ops(self, P, z):
        key = _geometry_key(P, z)
        ops = self.rigid.get(key)
        if ops is None:
            ops = rigid_ops(SplitGeometry(P, z))
            self.rigid[key] = ops
        return ops


@dataclass
class DofTable:
    """Global numbering for one method on one Alfeld complex."""
    method: str
    complex: object
    variant: str               # stress variant, or "bdm" for weak symmetry
    disp_kind: str             # V | W | R | C
    cell_stress: np.ndarray    # (nc, nshape) or (nsub, 36) for weak symmetry
    cell_disp: np.ndarray      # (nc, ndisp_local) global indices
    cell_rot: np.ndarray       # (nsub, 12) global indices, weak symmetry only
    n_stress: int
    n_disp: int
    n_rot: int
    bases: list                # LocalBasis per macro cell, or WeakSymBasis per subcell
    ops: list                  # RigidOps per macro cell

    @property
    def size(self):
        return self.n_stress + self.n_disp + self.n_rot

    @property
    def ndof_u(self):
        return self.n_disp


def _disp_numbering(nc, kind, offset):
    nd = DISP_LOCAL[kind]
    return offset + np.arange(nc * nd).reshape(nc, nd)


def build_dof_map(cx, method, weaksym_disp="W", cache=None):
    """Global DOF table for ``method`` on the Alfeld complex ``cx``."""
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; choose from {', '.join(METHODS)}")
    if cx.ndim != 3:
        raise ValueError("solvers are implemented for tetrahedral meshes only")
    cache = cache or BasisCache()
    mesh = cx.parent
    nc = mesh.ncells
    pts = mesh.cell_points()
    ops = [cache.rigid_ops(pts[c], cx.split_points[c]) for c in range(nc)]
    if method == "weaksym":
        return _build_weaksym(cx, weaksym_disp, ops)
    variant = STRESS_VARIANT[method]
    ft = mesh.facets
    nk = FACET_NK[variant]
    nf = len(ft)
    bases, cell_stress = [], []
    for c in range(nc):
        info = local_facet_info(mesh, c)
        _check_orientation(ft, c, info)
        b = cache.stress_basis(pts[c], cx.split_points[c], variant, info, c)
        idx = [g * nk + j for kind, g, j in b.dof_kinds if kind == "facet"]
        if variant == "full":
            idx += [nf * nk + 6 * c + j for j in range(6)]
        bases.append(b)
        cell_stress.append(idx)
    n_stress = nf * nk + (6 * nc if variant == "full" else 0)
    kind = DISP_KIND[method]
    cell_disp = _disp_numbering(nc, kind, n_stress)
    return DofTable(method, cx, variant, kind, np.array(cell_stress), cell_disp, None,
                    n_stress, cell_disp.size, 0, bases, ops)


def _check_orientation(ft, c, info):
    gids = info.global_ids
    for i, g in enumerate(gids):
        inc = ft.cells[g]
        if c not in inc:
            raise LocalSpaceError(f"facet {g} is not incident to cell {c}")


# ---------------------------------------------------------------------------
# weak symmetry: matrix-valued BDM1 on the refined mesh

_MATRIX_FACE_W = (np.ones((3, 3)) + np.eye(3)) / 12.0


@dataclass
class WeakSymBasis:
    """Nodal BDM1 basis of 3x3 matrix fields on one subcell (36 shape functions)."""
    values: np.ndarray   # (4 slots, 3, 3, 36)
    div: np.ndarray      # (3, 36)


def weaksym_basis(P, normals, measures, vertex_order, facet_order):
    """BDM1 basis on a simplex with DOFs ``int_F (tau n)_c phi_v`` per facet in ``facet_order``."""
    D = np.zeros((36, 36))
    row = 0
    for i in facet_order:
        slots = vertex_order[i]  # local slots in sorted global order
        n = normals[i]
        for v_pos in range(3):
            for c in range(3):
                for a_pos, a in enumerate(slots):
                    w = measures[i] * _MATRIX_FACE_W[a_pos, v_pos]
                    D[row, a * 9 + c * 3:a * 9 + c * 3 + 3] += w * n
                row += 1
    Phi = np.linalg.inv(D)
    values = Phi.reshape(4, 3, 3, 36)
    M = np.column_stack([P, np.ones(4)])
    grads = np.linalg.inv(M)[:3].T  # (4, 3)
    div = np.einsum("arsm,as->rm", values, grads)
    return WeakSymBasis(values, div)


def _build_weaksym(cx, disp, ops):
    if disp not in ("W", "V"):
        raise ValueError("weak-symmetry displacement space must be 'W' or 'V'")
    fine = cx.refined
    ft = fine.facets
    pts = fine.cell_points()
    nsub = fine.ncells
    cache, bases, cell_stress = {}, [], []
    for s in range(nsub):
        info = local_facet_info(fine, s)
        order = np.argsort(info.global_ids, kind="stable")
        P = pts[s]
        key = _geometry_key(P, P[0], np.round(info.normals, 13), info.vertex_order, order)
        b = cache.get(key)
        if b is None:
            b = weaksym_basis(P, info.normals, info.measures, info.vertex_order, order)
            cache[key] = b
        bases.append(b)
        cell_stress.append([g * 9 + j for g in info.global_ids[order] for j in range(9)])
    n_stress = len(ft) * 9
    nc = cx.parent.ncells
    cell_disp = _disp_numbering(nc, disp, n_stress)
    n_disp = cell_disp.size
    cell_rot = n_stress + n_disp + np.arange(nsub * 12).reshape(nsub, 12)
    return DofTable("weaksym", cx, "bdm", disp, np.array(cell_stress), cell_disp, cell_rot,
                    n_stress, n_disp, nsub * 12, bases, ops)


# ---------------------------------------------------------------------------
# discrete stress evaluation and interpolation

def stress_nodal(table, coeffs):
    """Nodal stress values (nc, 4 subcells, 4 slots, 3, 3) of a global stress vector."""
    x = np.asarray(coeffs)[: table.n_stress]
    if table.variant == "bdm":
        nsub = len(table.bases)
        out = np.empty((nsub, 4, 3, 3))
        for s, b in enumerate(table.bases):
            out[s] = b.values @ x[table.cell_stress[s]]
        return out.reshape(-1, 4, 4, 3, 3)
    out = np.empty((len(table.bases), 4, 4, 3, 3))
    for c, b in enumerate(table.bases):
        out[c] = b.values @ x[table.cell_stress[c]]
    return out


def stress_divergence(table, coeffs):
    """Piecewise-constant divergence (nc, 4, 3) of a global stress vector."""
    x = np.asarray(coeffs)[: table.n_stress]
    if table.variant == "bdm":
        out = np.array([b.div @ x[table.cell_stress[s]] for s, b in enumerate(table.bases)])
        return out.reshape(-1, 4, 3)
    return np.array([b.div @ x[table.cell_stress[c]] for c, b in enumerate(table.bases)])


def canonical_interpolant(field, table, facet_degree=5, cell_degree=6):
    """Π, Π^R or Π̃^R of a smooth symmetric field ``field(x) -> (npts, 3, 3)``."""
    if table.variant == "bdm":
        raise ValueError("no canonical interpolant is defined for the weak-symmetry space")
    cx = table.complex
    mesh = cx.parent
    ft = mesh.facets
    variant = table.variant
    nk = FACET_NK[variant]
    rule = simplex_rule(2, facet_degree)
    fpts = mesh.vertices[ft.vertices]  # (nf, 3, 3)
    X = np.einsum("qv,fvd->fqd", rule.points, fpts)
    nf, nq = X.shape[:2]
    S = field(X.reshape(-1, 3)).reshape(nf, nq, 3, 3)
    Sn = np.einsum("fqij,fj->fqi", S, ft.normals)
    out = np.zeros(table.n_stress)
    wts = rule.weights * 2.0  # integrate() scaling for unit measure
    for g in range(nf):
        K = facet_kappas(variant, fpts[g], ft.normals[g])
        kap = np.einsum("qv,kvi->qki", rule.points, K)
        out[g * nk:(g + 1) * nk] = ft.measures[g] * np.einsum("q,qi,qki->k", wts, Sn[g], kap)
    if variant == "full":
        pts = mesh.cell_points()
        for c in range(mesh.ncells):
            geom = SplitGeometry(pts[c], cx.split_points[c])
            out[nf * nk + 6 * c: nf * nk + 6 * c + 6] = cell_mean_dofs(geom, field, cell_degree)
    return out


def local_interpolant_dofs(table, coeffs, cell):
    """Local DOF vector of a global stress vector on ``cell``."""
    return np.asarray(coeffs)[table.cell_stress[cell]]


def expected_stress_count(cx, method):
    nf = len(cx.parent.facets)
    nc = cx.parent.ncells
    if method == "weaksym":
        return 9 * len(cx.refined.facets)
    variant = STRESS_VARIANT[method]
    return FACET_NK[variant] * nf + (6 * nc if variant == "full" else 0)


__all__ = [
    "METHODS", "BasisCache", "DofTable", "FacetInfo", "NSHAPE", "WeakSymBasis",
    "build_dof_map", "canonical_interpolant", "expected_stress_count",
    "stress_divergence", "stress_nodal", "weaksym_basis",
]
