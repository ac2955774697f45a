"""Local spaces on one Alfeld-split macro cell.

A piecewise-linear matrix field on the split of an N-simplex is stored by its
nodal values: subcell ``k`` has local node slots ``0..N`` where slot ``k`` is
the split point and slot ``j != k`` is macro vertex ``j``.  The raw coefficient
vector is indexed ``((k*(N+1) + slot)*ncomp + comp)`` with components taken on
the basis returned by :func:`component_basis`; for symmetric matrices the
coefficients are the upper-triangle entries in row-major order.

Every constraint and every degree of freedom is a row acting on that raw
vector.  The same row builders run on floats and on exact ``Fraction`` data,
so the verification code can certify ranks exactly.
"""
import itertools
import warnings
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import factorial

import numpy as np

from .quadrature import simplex_rule

NULL_TOL = 1e-10
COND_WARN = 1e8
NSHAPE = {"full": 42, "reduced": 24, "reduced2": 12}


class LocalSpaceError(RuntimeError):
    """Unexpected dimension or singular DOF system in a local construction."""


# ---------------------------------------------------------------------------
# raw layout helpers (generic in N, float or exact)

@lru_cache(maxsize=None)
def component_basis(ndim, kind="sym"):
    """Basis matrices for raw components: ``sym`` (upper triangle), ``matrix`` (row-major) or ``skw``."""
    out = []
    if kind == "sym":
        for i in range(ndim):
            for j in range(i, ndim):
                S = np.zeros((ndim, ndim), dtype=int)
                S[i, j] = S[j, i] = 1
                out.append(S)
    elif kind == "matrix":
        for i in range(ndim):
            for j in range(ndim):
                S = np.zeros((ndim, ndim), dtype=int)
                S[i, j] = 1
                out.append(S)
    elif kind == "skw":
        for i, j in itertools.combinations(range(ndim), 2):
            S = np.zeros((ndim, ndim), dtype=int)
            S[i, j], S[j, i] = 1, -1
            out.append(S)
    else:
        raise ValueError(kind)
    return np.array(out)


def _inv_exact(A):
    n = len(A)
    M = [[Fraction(x) for x in row] + [Fraction(int(i == j)) for j in range(n)] for i, row in enumerate(A)]
    for c in range(n):
        p = next(r for r in range(c, n) if M[r][c] != 0)
        M[c], M[p] = M[p], M[c]
        piv = M[c][c]
        M[c] = [x / piv for x in M[c]]
        for r in range(n):
            if r != c and M[r][c] != 0:
                f = M[r][c]
                M[r] = [a - f * b for a, b in zip(M[r], M[c])]
    return np.array([row[n:] for row in M], dtype=object)


def _det_exact(A):
    A = [[Fraction(x) for x in row] for row in A]
    n, det = len(A), Fraction(1)
    for c in range(n):
        p = next((r for r in range(c, n) if A[r][c] != 0), None)
        if p is None:
            return Fraction(0)
        if p != c:
            A[c], A[p] = A[p], A[c]
            det = -det
        det *= A[c][c]
        for r in range(c + 1, n):
            f = A[r][c] / A[c][c]
            A[r] = [a - f * b for a, b in zip(A[r], A[c])]
    return det


class SplitGeometry:
    """Geometry of the Alfeld split of one simplex, float or exact."""

    def __init__(self, vertices, split_point=None):
        P = np.asarray(vertices)
        self.exact = P.dtype == object
        N = P.shape[1]
        self.ndim = N
        if split_point is None:
            split_point = P.sum(axis=0) / (N + 1) if self.exact else P.mean(axis=0)
        self.P = P
        self.z = np.asarray(split_point)
        sub = np.repeat(P[None], N + 1, axis=0).copy()
        for k in range(N + 1):
            sub[k, k] = self.z
        self.sub = sub  # (N+1, N+1, N)
        grads, vols = [], []
        for k in range(N + 1):
            J = (sub[k, 1:] - sub[k, 0]).T
            if self.exact:
                Jinv = _inv_exact(J)
                vols.append(_det_exact(J) / factorial(N))
            else:
                det = np.linalg.det(J.astype(float))
                if abs(det) <= 1e-14 * np.abs(J).max() ** N:
                    raise LocalSpaceError("degenerate macro cell or split point on its boundary")
                Jinv = np.linalg.inv(J.astype(float))
                vols.append(det / factorial(N))
            g0 = -Jinv.sum(axis=0)
            grads.append(np.vstack([g0[None], Jinv]))
        self.grads = np.array(grads)  # (N+1 sub, N+1 slot, N)
        self.subvol = np.array(vols, dtype=object if self.exact else float)
        self.volume = self.subvol.sum()

    # internal facet shared by subcells a < b: nodes as (slot in a, slot in b) pairs
    def internal_facet(self, a, b):
        N = self.ndim
        pairs = [(a, b)] + [(j, j) for j in range(N + 1) if j not in (a, b)]
        normal = self.grads[a, b]  # opposite x_b inside subcell a
        return pairs, normal

    def facet_measure(self, pts):
        """(N-1)-measure of the facet with vertex rows ``pts`` (float path only)."""
        pts = np.asarray(pts, dtype=float)
        E = pts[1:] - pts[0]
        return np.sqrt(abs(np.linalg.det(E @ E.T))) / factorial(len(pts) - 1)


class RawSpace:
    """Row builders on the raw nodal-coefficient vector of a split cell."""

    def __init__(self, geom, kind="sym"):
        self.g = geom
        N = geom.ndim
        self.N = N
        self.basis = component_basis(N, kind)
        self.ncomp = len(self.basis)
        self.size = (N + 1) * (N + 1) * self.ncomp
        self.dtype = object if geom.exact else float

    def index(self, k, slot, comp):
        return ((k * (self.N + 1) + slot) * self.ncomp) + comp

    def zeros(self, nrows):
        z = np.zeros((nrows, self.size), dtype=self.dtype)
        if self.dtype is object:
            z[:] = Fraction(0)
        return z

    def _trace_rows(self, k, slot, normal, sign=1):
        """Rows (N, ncomp) giving ``(M n)_r`` for the node value ``M`` at (k, slot)."""
        # S_c[r, s] n_s
        return sign * np.einsum("crs,s->rc", self.basis.astype(object if self.g.exact else float), normal)

    def continuity_rows(self):
        N = self.N
        rows = []
        for a, b in itertools.combinations(range(N + 1), 2):
            pairs, normal = self.g.internal_facet(a, b)
            for sa, sb in pairs:
                R = self.zeros(N)
                t = self._trace_rows(a, sa, normal)
                ia, ib = self.index(a, sa, 0), self.index(b, sb, 0)
                R[:, ia:ia + self.ncomp] += t
                R[:, ib:ib + self.ncomp] -= t
                rows.append(R)
        return np.vstack(rows)

    def boundary_trace_rows(self):
        """``omega n = 0`` at the vertices of every macro facet."""
        N = self.N
        rows = []
        for i in range(N + 1):
            normal = self.g.grads[i, i]  # facet of subcell i opposite the split point
            for j in range(N + 1):
                if j == i:
                    continue
                R = self.zeros(N)
                ij = self.index(i, j, 0)
                R[:, ij:ij + self.ncomp] += self._trace_rows(i, j, normal)
                rows.append(R)
        return np.vstack(rows)

    def divergence_rows(self):
        """Rows (N+1, N, size): constant row-wise divergence on each subcell."""
        N = self.N
        out = np.zeros((N + 1, N, self.size), dtype=self.dtype)
        if self.dtype is object:
            out[:] = Fraction(0)
        basis = self.basis.astype(object if self.g.exact else float)
        for k in range(N + 1):
            for slot in range(N + 1):
                i0 = self.index(k, slot, 0)
                out[k, :, i0:i0 + self.ncomp] += np.einsum("crs,s->rc", basis, self.g.grads[k, slot])
        return out

    def facet_moment_rows(self, i, normal, kappa, measure):
        """Rows ``int_F (omega n) . kappa`` on macro facet ``i`` (opposite vertex ``i``).

        ``kappa`` has shape (nk, N, N): nodal vectors at the facet vertices in
        the order of increasing local vertex index ``j != i``.  On the exact
        path pass Fraction (or int) data; ``measure`` may be 1 for rank work.
        """
        N = self.N
        slots = [j for j in range(N + 1) if j != i]
        d = N - 1
        if self.dtype is object:
            w_off = measure * Fraction(factorial(d), factorial(d + 2))
        else:
            w_off = measure * factorial(d) / factorial(d + 2)
        rows = self.zeros(len(kappa))
        basis = self.basis.astype(self.dtype)
        for a_pos, a in enumerate(slots):
            tr = np.einsum("crs,s->rc", basis, normal)  # (N, ncomp)
            for b_pos in range(len(slots)):
                w = w_off * (2 if a_pos == b_pos else 1)
                ia = self.index(i, a, 0)
                rows[:, ia:ia + self.ncomp] += w * np.einsum("kr,rc->kc", kappa[:, b_pos, :], tr)
        return rows

    def cell_integral_rows(self):
        """Rows (ncomp, size): integral over the macro cell of each raw component."""
        N = self.N
        rows = self.zeros(self.ncomp)
        for k in range(N + 1):
            for slot in range(N + 1):
                i0 = self.index(k, slot, 0)
                for c in range(self.ncomp):
                    rows[c, i0 + c] += self.g.subvol[k] / (N + 1)
        return rows


def null_space(A, tol=NULL_TOL):
    """Orthonormal null-space basis of ``A`` and its singular values."""
    A = np.asarray(A, dtype=float)
    scale = np.linalg.norm(A, axis=1)
    scale[scale == 0] = 1.0
    A = A / scale[:, None]
    _, s, Vt = np.linalg.svd(A)
    smax = s[0] if len(s) else 1.0
    rank = int(np.sum(s > tol * smax))
    return Vt[rank:].T, s


# ---------------------------------------------------------------------------
# rigid motions and W_h(T) on a 3D macro cell

def rigid_nodal(points, center):
    """Values of the 6 rigid fields ``e_c`` and ``e_c x (x - center)`` at ``points`` -> (6, npts, 3)."""
    points = np.asarray(points, dtype=float)
    out = np.zeros((6, len(points), 3))
    for c in range(3):
        out[c, :, c] = 1.0
        e = np.zeros(3)
        e[c] = 1.0
        out[3 + c] = np.cross(e, points - center)
    return out


@dataclass
class RigidOps:
    """Operators linking V_h(T), W_h(T) and rigid motions on one macro cell.

    V_h coordinates are (macro vertex a, component); W_h coordinates are
    (subcell k, component); both flattened row-major to length 12.
    """
    rigid_v: np.ndarray      # (12, 6) rigid fields in V_h coordinates
    P: np.ndarray            # (12, 12) L2 projection V_h -> W_h
    I: np.ndarray            # (12, 12) W_h -> V_h barycenter interpolation
    PR: np.ndarray           # (12, 6) basis of P_T R(T) in W_h coordinates
    complement: np.ndarray   # (12, 6) basis of (P_T R(T))^perp in W_h coordinates
    gram_w: np.ndarray       # (12, 12) L2(T) Gram matrix on W_h coordinates
    PR_proj: np.ndarray      # (12, 12) L2 projector W_h -> P_T R(T)


def rigid_ops(geom):
    P = geom.P.astype(float)
    sub = geom.sub.astype(float)
    vol = geom.subvol.astype(float)
    center = P.mean(axis=0)
    rv = rigid_nodal(P, center)  # (6, 4, 3)
    rigid_v = rv.reshape(6, 12).T
    # P_T by quadrature: subcell means of macro barycentric coordinates
    rule = simplex_rule(3, 2)
    Pm = np.zeros((4, 4))
    Minv = np.linalg.inv(np.column_stack([P, np.ones(4)]))  # lambda(x) = [x,1] @ Minv
    for k in range(4):
        x = rule.physical_points(sub[k])
        lam = np.column_stack([x, np.ones(len(x))]) @ Minv
        Pm[k] = rule.integrate(lam, vol[k]) / vol[k]
    Pmat = np.kron(Pm, np.eye(3))
    xb = sub.mean(axis=1)
    E = np.column_stack([xb, np.ones(4)]) @ Minv  # E[k, a] = lambda_a(x_K)
    Imat = np.kron(np.linalg.inv(E), np.eye(3))
    PR = Pmat @ rigid_v
    G = np.kron(np.diag(vol), np.eye(3))
    comp, _ = null_space((PR.T @ G), tol=1e-12)
    if comp.shape[1] != 6:
        raise LocalSpaceError(f"dim (P_T R)^perp = {comp.shape[1]}, expected 6")
    proj = PR @ np.linalg.solve(PR.T @ G @ PR, PR.T @ G)
    return RigidOps(rigid_v, Pmat, Imat, PR, comp, G, proj)


# ---------------------------------------------------------------------------
# facet test functions shared by both cells of a facet

def facet_frame(facet_pts, normal):
    """Tangent frame (t1, t2) of a facet from its first two sorted vertices and global normal."""
    t1 = facet_pts[1] - facet_pts[0]
    t1 = t1 / np.linalg.norm(t1)
    t2 = np.cross(normal, t1)
    return t1, t2


def rigid_facet_fields(facet_pts, normal):
    """Nodal values (3, 3 vertices, 3) of the in-plane rigid motions of a facet."""
    t1, t2 = facet_frame(facet_pts, normal)
    c = facet_pts.mean(axis=0)
    out = np.zeros((3, 3, 3))
    out[0, :] = t1
    out[1, :] = t2
    out[2] = np.cross(normal, facet_pts - c)
    return out


def facet_kappas(variant, facet_pts, normal):
    """Facet DOF test functions as nodal vectors (nk, 3 vertices, 3) at the sorted facet vertices."""
    if variant == "full":
        K = np.zeros((9, 3, 3))
        for v in range(3):
            for c in range(3):
                K[3 * v + c, v, c] = 1.0
        return K
    if variant == "reduced":
        K = np.zeros((6, 3, 3))
        for v in range(3):
            K[v, v] = normal
        K[3:] = rigid_facet_fields(facet_pts, normal)
        return K
    if variant == "reduced2":
        K = np.zeros((3, 3, 3))
        for c in range(3):
            K[c, :, c] = 1.0
        return K
    raise ValueError(f"unknown variant {variant!r}")


def _facet_constraint_kappas(variant, facet_pts, normal):
    """Test functions spanning the part of the facet trace a variant forbids."""
    mass = (np.ones((3, 3)) + np.eye(3)) / 12.0
    if variant == "reduced":
        t1, t2 = facet_frame(facet_pts, normal)
        T = np.stack([t1, t2])  # (2, 3)
        # tangential P1 fields: coordinates (vertex, tangent dir); Gram = mass (x) I2
        R = rigid_facet_fields(facet_pts, normal)  # (3, 3v, 3)
        Rc = np.einsum("mvd,td->mvt", R, T).reshape(3, 6)
        G = np.kron(mass, np.eye(2))
        comp, _ = null_space(Rc @ G, tol=1e-12)  # (6, 3)
        return np.einsum("vtk,td->kvd", comp.reshape(3, 2, -1), T)
    if variant == "reduced2":
        K = np.zeros((6, 3, 3))
        for c in range(3):
            K[2 * c, 0, c], K[2 * c, 1, c] = 1.0, -1.0
            K[2 * c + 1, 0, c], K[2 * c + 1, 2, c] = 1.0, -1.0
        return K
    return np.zeros((0, 3, 3))


# ---------------------------------------------------------------------------
# stress bases

@dataclass
class FacetInfo:
    """Global data of the macro facets of one cell, indexed by local facet (opposite vertex)."""
    global_ids: np.ndarray    # (4,)
    normals: np.ndarray       # (4, 3) global unit normals
    measures: np.ndarray      # (4,)
    vertex_order: np.ndarray  # (4, 3) local vertex indices in sorted-global order


def local_facet_info(mesh, cell):
    """FacetInfo for ``cell`` of a 3D mesh using its global facet table."""
    ft = mesh.facets
    gids = ft.cell_facets[cell]
    cverts = list(mesh.cells[cell])
    order = np.array([[cverts.index(v) for v in ft.vertices[g]] for g in gids])
    return FacetInfo(gids, ft.normals[gids], ft.measures[gids], order)


def default_facet_info(P):
    """Outward normals and increasing local vertex order (for standalone elements)."""
    P = np.asarray(P, dtype=float)
    normals, measures, order = [], [], []
    for i in range(4):
        idx = [j for j in range(4) if j != i]
        pts = P[idx]
        n = np.cross(pts[1] - pts[0], pts[2] - pts[0])
        area = 0.5 * np.linalg.norm(n)
        n = n / np.linalg.norm(n)
        if np.dot(n, pts[0] - P[i]) < 0:
            n = -n
        normals.append(n)
        measures.append(area)
        order.append(idx)
    return FacetInfo(np.arange(4), np.array(normals), np.array(measures), np.array(order))


@dataclass
class LocalBasis:
    """Nodal basis of a local stress space, dual to the variant's DOFs.

    ``values[k, slot, :, :, m]`` is shape function ``m`` at node ``slot`` of
    subcell ``k`` (full 3x3 symmetric matrices); ``div[k, :, m]`` its constant
    divergence on subcell ``k``.
    """
    variant: str
    cell: int
    raw: np.ndarray          # (96, nshape)
    values: np.ndarray       # (4, 4, 3, 3, nshape)
    div: np.ndarray          # (4, 3, nshape)
    dof_kinds: list
    dof_condition: float

    @property
    def nshape(self):
        return self.raw.shape[1]


def _dof_layout(variant, info):
    """Local DOF order: facets by global id, then functionals; cell means last."""
    nk = {"full": 9, "reduced": 6, "reduced2": 3}[variant]
    facet_order = np.argsort(info.global_ids, kind="stable")
    kinds = []
    for i in facet_order:
        for j in range(nk):
            kinds.append(("facet", int(info.global_ids[i]), j))
    if variant == "full":
        kinds += [("cell", -1, j) for j in range(6)]
    return facet_order, kinds


def dof_rows(raw, variant, P, info):
    """DOF functionals of ``variant`` as rows on the raw coefficient vector."""
    facet_order, kinds = _dof_layout(variant, info)
    rows = []
    for i in facet_order:
        pts = P[info.vertex_order[i]]
        K = facet_kappas(variant, pts, info.normals[i])
        # reorder nodal vectors from sorted-global order to increasing local index
        loc = np.argsort(info.vertex_order[i])
        rows.append(raw.facet_moment_rows(i, info.normals[i], K[:, loc, :], info.measures[i]))
    if variant == "full":
        rows.append(raw.cell_integral_rows())
    return np.vstack(rows), kinds


def constraint_rows(raw, variant, P, info, ops=None):
    rows = [raw.continuity_rows()]
    if variant in ("reduced", "reduced2"):
        if ops is None:
            ops = rigid_ops(raw.g)
        D = raw.divergence_rows()  # (4, 3, size)
        vol = raw.g.subvol.astype(float)
        # (div omega, w)_T for w spanning (P_T R)^perp
        comp = ops.complement.reshape(4, 3, -1)
        rows.append(np.einsum("k,krs,krm->ms", vol, D, comp))
        for i in range(4):
            pts = P[info.vertex_order[i]]
            K = _facet_constraint_kappas(variant, pts, info.normals[i])
            loc = np.argsort(info.vertex_order[i])
            rows.append(raw.facet_moment_rows(i, info.normals[i], K[:, loc, :], info.measures[i]))
    return np.vstack(rows)


def build_stress_basis(P, variant="full", info=None, split_point=None, cell=-1):
    """Nodal basis of Sigma_h(T) (``full``), Sigma_h^R(T) (``reduced``) or the 12-dim ``reduced2`` space."""
    if variant not in NSHAPE:
        raise ValueError(f"unknown variant {variant!r}")
    P = np.asarray(P, dtype=float)
    geom = SplitGeometry(P, split_point)
    if np.any(geom.subvol <= 0):
        raise LocalSpaceError("degenerate macro cell or exterior split point")
    if info is None:
        info = default_facet_info(P)
    # rank decisions on the diameter-normalized element
    diam = max(np.linalg.norm(P[a] - P[b]) for a, b in itertools.combinations(range(4), 2))
    Pn = (P - P[0]) / diam
    zn = (geom.z - P[0]) / diam
    gn = SplitGeometry(Pn, zn)
    rn = RawSpace(gn)
    info_n = FacetInfo(info.global_ids, info.normals, info.measures / diam ** 2, info.vertex_order)
    C = constraint_rows(rn, variant, Pn, info_n)
    Z, s = null_space(C)
    expected = NSHAPE[variant]
    if Z.shape[1] != expected:
        raise LocalSpaceError(
            f"{variant}: null space dimension {Z.shape[1]} != {expected}; "
            f"singular values near threshold: {s[-expected - 3:]}")
    raw = RawSpace(geom)
    D, kinds = dof_rows(raw, variant, P, info)
    DZ = D @ Z
    cond = np.linalg.cond(DZ)
    if cond > COND_WARN:
        warnings.warn(f"{variant} DOF matrix condition number {cond:.2e}")
    Phi = Z @ np.linalg.inv(DZ)
    return _package(variant, cell, Phi, raw, kinds, cond)


def _package(variant, cell, Phi, raw, kinds, cond):
    nshape = Phi.shape[1]
    basis = raw.basis.astype(float)
    coeff = Phi.reshape(4, 4, raw.ncomp, nshape)
    values = np.einsum("kaCm,Cij->kaijm", coeff, basis)
    Dr = raw.divergence_rows().astype(float)  # (4, 3, 96)
    div = np.einsum("krs,sm->krm", Dr, Phi)
    return LocalBasis(variant, cell, Phi, values, div, kinds, cond)


def dof_functionals(P, variant, field, info=None, facet_degree=5, cell_degree=6):
    """Apply the DOFs of ``variant`` to a smooth symmetric-matrix field ``field(x) -> (npts, 3, 3)``."""
    P = np.asarray(P, dtype=float)
    if info is None:
        info = default_facet_info(P)
    facet_order, _ = _dof_layout(variant, info)
    out = []
    for i in facet_order:
        pts = P[info.vertex_order[i]]
        out.append(facet_dofs(variant, pts, info.normals[i], info.measures[i], field, facet_degree))
    if variant == "full":
        geom = SplitGeometry(P)
        out.append(cell_mean_dofs(geom, field, cell_degree))
    return np.concatenate(out)


def facet_dofs(variant, pts, normal, measure, field, degree=5):
    rule = simplex_rule(2, degree)
    x = rule.points @ pts
    sn = np.einsum("qij,j->qi", field(x), normal)
    K = facet_kappas(variant, pts, normal)
    kap = np.einsum("qv,kvi->qki", rule.points, K)
    return rule.integrate(np.einsum("qi,qki->qk", sn, kap), measure)


_UPPER = [(i, j) for i in range(3) for j in range(i, 3)]


def cell_mean_dofs(geom, field, degree=6):
    rule = simplex_rule(3, degree)
    tot = np.zeros((3, 3))
    for k in range(4):
        x = rule.points @ geom.sub[k].astype(float)
        tot += rule.integrate(field(x), float(geom.subvol[k]))
    return np.array([tot[i, j] for i, j in _UPPER])


# ---------------------------------------------------------------------------
# quadratic vector fields for postprocessing

_P2_PAIRS = [(a, b) for a in range(4) for b in range(a, 4)]


def p2_bernstein(lam, glam):
    """Bernstein P2 basis on a tetrahedron.

    ``lam`` (npts, 4) barycentric values, ``glam`` (4, 3) their gradients.
    Returns values (npts, 10) and gradients (npts, 10, 3).
    """
    vals, grads = [], []
    for a, b in _P2_PAIRS:
        if a == b:
            vals.append(lam[:, a] ** 2)
            grads.append(2 * lam[:, a, None] * glam[a])
        else:
            vals.append(2 * lam[:, a] * lam[:, b])
            grads.append(2 * (lam[:, a, None] * glam[b] + lam[:, b, None] * glam[a]))
    return np.stack(vals, axis=1), np.stack(grads, axis=1)


def sh_basis(P):
    """Basis of S_h(T) (30 x 24, in vector Bernstein coordinates ``(scalar fn, comp)``) and the rigid moment matrix."""
    P = np.asarray(P, dtype=float)
    geom = SplitGeometry(P)
    rule = simplex_rule(3, 4)
    x = rule.physical_points(P)
    Minv = np.linalg.inv(np.column_stack([P, np.ones(4)]))
    lam = np.column_stack([x, np.ones(len(x))]) @ Minv
    phi, _ = p2_bernstein(lam, Minv[:3].T)
    R = rigid_nodal(x, P.mean(axis=0))  # (6, q, 3)
    mom = rule.integrate(np.einsum("qf,mqc->qmfc", phi, R), float(geom.volume)).reshape(6, 30)
    S, _ = null_space(mom, tol=1e-12)
    if S.shape[1] != 24:
        raise LocalSpaceError(f"dim S_h(T) = {S.shape[1]}, expected 24")
    return S, mom
