"""Global saddle-point systems and elementwise L2 projections.

The assembled block system is

    [[M, B^T, C^T],     [sigma]   [0    ]
     [B,  0,   0 ],  x  [u    ] = [(f,v)]
     [C,  0,   0 ]]     [rot  ]   [0    ]

with M the compliance-weighted stress mass, B_vi = (div phi_i, v) and C the
pairing with skew rotations (weak symmetry only).  With B used in both off
diagonal blocks the matrix is symmetric as assembled.
"""
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .local_spaces import component_basis
from .quadrature import simplex_rule

P1_MASS = (np.ones((4, 4)) + np.eye(4)) / 20.0  # int_K phi_a phi_b / |K|


@dataclass
class SubcellQuadrature:
    """Quadrature points on every subcell of an Alfeld complex."""
    mu: np.ndarray        # (q, 4) barycentric coordinates w.r.t. subcell slots
    points: np.ndarray    # (nc, 4, q, 3)
    weights: np.ndarray   # (nc, 4, q) physical weights
    macro_bary: np.ndarray  # (nc, 4, q, 4) macro barycentric coordinates


def split_barycentric(cx):
    """Macro barycentric coordinates of each split point, (nc, 4)."""
    P = cx.parent.cell_points()
    M = np.concatenate([P, np.ones(P.shape[:2] + (1,))], axis=2)  # (nc, 4, 4)
    rhs = np.concatenate([cx.split_points, np.ones((len(P), 1))], axis=1)
    return np.linalg.solve(np.swapaxes(M, 1, 2), rhs[..., None])[..., 0]


def slot_barycentric(cx):
    """(nc, 4 subcells, 4 slots, 4) macro barycentric coordinates of subcell nodes."""
    bz = split_barycentric(cx)
    nc = len(bz)
    out = np.broadcast_to(np.eye(4), (nc, 4, 4, 4)).copy()
    for k in range(4):
        out[:, k, k] = bz
    return out


def subcell_quadrature(cx, degree):
    rule = simplex_rule(3, degree)
    sub = cx.subcell_points()
    X = np.einsum("qs,cksd->ckqd", rule.points, sub)
    W = 6.0 * cx.subvolumes[:, :, None] * rule.weights[None, None, :]
    lam = np.einsum("qs,ckst->ckqt", rule.points, slot_barycentric(cx))
    return SubcellQuadrature(rule.points, X, W, lam)


# ---------------------------------------------------------------------------
# displacement spaces: means per subcell and pointwise values

def disp_mean_matrices(table):
    """Per cell (nc, 12, nd): W_h coordinates (subcell means) of each displacement basis field."""
    kind = table.disp_kind
    nc = table.complex.parent.ncells
    if kind == "V":
        return np.array([o.P for o in table.ops])
    if kind == "W":
        return np.broadcast_to(np.eye(12), (nc, 12, 12))
    if kind == "R":
        return np.array([o.PR for o in table.ops])
    if kind == "C":
        return np.broadcast_to(np.tile(np.eye(3), (4, 1)), (nc, 12, 3))
    raise ValueError(kind)


def disp_basis_values(kind, quad, centers):
    """Displacement basis values at quadrature points: (nc, 4, q, nd, 3)."""
    nc, _, nq, _ = quad.points.shape
    if kind == "V":
        lam = quad.macro_bary  # (nc, 4, q, 4)
        out = np.zeros((nc, 4, nq, 4, 3, 3))
        for c in range(3):
            out[..., c, c] = lam
        return out.reshape(nc, 4, nq, 12, 3)
    if kind == "W":
        out = np.zeros((nc, 4, nq, 4, 3, 3))
        for k in range(4):
            out[:, k, :, k] = np.eye(3)
        return out.reshape(nc, 4, nq, 12, 3)
    if kind == "R":
        d = quad.points - centers[:, None, None, :]
        out = np.zeros((nc, 4, nq, 6, 3))
        for c in range(3):
            e = np.zeros(3)
            e[c] = 1.0
            out[..., c, c] = 1.0
            out[..., 3 + c, :] = np.cross(e, d)
        return out
    if kind == "C":
        return np.broadcast_to(np.eye(3), (nc, 4, nq, 3, 3))
    raise ValueError(kind)


def load_vector(table, f, degree=6, quad=None):
    """Element load vectors (nc, nd) of (f, v) for the table's displacement space."""
    cx = table.complex
    quad = quad or subcell_quadrature(cx, degree)
    F = f(quad.points.reshape(-1, 3)).reshape(quad.points.shape)
    centers = cx.parent.cell_points().mean(axis=1)
    phi = disp_basis_values(table.disp_kind, quad, centers)
    return np.einsum("ckq,ckqi,ckqmi->cm", quad.weights, F, phi)


# ---------------------------------------------------------------------------
# local matrices

def _raw_mass(subvol, Q):
    """96x96 mass on raw nodal coefficients of one split cell."""
    blocks = [v * np.kron(P1_MASS, Q) for v in subvol]
    out = np.zeros((96, 96))
    for k, blk in enumerate(blocks):
        out[24 * k:24 * (k + 1), 24 * k:24 * (k + 1)] = blk
    return out


def weaksym_compliance(material, alpha=1.0):
    """9x9 Gram of the extended compliance on 3x3 matrices (row-major components).

    The symmetric part uses the material; the skew part is scaled by
    ``alpha / (2 mu)`` (for general materials the largest eigenvalue of the
    compliance on symmetric matrices replaces ``1 / (2 mu)``).
    """
    E = component_basis(3, "matrix").astype(float)
    S = 0.5 * (E + np.swapaxes(E, 1, 2))
    K = 0.5 * (E - np.swapaxes(E, 1, 2))
    if material.kind == "isotropic":
        skew_scale = 1.0 / (2.0 * material.mu)
    else:
        skew_scale = float(np.linalg.eigvalsh(material.gram()).max())
    AE = material.apply(S) + alpha * skew_scale * K
    return np.einsum("aij,bij->ab", AE, E)


def _coo(rows, cols, vals, n):
    A = sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n))
    return A.tocsr()


def _blocks(idx_r, idx_c, Ablk):
    r = np.repeat(idx_r[:, :, None], idx_c.shape[1], axis=2)
    c = np.repeat(idx_c[:, None, :], idx_r.shape[1], axis=1)
    return r.ravel(), c.ravel(), Ablk.ravel()


def local_mass_matrices(table, material):
    """Stress mass matrices per macro cell, (nc, nshape, nshape)."""
    cx = table.complex
    Q = material.gram()
    memo = {}
    out = []
    for c, b in enumerate(table.bases):
        key = (id(b.raw), cx.subvolumes[c].round(15).tobytes())
        M = memo.get(key)
        if M is None:
            M = b.raw.T @ _raw_mass(cx.subvolumes[c], Q) @ b.raw
            M = 0.5 * (M + M.T)
            memo[key] = M
        out.append(M)
    return np.array(out)


def local_div_matrices(table):
    """Div coupling (nc, nd, nshape) per macro cell: (div phi_i, v_m)."""
    cx = table.complex
    Wd = disp_mean_matrices(table)  # (nc, 12, nd)
    div = np.array([b.div.reshape(12, -1) for b in table.bases])  # (nc, 12, n)
    vol = np.repeat(cx.subvolumes, 3, axis=1)  # (nc, 12)
    return np.einsum("cwm,cw,cwi->cmi", Wd, vol, div)


def assemble(method, table, material, f, alpha=1.0, f_degree=6):
    """Sparse symmetric saddle-point matrix and right-hand side."""
    if table.method != method:
        raise ValueError(f"DOF table was built for {table.method!r}, not {method!r}")
    if method == "weaksym":
        return _assemble_weaksym(table, material, f, alpha, f_degree)
    n = table.size
    M = local_mass_matrices(table, material)
    B = local_div_matrices(table)
    S, U = table.cell_stress, table.cell_disp
    rows, cols, vals = [], [], []
    for r, c, v in (_blocks(S, S, M), _blocks(U, S, B), _blocks(S, U, np.swapaxes(B, 1, 2))):
        rows.append(r)
        cols.append(c)
        vals.append(v)
    A = _coo(rows, cols, vals, n)
    rhs = np.zeros(n)
    if f is not None:
        np.add.at(rhs, U.ravel(), load_vector(table, f, f_degree).ravel())
    return A, rhs


def _assemble_weaksym(table, material, f, alpha, f_degree):
    cx = table.complex
    n = table.size
    Qbar = weaksym_compliance(material, alpha)
    vol = cx.subvolumes.ravel()
    nsub = len(table.bases)
    M = np.empty((nsub, 36, 36))
    D = np.empty((nsub, 3, 36))
    C = np.empty((nsub, 12, 36))
    Kb = component_basis(3, "skw").astype(float).reshape(3, 9)
    memo = {}
    for s, b in enumerate(table.bases):
        key = (id(b), round(vol[s], 15))
        if key not in memo:
            V = b.values.reshape(4, 9, 36)
            Mi = vol[s] * np.einsum("ab,aim,ij,bjn->mn", P1_MASS, V, Qbar, V, optimize=True)
            # (tau, lambda_a E_t) for rotation coordinates (slot a, skew t)
            Ci = vol[s] * np.einsum("ab,bim,ti->atm", P1_MASS, V, Kb, optimize=True).reshape(12, 36)
            memo[key] = (0.5 * (Mi + Mi.T), Ci)
        M[s], C[s] = memo[key]
        D[s] = b.div
    # displacement coupling through subcell means
    Wd = disp_mean_matrices(table)  # (nc, 12, nd)
    Dc = D.reshape(-1, 4, 3, 36)
    volc = cx.subvolumes
    nc = cx.parent.ncells
    S = table.cell_stress.reshape(nc, 4, 36)
    U = table.cell_disp
    rows, cols, vals = [], [], []

    def add(r, c, v):
        rows.append(r)
        cols.append(c)
        vals.append(v)
    add(*_blocks(table.cell_stress, table.cell_stress, M))
    add(*_blocks(table.cell_rot, table.cell_stress, C))
    add(*_blocks(table.cell_stress, table.cell_rot, np.swapaxes(C, 1, 2)))
    for k in range(4):
        Bk = np.einsum("cwm,c,cwi->cmi", Wd[:, 3 * k:3 * k + 3], volc[:, k], Dc[:, k])
        add(*_blocks(U, S[:, k], Bk))
        add(*_blocks(S[:, k], U, np.swapaxes(Bk, 1, 2)))
    A = _coo(rows, cols, vals, n)
    rhs = np.zeros(n)
    if f is not None:
        np.add.at(rhs, U.ravel(), load_vector(table, f, f_degree).ravel())
    return A, rhs


# ---------------------------------------------------------------------------
# elementwise L2 projections

def elementwise_l2_projection(target, cx, field, degree=6, quad=None):
    """L2 projection of ``field(x) -> (npts, 3)`` onto V_h, W_h, R, constants or P2 per macro cell.

    Returns coefficients shaped (nc, nd) in the layout used by the DOF tables
    (``P2`` uses Bernstein coordinates ``(function, component)``).
    """
    quad = quad or subcell_quadrature(cx, degree)
    F = field(quad.points.reshape(-1, 3)).reshape(quad.points.shape)
    nc = cx.parent.ncells
    centers = cx.parent.cell_points().mean(axis=1)
    if target == "P2":
        phi = p2_values(quad)  # (nc, 4, q, 10)
        G = np.einsum("ckq,ckqa,ckqb->cab", quad.weights, phi, phi)
        rhs = np.einsum("ckq,ckqa,ckqi->cai", quad.weights, phi, F)
        return np.linalg.solve(G, rhs).reshape(nc, 30)
    phi = disp_basis_values(target, quad, centers)
    G = np.einsum("ckq,ckqmi,ckqni->cmn", quad.weights, phi, phi)
    rhs = np.einsum("ckq,ckqmi,ckqi->cm", quad.weights, phi, F)
    return np.linalg.solve(G, rhs[..., None])[..., 0]


_P2_PAIRS = [(a, b) for a in range(4) for b in range(a, 4)]


def p2_values(quad):
    lam = quad.macro_bary
    vals = [lam[..., a] ** 2 if a == b else 2 * lam[..., a] * lam[..., b] for a, b in _P2_PAIRS]
    return np.stack(vals, axis=-1)


def disp_values(kind, cx, coeffs, quad):
    """Values (nc, 4, q, 3) of a displacement coefficient array (nc, nd)."""
    centers = cx.parent.cell_points().mean(axis=1)
    if kind == "P2":
        phi = p2_values(quad)
        return np.einsum("ckqa,cai->ckqi", phi, coeffs.reshape(-1, 10, 3))
    phi = disp_basis_values(kind, quad, centers)
    return np.einsum("ckqmi,cm->ckqi", phi, coeffs)
