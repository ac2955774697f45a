"""Element-local quadratic displacement reconstruction from a mixed solution.

On each macro cell the quadratic field ``u*`` solves

    (eps(u*), eps(v))_T = (A sigma_h, eps(v))_T   for v in S_h(T),
    (u*, w)_T           = (P u_h, w)_T            for w in P_T R(T),

where S_h(T) is the L2-orthogonal complement of rigid motions in [P2(T)]^3
and P is the projection onto subcell constants.
"""
from dataclasses import dataclass

import numpy as np

from .assembly import p2_values, subcell_quadrature
from .local_spaces import rigid_nodal

CHUNK = 256
_P2_PAIRS = [(a, b) for a in range(4) for b in range(a, 4)]


class PostprocessError(RuntimeError):
    pass


@dataclass
class PostprocessedField:
    """Per macro cell, 30 Bernstein coefficients ``(function, component)`` of u*."""
    complex: object
    coeffs: np.ndarray   # (nc, 30)
    diagnostics: dict


def _macro_grads(P):
    M = np.concatenate([P, np.ones(P.shape[:2] + (1,))], axis=2)
    return np.linalg.inv(M)[:, :3, :].transpose(0, 2, 1)  # (nc, 4 vertices, 3)


def p2_gradients(lam, glam):
    """Gradients (nc, 4, q, 10, 3) of Bernstein P2 functions; ``lam`` (nc, 4, q, 4), ``glam`` (nc, 4, 3)."""
    g = []
    for a, b in _P2_PAIRS:
        if a == b:
            g.append(2 * lam[..., a, None] * glam[:, None, None, a])
        else:
            g.append(2 * (lam[..., a, None] * glam[:, None, None, b] + lam[..., b, None] * glam[:, None, None, a]))
    return np.stack(g, axis=-2)


def postprocess_displacement(solution, degree=4, allow_p0=False):
    """Quadratic reconstruction u* per macro cell (jkm by default, p0 on request)."""
    if solution.method not in ("jkm", "p0") or (solution.method == "p0" and not allow_p0):
        raise ValueError(f"postprocessing is defined for jkm (p0 with allow_p0); got {solution.method!r}")
    cx = solution.complex
    nc = cx.parent.ncells
    mat = solution.material
    S_nodal = solution.stress_nodal()            # (nc, 4, 4, 3, 3)
    AS_nodal = mat.apply(S_nodal)
    Pu = solution.disp_means().reshape(nc, 12)   # W_h coordinates of P u_h
    PR = np.array([o.PR for o in solution.table.ops])  # (nc, 12, 6)
    coeffs = np.empty((nc, 30))
    worst_res, worst_rigid, worst_cond = 0.0, 0.0, 0.0
    for lo in range(0, nc, CHUNK):
        sl = slice(lo, min(lo + CHUNK, nc))
        c, r, rig, cond = _solve_chunk(cx, sl, AS_nodal[sl], Pu[sl], PR[sl], degree)
        coeffs[sl] = c
        worst_res = max(worst_res, r)
        worst_rigid = max(worst_rigid, rig)
        worst_cond = max(worst_cond, cond)
    diag = {"residual": worst_res, "rigid_defect": worst_rigid, "max_condition": worst_cond}
    return PostprocessedField(cx, coeffs, diag)


def _solve_chunk(cx, sl, AS_nodal, Pu, PR, degree):
    from .mesh import AlfeldComplex, SimplexMesh
    parent = cx.parent
    sub = AlfeldComplex(SimplexMesh(parent.vertices, parent.cells[sl]), cx.split_points[sl])
    quad = subcell_quadrature(sub, degree)
    m = len(Pu)
    P = parent.cell_points()[sl]
    glam = _macro_grads(P)
    phi = p2_values(quad)                       # (m, 4, q, 10)
    dphi = p2_gradients(quad.macro_bary, glam)  # (m, 4, q, 10, 3)
    W = quad.weights
    # eps(phi_f e_c) : eps(phi_g e_d) = 1/2 (delta_cd grad f . grad g + d_d f d_c g)
    GG = np.einsum("ckq,ckqfi,ckqgi->cfg", W, dphi, dphi)
    GX = np.einsum("ckq,ckqfi,ckqgj->cfgij", W, dphi, dphi)
    E = 0.5 * (np.einsum("cfg,de->cfdge", GG, np.eye(3)) + np.einsum("cfgde->cfegd", GX))
    E = E.reshape(m, 30, 30)
    # (A sigma_h, eps(phi_f e_c)) = sum_j (A sigma)_cj d_j phi_f
    AS = np.einsum("qs,cksij->ckqij", quad.mu, AS_nodal)
    r1 = np.einsum("ckq,ckqij,ckqfj->cfi", W, AS, dphi).reshape(m, 30)
    # rigid moments of the P2 basis and the complement S_h
    centers = P.mean(axis=1)
    R = rigid_nodal(quad.points.reshape(-1, 3), np.zeros(3)).reshape(6, m, 4, -1, 3)
    R = R - np.concatenate([np.zeros((3, m, 1, 1, 3)),
                            _rot_shift(centers)[:, :, None, None, :]], axis=0)
    mom = np.einsum("ckq,ckqf,mckqd->cmfd", W, phi, R).reshape(m, 6, 30)
    _, sv, Vt = np.linalg.svd(mom)
    if np.any(sv[:, -1] <= 1e-12 * sv[:, 0]):
        raise PostprocessError("rigid moment matrix lost rank")
    S = np.swapaxes(Vt[:, 6:, :], 1, 2)        # (m, 30, 24)
    # (phi_f e_c, w) for w in P_T R: subcell integrals of the basis
    I = np.einsum("ckq,ckqf->ckf", W, phi)     # (m, 4, 10)
    Mw = np.zeros((m, 4, 3, 10, 3))
    for d in range(3):
        Mw[:, :, d, :, d] = I
    Mw = Mw.reshape(m, 12, 30)
    vol = np.repeat(cx.subvolumes[sl], 3, axis=1)
    A = np.concatenate([np.einsum("cfs,cfg->csg", S, E), np.einsum("cwr,cwf->crf", PR, Mw)], axis=1)
    b = np.concatenate([np.einsum("cfs,cf->cs", S, r1), np.einsum("cwr,cw,cw->cr", PR, vol, Pu)], axis=1)
    cond = np.linalg.cond(A)
    if np.any(~np.isfinite(cond)) or np.any(cond > 1e12):
        raise PostprocessError(f"singular local postprocessing system (condition {cond.max():.2e})")
    x = np.linalg.solve(A, b[..., None])[..., 0]
    res = np.linalg.norm(np.einsum("cij,cj->ci", A, x) - b, axis=1) / np.maximum(np.linalg.norm(b, axis=1), 1e-300)
    # rigid-moment consistency: (u*, w) = (P u_h, w) for w in P_T R
    lhs = np.einsum("cwr,cwf,cf->cr", PR, Mw, x)
    rhs = np.einsum("cwr,cw,cw->cr", PR, vol, Pu)
    rig = np.abs(lhs - rhs).max() / max(np.abs(rhs).max(), 1e-300)
    bad = np.linalg.norm(b, axis=1) == 0
    res[bad] = np.linalg.norm(x[bad], axis=1)
    return x, float(res.max()), float(rig), float(cond.max())


def _rot_shift(centers):
    """Constant parts e_c x center of the rotational rigid fields, (3, m, 3)."""
    out = np.zeros((3,) + centers.shape)
    for c in range(3):
        e = np.zeros(3)
        e[c] = 1.0
        out[c] = np.cross(e, centers)
    return out
