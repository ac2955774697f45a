"""Machine checks of the structural properties of the stress elements.

Dimension and kernel statements are certified with exact rational
arithmetic on the reference simplex (split at its barycenter); random-geometry
trials and the commuting / inf-sup checks use floating point.
"""
import itertools
import time
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
import scipy.linalg as sla
from sympy import QQ
from sympy.polys.matrices import DomainMatrix

from . import tensor_calculus as tc
from .assembly import (_blocks, _coo, disp_basis_values, local_div_matrices, local_mass_matrices,
                       subcell_quadrature)
from .dof_numbering import build_dof_map, canonical_interpolant, stress_divergence
from .local_spaces import (NSHAPE, LocalSpaceError, RawSpace, SplitGeometry, build_stress_basis,
                           component_basis, default_facet_info, null_space)
from .materials import ComplianceTensor
from .mesh import alfeld_split, generate_cube_mesh

DOF_SV_MIN = 1e-8
BGG_TOL = 1e-12
TRACE_TOL = 1e-10
COMMUTE_TOL = 1e-9
INFSUP_MIN = 1e-3
INFSUP_DROP = 0.2
MIN_QUALITY = 0.1


@dataclass
class CheckResult:
    name: str
    status: str
    value: float
    reference: str
    details: dict = field(default_factory=dict)

    @property
    def passed(self):
        return self.status == "PASS"


@dataclass
class VerificationReport:
    seed: int
    checks: list = field(default_factory=list)

    @property
    def status(self):
        return "PASS" if self.checks and all(c.passed for c in self.checks) else "FAIL"

    def add(self, check):
        self.checks.append(check)
        return check

    def summary_lines(self):
        """One ``name status value`` line per check (machine-readable)."""
        return [f"{c.name} {c.status} {c.value:.6e}" for c in self.checks]

    def text(self):
        w = max((len(c.name) for c in self.checks), default=4)
        lines = [f"verification report (seed {self.seed})"]
        for c in self.checks:
            extra = ", ".join(f"{k}={_short(v)}" for k, v in c.details.items())
            lines.append(f"  {c.name:<{w}}  {c.status}  {c.value:.4e}  [{c.reference}]  {extra}")
        lines.append(f"overall: {self.status}")
        return "\n".join(lines)


def _short(v):
    if isinstance(v, float):
        return f"{v:.3e}"
    return str(v)


def _status(ok):
    return "PASS" if ok else "FAIL"


# ---------------------------------------------------------------------------
# exact linear algebra

def _to_qq(A):
    A = np.asarray(A, dtype=object)
    rows = [[QQ(int(Fraction(x).numerator), int(Fraction(x).denominator)) for x in r] for r in A]
    return DomainMatrix(rows, A.shape, QQ)


def exact_rank(A):
    A = np.asarray(A, dtype=object)
    if A.size == 0:
        return 0
    return int(_to_qq(A).rank())


def exact_null_space(A):
    """Rational basis (ncols, k) of the null space of ``A``."""
    A = np.asarray(A, dtype=object)
    ns = _to_qq(A).nullspace().to_Matrix()
    out = np.empty((ns.rows, ns.cols), dtype=object)
    for i in range(ns.rows):
        for j in range(ns.cols):
            v = ns[i, j]
            out[i, j] = Fraction(int(v.p), int(v.q))
    return out.T


def reference_vertices(ndim):
    P = np.empty((ndim + 1, ndim), dtype=object)
    P[:] = Fraction(0)
    for i in range(ndim):
        P[i + 1, i] = Fraction(1)
    return P


def _cross(a, b):
    return np.array([a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]],
                    dtype=object)


# ---------------------------------------------------------------------------
# exact local spaces on the reference tetrahedron

def _exact_nodal_trace(raw, i, normal):
    """Rows (3 vertices, 3, size) for the values of ``omega n`` at the vertices of macro facet ``i``."""
    out = []
    for j in range(4):
        if j == i:
            continue
        R = raw.zeros(3)
        ij = raw.index(i, j, 0)
        R[:, ij:ij + raw.ncomp] += raw._trace_rows(i, j, normal)
        out.append(R)
    return np.array(out, dtype=object)


def _annihilator(V):
    """Rows spanning the left annihilator of the columns of ``V`` (exact)."""
    return exact_null_space(np.asarray(V, dtype=object).T).T


def _exact_rigid_means(geom):
    """P_T R in W_h coordinates (12, 6): rigid fields at subcell barycenters."""
    xb = geom.sub.sum(axis=1) / 4
    c = geom.P.sum(axis=0) / 4
    out = np.empty((4, 3, 6), dtype=object)
    out[:] = Fraction(0)
    for k in range(4):
        for m in range(3):
            out[k, m, m] = Fraction(1)
            e = np.array([Fraction(int(m == q)) for q in range(3)], dtype=object)
            out[k, :, 3 + m] = _cross(e, xb[k] - c)
    return out.reshape(12, 6)


def _facet_data(geom, i):
    pts = geom.P[[j for j in range(4) if j != i]]
    n = geom.grads[i, i]  # rational normal (length irrelevant for ranks)
    t1 = pts[1] - pts[0]
    t2 = _cross(n, t1)
    return pts, n, t1, t2


def exact_constraints(geom, variant):
    raw = RawSpace(geom)
    rows = [raw.continuity_rows()]
    if variant in ("reduced", "reduced2"):
        D = raw.divergence_rows().reshape(12, -1)
        rows.append(_annihilator(_exact_rigid_means(geom)) @ D)
        for i in range(4):
            pts, n, t1, t2 = _facet_data(geom, i)
            T = _exact_nodal_trace(raw, i, n)  # (3, 3, size)
            if variant == "reduced2":
                rows.append((T[0] - T[1]))
                rows.append((T[0] - T[2]))
            else:
                # tangential nodal values in the (t1, t2) frame must be a facet rigid motion
                Tt = np.array([[t @ T[v] for t in (t1, t2)] for v in range(3)], dtype=object)  # (3,2,size)
                c = pts.sum(axis=0) / 3
                R = []
                for vec in (t1, t2, None):
                    vals = [vec if vec is not None else _cross(n, pts[v] - c) for v in range(3)]
                    R.append([[t @ vals[v] for t in (t1, t2)] for v in range(3)])
                R = np.array(R, dtype=object).reshape(3, 6).T  # (6, 3)
                rows.append(_annihilator(R) @ Tt.reshape(6, -1))
    return raw, np.vstack(rows)


def exact_dofs(raw, variant):
    geom = raw.g
    rows = []
    for i in range(4):
        pts, n, t1, t2 = _facet_data(geom, i)
        if variant == "full":
            K = np.zeros((9, 3, 3), dtype=object)
            for v in range(3):
                for c in range(3):
                    K[3 * v + c, v, c] = 1
        elif variant == "reduced":
            K = np.zeros((6, 3, 3), dtype=object)
            c = pts.sum(axis=0) / 3
            for v in range(3):
                K[v, v] = n
                K[3, v], K[4, v] = t1, t2
                K[5, v] = _cross(n, pts[v] - c)
        else:
            K = np.zeros((3, 3, 3), dtype=object)
            for c in range(3):
                K[c, :, c] = 1
        rows.append(raw.facet_moment_rows(i, n, K, Fraction(1)))
    if variant == "full":
        rows.append(raw.cell_integral_rows())
    return np.vstack(rows)


def exact_local_dimension(variant, ndim=3):
    """(dim, rank of the DOF matrix on the space) on the reference tetrahedron."""
    geom = SplitGeometry(reference_vertices(ndim))
    raw, C = exact_constraints(geom, variant)
    Z = exact_null_space(C)
    D = exact_dofs(raw, variant)
    return Z.shape[1], exact_rank(D @ Z)


def _quality(P):
    vol = abs(np.linalg.det(P[1:] - P[0])) / 6
    lmax = max(np.linalg.norm(P[a] - P[b]) for a, b in itertools.combinations(range(4), 2))
    return 6 * np.sqrt(2) * vol / lmax ** 3


def random_tetrahedra(ntrials, rng, min_quality=MIN_QUALITY):
    out = []
    while len(out) < ntrials:
        P = rng.uniform(-1.0, 1.0, (4, 3))
        q = _quality(P)
        if q < min_quality:
            continue
        if np.linalg.det(P[1:] - P[0]) < 0:
            P[[2, 3]] = P[[3, 2]]
        out.append(P)
    return out


def check_unisolvency(variant, ntrials=100, seed=0):
    """Exact dimension and DOF rank on the reference tet, then floating DOF matrices on random tets."""
    expected = NSHAPE[variant]
    dim, rank = exact_local_dimension(variant)
    rng = np.random.default_rng(seed)
    worst, failures = np.inf, 0
    for P in random_tetrahedra(ntrials, rng):
        try:
            b = build_stress_basis(P, variant, default_facet_info(P))
        except LocalSpaceError:
            failures += 1
            continue
        worst = min(worst, 1.0 / b.dof_condition)
    ok = dim == expected and rank == expected and failures == 0 and worst > DOF_SV_MIN
    return CheckResult(f"unisolvency_{variant}", _status(ok), float(worst),
                       f"dim {expected}, unisolvent DOFs",
                       {"dim": dim, "dof_rank": rank, "trials": ntrials, "failures": failures})


# ---------------------------------------------------------------------------
# N-dimensional kernel and dimension counts

def kernel_matrix(ndim):
    geom = SplitGeometry(reference_vertices(ndim))
    raw = RawSpace(geom)
    D = raw.divergence_rows().reshape(-1, raw.size)
    return raw, np.vstack([raw.continuity_rows(), raw.boundary_trace_rows(), D])


def check_kernel_trivial(ndim, float_check=None):
    """Divergence-free, trace-free members of the local space vanish (exact rank)."""
    raw, A = kernel_matrix(ndim)
    nullity = raw.size - exact_rank(A)
    details = {"raw": raw.size, "nullity": nullity}
    ok = nullity == 0
    if float_check is None:
        float_check = ndim <= 3
    if float_check:
        Z, _ = null_space(A.astype(float))
        details["float_nullity"] = Z.shape[1]
        ok = ok and Z.shape[1] == nullity
    return CheckResult(f"kernel_trivial_N{ndim}", _status(ok), float(nullity),
                       "trace-free divergence-free kernel is trivial", details)


def dimension_formula(ndim):
    return (2 * ndim + 1) * ndim * (ndim + 1) // 2


def check_dimension_formula(ndim):
    geom = SplitGeometry(reference_vertices(ndim))
    sym = RawSpace(geom, "sym")
    dim = sym.size - exact_rank(sym.continuity_rows())
    mat = RawSpace(geom, "matrix")
    dim_bdm = mat.size - exact_rank(mat.continuity_rows())
    dim_skw = len(component_basis(ndim, "skw")) * (ndim + 1) ** 2
    want = dimension_formula(ndim)
    want_bdm = (ndim + 2) * (ndim + 1) * ndim ** 2 // 2
    want_skw = ndim * (ndim - 1) * (ndim + 1) ** 2 // 2
    ok = dim == want and dim_bdm == want_bdm and dim_skw == want_skw
    return CheckResult(f"dimension_N{ndim}", _status(ok), float(dim), "(N+1/2)N(N+1)",
                       {"expected": want, "bdm1": dim_bdm, "bdm1_expected": want_bdm,
                        "p1_skew": dim_skw, "p1_skew_expected": want_skw})


# ---------------------------------------------------------------------------
# algebraic identities

def _rel_coeff_gap(a, b):
    scale = max(a.max_abs_coeff(), b.max_abs_coeff(), 1.0)
    return a.coeff_distance(b) / scale


def check_bgg(ndim, ntrials=200, seed=0, degree=3):
    """Coefficientwise polynomial identities of the elasticity complex in dimension ``ndim``."""
    rng = np.random.default_rng(seed)
    worst = {}
    if ndim == 3:
        e = 0.0
        for _ in range(ntrials):
            u = tc.PolyField.random(3, (3, 3), degree, rng)
            lhs = tc.div(tc.field_xi(u))
            rhs = 2 * tc.field_vskw(tc.curl(u))
            e = max(e, _rel_coeff_gap(lhs, rhs))
        worst["div_xi"] = e
    e1 = e2 = e3 = e4 = 0.0
    for _ in range(ntrials):
        eta = tc.random_skew_field(ndim, degree, rng, "K")
        e1 = max(e1, tc.div(tc.dd_operator(eta)).max_abs_coeff() / max(eta.max_abs_coeff(), 1.0))
        om = tc.random_skew_field(ndim, degree, rng, "VK")
        e2 = max(e2, tc.div(tc.dd_operator(om)).max_abs_coeff() / max(om.max_abs_coeff(), 1.0))
        lhs = tc.div(tc.field_theta(om))
        rhs = 2 * tc.field_skw(tc.dd_operator(om))
        e3 = max(e3, _rel_coeff_gap(lhs, rhs))
        a = tc.from_e_coords(rng.normal(size=(ndim,) * 3))
        e4 = max(e4, float(np.abs(tc.theta_inv(tc.theta(a)) - a).max() / np.abs(a).max()))
    worst.update({"div_d_K": e1, "div_d_VK": e2, "div_theta": e3, "theta_round_trip": e4})
    value = max(worst.values())
    trace = trace_gamma_defect(ndim, rng, degree)
    ok = value <= BGG_TOL and trace <= TRACE_TOL
    worst["trace_gamma"] = trace
    return CheckResult(f"bgg_N{ndim}", _status(ok), float(max(value, trace)),
                       "complex identities and trace identity", worst)


def trace_gamma_defect(ndim, rng, degree=3, npoints=20):
    """max |d(eta) . n| on a hyperplane where the skew field eta vanishes."""
    n = rng.normal(size=ndim)
    n /= np.linalg.norm(n)
    c = rng.uniform(-0.5, 0.5)
    dist = tc.PolyField(ndim, (), {tuple([0] * ndim): np.array(-c)})
    for i in range(ndim):
        dist = dist + n[i] * tc.PolyField.coordinate(ndim, i)
    rho = tc.random_skew_field(ndim, degree - 1, rng, "K")
    eta = rho.times_scalar_poly(dist)
    d = tc.dd_operator(eta)
    # points on the hyperplane: c n + tangential offsets
    basis = sla.null_space(n[None, :])
    X = c * n + rng.uniform(-1, 1, (npoints, ndim - 1)) @ basis.T
    val = d(X) @ n
    return float(np.abs(val).max() / max(rho.max_abs_coeff(), 1.0))


# ---------------------------------------------------------------------------
# commuting interpolants

def inc_field(phi):
    """curl (curl phi)^T of a symmetric 3x3 polynomial field: symmetric and divergence free."""
    c = tc.curl(phi)
    return tc.curl(c.map_values(lambda m: np.swapaxes(m, -1, -2), (3, 3)))


def _random_sym(rng, degree):
    return tc.field_sym(tc.PolyField.random(3, (3, 3), degree, rng))


def _weak_commuting_residual(table, field, quad):
    """Relative size of ``(div(Pi w - w), v)`` over the table's displacement basis."""
    cx = table.complex
    pi = canonical_interpolant(field, table)
    divpi = stress_divergence(table, pi)  # (nc, 4, 3)
    dfield = tc.div(field)
    D = dfield(quad.points.reshape(-1, 3)).reshape(quad.points.shape)
    centers = cx.parent.cell_points().mean(axis=1)
    phi = disp_basis_values(table.disp_kind, quad, centers)
    exact = np.einsum("ckq,ckqi,ckqmi->cm", quad.weights, D, phi)
    disc = np.einsum("ckq,cki,ckqmi->cm", quad.weights, divpi, phi)
    return float(np.linalg.norm(disc - exact) / max(np.linalg.norm(exact), 1e-300))


def check_commuting(cx=None, ntrials=20, seed=0, degree=3):
    """Commuting properties of the canonical interpolants with random polynomial stresses."""
    cx = cx or alfeld_split(generate_cube_mesh(1))
    rng = np.random.default_rng(seed)
    quad = subcell_quadrature(cx, 4)
    tables = {m: build_dof_map(cx, m) for m in ("jkm", "p0", "reduced", "reduced2")}
    res = {"V": 0.0, "W_strong": 0.0, "R": 0.0, "C": 0.0}
    for _ in range(ntrials):
        w = _random_sym(rng, degree)
        res["V"] = max(res["V"], _weak_commuting_residual(tables["jkm"], w, quad))
        res["R"] = max(res["R"], _weak_commuting_residual(tables["reduced"], w, quad))
        res["C"] = max(res["C"], _weak_commuting_residual(tables["reduced2"], w, quad))
        # the W_h statement needs div omega in W_h: affine symmetric part plus a
        # divergence-free cubic, compared pointwise on every subcell
        lin = _random_sym(rng, 1)
        phi = _random_sym(rng, degree + 2)
        omega = lin + inc_field(phi)
        t = tables["p0"]
        d = stress_divergence(t, canonical_interpolant(omega, t))
        target = tc.div(omega)(cx.subcell_barycenters().reshape(-1, 3)).reshape(d.shape)
        res["W_strong"] = max(res["W_strong"],
                              float(np.abs(d - target).max() / max(np.abs(target).max(), 1.0)))
    value = max(res.values())
    return CheckResult("commuting", _status(value <= COMMUTE_TOL), value,
                       "div commuting: weak vs V_h, R, constants; pointwise when div in W_h", res)


# ---------------------------------------------------------------------------
# discrete inf-sup constants

_IDENTITY = ComplianceTensor.isotropic(0.0, 0.5)  # A = identity


def estimate_infsup(cx, method):
    """Smallest generalized singular value of the div coupling in H(div) x L2 norms (dense)."""
    if method == "weaksym":
        raise ValueError("inf-sup estimate is implemented for the symmetric-stress methods")
    t = build_dof_map(cx, method)
    if t.size > 20000:
        raise ValueError(f"system too large for the dense estimate ({t.size} unknowns)")
    M = local_mass_matrices(t, _IDENTITY)
    B = local_div_matrices(t)
    div = np.array([b.div.reshape(12, -1) for b in t.bases])
    vol = np.repeat(cx.subvolumes, 3, axis=1)
    DD = np.einsum("cwi,cw,cwj->cij", div, vol, div)
    quad = subcell_quadrature(cx, 2)
    phi = disp_basis_values(t.disp_kind, quad, cx.parent.cell_points().mean(axis=1))
    Y = np.einsum("ckq,ckqmi,ckqni->cmn", quad.weights, phi, phi)
    S = t.cell_stress
    U = t.cell_disp - t.n_stress
    ns, nu = t.n_stress, t.n_disp
    n = max(ns, nu)
    r, c, v = _blocks(S, S, M + DD)
    X = _coo([r], [c], [v], ns).toarray()
    r, c, v = _blocks(U, S, B)
    Bm = _coo([r], [c], [v], n).toarray()[:nu, :ns]
    r, c, v = _blocks(U, U, Y)
    Ym = _coo([r], [c], [v], nu).toarray()
    K = Bm @ np.linalg.solve(X, Bm.T)
    K = 0.5 * (K + K.T)
    ev = sla.eigh(K, Ym, eigvals_only=True)
    return float(np.sqrt(max(ev[0], 0.0)))


def check_infsup(method, levels=(1, 2)):
    betas = [estimate_infsup(alfeld_split(generate_cube_mesh(n)), method) for n in levels]
    ok = min(betas) > INFSUP_MIN and all(b1 >= (1 - INFSUP_DROP) * b0 for b0, b1 in zip(betas, betas[1:]))
    return CheckResult(f"infsup_{method}", _status(ok), float(min(betas)),
                       "discrete inf-sup (two-level evidence, not a proof)",
                       {f"beta_n{n}": b for n, b in zip(levels, betas)})


# ---------------------------------------------------------------------------
# suite

def run_verification(ndims=(2, 3, 4), trials=100, seed=0, log=None):
    """Run every check; ``ndims`` selects the N-dimensional checks (3D-only checks run when 3 is included)."""
    report = VerificationReport(seed)

    def run(fn, *args, **kw):
        t0 = time.perf_counter()
        c = report.add(fn(*args, **kw))
        c.details["seconds"] = round(time.perf_counter() - t0, 2)
        if log:
            log(f"{c.name}: {c.status} ({c.value:.3e})")

    for N in ndims:
        run(check_kernel_trivial, N)
        run(check_dimension_formula, N)
        run(check_bgg, N, ntrials=200, seed=seed)
    if 3 in ndims:
        for v in ("full", "reduced", "reduced2"):
            run(check_unisolvency, v, trials, seed)
        run(check_commuting, None, min(trials, 20), seed)
        for m in ("jkm", "reduced", "reduced2"):
            run(check_infsup, m)
    return report
