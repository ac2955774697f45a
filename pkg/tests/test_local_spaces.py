import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from alfeld_elast.local_spaces import (
    NSHAPE, LocalSpaceError, RawSpace, SplitGeometry, build_stress_basis, constraint_rows,
    default_facet_info, dof_functionals, null_space, rigid_nodal, rigid_ops, sh_basis,
)
from alfeld_elast.quadrature import simplex_rule
from alfeld_elast.verification import random_tetrahedra

REF = np.vstack([np.zeros(3), np.eye(3)])


def evaluate(basis, P, m, x):
    """Value of shape function ``m`` of ``basis`` at points ``x`` inside the macro cell ``P``."""
    geom = SplitGeometry(P)
    out = np.empty((len(x), 3, 3))
    for q, xq in enumerate(x):
        for k in range(4):
            lam = np.linalg.solve(np.vstack([geom.sub[k].T, np.ones(4)]), np.append(xq, 1.0))
            if lam.min() >= -1e-12:
                out[q] = np.einsum("s,sij->ij", lam, basis.values[k, :, :, :, m])
                break
        else:
            raise AssertionError("point outside cell")
    return out


def basis_field(basis, P, m):
    return lambda x: evaluate(basis, P, m, x)


@pytest.fixture(scope="module")
def ref_bases():
    return {v: build_stress_basis(REF, v) for v in NSHAPE}


def test_full_dimension_counts():
    raw = RawSpace(SplitGeometry(REF))
    assert raw.size == 96
    C = constraint_rows(raw, "full", REF, default_facet_info(REF))
    assert np.linalg.matrix_rank(C) == 54


@pytest.mark.parametrize("variant, extra", [("reduced", 18), ("reduced2", 30)])
def test_reduced_constraint_counts(variant, extra):
    raw = RawSpace(SplitGeometry(REF))
    C = constraint_rows(raw, variant, REF, default_facet_info(REF))
    assert np.linalg.matrix_rank(C) == 54 + extra


def test_nshape(ref_bases):
    assert {v: b.nshape for v, b in ref_bases.items()} == {"full": 42, "reduced": 24, "reduced2": 12}


def test_unknown_variant():
    with pytest.raises(ValueError):
        build_stress_basis(REF, "huge")


def test_degenerate_cell_rejected():
    flat = REF.copy()
    flat[3] = [0.5, 0.5, 0.0]
    with pytest.raises(LocalSpaceError):
        build_stress_basis(flat, "full")


def test_identity_dofs():
    vol = 1 / 6
    d = dof_functionals(REF, "full", lambda x: np.broadcast_to(np.eye(3), (len(x), 3, 3)))
    assert np.allclose(d[-6:], vol * np.array([1, 0, 0, 1, 0, 1]), atol=1e-15)
    info = default_facet_info(REF)
    for i in range(4):
        n, area = info.normals[i], info.measures[i]
        expected = np.tile(n * area / 3, 3)  # kappa = phi_v e_c gives n_c |F|/3
        assert np.allclose(d[9 * i: 9 * i + 9], expected, atol=1e-15)


def test_zero_dofs():
    for v in NSHAPE:
        assert not np.any(dof_functionals(REF, v, lambda x: np.zeros((len(x), 3, 3))))


@pytest.mark.parametrize("variant", list(NSHAPE))
def test_duality(variant, ref_bases):
    b = ref_bases[variant]
    D = np.column_stack([dof_functionals(REF, variant, basis_field(b, REF, m)) for m in range(b.nshape)])
    assert np.abs(D - np.eye(b.nshape)).max() < 1e-10


@pytest.mark.parametrize("variant", list(NSHAPE))
def test_internal_normal_continuity(variant, ref_bases):
    b = ref_bases[variant]
    geom = SplitGeometry(REF)
    scale = np.abs(b.values).max()
    for a in range(4):
        for c in range(a + 1, 4):
            pairs, normal = geom.internal_facet(a, c)
            for sa, sc in pairs:
                jump = np.einsum("ijm,j->im", b.values[a, sa] - b.values[c, sc], normal)
                assert np.abs(jump).max() <= 1e-10 * scale


def test_symmetric_values(ref_bases):
    V = ref_bases["full"].values
    assert np.array_equal(V, np.swapaxes(V, 2, 3))


def test_inclusion_chain(ref_bases):
    R2, R, F = (ref_bases[v].raw for v in ("reduced2", "reduced", "full"))
    for small, big in ((R2, R), (R, F)):
        coef, *_ = np.linalg.lstsq(big, small, rcond=None)
        assert np.abs(big @ coef - small).max() <= 1e-10 * np.abs(small).max()


def test_divergence_constant_per_subcell(ref_bases):
    b = ref_bases["full"]
    geom = SplitGeometry(REF)
    # divergence from nodal values with subcell barycentric gradients
    div = np.einsum("ksijm,ksj->kim", b.values, geom.grads)
    assert np.allclose(div, b.div, atol=1e-10)


def test_constants_reproduced(ref_bases):
    rng = np.random.default_rng(0)
    S = rng.normal(size=(3, 3))
    S = S + S.T
    for v, b in ref_bases.items():
        d = dof_functionals(REF, v, lambda x: np.broadcast_to(S, (len(x), 3, 3)))
        vals = b.values @ d
        assert np.allclose(vals, np.broadcast_to(S, vals.shape), atol=1e-12)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_random_tets_unisolvent(seed):
    P = random_tetrahedra(1, np.random.default_rng(seed))[0]
    for v in NSHAPE:
        b = build_stress_basis(P, v)
        assert b.nshape == NSHAPE[v]
        assert b.dof_condition < 1e8


def test_null_space_helper():
    A = np.array([[1.0, 1.0, 0.0], [0.0, 0.0, 0.0]])
    Z, s = null_space(A)
    assert Z.shape == (3, 2)
    assert np.abs(A @ Z).max() < 1e-15


# ---------------------------------------------------------------------------
# rigid operators

def test_interpolation_of_constant():
    ops = rigid_ops(SplitGeometry(REF))
    c = np.array([0.3, -1.0, 2.0])
    assert np.allclose(ops.I @ np.tile(c, 4), np.tile(c, 4))


def test_projection_of_rotation():
    geom = SplitGeometry(REF)
    ops = rigid_ops(geom)
    b = np.array([0.2, -0.5, 1.0])
    vert = np.cross(b, REF).ravel()  # b x x at the macro vertices (linear field)
    Pv = (ops.P @ vert).reshape(4, 3)
    rule = simplex_rule(3, 2)
    for k in range(4):
        x = rule.physical_points(geom.sub[k].astype(float))
        mean_x = rule.integrate(x, geom.subvol[k]) / geom.subvol[k]
        assert np.allclose(Pv[k], np.cross(b, mean_x), atol=1e-14)


def test_projection_inverts_interpolation():
    for P in random_tetrahedra(50, np.random.default_rng(5)):
        ops = rigid_ops(SplitGeometry(P))
        assert np.abs(ops.P @ ops.I - np.eye(12)).max() < 1e-12
        assert ops.PR.shape == ops.complement.shape == (12, 6)
        # complement is L2-orthogonal to P_T R(T)
        assert np.abs(ops.PR.T @ ops.gram_w @ ops.complement).max() < 1e-12


def test_rigid_fields_are_rigid():
    rng = np.random.default_rng(2)
    pts = rng.normal(size=(5, 3))
    R = rigid_nodal(pts, np.zeros(3))
    for r in R:
        # a + b x x: linear in x with a skew matrix
        A, *_ = np.linalg.lstsq(np.column_stack([pts, np.ones(5)]), r, rcond=None)
        G = A[:3].T
        assert np.allclose(G + G.T, 0, atol=1e-12)


# ---------------------------------------------------------------------------
# post-processing space

def test_sh_dimension_and_orthogonality():
    S, mom = sh_basis(REF)
    assert S.shape == (30, 24)
    assert np.abs(mom @ S).max() <= 1e-12 * np.abs(mom).max()


def test_constant_not_in_sh():
    S, mom = sh_basis(REF)
    # a constant vector field in Bernstein coordinates: every function weight 1 for P2 partition of unity
    const = np.zeros((10, 3))
    const[:, 0] = 1.0
    assert np.abs(mom @ const.ravel()).max() > 1e-3


def test_moment_rank_random():
    for P in random_tetrahedra(50, np.random.default_rng(9)):
        _, mom = sh_basis(P)
        assert np.linalg.matrix_rank(mom / np.abs(mom).max(), tol=1e-10) == 6
