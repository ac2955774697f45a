import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from alfeld_elast.materials import (
    ComplianceTensor, MaterialError, bubble_case, divfree_case, lame_from_young,
    linear_case, manufactured_case, parse_material, sym_basis, trig_case, young_from_lame,
)

ISO = ComplianceTensor.isotropic(lam=1.3, mu=0.7)


def test_identity_compliance():
    assert np.allclose(ISO.apply(np.eye(3)), np.eye(3) / (2 * 0.7 + 3 * 1.3))


def test_deviator_compliance():
    M = np.array([[1.0, 2.0, 0.0], [2.0, -3.0, 1.0], [0.0, 1.0, 2.0]])
    assert np.allclose(ISO.apply(M), M / 1.4)


def test_stiffness_round_trip():
    S = sym_basis()
    explicit = 2 * 0.7 * S + 1.3 * np.einsum("aii->a", S)[:, None, None] * np.eye(3)
    assert np.abs(ISO.stiffness(S) - explicit).max() < 1e-15
    assert np.abs(ISO.stiffness(ISO.apply(S)) - S).max() <= 1e-13


def test_bilinear_form_symmetric():
    Q = ISO.gram()
    assert np.allclose(Q, Q.T)


def test_invalid_moduli():
    with pytest.raises(MaterialError):
        ComplianceTensor.isotropic(1.0, 0.0)
    with pytest.raises(MaterialError):
        ComplianceTensor.isotropic(-1.0, 1.0)
    with pytest.raises(MaterialError):
        ComplianceTensor.from_young(1.0, 0.5)


@given(st.floats(0.1, 100), st.floats(-0.9, 0.499))
def test_young_lame_round_trip(E, nu):
    lam, mu = lame_from_young(E, nu)
    assert mu == pytest.approx(E / (2 * (1 + nu)), rel=1e-14)
    E2, nu2 = young_from_lame(lam, mu)
    assert E2 == pytest.approx(E, rel=1e-12)
    assert nu2 == pytest.approx(nu, rel=1e-12, abs=1e-14)


def test_incompressible_regime():
    rng = np.random.default_rng(0)
    M = rng.normal(size=(3, 3))
    M = M + M.T
    devs, traces = [], []
    for nu in (0.3, 0.49, 0.4999, 0.49999):
        A = ComplianceTensor.from_young(1.0, nu)
        D = A.apply(M)
        devs.append(np.linalg.norm(D - np.trace(D) / 3 * np.eye(3)))
        traces.append(np.tensordot(A.apply(np.eye(3)), np.eye(3)))
        reg = A.regime()
        assert reg["deviatoric_theta"] > 0.1
    assert max(devs) < 2 * min(devs)
    assert traces[-1] < 1e-3 * traces[0]


def test_general_matches_isotropic():
    S = sym_basis()
    # Voigt compliance of the isotropic material: map basis stresses to engineering strains
    from alfeld_elast.materials import voigt_strain, voigt_stress
    V = np.linalg.solve(voigt_stress(S), voigt_strain(ISO.apply(S))).T
    G = ComplianceTensor.general(V)
    M = np.array([[1.0, 0.2, -0.3], [0.2, 2.0, 0.5], [-0.3, 0.5, -1.0]])
    assert np.allclose(G.apply(M), ISO.apply(M), atol=1e-13)
    assert np.allclose(G.stiffness(G.apply(M)), M, atol=1e-12)


def test_parse_material(tmp_path):
    A = parse_material("iso:E=1,nu=0.3")
    lam, mu = lame_from_young(1.0, 0.3)
    assert (A.lam, A.mu) == pytest.approx((lam, mu))
    B = parse_material("iso:lambda=2,mu=1")
    assert (B.lam, B.mu) == (2.0, 1.0)
    p = tmp_path / "v.txt"
    np.savetxt(p, np.eye(6))
    assert parse_material(f"voigt:{p}").kind == "general"
    for bad in ("iso:E=1", "aniso:x", "iso:E=a,nu=0.3", f"voigt:{tmp_path / 'none'}"):
        with pytest.raises(MaterialError):
            parse_material(bad)


def test_trig_case_examples():
    case = trig_case(ComplianceTensor.from_young(1.0, 0.3))
    c = np.array([[0.5, 0.5, 0.5]])
    assert np.allclose(case.u(c), [[0.1, 0.2, 0.3]])
    assert np.allclose(case.strain(c), 0, atol=1e-15)
    assert np.allclose(case.sigma(c), 0, atol=1e-15)
    rng = np.random.default_rng(0)
    for axis in range(3):
        for val in (0.0, 1.0):
            x = rng.uniform(0, 1, (10, 3))
            x[:, axis] = val
            assert np.abs(case.u(x)).max() < 1e-15


@pytest.mark.parametrize("maker", [trig_case, divfree_case, bubble_case])
@pytest.mark.parametrize("nu", [0.3, 0.4999])
def test_case_consistency(maker, nu):
    mat = ComplianceTensor.from_young(1.0, nu)
    case = maker(mat)
    rng = np.random.default_rng(1)
    x = rng.uniform(0, 1, (20, 3))
    S = case.sigma(x)
    assert np.abs(mat.apply(S) - case.strain(x)).max() <= 1e-12 * max(1.0, np.abs(S).max())
    h = 1e-5
    fd = sum((case.sigma(x + h * e)[:, :, i] - case.sigma(x - h * e)[:, :, i]) / (2 * h)
             for i, e in enumerate(np.eye(3)))
    assert np.abs(fd - case.f(x)).max() <= 1e-6 * max(1.0, np.abs(S).max())
    # zero displacement on the boundary
    xb = x.copy()
    xb[:, 0] = 0.0
    assert np.abs(case.u(xb)).max() < 1e-14


def test_grad_u_matches_u():
    case = trig_case(ComplianceTensor.from_young(1.0, 0.3))
    x = np.random.default_rng(2).uniform(0, 1, (5, 3))
    h = 1e-6
    fd = np.stack([(case.u(x + h * e) - case.u(x - h * e)) / (2 * h) for e in np.eye(3)], axis=2)
    assert np.allclose(case.grad_u(x), fd, atol=1e-8)


def test_linear_case_is_equilibrated():
    case = linear_case(ISO)
    x = np.random.default_rng(3).uniform(0, 1, (4, 3))
    assert np.allclose(ISO.apply(case.sigma(x)), case.strain(x))
    assert not np.any(case.f(x))


def test_unknown_case():
    with pytest.raises(MaterialError):
        manufactured_case(ISO, "nope")
