"""Compliance tensors and manufactured solutions on the unit cube."""
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

# Voigt order 11, 22, 33, 23, 13, 12 with engineering shear strains
_VOIGT = [(0, 0), (1, 1), (2, 2), (1, 2), (0, 2), (0, 1)]


class MaterialError(ValueError):
    pass


def lame_from_young(E, nu):
    mu = E / (2.0 * (1.0 + nu))
    lam = E * nu / ((1.0 + nu) * (1.0 - 2.0 * nu))
    return lam, mu


def young_from_lame(lam, mu):
    E = mu * (3.0 * lam + 2.0 * mu) / (lam + mu)
    nu = lam / (2.0 * (lam + mu))
    return E, nu


def sym_basis():
    """Orthonormal-free basis of symmetric 3x3 matrices matching upper-triangle order."""
    out = []
    for i in range(3):
        for j in range(i, 3):
            S = np.zeros((3, 3))
            S[i, j] = S[j, i] = 1.0
            out.append(S)
    return np.array(out)


def voigt_stress(M):
    M = np.asarray(M)
    return np.array([M[..., i, j] for i, j in _VOIGT]).T


def voigt_strain(M):
    v = voigt_stress(M)
    v[..., 3:] *= 2.0
    return v


def from_voigt_strain(v):
    v = np.asarray(v, dtype=float)
    M = np.zeros(v.shape[:-1] + (3, 3))
    for k, (i, j) in enumerate(_VOIGT):
        val = v[..., k] if k < 3 else 0.5 * v[..., k]
        M[..., i, j] = val
        M[..., j, i] = val
    return M


def from_voigt_stress(v):
    v = np.asarray(v, dtype=float)
    M = np.zeros(v.shape[:-1] + (3, 3))
    for k, (i, j) in enumerate(_VOIGT):
        M[..., i, j] = v[..., k]
        M[..., j, i] = v[..., k]
    return M


@dataclass(frozen=True)
class ComplianceTensor:
    """Compliance 𝒜 acting on symmetric 3x3 matrices.

    ``kind`` is ``"isotropic"`` (``lam``, ``mu`` set) or ``"general"``
    (``voigt`` is the 6x6 compliance mapping Voigt stress to engineering strain).
    """
    kind: str
    lam: float = float("nan")
    mu: float = float("nan")
    voigt: np.ndarray = None
    _gram: np.ndarray = field(default=None, repr=False, compare=False)

    @classmethod
    def isotropic(cls, lam, mu):
        if mu <= 0:
            raise MaterialError(f"shear modulus must be positive, got mu={mu}")
        if 2 * mu + 3 * lam <= 0:
            raise MaterialError(f"bulk modulus must be positive, got 2mu+3lambda={2 * mu + 3 * lam}")
        return cls("isotropic", float(lam), float(mu))

    @classmethod
    def from_young(cls, E, nu):
        if not -1.0 < nu < 0.5:
            raise MaterialError(f"Poisson ratio must lie in (-1, 1/2), got {nu}")
        return cls.isotropic(*lame_from_young(E, nu))

    @classmethod
    def general(cls, voigt):
        V = np.array(voigt, dtype=float)
        if V.shape != (6, 6):
            raise MaterialError(f"Voigt compliance must be 6x6, got {V.shape}")
        if np.abs(V - V.T).max() > 1e-12 * max(np.abs(V).max(), 1.0):
            raise MaterialError("Voigt compliance matrix is not symmetric")
        V.setflags(write=False)
        return cls("general", voigt=V)

    def apply(self, M):
        """𝒜M for a symmetric matrix (or stack of matrices)."""
        M = np.asarray(M, dtype=float)
        if self.kind == "isotropic":
            tr = np.trace(M, axis1=-2, axis2=-1)
            coef = self.lam / (2 * self.mu + 3 * self.lam)
            return (M - coef * tr[..., None, None] * np.eye(3)) / (2 * self.mu)
        return from_voigt_strain(voigt_stress(M) @ self.voigt.T)

    def stiffness(self, E):
        """Inverse action: the stress whose compliance image is the strain ``E``."""
        E = np.asarray(E, dtype=float)
        if self.kind == "isotropic":
            tr = np.trace(E, axis1=-2, axis2=-1)
            return 2 * self.mu * E + self.lam * tr[..., None, None] * np.eye(3)
        return from_voigt_stress(voigt_strain(E) @ np.linalg.inv(self.voigt).T)

    def gram(self):
        """Q[a, b] = (𝒜 S_a) : S_b on the upper-triangle symmetric basis."""
        S = sym_basis()
        return np.einsum("aij,bij->ab", self.apply(S), S)

    def regime(self):
        """Report whether 𝒜 is coercive on symmetric matrices or only on deviators."""
        ev = np.linalg.eigvalsh(_frob_normalized(self.gram()))
        theta = float(ev.min())
        S = sym_basis()
        dev = S - np.einsum("aii->a", S)[:, None, None] * np.eye(3) / 3
        Dg = np.einsum("aij,bij->ab", dev, dev)
        Ag = self.gram()
        # smallest ratio 𝒜w:w / dev w:dev w over the deviatoric subspace
        w, V = np.linalg.eigh(Dg)
        V = V[:, w > 1e-12] / np.sqrt(w[w > 1e-12])
        dtheta = float(np.linalg.eigvalsh(V.T @ Ag @ V).min())
        return {"coercive": theta > 1e-12, "theta": theta, "deviatoric_theta": dtheta}


def _frob_normalized(Q):
    S = sym_basis()
    G = np.einsum("aij,bij->ab", S, S)
    L = np.linalg.cholesky(G)
    Li = np.linalg.inv(L)
    return Li @ Q @ Li.T


def parse_material(text):
    """Parse ``iso:E=..,nu=..``, ``iso:lambda=..,mu=..`` or ``voigt:<path>``."""
    kind, _, rest = text.partition(":")
    if kind == "iso":
        try:
            vals = dict(item.split("=", 1) for item in rest.split(","))
            vals = {k.strip(): float(v) for k, v in vals.items()}
        except ValueError:
            raise MaterialError(f"cannot parse material {text!r}") from None
        if set(vals) == {"E", "nu"}:
            return ComplianceTensor.from_young(vals["E"], vals["nu"])
        if set(vals) == {"lambda", "mu"}:
            return ComplianceTensor.isotropic(vals["lambda"], vals["mu"])
        raise MaterialError(f"iso material needs E,nu or lambda,mu; got {sorted(vals)}")
    if kind == "voigt":
        try:
            V = np.loadtxt(rest).reshape(6, 6)
        except (OSError, ValueError) as exc:
            raise MaterialError(f"cannot read Voigt matrix from {rest!r}: {exc}") from None
        return ComplianceTensor.general(V)
    raise MaterialError(f"unknown material kind in {text!r}")


@dataclass(frozen=True)
class ManufacturedCase:
    """Exact displacement, stress and load; all callables take points (npts, 3)."""
    name: str
    material: ComplianceTensor
    u: Callable
    grad_u: Callable
    sigma: Callable
    f: Callable

    def strain(self, x):
        G = self.grad_u(x)
        return 0.5 * (G + np.swapaxes(G, -1, -2))


_TRIG_C = np.array([1.0, 2.0, 3.0]) / 10.0


def _trig_parts(x):
    s = np.sin(np.pi * x)
    c = np.cos(np.pi * x)
    return s, c


def _trig_phi(x):
    s, _ = _trig_parts(x)
    return s.prod(axis=-1)


def _trig_grad_phi(x):
    s, c = _trig_parts(x)
    g = np.empty_like(x)
    g[:, 0] = c[:, 0] * s[:, 1] * s[:, 2]
    g[:, 1] = s[:, 0] * c[:, 1] * s[:, 2]
    g[:, 2] = s[:, 0] * s[:, 1] * c[:, 2]
    return np.pi * g


def _trig_hess_phi(x):
    s, c = _trig_parts(x)
    H = np.empty((len(x), 3, 3))
    phi = s.prod(axis=-1)
    for i in range(3):
        H[:, i, i] = -phi
        for j in range(3):
            if j != i:
                k = 3 - i - j
                H[:, i, j] = c[:, i] * c[:, j] * s[:, k]
    return np.pi ** 2 * H


def _isotropic_check(material, name):
    if material.kind != "isotropic":
        raise MaterialError(f"manufactured case {name!r} needs an isotropic material")


def trig_case(material):
    """u_i = c_i sin(pi x) sin(pi y) sin(pi z) with c = (1, 2, 3)/10."""
    _isotropic_check(material, "trig")
    lam, mu = material.lam, material.mu

    def u(x):
        return _trig_phi(x)[:, None] * _TRIG_C

    def grad_u(x):
        return _TRIG_C[None, :, None] * _trig_grad_phi(x)[:, None, :]

    def sigma(x):
        G = grad_u(x)
        E = 0.5 * (G + np.swapaxes(G, 1, 2))
        return material.stiffness(E)

    def f(x):
        # mu lap u + (mu + lam) grad div u
        phi = _trig_phi(x)
        H = _trig_hess_phi(x)
        return -3 * np.pi ** 2 * mu * phi[:, None] * _TRIG_C + (mu + lam) * H @ _TRIG_C

    return ManufacturedCase("trig", material, u, grad_u, sigma, f)


def _divfree_parts(x):
    """g = sin^2(pi x) sin^2(pi y) sin(pi z) and its derivatives up to order 3."""
    X, Y, Z = x[:, 0], x[:, 1], x[:, 2]
    p = np.pi
    a, a1, a2, a3 = (np.sin(p * X) ** 2, p * np.sin(2 * p * X), 2 * p ** 2 * np.cos(2 * p * X),
                     -4 * p ** 3 * np.sin(2 * p * X))
    b, b1, b2, b3 = (np.sin(p * Y) ** 2, p * np.sin(2 * p * Y), 2 * p ** 2 * np.cos(2 * p * Y),
                     -4 * p ** 3 * np.sin(2 * p * Y))
    c, c1, c2, c3 = np.sin(p * Z), p * np.cos(p * Z), -p ** 2 * np.sin(p * Z), -p ** 3 * np.cos(p * Z)
    A, B, C = [a, a1, a2, a3], [b, b1, b2, b3], [c, c1, c2, c3]

    def d(i, j, k):
        return A[i] * B[j] * C[k]
    return d


def divfree_case(material):
    """Divergence-free u = (g_y, -g_x, 0) vanishing on the cube boundary.

    The exact stress 2 mu eps(u) and load mu lap u do not depend on lambda,
    which makes this the natural case for incompressibility sweeps.
    """
    _isotropic_check(material, "divfree")
    mu = material.mu

    def u(x):
        d = _divfree_parts(x)
        return np.column_stack([d(0, 1, 0), -d(1, 0, 0), np.zeros(len(x))])

    def grad_u(x):
        d = _divfree_parts(x)
        G = np.zeros((len(x), 3, 3))
        G[:, 0] = np.column_stack([d(1, 1, 0), d(0, 2, 0), d(0, 1, 1)])
        G[:, 1] = -np.column_stack([d(2, 0, 0), d(1, 1, 0), d(1, 0, 1)])
        return G

    def sigma(x):
        G = grad_u(x)
        return mu * (G + np.swapaxes(G, 1, 2))

    def f(x):
        d = _divfree_parts(x)
        lap_gy = d(2, 1, 0) + d(0, 3, 0) + d(0, 1, 2)
        lap_gx = d(3, 0, 0) + d(1, 2, 0) + d(1, 0, 2)
        return mu * np.column_stack([lap_gy, -lap_gx, np.zeros(len(x))])

    return ManufacturedCase("divfree", material, u, grad_u, sigma, f)


def bubble_case(material):
    """Polynomial u_i = c_i 64 xyz(1-x)(1-y)(1-z): stress of degree 5, load of degree 4.

    Moderate-degree quadrature integrates everything exactly, which makes this
    the case for checking identities that hold up to rounding.
    """
    _isotropic_check(material, "bubble")

    def parts(x):
        p = x * (1 - x)
        dp = 1 - 2 * x
        return p, dp

    def u(x):
        p, _ = parts(x)
        return 64 * p.prod(axis=1)[:, None] * _TRIG_C

    def grad_phi(x):
        p, dp = parts(x)
        g = np.column_stack([dp[:, 0] * p[:, 1] * p[:, 2], p[:, 0] * dp[:, 1] * p[:, 2],
                             p[:, 0] * p[:, 1] * dp[:, 2]])
        return 64 * g

    def hess_phi(x):
        p, dp = parts(x)
        H = np.empty((len(x), 3, 3))
        for i in range(3):
            j, k = [a for a in range(3) if a != i]
            H[:, i, i] = -2 * p[:, j] * p[:, k]
            for j2 in range(3):
                if j2 != i:
                    k2 = 3 - i - j2
                    H[:, i, j2] = dp[:, i] * dp[:, j2] * p[:, k2]
        return 64 * H

    def grad_u(x):
        return _TRIG_C[None, :, None] * grad_phi(x)[:, None, :]

    def sigma(x):
        G = grad_u(x)
        return material.stiffness(0.5 * (G + np.swapaxes(G, 1, 2)))

    def f(x):
        H = hess_phi(x)
        lap = np.trace(H, axis1=1, axis2=2)
        return material.mu * lap[:, None] * _TRIG_C + (material.mu + material.lam) * H @ _TRIG_C

    return ManufacturedCase("bubble", material, u, grad_u, sigma, f)


def linear_case(material, A=None, b=None):
    """Affine displacement u = A x + b (constant stress, zero load); not zero on the boundary."""
    A = np.array([[0.3, 0.1, -0.2], [0.05, -0.4, 0.25], [0.15, 0.2, 0.1]]) if A is None else np.asarray(A)
    b = np.array([0.1, -0.2, 0.05]) if b is None else np.asarray(b)
    sig = material.stiffness(0.5 * (A + A.T))
    return ManufacturedCase(
        "linear", material,
        u=lambda x: x @ A.T + b,
        grad_u=lambda x: np.broadcast_to(A, (len(x), 3, 3)).copy(),
        sigma=lambda x: np.broadcast_to(sig, (len(x), 3, 3)).copy(),
        f=lambda x: np.zeros((len(x), 3)),
    )


CASES = {"trig": trig_case, "divfree": divfree_case, "bubble": bubble_case}


def manufactured_case(material, name="trig"):
    try:
        return CASES[name](material)
    except KeyError:
        raise MaterialError(f"unknown manufactured case {name!r}") from None
