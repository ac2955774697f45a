"""Polynomial tensor fields and the matrix/tensor operators of linear elasticity.

Skew-valued fields are always stored as full antisymmetric arrays: a field in
``K`` is an N x N matrix ``eta`` with ``eta = -eta.T``; a field in ``V (x) K``
is an N x N x N array skew in its last two indices, one in ``K (x) V`` is skew
in its first two.  With that normalization the operator ``d`` is simply the
divergence over the last index (``d eta = Div eta``), and no factor-of-two
convention has to be remembered.  To enter a field by its coordinates on the
basis ``E_ij = e_i e_j' - e_j e_i'`` use :func:`from_e_coords`.
"""
import itertools
from dataclasses import dataclass, field

import numpy as np

SKEW_TOL = 1e-12


# ---------------------------------------------------------------------------
# pointwise matrix algebra

def _square(M):
    M = np.asarray(M, dtype=float)
    if M.ndim < 2 or M.shape[-1] != M.shape[-2]:
        raise ValueError(f"expected square matrices, got shape {M.shape}")
    return M


def sym(M):
    M = _square(M)
    return 0.5 * (M + np.swapaxes(M, -1, -2))


def skw(M):
    M = _square(M)
    return 0.5 * (M - np.swapaxes(M, -1, -2))


def tr(M):
    return np.trace(_square(M), axis1=-2, axis2=-1)


def dev(M):
    M = _square(M)
    n = M.shape[-1]
    return M - (tr(M) / n)[..., None, None] * np.eye(n)


def matrix_parts(M):
    """Split ``M`` into its symmetric, skew and deviatoric parts and trace."""
    M = _square(M)
    return {"sym": sym(M), "skw": skw(M), "dev": dev(M), "tr": tr(M)}


def _require3(M):
    if M.shape[-1] != 3:
        raise ValueError("operator defined for N = 3 only")


def xi(M):
    M = _square(M)
    _require3(M)
    return np.swapaxes(M, -1, -2) - tr(M)[..., None, None] * np.eye(3)


def xi_inv(M):
    M = _square(M)
    _require3(M)
    return np.swapaxes(M, -1, -2) - 0.5 * tr(M)[..., None, None] * np.eye(3)


def mskw(v):
    v = np.asarray(v, dtype=float)
    if v.shape[-1] != 3:
        raise ValueError("mskw is defined for 3-vectors")
    out = np.zeros(v.shape + (3,))
    out[..., 0, 1], out[..., 0, 2] = -v[..., 2], v[..., 1]
    out[..., 1, 0], out[..., 1, 2] = v[..., 2], -v[..., 0]
    out[..., 2, 0], out[..., 2, 1] = -v[..., 1], v[..., 0]
    return out


def vskw(M):
    M = _square(M)
    _require3(M)
    return 0.5 * np.stack([M[..., 2, 1] - M[..., 1, 2],
                           M[..., 0, 2] - M[..., 2, 0],
                           M[..., 1, 0] - M[..., 0, 1]], axis=-1)


def skew_basis(n):
    """The matrices ``E_ij = e_i e_j' - e_j e_i'`` for ``i < j``, shape (n(n-1)/2, n, n)."""
    out = []
    for i, j in itertools.combinations(range(n), 2):
        E = np.zeros((n, n))
        E[i, j], E[j, i] = 1.0, -1.0
        out.append(E)
    return np.array(out).reshape(-1, n, n)


def from_e_coords(c):
    """Matrix (or V(x)K tensor) of ``c_ij E_ij`` summed over all i, j (last two axes)."""
    c = np.asarray(c, dtype=float)
    return c - np.swapaxes(c, -1, -2)


def _check_skew(a, axes, what):
    a = np.asarray(a, dtype=float)
    if a.ndim != 3 or len(set(a.shape)) != 1:
        raise ValueError(f"{what}: expected an N x N x N array")
    err = np.max(np.abs(a + np.swapaxes(a, *axes)), initial=0.0)
    if err > SKEW_TOL * max(1.0, np.max(np.abs(a), initial=0.0)):
        raise ValueError(f"{what}: input not skew in axes {axes} (defect {err:.3e})")
    return a


def theta(a):
    """Map V(x)K -> K(x)V: ``(Theta a)_ijk = a_ijk - a_jik``."""
    a = _check_skew(a, (1, 2), "theta")
    return a - np.transpose(a, (1, 0, 2))


def theta_inv(b):
    """Inverse of :func:`theta`: ``1/2 (b_ijk - b_ikj - b_jki)``."""
    b = _check_skew(b, (0, 1), "theta_inv")
    return 0.5 * (b - np.transpose(b, (0, 2, 1)) - np.transpose(b, (2, 0, 1)))


# ---------------------------------------------------------------------------
# polynomial fields

def exponents(ndim, degree):
    """All exponent tuples of total degree <= degree, graded then lexicographic."""
    out = []
    for d in range(degree + 1):
        for e in itertools.product(range(d + 1), repeat=ndim):
            if sum(e) == d:
                out.append(e)
    return out


@dataclass(frozen=True)
class PolyField:
    """Polynomial in ``ndim`` variables with array values of shape ``value_shape``.

    ``coeffs`` maps exponent tuples to coefficient arrays.  Instances are
    treated as immutable values.
    """
    ndim: int
    value_shape: tuple
    coeffs: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.ndim < 1:
            raise ValueError("ndim must be positive")
        if any(s != self.ndim for s in self.value_shape):
            raise ValueError(f"value shape {self.value_shape} incompatible with ndim {self.ndim}")
        for e, c in self.coeffs.items():
            if len(e) != self.ndim or min(e) < 0:
                raise ValueError(f"bad exponent {e}")
            if np.shape(c) != self.value_shape:
                raise ValueError(f"coefficient shape {np.shape(c)} != {self.value_shape}")

    @classmethod
    def zero(cls, ndim, value_shape=()):
        return cls(ndim, tuple(value_shape), {})

    @classmethod
    def monomial(cls, exponent, value):
        value = np.asarray(value, dtype=float)
        return cls(len(exponent), value.shape, {tuple(exponent): value})

    @classmethod
    def coordinate(cls, ndim, i):
        e = [0] * ndim
        e[i] = 1
        return cls(ndim, (), {tuple(e): np.array(1.0)})

    @classmethod
    def random(cls, ndim, value_shape, degree, rng):
        value_shape = tuple(value_shape)
        return cls(ndim, value_shape,
                   {e: rng.uniform(-1.0, 1.0, value_shape) for e in exponents(ndim, degree)})

    @property
    def degree(self):
        return max((sum(e) for e in self.coeffs), default=-1)

    def _new(self, coeffs, value_shape=None):
        vs = self.value_shape if value_shape is None else tuple(value_shape)
        return PolyField(self.ndim, vs, coeffs)

    def __add__(self, other):
        if not isinstance(other, PolyField):
            return NotImplemented
        if other.ndim != self.ndim or other.value_shape != self.value_shape:
            raise ValueError("incompatible polynomial fields")
        out = {e: c.copy() for e, c in self.coeffs.items()}
        for e, c in other.coeffs.items():
            out[e] = out[e] + c if e in out else c.copy()
        return self._new(out)

    def __neg__(self):
        return self._new({e: -c for e, c in self.coeffs.items()})

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, PolyField):
            return self.times_scalar_poly(other)
        return self._new({e: other * c for e, c in self.coeffs.items()})

    __rmul__ = __mul__

    def times_scalar_poly(self, p):
        """Product with a scalar-valued polynomial ``p``."""
        if p.value_shape != ():
            if self.value_shape == ():
                return p.times_scalar_poly(self)
            raise ValueError("one factor must be scalar valued")
        out = {}
        for e1, c1 in self.coeffs.items():
            for e2, c2 in p.coeffs.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                out[e] = out.get(e, 0.0) + c1 * c2
        return self._new({e: np.asarray(c, dtype=float) for e, c in out.items()})

    def map_values(self, fn, value_shape):
        """Apply the linear pointwise map ``fn`` to every coefficient."""
        return self._new({e: np.asarray(fn(c), dtype=float) for e, c in self.coeffs.items()},
                         value_shape)

    def component(self, *idx):
        return self.map_values(lambda c: c[idx], ())

    def diff(self, axis):
        out = {}
        for e, c in self.coeffs.items():
            if e[axis] == 0:
                continue
            e2 = list(e)
            e2[axis] -= 1
            out[tuple(e2)] = e[axis] * c
        return self._new(out)

    def __call__(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        val = np.zeros((x.shape[0],) + self.value_shape)
        for e, c in self.coeffs.items():
            mono = np.prod(x ** np.array(e), axis=1)
            val += mono.reshape((-1,) + (1,) * len(self.value_shape)) * c
        return val

    def max_abs_coeff(self):
        return max((float(np.max(np.abs(c), initial=0.0)) for c in self.coeffs.values()), default=0.0)

    def coeff_distance(self, other):
        """Largest coefficientwise difference between two fields."""
        return (self - other).max_abs_coeff()


def grad(f):
    """Gradient appended as a trailing axis: scalar -> vector, vector -> matrix (``d_j v_i``)."""
    n = f.ndim
    parts = [f.diff(j) for j in range(n)]
    exps = set().union(*(p.coeffs for p in parts))
    zero = np.zeros(f.value_shape)
    coeffs = {e: np.stack([p.coeffs.get(e, zero) for p in parts], axis=-1) for e in exps}
    return PolyField(n, f.value_shape + (n,), coeffs)


def div(f):
    """Divergence contracting the last value index (row-wise for matrices)."""
    if len(f.value_shape) == 0:
        raise ValueError("divergence of a scalar field is undefined")
    g = grad(f)
    return g.map_values(lambda c: np.trace(c, axis1=-2, axis2=-1), f.value_shape[:-1])


def curl(f):
    """Curl of a vector field, row-wise for matrix fields (N = 3)."""
    if f.ndim != 3:
        raise ValueError("curl requires N = 3")
    if f.value_shape not in ((3,), (3, 3)):
        raise ValueError(f"curl undefined for value shape {f.value_shape}")
    g = grad(f)  # [..., l, k] = d_k f_l

    def _c(c):
        return np.stack([c[..., 2, 1] - c[..., 1, 2],
                         c[..., 0, 2] - c[..., 2, 0],
                         c[..., 1, 0] - c[..., 0, 1]], axis=-1)
    return g.map_values(_c, f.value_shape)


def field_calculus(f, which):
    ops = {"grad": grad, "div": div, "curl": curl}
    if which not in ops:
        raise ValueError(f"unknown operator {which!r}")
    return ops[which](f)


def dd_operator(eta):
    """The operator ``d``: K-valued -> V-valued, V(x)K-valued -> M-valued.

    On the full antisymmetric representation this is the divergence over the
    last index.
    """
    if eta.value_shape == (eta.ndim, eta.ndim):
        axes = (0, 1)
    elif eta.value_shape == (eta.ndim,) * 3:
        axes = (1, 2)
    else:
        raise ValueError(f"d is defined on K or V(x)K valued fields, got {eta.value_shape}")
    for c in eta.coeffs.values():
        if np.max(np.abs(c + np.swapaxes(c, *axes)), initial=0.0) > SKEW_TOL * max(1.0, np.max(np.abs(c))):
            raise ValueError("d: field is not skew in the required indices")
    return div(eta)


def field_sym(f):
    return f.map_values(sym, f.value_shape)


def field_skw(f):
    return f.map_values(skw, f.value_shape)


def field_xi(f):
    return f.map_values(xi, f.value_shape)


def field_vskw(f):
    return f.map_values(vskw, (3,))


def field_theta(f):
    return f.map_values(theta, f.value_shape)


def random_skew_field(ndim, degree, rng, kind="K"):
    """Random polynomial field valued in K (``kind='K'``) or V(x)K (``kind='VK'``)."""
    if kind == "K":
        return PolyField.random(ndim, (ndim, ndim), degree, rng).map_values(from_e_coords, (ndim, ndim))
    if kind == "VK":
        return PolyField.random(ndim, (ndim,) * 3, degree, rng).map_values(from_e_coords, (ndim,) * 3)
    raise ValueError(kind)
