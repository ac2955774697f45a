"""Quadrature on simplices.

Rules are conical (collapsed Gauss-Jacobi) products, so every shipped rule has
positive weights and interior points.  Points are returned in barycentric
coordinates, weights sum to the reference measure ``1/N!``.
"""
from dataclasses import dataclass
from functools import lru_cache
from math import factorial

import numpy as np
from scipy.special import roots_jacobi

MAX_DEGREE = 8


@dataclass(frozen=True)
class QuadratureRule:
    ndim: int
    degree: int
    points: np.ndarray  # (npts, ndim+1) barycentric
    weights: np.ndarray  # (npts,)

    def physical_points(self, vertices):
        """Map the rule to the simplex with rows ``vertices`` ((ndim+1, ndim))."""
        return self.points @ np.asarray(vertices, dtype=float)

    def integrate(self, values, volume):
        """Integrate sampled ``values`` (leading axis = points) on a simplex of measure ``volume``."""
        scale = volume * factorial(self.ndim)
        return scale * np.tensordot(self.weights, values, axes=(0, 0))


@lru_cache(maxsize=None)
def simplex_rule(ndim, degree):
    """Positive rule on the reference ``ndim``-simplex exact for total degree ``degree``."""
    if ndim not in (1, 2, 3, 4) or not 0 <= degree <= MAX_DEGREE:
        raise ValueError(f"no quadrature rule for ndim={ndim}, degree={degree}")
    npts = degree // 2 + 1
    # collapse coordinates one at a time; Jacobi weight (1-t)^(ndim-1-k) absorbs the Jacobian
    nodes, wts = [], []
    for k in range(ndim):
        alpha = ndim - 1 - k
        t, w = roots_jacobi(npts, alpha, 0.0)
        t = 0.5 * (t + 1.0)
        w = w / 2.0 ** (alpha + 1)
        nodes.append(t)
        wts.append(w)
    grids = np.meshgrid(*nodes, indexing="ij")
    wgrid = np.ones_like(grids[0])
    for k, w in enumerate(wts):
        shape = [1] * ndim
        shape[k] = -1
        wgrid = wgrid * w.reshape(shape)
    t = np.stack([g.ravel() for g in grids], axis=1)
    x = np.empty_like(t)
    remaining = np.ones(t.shape[0])
    for k in range(ndim):
        x[:, k] = remaining * t[:, k]
        remaining = remaining * (1.0 - t[:, k])
    bary = np.column_stack([1.0 - x.sum(axis=1), x])
    weights = wgrid.ravel()
    bary.setflags(write=False)
    weights.setflags(write=False)
    return QuadratureRule(ndim, degree, bary, weights)


def exact_monomial(alpha, volume=None):
    """Exact integral of the barycentric monomial ``prod(lambda_i**alpha_i)``.

    ``alpha`` has ``N+1`` entries.  ``volume`` defaults to the reference measure ``1/N!``.
    """
    alpha = [int(a) for a in alpha]
    ndim = len(alpha) - 1
    if volume is None:
        volume = 1.0 / factorial(ndim)
    num = 1
    for a in alpha:
        num *= factorial(a)
    return num * factorial(ndim) * volume / factorial(sum(alpha) + ndim)


def simplex_volume(vertices):
    vertices = np.asarray(vertices, dtype=float)
    ndim = vertices.shape[1]
    J = (vertices[1:] - vertices[0]).T
    return abs(np.linalg.det(J)) / factorial(ndim)
