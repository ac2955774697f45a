"""Sparse direct solves for symmetric indefinite saddle-point systems.

Two paths share one interface:

* ``ordering="COLAMD"`` (or any SuperLU column ordering): LU with partial
  pivoting on the matrix as given.
* an explicit permutation (e.g. from :func:`nested_dissection`): the zero
  diagonal of the constraint block is replaced by a tiny negative
  Schur-complement estimate, which makes the matrix quasi-definite and hence
  factorizable without pivoting in any symmetric order.  Iterative
  refinement against the original matrix removes the perturbation.

Either way the residual of the original system is checked before returning.
"""
import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

RESIDUAL_TOL = 1e-10
REG_SCALE = 1e-9
MAX_REFINE = 30


class SingularSystemError(RuntimeError):
    """Raised when the factorization meets a zero pivot; ``index`` is the offending unknown."""

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class ResidualError(RuntimeError):
    pass


def _empty_rows(A):
    return np.nonzero(np.diff(sp.csr_matrix(A).indptr) == 0)[0]


def regularization(A, scale=REG_SCALE):
    """Diagonal shift for zero-diagonal rows: ``-scale * sum_j A_ij^2 / |A_jj|``."""
    A = sp.csr_matrix(A)
    d = A.diagonal()
    zero = d == 0
    inv = np.where(zero, 0.0, 1.0 / np.where(zero, 1.0, np.abs(d)))
    est = np.asarray(A.multiply(A) @ inv).ravel()
    shift = np.where(zero, -scale * est, 0.0)
    if np.any(zero & (est == 0)):
        bad = int(np.nonzero(zero & (est == 0))[0][0])
        raise SingularSystemError(f"constraint row {bad} has no coupling to pivotable unknowns", bad)
    return shift


class Factorization:
    """Direct factorization of a square sparse matrix (see module docstring)."""

    def __init__(self, A, ordering="COLAMD"):
        A = sp.csc_matrix(A)
        if A.shape[0] != A.shape[1]:
            raise ValueError(f"matrix must be square, got {A.shape}")
        self.A = A
        empty = _empty_rows(A)
        if len(empty):
            raise SingularSystemError(f"structurally singular: row {empty[0]} is empty", int(empty[0]))
        if isinstance(ordering, str):
            self.perm = None
            self.shift = None
            K = A
            opts = dict(permc_spec=ordering, diag_pivot_thresh=1.0)
        else:
            self.perm = np.asarray(ordering)
            if sorted(self.perm.tolist()) != list(range(A.shape[0])):
                raise ValueError("ordering must be a permutation of the unknowns")
            self.shift = regularization(A)
            K = (A + sp.diags(self.shift)).tocsc()[self.perm][:, self.perm]
            opts = dict(permc_spec="NATURAL", diag_pivot_thresh=0.0,
                        options={"SymmetricMode": True})
        try:
            self.lu = splu(sp.csc_matrix(K), **opts)
        except RuntimeError as exc:
            raise SingularSystemError(f"factorization failed: {exc}") from None
        d = np.abs(self.lu.U.diagonal())
        if self.perm is None:
            tiny = d <= 1e-14 * max(d.max(initial=0.0), 1.0)
        else:
            # regularized pivots are small by design; a singular original shows up in refinement
            tiny = ~np.isfinite(d) | (d == 0)
        if np.any(tiny):
            j = int(self.lu.perm_c[np.argmax(tiny)])
            col = int(self.perm[j]) if self.perm is not None else j
            raise SingularSystemError(f"zero pivot at unknown {col}", col)

    def _apply(self, r):
        if self.perm is None:
            return self.lu.solve(r)
        out = np.empty_like(r)
        out[self.perm] = self.lu.solve(r[self.perm])
        return out

    def solve(self, b, tol=RESIDUAL_TOL):
        b = np.asarray(b, dtype=float)
        x = self._apply(b)
        # one refinement step always; more only for the regularized path
        steps = 1 if self.perm is None else MAX_REFINE
        res = relative_residual(self.A, x, b)
        for it in range(steps):
            x = x + self._apply(b - self.A @ x)
            new = relative_residual(self.A, x, b)
            if it and (new <= 1e-3 * tol or new >= 0.5 * res):
                res = new
                break
            res = new
        if not np.isfinite(res) or res > tol:
            raise ResidualError(f"relative residual {res:.3e} exceeds {tol:.1e}")
        self.residual = res
        return x


def relative_residual(A, x, b):
    return float(np.linalg.norm(A @ x - b) / max(np.linalg.norm(b), 1.0))


def solve(A, b, ordering="COLAMD", tol=RESIDUAL_TOL):
    """Solve ``A x = b`` directly, refine, and assert the residual."""
    return Factorization(A, ordering).solve(b, tol=tol)


# ---------------------------------------------------------------------------
# nested dissection from element connectivity

def bisection_order(centroids, leaf=1):
    """Cell permutation from recursive coordinate bisection (contiguous subtrees)."""
    centroids = np.asarray(centroids, dtype=float)
    out = []
    stack = [np.arange(len(centroids))]
    # explicit stack keeps left-to-right order: push right first
    while stack:
        idx = stack.pop()
        if len(idx) <= leaf:
            out.extend(idx.tolist())
            continue
        pts = centroids[idx]
        axis = int(np.argmax(np.ptp(pts, axis=0)))
        order = idx[np.lexsort((idx, pts[:, axis]))]
        mid = len(order) // 2
        stack.append(order[mid:])
        stack.append(order[:mid])
    return np.array(out, dtype=np.int64)


def nested_dissection(ncells, centroids, cell_dofs, ndof):
    """Symmetric ordering of ``ndof`` unknowns from the cells each unknown touches.

    ``cell_dofs`` is a list of integer arrays (ncells, k) mapping cells to
    unknowns.  Each unknown is placed at the smallest node of a binary tree
    over bisection-ordered cells whose range covers all its cells; nodes are
    visited in post-order, so separators follow the subdomains they split.
    """
    perm = bisection_order(centroids)
    pos = np.empty(ncells, dtype=np.int64)
    pos[perm] = np.arange(ncells)
    lo = np.full(ndof, np.iinfo(np.int64).max)
    hi = np.full(ndof, -1)
    for cd in cell_dofs:
        p = np.repeat(pos[:, None], cd.shape[1], axis=1).ravel()
        np.minimum.at(lo, cd.ravel(), p)
        np.maximum.at(hi, cd.ravel(), p)
    if np.any(hi < 0):
        raise ValueError("some unknowns touch no cell")
    # descend the implicit range tree [a, b) split at (a+b)//2
    a = np.zeros(ndof, dtype=np.int64)
    b = np.full(ndof, ncells, dtype=np.int64)
    active = np.ones(ndof, dtype=bool)
    while active.any():
        m = (a + b) // 2
        left = active & (hi < m) & (b - a > 1)
        right = active & (lo >= m) & (b - a > 1)
        b[left] = m[left]
        a[right] = m[right]
        active = left | right
    # post-order: by right end, then by range size, then by unknown index
    return np.lexsort((np.arange(ndof), b - a, b))
