"""Simplicial meshes, Alfeld splits and oriented facet tables."""
import itertools
from dataclasses import dataclass
from functools import cached_property
from math import factorial

import numpy as np


class MeshError(ValueError):
    """Raised for malformed or invalid mesh data."""


def signed_volumes(vertices, cells):
    P = vertices[cells]  # (nc, N+1, N)
    J = P[:, 1:, :] - P[:, :1, :]
    return np.linalg.det(J) / factorial(vertices.shape[1])


def barycentric_gradients(P):
    """Gradients of barycentric coordinates on simplices ``P`` ((..., N+1, N)) -> (..., N+1, N)."""
    P = np.asarray(P, dtype=float)
    J = np.swapaxes(P[..., 1:, :] - P[..., :1, :], -1, -2)  # columns are edge vectors
    Jinv = np.linalg.inv(J)  # rows = grads of lambda_1..lambda_N
    g0 = -Jinv.sum(axis=-2, keepdims=True)
    return np.concatenate([g0, Jinv], axis=-2)


def cell_diameters(vertices, cells):
    P = vertices[cells]
    n = cells.shape[1]
    d = np.zeros(len(cells))
    for a, b in itertools.combinations(range(n), 2):
        d = np.maximum(d, np.linalg.norm(P[:, a] - P[:, b], axis=1))
    return d


@dataclass(frozen=True)
class FacetTable:
    """Facets of a simplicial mesh keyed by their sorted vertex tuples.

    ``cell_facets[c, i]`` is the facet opposite local vertex ``i`` of cell ``c``;
    ``normals`` are unit normals pointing from the lower-indexed incident cell to
    the higher one (outward on the boundary); ``cell_sign[c, i]`` is +1 when the
    global normal is outward for cell ``c``.
    """
    vertices: np.ndarray      # (nf, N) sorted global vertex ids
    cells: np.ndarray         # (nf, 2) incident cells, -1 if boundary
    normals: np.ndarray       # (nf, N)
    measures: np.ndarray      # (nf,)
    cell_facets: np.ndarray   # (nc, N+1)
    cell_sign: np.ndarray     # (nc, N+1)

    @property
    def boundary(self):
        return self.cells[:, 1] < 0

    def __len__(self):
        return len(self.vertices)


def _facet_normal_and_measure(pts):
    """Unit normal (arbitrary sign) and (N-1)-measure of facets with vertex rows ``pts`` (nf, N, N)."""
    nf, k, N = pts.shape
    E = pts[:, 1:, :] - pts[:, :1, :]  # (nf, N-1, N)
    # normal via generalized cross product: cofactors of [E; x]
    normals = np.empty((nf, N))
    for j in range(N):
        minor = np.delete(E, j, axis=2)
        normals[:, j] = (-1) ** j * (np.linalg.det(minor) if N > 1 else 1.0)
    norm = np.linalg.norm(normals, axis=1)
    measure = norm / factorial(N - 1)
    return normals / norm[:, None], measure


@dataclass(frozen=True)
class SimplexMesh:
    vertices: np.ndarray  # (nv, N)
    cells: np.ndarray     # (nc, N+1) int

    def __post_init__(self):
        v = np.ascontiguousarray(self.vertices, dtype=float)
        c = np.ascontiguousarray(self.cells, dtype=np.int64)
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "cells", c)
        v.setflags(write=False)
        c.setflags(write=False)

    @property
    def ndim(self):
        return self.vertices.shape[1]

    @property
    def ncells(self):
        return len(self.cells)

    def cell_points(self):
        return self.vertices[self.cells]

    @cached_property
    def volumes(self):
        return signed_volumes(self.vertices, self.cells)

    @cached_property
    def diameters(self):
        return cell_diameters(self.vertices, self.cells)

    def validate(self):
        N = self.ndim
        if self.cells.ndim != 2 or self.cells.shape[1] != N + 1:
            raise MeshError(f"cells must have {N + 1} vertices")
        if self.cells.size and (self.cells.min() < 0 or self.cells.max() >= len(self.vertices)):
            raise MeshError("cell vertex index out of range")
        vol = self.volumes
        scale = np.max(self.diameters, initial=1.0) ** N
        bad = np.nonzero(vol <= 1e-14 * scale)[0]
        if len(bad):
            raise MeshError(f"cell {bad[0]} is inverted or degenerate (signed volume {vol[bad[0]]:.3e})")
        self.facets  # incidence check
        return self

    @cached_property
    def facets(self):
        N = self.ndim
        nc = self.ncells
        local = np.array([[j for j in range(N + 1) if j != i] for i in range(N + 1)])
        fv = np.sort(self.cells[:, local], axis=2).reshape(-1, N)  # (nc*(N+1), N)
        keys, inverse, counts = np.unique(fv, axis=0, return_inverse=True, return_counts=True)
        inverse = inverse.reshape(-1)
        if np.any(counts > 2):
            raise MeshError("nonconforming mesh: facet shared by more than two cells")
        order = np.argsort(inverse, kind="stable")
        owner = np.repeat(np.arange(nc), N + 1)[order]
        starts = np.concatenate([[0], np.cumsum(counts)[:-1]])
        fcells = np.full((len(keys), 2), -1, dtype=np.int64)
        fcells[:, 0] = owner[starts]
        two = counts == 2
        fcells[two, 1] = owner[starts[two] + 1]
        normals, measures = _facet_normal_and_measure(self.vertices[keys])
        # orient: outward from fcells[:, 0] (the smaller cell index)
        opp_local = np.argmax(
            (self.cells[fcells[:, 0]][:, :, None] != keys[:, None, :]).all(axis=2), axis=1)
        opp = self.vertices[self.cells[fcells[:, 0], opp_local]]
        flip = np.einsum("ij,ij->i", normals, self.vertices[keys[:, 0]] - opp) < 0
        normals[flip] *= -1
        cell_facets = inverse.reshape(nc, N + 1)
        cell_sign = np.where(fcells[cell_facets, 0] == np.arange(nc)[:, None], 1, -1)
        for a in (keys, fcells, normals, measures, cell_facets, cell_sign):
            a.setflags(write=False)
        return FacetTable(keys, fcells, normals, measures, cell_facets, cell_sign)


# ---------------------------------------------------------------------------
# construction and I/O

def generate_cube_mesh(n):
    """Unit cube split into ``n**3`` subcubes of 6 Kuhn tetrahedra each."""
    if n < 1:
        raise MeshError("cells per axis must be >= 1")
    g = np.linspace(0.0, 1.0, n + 1)
    X, Y, Z = np.meshgrid(g, g, g, indexing="ij")
    vertices = np.column_stack([X.ravel(), Y.ravel(), Z.ravel()])

    def vid(i, j, k):
        return (i * (n + 1) + j) * (n + 1) + k

    cells = []
    for i, j, k in itertools.product(range(n), repeat=3):
        for perm in itertools.permutations(range(3)):
            p = [i, j, k]
            tet = [vid(*p)]
            for axis in perm:
                p[axis] += 1
                tet.append(vid(*p))
            cells.append(tet)
    cells = np.array(cells, dtype=np.int64)
    vol = signed_volumes(vertices, cells)
    neg = vol < 0
    cells[neg, 2], cells[neg, 3] = cells[neg, 3].copy(), cells[neg, 2].copy()
    return SimplexMesh(vertices, cells)


def reference_simplex(ndim):
    return SimplexMesh(np.vstack([np.zeros(ndim), np.eye(ndim)]),
                       np.arange(ndim + 1)[None, :])


def read_mesh(text):
    """Parse the ASCII mesh format (header ``ndim nverts ncells``, ``#`` comments)."""
    lines = [(no, ln.strip()) for no, ln in enumerate(text.splitlines(), start=1)]
    lines = [(no, ln) for no, ln in lines if ln and not ln.startswith("#")]
    if not lines:
        raise MeshError("empty mesh file")
    no, header = lines[0]
    try:
        ndim, nv, nc = (int(t) for t in header.split())
    except ValueError:
        raise MeshError(f"line {no}: malformed header {header!r}") from None
    if ndim < 1 or nv < 0 or nc < 0:
        raise MeshError(f"line {no}: invalid header values")
    body = lines[1:]
    if len(body) != nv + nc:
        raise MeshError(f"expected {nv + nc} data lines after header, found {len(body)}")
    verts = np.empty((nv, ndim))
    for r, (no, ln) in enumerate(body[:nv]):
        tok = ln.split()
        if len(tok) != ndim:
            raise MeshError(f"line {no}: expected {ndim} coordinates")
        try:
            verts[r] = [float(t) for t in tok]
        except ValueError:
            raise MeshError(f"line {no}: bad coordinate") from None
    cells = np.empty((nc, ndim + 1), dtype=np.int64)
    for r, (no, ln) in enumerate(body[nv:]):
        tok = ln.split()
        if len(tok) != ndim + 1:
            raise MeshError(f"line {no}: expected {ndim + 1} vertex indices")
        try:
            idx = [int(t) for t in tok]
        except ValueError:
            raise MeshError(f"line {no}: bad vertex index") from None
        if min(idx) < 0 or max(idx) >= nv:
            raise MeshError(f"line {no}: vertex index out of range")
        cells[r] = idx
    mesh = SimplexMesh(verts, cells)
    vol = mesh.volumes
    scale = np.max(mesh.diameters, initial=1.0) ** ndim
    for c in np.nonzero(vol <= 1e-14 * scale)[0]:
        no = body[nv + c][0]
        raise MeshError(f"line {no}: cell {c} is inverted or degenerate")
    return mesh.validate()


def write_mesh(mesh):
    out = [f"{mesh.ndim} {len(mesh.vertices)} {mesh.ncells}"]
    out += [" ".join(f"{x:.17g}" for x in v) for v in mesh.vertices]
    out += [" ".join(str(int(i)) for i in c) for c in mesh.cells]
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# Alfeld split

@dataclass(frozen=True)
class AlfeldComplex:
    """Alfeld refinement of every macro cell at its split point.

    Subcell ``i`` of a macro cell is the macro cell with vertex ``i`` replaced by
    the split point, which keeps its orientation.  The refined mesh numbers the
    split point of macro cell ``c`` as vertex ``nverts + c`` and the subcells of
    ``c`` as ``c*(N+1) + i``.
    """
    parent: SimplexMesh
    split_points: np.ndarray  # (nc, N)

    @property
    def ndim(self):
        return self.parent.ndim

    @property
    def nsub(self):
        return self.ndim + 1

    @cached_property
    def refined(self):
        m = self.parent
        N = self.ndim
        verts = np.vstack([m.vertices, self.split_points])
        zid = len(m.vertices) + np.arange(m.ncells)
        sub = np.repeat(m.cells[:, None, :], N + 1, axis=1).copy()
        idx = np.arange(N + 1)
        sub[:, idx, idx] = zid[:, None]
        return SimplexMesh(verts, sub.reshape(-1, N + 1))

    def subcell_points(self):
        """(nc, N+1 subcells, N+1 vertices, N) coordinates in local order."""
        N = self.ndim
        return self.refined.cell_points().reshape(self.parent.ncells, N + 1, N + 1, N)

    @cached_property
    def subvolumes(self):
        return self.refined.volumes.reshape(self.parent.ncells, self.nsub)

    @cached_property
    def internal_facets(self):
        """Per macro cell: pairs (a, b) of subcells sharing the facet through z missing x_a, x_b."""
        return list(itertools.combinations(range(self.nsub), 2))

    def subcell_barycenters(self):
        return self.subcell_points().mean(axis=2)


def alfeld_split(mesh, split_points=None):
    mesh.validate()
    if split_points is None:
        split_points = mesh.cell_points().mean(axis=1)
    split_points = np.asarray(split_points, dtype=float)
    cx = AlfeldComplex(mesh, split_points)
    vol = cx.subvolumes
    if np.any(vol <= 0):
        raise MeshError("split point not interior to its cell")
    if not np.allclose(vol.sum(axis=1), mesh.volumes, rtol=1e-13, atol=0):
        raise MeshError("subcells do not partition their macro cells")
    return cx


@dataclass(frozen=True)
class Connectivity:
    macro: FacetTable
    refined: FacetTable

    @property
    def n_macro_facets(self):
        return len(self.macro)

    @property
    def n_boundary_facets(self):
        return int(self.macro.boundary.sum())

    @property
    def n_interior_facets(self):
        return int((~self.macro.boundary).sum())


def build_connectivity(cx):
    """Facet tables of the macro mesh and of its Alfeld refinement."""
    macro = cx.parent.facets
    refined = cx.refined.facets
    N = cx.ndim
    # internal Alfeld facets must pair subcells of the same macro cell
    inner = ~refined.boundary
    pc = refined.cells[inner] // (N + 1)
    z = refined.vertices[inner].max(axis=1) >= len(cx.parent.vertices)
    if np.any(z & (pc[:, 0] != pc[:, 1])):
        raise MeshError("nonconforming adjacency in Alfeld refinement")
    return Connectivity(macro, refined)


def red_refine(mesh):
    """Uniform 1:8 refinement of a tetrahedral mesh; returns (fine mesh, parent cell of each child)."""
    if mesh.ndim != 3:
        raise MeshError("red refinement implemented for tetrahedra")
    edges = {}
    verts = [v for v in mesh.vertices]

    def mid(a, b):
        key = (min(a, b), max(a, b))
        if key not in edges:
            edges[key] = len(verts)
            verts.append(0.5 * (mesh.vertices[a] + mesh.vertices[b]))
        return edges[key]

    children, parent = [], []
    for c, (x0, x1, x2, x3) in enumerate(mesh.cells):
        m01, m02, m03 = mid(x0, x1), mid(x0, x2), mid(x0, x3)
        m12, m13, m23 = mid(x1, x2), mid(x1, x3), mid(x2, x3)
        kids = [(x0, m01, m02, m03), (m01, x1, m12, m13), (m02, m12, x2, m23), (m03, m13, m23, x3),
                (m01, m02, m03, m13), (m01, m02, m12, m13), (m02, m03, m13, m23), (m02, m12, m13, m23)]
        children.extend(kids)
        parent.extend([c] * 8)
    verts = np.array(verts)
    cells = np.array(children, dtype=np.int64)
    vol = signed_volumes(verts, cells)
    neg = vol < 0
    cells[neg, 2], cells[neg, 3] = cells[neg, 3].copy(), cells[neg, 2].copy()
    return SimplexMesh(verts, cells), np.array(parent)
