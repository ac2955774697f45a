import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from alfeld_elast.mesh import (
    MeshError, alfeld_split, barycentric_gradients, build_connectivity, generate_cube_mesh,
    read_mesh, red_refine, reference_simplex, write_mesh,
)

REF_TET = """# reference tetrahedron
3 4 1
0 0 0
1 0 0
0 1 0
0 0 1
0 1 2 3
"""


def test_cube_counts():
    m1 = generate_cube_mesh(1)
    assert (len(m1.vertices), m1.ncells) == (8, 6)
    m2 = generate_cube_mesh(2)
    assert (len(m2.vertices), m2.ncells) == (27, 48)


@pytest.mark.parametrize("n", [1, 2, 4])
def test_cube_volume(n):
    m = generate_cube_mesh(n)
    assert np.all(m.volumes > 0)
    assert abs(m.volumes.sum() - 1.0) < 1e-14


def test_cube_rejects_zero():
    with pytest.raises(MeshError):
        generate_cube_mesh(0)


def test_read_reference_tet():
    m = read_mesh(REF_TET)
    assert m.ncells == 1
    assert m.volumes[0] == pytest.approx(1 / 6, abs=1e-16)


def test_read_inverted_cell_names_it():
    text = REF_TET.replace("0 1 2 3", "0 2 1 3")
    with pytest.raises(MeshError, match="cell 0"):
        read_mesh(text)


@pytest.mark.parametrize("bad, msg", [
    ("3 4\n", "header"),
    ("3 4 1\n0 0 0\n1 0 0\n0 1 0\n0 0 1\n0 1 2 9\n", "out of range"),
    ("3 4 1\n0 0 0\n1 0 0\n0 1 0\n0 0 1\n", "expected 5"),
    ("3 4 1\n0 0 0\n1 0 x\n0 1 0\n0 0 1\n0 1 2 3\n", "line 3"),
])
def test_read_errors(bad, msg):
    with pytest.raises(MeshError, match=msg):
        read_mesh(bad)


def test_write_read_round_trip():
    m = generate_cube_mesh(1)
    back = read_mesh(write_mesh(m))
    assert np.array_equal(back.vertices, m.vertices)
    assert np.array_equal(back.cells, m.cells)


def test_split_reference_tet(ref_tet):
    assert np.allclose(ref_tet.subvolumes, 1 / 24, atol=1e-16)


def test_split_cube(cube1):
    assert cube1.refined.ncells == 24
    assert abs(cube1.subvolumes.sum() - 1.0) < 1e-14
    assert len(cube1.internal_facets) == 6


def test_split_triangle():
    cx = alfeld_split(reference_simplex(2))
    assert cx.refined.ncells == 3
    assert np.allclose(cx.subvolumes, 1 / 6)


def test_exterior_split_point_rejected():
    m = reference_simplex(3)
    with pytest.raises(MeshError):
        alfeld_split(m, np.array([[1.0, 1.0, 1.0]]))


def test_connectivity_single_tet(ref_tet):
    con = build_connectivity(ref_tet)
    assert con.n_macro_facets == 4 and con.n_boundary_facets == 4
    assert int((~con.refined.boundary).sum()) == 6


def _brute_force_pairs(mesh):
    faces = {}
    for c, cell in enumerate(mesh.cells):
        for f in itertools.combinations(sorted(cell), 3):
            faces.setdefault(f, []).append(c)
    return faces


def test_connectivity_cube(cube1):
    con = build_connectivity(cube1)
    faces = _brute_force_pairs(cube1.parent)
    assert con.n_macro_facets == len(faces) == 18
    assert con.n_interior_facets == sum(len(v) == 2 for v in faces.values()) == 6
    assert con.n_boundary_facets == 12
    for ft in (con.macro, con.refined):
        assert np.abs(np.linalg.norm(ft.normals, axis=1) - 1).max() < 1e-14


def test_normal_orientation(cube2):
    m = cube2.parent
    ft = m.facets
    centroids = m.cell_points().mean(axis=1)
    fc = m.vertices[ft.vertices].mean(axis=1)
    # normals point away from the lower-indexed incident cell
    d = np.einsum("fi,fi->f", ft.normals, fc - centroids[ft.cells[:, 0]])
    assert np.all(d > 0)
    inner = ~ft.boundary
    assert np.all(ft.cells[inner, 0] < ft.cells[inner, 1])


def test_conforming_shared_facets(cube2):
    m = cube2.parent
    ft = m.facets
    for c in range(m.ncells):
        for i in range(4):
            g = ft.cell_facets[c, i]
            local = np.sort(np.delete(m.cells[c], i))
            assert np.array_equal(local, ft.vertices[g])


def test_orientation_independent_of_vertex_order():
    m = generate_cube_mesh(1)
    perm = np.random.default_rng(3).permutation(len(m.vertices))
    inv = np.argsort(perm)
    lines = write_mesh(m).splitlines()
    verts = [lines[1 + p] for p in perm]
    cells = [" ".join(str(inv[int(t)]) for t in ln.split()) for ln in lines[9:]]
    m2 = read_mesh("\n".join([lines[0]] + verts + cells))

    def normals_by_facet(mesh):
        ft = mesh.facets
        return {frozenset(map(tuple, mesh.vertices[v])): n for v, n in zip(ft.vertices, ft.normals)}

    a, b = normals_by_facet(m), normals_by_facet(m2)
    assert a.keys() == b.keys()
    for key in a:
        assert np.allclose(a[key], b[key], atol=1e-14)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_barycentric_round_trip(seed):
    rng = np.random.default_rng(seed)
    m = generate_cube_mesh(1)
    cx = alfeld_split(m)
    P = cx.subcell_points().reshape(-1, 4, 3)
    G = barycentric_gradients(P)  # (n, 4, 3)
    lam = rng.dirichlet(np.ones(4), size=10)
    x = np.einsum("qa,nad->nqd", lam, P)
    back = np.einsum("nad,nqd->nqa", G, x - P[:, None, 0]) + np.eye(4)[0]
    assert np.abs(back - lam[None]).max() < 1e-13


def test_red_refine_volume():
    fine, parent = red_refine(generate_cube_mesh(1))
    assert fine.ncells == 48
    assert np.all(fine.volumes > 0)
    assert np.allclose(np.bincount(parent, fine.volumes), generate_cube_mesh(1).volumes)
