"""Mesh topology/geometry invariants and MSH parsing."""

import numpy as np
import pytest

from triblend.exceptions import MeshError
from triblend.exceptions import MeshError, UnsupportedElement
from triblend.mesh import Mesh, read_msh, triangle_geometry
from triblend.meshgen import (
    ldomain_mesh,
    polygon_mesh,
    rect_mesh,
    refine4,
    write_msh2,
)


@pytest.fixture(scope="module")
def small_mesh():
    return rect_mesh((0.0, 1.0, 0.0, 1.0), 6, seed=3)


def test_triangle_geometry_basic():
    area, g = triangle_geometry(np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]))
    assert area == pytest.approx(0.5)
    assert np.allclose(g[0], [-1, -1])
    assert np.allclose(g[1], [1, 0])
    assert np.allclose(g[2], [0, 1])


def test_triangle_geometry_rejects_clockwise():
    with pytest.raises(MeshError):
        triangle_geometry(np.array([[0.0, 0.0], [0.0, 1.0], [1.0, 0.0]]))


def test_gradients_are_affine_duals(small_mesh):
    m = small_mesh
    pts = m.verts[m.tris]  # (NT, 3, 2)
    for i in range(3):
        for j in range(3):
            d = np.einsum(
                "td,td->t", m.grad_lambda[:, i], pts[:, j] - pts[:, i]
            )
            want = 0.0 if i == j else -1.0
            assert np.allclose(d, want, atol=1e-12)


def test_total_area(small_mesh):
    assert small_mesh.areas.sum() == pytest.approx(1.0, rel=1e-13)
    assert np.all(small_mesh.areas > 0)


def test_ccw_autofix():
    verts = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    m = Mesh(verts, np.array([[0, 2, 1]]))  # clockwise input
    assert m.areas[0] == pytest.approx(0.5)


def test_edge_conventions(small_mesh):
    m = small_mesh
    # Every local edge maps to the right global edge, and the orientation
    # flag recovers the outward normal.
    for k in range(3):
        a = m.tris[:, k]
        b = m.tris[:, (k + 1) % 3]
        e = m.tri_edges[:, k]
        assert np.all(
            (np.minimum(a, b) == m.edge_verts[e].min(axis=1))
            & (np.maximum(a, b) == m.edge_verts[e].max(axis=1))
        )
    n_out = m.outward_normal()  # (NT, 3, 2)
    for k in range(3):
        mid = m.edge_mid[m.tri_edges[:, k]]
        out = np.einsum("td,td->t", n_out[:, k], mid - m.centroids)
        assert np.all(out > 0)
    assert np.allclose(np.linalg.norm(m.edge_normal, axis=1), 1.0, atol=1e-14)


def test_edge_normal_points_out_of_side0(small_mesh):
    m = small_mesh
    c0 = m.centroids[m.edge_tris[:, 0]]
    s = np.einsum("ed,ed->e", m.edge_normal, m.edge_mid - c0)
    assert np.all(s > 0)
    interior = m.edge_tris[:, 1] >= 0
    c1 = m.centroids[m.edge_tris[interior, 1]]
    s1 = np.einsum(
        "ed,ed->e", m.edge_normal[interior], m.edge_mid[interior] - c1
    )
    assert np.all(s1 < 0)


def test_boundary_edges_on_hull(small_mesh):
    m = small_mesh
    mids = m.edge_mid[m.boundary_edges]
    on_rim = (
        (np.abs(mids[:, 0]) < 1e-12)
        | (np.abs(mids[:, 0] - 1) < 1e-12)
        | (np.abs(mids[:, 1]) < 1e-12)
        | (np.abs(mids[:, 1] - 1) < 1e-12)
    )
    assert np.all(on_rim)
    # Euler relation for a disk-like domain: V - E + T = 1.
    assert (
        len(m.verts) - m.num_edges + m.num_tris == 1
    )


def test_point_areas(small_mesh):
    m = small_mesh
    assert np.all(m.point_area > 0)
    # Each triangle donates |K|/9 to each of its six point DoFs.
    assert m.point_area.sum() == pytest.approx(
        (2.0 / 3.0) * m.areas.sum(), rel=1e-13
    )
    # A midpoint of an interior edge is shared by exactly two triangles.
    e = int(m.edge_tris[:, 1].argmax())  # some interior edge
    k0, k1 = m.edge_tris[e]
    want = (m.areas[k0] + m.areas[k1]) / 9.0
    assert m.point_area[len(m.verts) + e] == pytest.approx(want, rel=1e-13)


def test_inradius(small_mesh):
    m = small_mesh
    per = np.zeros(m.num_tris)
    for k in range(3):
        per += m.edge_length[m.tri_edges[:, k]]
    assert np.allclose(m.inradius(), 2 * m.areas / per, atol=1e-15)


def test_nonmanifold_rejected():
    verts = np.array(
        [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0], [-1.0, 1.0]]
    )
    tris = np.array([[0, 1, 2], [1, 3, 2], [0, 2, 4], [0, 1, 3]])
    # edge (0,1) would belong to triangles 0 and 3, and (1,2)/(0,2) twice too
    with pytest.raises(MeshError):
        Mesh(verts, tris)


def test_refine4(small_mesh):
    m = small_mesh
    r = refine4(m)
    assert r.num_tris == 4 * m.num_tris
    assert r.areas.sum() == pytest.approx(m.areas.sum(), rel=1e-13)
    assert r.h_max() == pytest.approx(0.5 * m.h_max(), rel=1e-12)
    # Nesting: parent vertices survive with identical coordinates.
    assert np.allclose(r.verts[: len(m.verts)], m.verts)


def test_msh22_roundtrip(tmp_path, small_mesh):
    m = small_mesh

    def namer(mids):
        return ["left" if x < 0.5 else "right" for x, _ in mids]

    m.name_boundary(namer)
    path = tmp_path / "unit.msh"
    write_msh2(path, m)
    back = read_msh(path)
    assert np.allclose(back.verts, m.verts)
    assert back.num_tris == m.num_tris
    assert {tuple(sorted(t)) for t in back.tris} == {
        tuple(sorted(t)) for t in m.tris
    }
    # Boundary names survive (match edges by midpoint coordinates).
    for e in m.boundary_edges:
        mid = m.edge_mid[e]
        eb = back.boundary_edges[
            np.argmin(np.linalg.norm(back.edge_mid[back.boundary_edges] - mid, axis=1))
        ]
        assert back.edge_name[eb] == m.edge_name[e]


MSH41_SAMPLE = """$MeshFormat
4.1 0 8
$EndMeshFormat
$PhysicalNames
1
1 7 "lid"
$EndPhysicalNames
$Entities
0 1 1 0
5 0 0 0 1 1 0 1 7 0
1 0 0 0 1 1 0 0 0
$EndEntities
$Nodes
2 4 1 4
1 5 0 2
1
2
0 0 0
1 0 0
2 1 0 2
3
4
1 1 0
0 1 0
$EndNodes
$Elements
2 3 1 3
1 5 1 1
1 3 4
2 1 2 2
2 1 2 3
3 1 3 4
$EndElements
"""


def test_msh41_parse(tmp_path):
    path = tmp_path / "square41.msh"
    path.write_text(MSH41_SAMPLE)
    m = read_msh(path)
    assert len(m.verts) == 4
    assert m.num_tris == 2
    assert m.areas.sum() == pytest.approx(1.0)
    named = [m.edge_name[e] for e in m.boundary_edges if m.edge_name[e]]
    assert named == ["lid"]


def test_ldomain_mesh():
    m = ldomain_mesh(8, seed=1)
    assert m.areas.sum() == pytest.approx(2.5, rel=1e-12)
    # The notch corner (0, 0) must be an exact mesh vertex.
    d = np.linalg.norm(m.verts, axis=1)
    assert d.min() < 1e-12
    # No triangle pokes into the notch x < 0, y < 0.
    assert not np.any((m.centroids[:, 0] < 0) & (m.centroids[:, 1] < 0))


def test_polygon_mesh_ramp():
    tan30 = np.tan(np.pi / 6)
    poly = [
        (-0.25, 0.0),
        (0.0, 0.0),
        (3.0, 3.0 * tan30),
        (3.0, 2.0),
        (-0.25, 2.0),
    ]
    m = polygon_mesh(poly, h=0.1, seed=2)
    # Shoelace area of the polygon.
    p = np.asarray(poly)
    want = 0.5 * np.sum(
        p[:, 0] * np.roll(p[:, 1], -1) - np.roll(p[:, 0], -1) * p[:, 1]
    )
    assert m.areas.sum() == pytest.approx(want, rel=1e-12)
    # All centroids above the ramp line y = x tan(30 deg) for x > 0.
    c = m.centroids
    above = c[:, 1] > (c[:, 0] * tan30) - 1e-9
    assert np.all(above | (c[:, 0] < 0))

MSH22_MINIMAL = """$MeshFormat
2.2 0 8
$EndMeshFormat
$Nodes
3
1 0 0 0
2 1 0 0
3 0 1 0
$EndNodes
$Elements
1
1 2 2 0 1 1 2 3
$EndElements
"""


def test_msh22_minimal_single_triangle(tmp_path):
    path = tmp_path / "tiny.msh"
    path.write_text(MSH22_MINIMAL)
    m = read_msh(path)
    assert m.num_tris == 1
    assert len(m.verts) == 3
    assert len(m.boundary_edges) == 3
    assert np.all(m.edge_tris[:, 1] == -1)


def test_msh22_quadrangle_rejected(tmp_path):
    text = MSH22_MINIMAL.replace(
        "$Elements\n1\n1 2 2 0 1 1 2 3\n",
        "$Nodes-ignored\n$EndNodes-ignored\n$Elements\n1\n1 3 2 0 1 1 2 3 3\n",
    )
    # A 4-node quadrangle (type 3) must be refused, not silently dropped.
    path = tmp_path / "quad.msh"
    path.write_text(text)
    with pytest.raises(UnsupportedElement):
        read_msh(path)


def test_msh41_quadrangle_rejected(tmp_path):
    text = MSH41_SAMPLE.replace("2 1 2 2\n", "2 1 3 2\n")
    path = tmp_path / "quad41.msh"
    path.write_text(text)
    with pytest.raises(UnsupportedElement):
        read_msh(path)


def test_msh22_dangling_node_reference(tmp_path):
    text = MSH22_MINIMAL.replace("1 2 2 0 1 1 2 3", "1 2 2 0 1 1 2 9")
    path = tmp_path / "dangling.msh"
    path.write_text(text)
    with pytest.raises(IndexError):
        read_msh(path)


def test_msh22_malformed_reports_line(tmp_path):
    text = MSH22_MINIMAL.replace("2 1 0 0", "2 one 0 0")
    path = tmp_path / "bad.msh"
    path.write_text(text)
    with pytest.raises(MeshError, match=r"line 7"):
        read_msh(path)
