import math

import numpy as np
import pytest

from triblend.meshgen import rect_mesh
from triblend.norms import (
    convergence_rows,
    error_norms,
    observed_orders,
    point_weights,
)


@pytest.fixture(scope="module")
def mesh():
    return rect_mesh((0.0, 2.0, 0.0, 1.0), 7, seed=11)


def test_point_weights_tile_the_domain(mesh):
    w = point_weights(mesh)
    assert w.shape == (mesh.num_points,)
    assert np.all(w > 0)
    assert abs(w.sum() - mesh.areas.sum()) < 1e-12 * mesh.areas.sum()


def test_zero_error_gives_zero_norms(mesh):
    u = np.random.default_rng(0).normal(size=(mesh.num_tris, 1))
    p = np.random.default_rng(1).normal(size=(mesh.num_points, 1))
    nd = error_norms(mesh, u, p, u.copy(), p.copy())
    for fam in ("internal", "boundary"):
        assert nd[fam] == {"l1": 0.0, "l2": 0.0, "linf": 0.0}


def test_constant_error_norms_are_exact(mesh):
    # Error identically c: L1 = c |Omega|, L2 = c sqrt(|Omega|), Linf = c,
    # for both families, because both weight sets tile the domain.
    c = 0.375
    area = mesh.areas.sum()
    zb = np.zeros((mesh.num_tris, 1))
    zp = np.zeros((mesh.num_points, 1))
    nd = error_norms(mesh, zb + c, zp + c, zb, zp)
    for fam in ("internal", "boundary"):
        assert abs(nd[fam]["l1"] - c * area) < 1e-13 * area
        assert abs(nd[fam]["l2"] - c * math.sqrt(area)) < 1e-13
        assert nd[fam]["linf"] == c


def test_vector_error_uses_euclidean_magnitude(mesh):
    # Components (3, 4) everywhere -> pointwise magnitude 5.
    area = mesh.areas.sum()
    eb = np.tile([3.0, 4.0], (mesh.num_tris, 1))
    ep = np.tile([3.0, 4.0], (mesh.num_points, 1))
    nd = error_norms(mesh, eb, ep, np.zeros_like(eb), np.zeros_like(ep))
    for fam in ("internal", "boundary"):
        assert abs(nd[fam]["l1"] - 5.0 * area) < 1e-12 * area
        assert nd[fam]["linf"] == 5.0


def test_observed_orders():
    assert observed_orders([8.0, 1.0], [2.0, 1.0]) == [3.0]
    got = observed_orders([1.0, 0.25, 0.0625], [1.0, 0.5, 0.25])
    assert all(abs(g - 2.0) < 1e-14 for g in got)
    assert observed_orders([1.0, 0.0], [2.0, 1.0]) == [None]


def _nd(val):
    trip = {"l1": val, "l2": val, "linf": val}
    return {"internal": dict(trip), "boundary": dict(trip)}


def test_convergence_rows_layout():
    rows = convergence_rows([1.0, 0.5], [_nd(1.0), _nd(0.125)])
    assert rows[0]["internal_l1_order"] == ""
    assert abs(rows[1]["internal_l1_order"] - 3.0) < 1e-14
    assert abs(rows[1]["boundary_linf_order"] - 3.0) < 1e-14
    assert rows[1]["h"] == 0.5
    # Exactly resolved solutions produce zero error -> no defined order.
    rows = convergence_rows([1.0, 0.5], [_nd(0.0), _nd(0.0)])
    assert rows[1]["internal_l2_order"] == "NA"
