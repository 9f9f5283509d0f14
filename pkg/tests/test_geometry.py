"""Region primitives: membership, distances, homothety."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from plab import geometry as geo


def test_ball_contains_and_distance():
    b = geo.Ball([0.0, 0.0], 1.0)
    assert geo.contains(b, [0.3, 0.4])
    assert geo.contains(b, [0.6, 0.8])          # boundary point
    assert not geo.contains(b, [0.7, 0.8])
    assert geo.distance_to(b, [0.0, 2.0]) == pytest.approx(1.0)
    assert geo.distance_to(b, [0.1, 0.2]) == 0.0


def test_point_ball_degenerates():
    b = geo.Ball([1.0, 2.0], 0.0)
    assert geo.contains(b, [1.0, 2.0])
    assert geo.distance_to(b, [1.0, 5.0]) == pytest.approx(3.0)


def test_codim_disk_membership():
    # codim-1 disk in R^2 = segment on the x1-axis
    d = geo.CodimDisk([0.0, 0.0], 0.5, 1)
    assert geo.contains(d, [0.25, 0.0])
    assert not geo.contains(d, [0.25, 0.01])
    assert not geo.contains(d, [0.6, 0.0])
    assert geo.distance_to(d, [0.0, 0.3]) == pytest.approx(0.3)
    assert geo.distance_to(d, [1.0, 0.0]) == pytest.approx(0.5)
    assert geo.distance_to(d, [0.8, 0.4]) == pytest.approx(0.5, rel=1e-12)


def test_codim_disk_declared_dim():
    assert geo.declared_dim(geo.CodimDisk(np.zeros(3), 0.5, 2)) == 1
    assert geo.declared_dim(geo.PointSet(np.zeros(2))) == 0
    assert geo.declared_dim(geo.Ball(np.zeros(3), 1.0)) == 3


def test_cone_membership_and_distance():
    c = geo.TruncatedCone([0.0, 0.0], [1.0, 0.0], np.pi / 6, 0.5, 0)
    assert geo.contains(c, [0.0, 0.0])
    assert geo.contains(c, [0.4, 0.0])
    # on the mantle: angle exactly pi/6
    r = 0.3
    assert geo.contains(c, [r * np.cos(np.pi / 6), r * np.sin(np.pi / 6)])
    assert not geo.contains(c, [r * np.cos(np.pi / 4), r * np.sin(np.pi / 4)])
    assert not geo.contains(c, [0.6, 0.0])
    # perpendicular foot onto the axis segment
    assert geo.distance_to(c, [0.25, 0.4]) == pytest.approx(
        0.4 * np.cos(np.pi / 6) - 0.25 * np.sin(np.pi / 6), rel=1e-9)
    # behind the vertex the nearest point is the vertex
    assert geo.distance_to(c, [-0.3, 0.0]) == pytest.approx(0.3)


def test_cone_codim_validation():
    with pytest.raises(ValueError):
        geo.TruncatedCone(np.zeros(3), [0.0, 0.0, 1.0], np.pi / 6, 0.5, 1)
    with pytest.raises(ValueError):
        geo.TruncatedCone(np.zeros(2), [2.0, 0.0], np.pi / 6, 0.5, 0)
    with pytest.raises(ValueError):
        geo.TruncatedCone(np.zeros(2), [1.0, 0.0], np.pi / 2, 0.5, 0)


def test_planar_cone_in_3d():
    c = geo.TruncatedCone(np.zeros(3), [1.0, 0.0, 0.0], np.pi / 6, 0.5, 1)
    assert geo.contains(c, [0.3, 0.1, 0.0])
    assert not geo.contains(c, [0.3, 0.1, 0.05])
    d_in_plane = geo.distance_to(c, [0.3, 0.3, 0.0])
    assert geo.distance_to(c, [0.3, 0.3, 0.4]) == pytest.approx(
        np.hypot(d_in_plane, 0.4), rel=1e-9)


def test_box_and_complement():
    b = geo.Box([0.0, 0.0], [1.0, 2.0])
    assert geo.contains(b, [0.5, 1.5])
    assert geo.boundary_distance(b, [0.2, 1.0]) == pytest.approx(0.2)
    comp = geo.Complement(geo.Ball([0.0, 0.0], 1.0))
    assert geo.contains(comp, [2.0, 0.0])
    assert not geo.contains(comp, [0.5, 0.0])
    assert geo.distance_to(comp, [0.5, 0.0]) == pytest.approx(0.5)


def test_union_intersection():
    u = geo.RegionUnion([geo.Ball([0.0, 0.0], 0.5), geo.Ball([2.0, 0.0], 0.5)])
    assert geo.contains(u, [2.1, 0.0])
    assert geo.distance_to(u, [1.0, 0.0]) == pytest.approx(0.5)
    i = geo.RegionIntersection([geo.Ball([0.0, 0.0], 1.0),
                                geo.Ball([1.0, 0.0], 1.0)])
    assert geo.contains(i, [0.5, 0.0])
    assert not geo.contains(i, [-0.5, 0.0])


def test_homothety():
    hm = geo.Homothety(0.5, np.zeros(2))
    y = geo.apply_homothety(hm, [1.0, 2.0])
    assert np.allclose(y, [0.5, 1.0])
    with pytest.raises(ValueError):
        geo.Homothety(1.5, np.zeros(2))
    with pytest.raises(ValueError):
        geo.Homothety(0.0, np.zeros(2))


def test_bounding_box():
    bb = geo.bounding_box(geo.Ball([1.0, -1.0], 2.0))
    assert np.allclose(bb.lo, [-1.0, -3.0])
    assert np.allclose(bb.hi, [3.0, 1.0])


pts2 = st.lists(st.floats(-3, 3, allow_nan=False), min_size=2, max_size=2)


@settings(max_examples=100, deadline=None)
@given(pts2)
def test_distance_nonnegative_and_consistent(x):
    regions = [
        geo.Ball([0.0, 0.0], 1.0),
        geo.CodimDisk([0.0, 0.0], 0.5, 1),
        geo.TruncatedCone([0.0, 0.0], [1.0, 0.0], np.pi / 6, 0.5, 0),
        geo.PointSet([0.2, 0.1]),
        geo.Box([-1.0, -1.0], [1.0, 1.0]),
    ]
    for r in regions:
        d = geo.distance_to(r, x)
        assert d >= 0.0
        if geo.contains(r, x):
            assert d <= 1e-12
        if d > 1e-9:
            assert not geo.contains(r, x)


@settings(max_examples=50, deadline=None)
@given(st.lists(pts2, min_size=1, max_size=8))
def test_batch_matches_scalar(pts):
    X = np.asarray(pts)
    for r in [geo.Ball([0.0, 0.0], 1.0), geo.CodimDisk([0.0, 0.0], 0.5, 1),
              geo.TruncatedCone([0.0, 0.0], [1.0, 0.0], np.pi / 4, 0.7, 0)]:
        db = geo.distance_batch(r, X)
        cb = geo.contains_batch(r, X)
        for i, x in enumerate(X):
            assert db[i] == pytest.approx(geo.distance_to(r, x), abs=1e-12)
            assert cb[i] == geo.contains(r, x)
