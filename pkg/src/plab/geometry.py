"""Declarative geometry: regions, membership, distances, homotheties.

Regions are closed subsets of R^n described by a small set of primitives
(balls, codimension-c disks, truncated cones, boxes, single points) plus
boolean combinations.  Codimension-c sets live in the trailing-coordinate
subspace: a disk D(z, r, c) consists of the points x with the last c
coordinates of x - z equal to zero and the first n - c coordinates of
squared sum at most r^2.  Membership tests for these measure-zero sets
accept an absolute coordinate slack ``tol`` so that lattice nodes can be
snapped onto them.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

__all__ = [
    "Ball",
    "CodimDisk",
    "TruncatedCone",
    "Box",
    "PointSet",
    "Complement",
    "RegionUnion",
    "RegionIntersection",
    "Homothety",
    "Region",
    "contains",
    "distance_to",
    "boundary_distance",
    "apply_homothety",
    "ambient_dim",
    "declared_dim",
    "bounding_box",
]


def _vec(x) -> np.ndarray:
    v = np.asarray(x, dtype=float)
    if v.ndim != 1:
        raise ValueError("expected a 1-d coordinate array, got shape %s" % (v.shape,))
    return v


@dataclass(frozen=True, eq=False)
class Ball:
    """Closed Euclidean ball.  radius = 0 is allowed and degenerates to a point."""

    center: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", _vec(self.center))
        if self.radius < 0:
            raise ValueError("ball radius must be nonnegative")


@dataclass(frozen=True, eq=False)
class CodimDisk:
    """c-codimensional closed disk in the trailing-coordinate subspace."""

    center: np.ndarray
    radius: float
    codim: int

    def __post_init__(self):
        object.__setattr__(self, "center", _vec(self.center))
        n = self.center.size
        if self.radius <= 0:
            raise ValueError("disk radius must be positive")
        if not (0 <= self.codim < n):
            raise ValueError("codim must satisfy 0 <= c < n")


@dataclass(frozen=True, eq=False)
class TruncatedCone:
    """Truncated closed solid cone of codimension ``codim``.

    The cone lives in the (n-c)-dimensional leading-coordinate subspace
    through its vertex:

        { x : trailing c coords of x-v are 0,
              (x-v).axis >= |x-v| cos(half_angle),  |x-v| <= height }

    ``axis`` must be a unit vector supported on the leading n-c coordinates.
    """

    vertex: np.ndarray
    axis: np.ndarray
    half_angle: float
    height: float
    codim: int = 0

    def __post_init__(self):
        object.__setattr__(self, "vertex", _vec(self.vertex))
        object.__setattr__(self, "axis", _vec(self.axis))
        n = self.vertex.size
        if self.axis.size != n:
            raise ValueError("axis dimension mismatch")
        if not (0 <= self.codim < n):
            raise ValueError("codim must satisfy 0 <= c < n")
        d = n - self.codim
        if self.codim and np.any(np.abs(self.axis[d:]) > 1e-12):
            raise ValueError("axis must lie in the leading (n-c)-coordinate subspace")
        if abs(np.linalg.norm(self.axis) - 1.0) > 1e-9:
            raise ValueError("axis must be a unit vector")
        if not (0.0 < self.half_angle < np.pi / 2):
            raise ValueError("half_angle must lie in (0, pi/2)")
        if self.height <= 0:
            raise ValueError("height must be positive")


@dataclass(frozen=True, eq=False)
class Box:
    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "lo", _vec(self.lo))
        object.__setattr__(self, "hi", _vec(self.hi))
        if self.lo.size != self.hi.size:
            raise ValueError("box corner dimension mismatch")
        if np.any(self.hi <= self.lo):
            raise ValueError("box must have hi > lo componentwise")


@dataclass(frozen=True, eq=False)
class PointSet:
    """A single point, used for codimension-n obstacles."""

    point: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "point", _vec(self.point))


@dataclass(frozen=True, eq=False)
class Complement:
    region: "Region"


@dataclass(frozen=True, eq=False)
class RegionUnion:
    regions: tuple

    def __init__(self, regions: Sequence["Region"]):
        object.__setattr__(self, "regions", tuple(regions))
        if not self.regions:
            raise ValueError("empty union")


@dataclass(frozen=True, eq=False)
class RegionIntersection:
    regions: tuple

    def __init__(self, regions: Sequence["Region"]):
        object.__setattr__(self, "regions", tuple(regions))
        if not self.regions:
            raise ValueError("empty intersection")


Region = Union[
    Ball, CodimDisk, TruncatedCone, Box, PointSet,
    Complement, RegionUnion, RegionIntersection,
]

_PRIMITIVES = (Ball, CodimDisk, TruncatedCone, Box, PointSet)


def ambient_dim(region: Region) -> int:
    if isinstance(region, Ball):
        return region.center.size
    if isinstance(region, CodimDisk):
        return region.center.size
    if isinstance(region, TruncatedCone):
        return region.vertex.size
    if isinstance(region, Box):
        return region.lo.size
    if isinstance(region, PointSet):
        return region.point.size
    if isinstance(region, Complement):
        return ambient_dim(region.region)
    if isinstance(region, (RegionUnion, RegionIntersection)):
        dims = {ambient_dim(r) for r in region.regions}
        if len(dims) != 1:
            raise ValueError("mixed ambient dimensions in boolean region")
        return dims.pop()
    raise TypeError("not a region: %r" % (region,))


def declared_dim(region: Region) -> int:
    """Dimension of the set as a manifold (n - codim for disks and cones)."""
    n = ambient_dim(region)
    if isinstance(region, (CodimDisk, TruncatedCone)):
        return n - region.codim
    if isinstance(region, PointSet):
        return 0
    return n


def _check_dim(region: Region, x: np.ndarray):
    if x.size != ambient_dim(region):
        raise ValueError(
            "point dimension %d does not match region dimension %d"
            % (x.size, ambient_dim(region))
        )


def contains(region: Region, x, tol: float = 0.0) -> bool:
    """Closed-set membership; ``tol`` slackens the coordinate-equality tests
    of measure-zero (codim > 0) sets."""
    x = _vec(x)
    _check_dim(region, x)
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    if isinstance(region, Ball):
        return float(np.linalg.norm(x - region.center)) <= region.radius
    if isinstance(region, CodimDisk):
        y = x - region.center
        d = y.size - region.codim
        if np.any(np.abs(y[d:]) > tol):
            return False
        return float(np.dot(y[:d], y[:d])) <= region.radius ** 2
    if isinstance(region, TruncatedCone):
        y = x - region.vertex
        d = y.size - region.codim
        if np.any(np.abs(y[d:]) > tol):
            return False
        yl = y[:d]
        r = float(np.linalg.norm(yl))
        if r > region.height:
            return False
        return float(np.dot(yl, region.axis[:d])) >= r * np.cos(region.half_angle) - 1e-12
    if isinstance(region, Box):
        return bool(np.all(x >= region.lo) and np.all(x <= region.hi))
    if isinstance(region, PointSet):
        return bool(np.all(np.abs(x - region.point) <= tol))
    if isinstance(region, Complement):
        return not contains(region.region, x, tol)
    if isinstance(region, RegionUnion):
        return any(contains(r, x, tol) for r in region.regions)
    if isinstance(region, RegionIntersection):
        return all(contains(r, x, tol) for r in region.regions)
    raise TypeError("not a region: %r" % (region,))


def _sector_distance(t: float, rho: float, theta: float, height: float) -> float:
    """Distance in the (axial, radial) half-plane to the circular sector
    {angle <= theta, radius <= height} centered at the origin."""
    r = float(np.hypot(t, rho))
    if r == 0.0:
        return 0.0
    phi = float(np.arctan2(rho, t))  # in [0, pi] since rho >= 0
    if phi <= theta:
        return max(0.0, r - height)
    # nearest point lies on the boundary ray at angle theta
    s = t * np.cos(theta) + rho * np.sin(theta)
    s = min(max(s, 0.0), height)
    return float(np.hypot(t - s * np.cos(theta), rho - s * np.sin(theta)))


def distance_to(region: Region, x) -> float:
    """Euclidean distance to the closed set.

    Supported for the primitive convex variants, finite unions of them, and
    intersections (where the max-of-distances rule is used; exact when the
    members overlap the way the Wiener construction needs, a lower bound in
    general).
    """
    x = _vec(x)
    _check_dim(region, x)
    if isinstance(region, Ball):
        return max(0.0, float(np.linalg.norm(x - region.center)) - region.radius)
    if isinstance(region, CodimDisk):
        y = x - region.center
        d = y.size - region.codim
        excess = max(0.0, float(np.linalg.norm(y[:d])) - region.radius)
        return float(np.hypot(excess, np.linalg.norm(y[d:])))
    if isinstance(region, TruncatedCone):
        y = x - region.vertex
        d = y.size - region.codim
        yl = y[:d]
        a = region.axis[:d]
        t = float(np.dot(yl, a))
        w = yl - t * a
        rho = float(np.linalg.norm(w))
        ds = _sector_distance(t, rho, region.half_angle, region.height)
        return float(np.hypot(ds, np.linalg.norm(y[d:])))
    if isinstance(region, Box):
        over = np.maximum(np.maximum(region.lo - x, 0.0), x - region.hi)
        return float(np.linalg.norm(over))
    if isinstance(region, PointSet):
        return float(np.linalg.norm(x - region.point))
    if isinstance(region, Complement) and isinstance(region.region, Ball):
        b = region.region
        return max(0.0, b.radius - float(np.linalg.norm(x - b.center)))
    if isinstance(region, RegionUnion):
        return min(distance_to(r, x) for r in region.regions)
    if isinstance(region, RegionIntersection):
        return max(distance_to(r, x) for r in region.regions)
    raise ValueError("distance_to unsupported for %r" % type(region).__name__)


def boundary_distance(region: Region, x) -> float:
    """Distance to the topological boundary; implemented for the domain
    shapes used in practice (balls and boxes)."""
    x = _vec(x)
    _check_dim(region, x)
    if isinstance(region, Ball):
        return abs(float(np.linalg.norm(x - region.center)) - region.radius)
    if isinstance(region, Box):
        if np.all(x >= region.lo) and np.all(x <= region.hi):
            return float(min(np.min(x - region.lo), np.min(region.hi - x)))
        return distance_to(region, x)
    raise ValueError("boundary_distance unsupported for %r" % type(region).__name__)


def bounding_box(region: Region) -> "Box":
    if isinstance(region, Ball):
        return Box(region.center - region.radius, region.center + region.radius)
    if isinstance(region, Box):
        return region
    raise ValueError("bounding_box unsupported for %r" % type(region).__name__)


def _mat(X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ValueError("expected an (m, n) coordinate array")
    return X


def distance_batch(region: Region, X) -> np.ndarray:
    """Vectorized :func:`distance_to` over rows of X."""
    X = _mat(X)
    if isinstance(region, Ball):
        return np.maximum(0.0, np.linalg.norm(X - region.center, axis=1) - region.radius)
    if isinstance(region, CodimDisk):
        Y = X - region.center
        d = Y.shape[1] - region.codim
        excess = np.maximum(0.0, np.linalg.norm(Y[:, :d], axis=1) - region.radius)
        return np.hypot(excess, np.linalg.norm(Y[:, d:], axis=1))
    if isinstance(region, TruncatedCone):
        Y = X - region.vertex
        d = Y.shape[1] - region.codim
        a = region.axis[:d]
        t = Y[:, :d] @ a
        W = Y[:, :d] - np.outer(t, a)
        rho = np.linalg.norm(W, axis=1)
        r = np.hypot(t, rho)
        phi = np.arctan2(rho, t)
        theta, H = region.half_angle, region.height
        s = np.clip(t * np.cos(theta) + rho * np.sin(theta), 0.0, H)
        d_ray = np.hypot(t - s * np.cos(theta), rho - s * np.sin(theta))
        ds = np.where(phi <= theta, np.maximum(0.0, r - H), d_ray)
        return np.hypot(ds, np.linalg.norm(Y[:, d:], axis=1))
    if isinstance(region, Box):
        over = np.maximum(np.maximum(region.lo - X, 0.0), X - region.hi)
        return np.linalg.norm(over, axis=1)
    if isinstance(region, PointSet):
        return np.linalg.norm(X - region.point, axis=1)
    if isinstance(region, Complement) and isinstance(region.region, Ball):
        b = region.region
        return np.maximum(0.0, b.radius - np.linalg.norm(X - b.center, axis=1))
    if isinstance(region, RegionUnion):
        return np.min([distance_batch(r, X) for r in region.regions], axis=0)
    if isinstance(region, RegionIntersection):
        return np.max([distance_batch(r, X) for r in region.regions], axis=0)
    raise ValueError("distance_batch unsupported for %r" % type(region).__name__)


def contains_batch(region: Region, X, tol: float = 0.0) -> np.ndarray:
    """Vectorized :func:`contains` over rows of X."""
    X = _mat(X)
    if isinstance(region, Ball):
        return np.linalg.norm(X - region.center, axis=1) <= region.radius
    if isinstance(region, Box):
        return np.all(X >= region.lo, axis=1) & np.all(X <= region.hi, axis=1)
    if isinstance(region, Complement):
        return ~contains_batch(region.region, X, tol)
    if isinstance(region, RegionUnion):
        return np.any([contains_batch(r, X, tol) for r in region.regions], axis=0)
    if isinstance(region, RegionIntersection):
        return np.all([contains_batch(r, X, tol) for r in region.regions], axis=0)
    return np.array([contains(region, x, tol) for x in X], dtype=bool)


def boundary_distance_batch(region: Region, X) -> np.ndarray:
    X = _mat(X)
    if isinstance(region, Ball):
        return np.abs(np.linalg.norm(X - region.center, axis=1) - region.radius)
    if isinstance(region, Box):
        inside = np.all(X >= region.lo, axis=1) & np.all(X <= region.hi, axis=1)
        to_faces = np.minimum(np.min(X - region.lo, axis=1), np.min(region.hi - X, axis=1))
        return np.where(inside, to_faces, distance_batch(region, X))
    raise ValueError("boundary_distance_batch unsupported for %r" % type(region).__name__)


@dataclass(frozen=True, eq=False)
class Homothety:
    """Contraction x -> (1 - ratio) * center + ratio * x with ratio in (0, 1]."""

    ratio: float
    center: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "center", _vec(self.center))
        if not (0.0 < self.ratio <= 1.0):
            raise ValueError("homothety ratio must lie in (0, 1]")


def apply_homothety(h: Homothety, x) -> np.ndarray:
    x = _vec(x)
    if x.size != h.center.size:
        raise ValueError("point dimension does not match homothety center")
    return (1.0 - h.ratio) * h.center + h.ratio * x
