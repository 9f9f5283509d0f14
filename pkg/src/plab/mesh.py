"""Tensor-grid Kuhn simplicial meshes with node classification.

Each grid cell of spacing h is subdivided into n! simplices, one per
permutation sigma of the axes: the simplex with vertices

    v_0 = cell corner,   v_k = v_{k-1} + h e_{sigma(k)}.

These simplices are non-obtuse, which is what makes the discrete maximum
and comparison principles of the solver meaningful.  On such a simplex the
gradient of the affine interpolant has the closed form

    (grad u)_{sigma(k)} = (u_k - u_{k-1}) / h,

which the assembly routines exploit throughout.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np

from . import geometry as geo

__all__ = [
    "FREE",
    "OUTER",
    "OBSTACLE",
    "EXTERNAL",
    "GridMesh",
    "ScalarField",
    "build_mesh",
    "classify_nodes",
    "p1_gradient",
    "all_gradients",
    "dump_field",
]

FREE = 0
OUTER = 1
OBSTACLE = 2
EXTERNAL = 3


@dataclass(frozen=True, eq=False)
class GridMesh:
    dim: int
    lo: np.ndarray
    hi: np.ndarray
    h: float
    shape: tuple                 # nodes per axis
    perms: np.ndarray            # (n!, n) axis permutations, lexicographic
    simplex_nodes: np.ndarray    # (n_simplices, n+1) node ids along the Kuhn path
    simplex_perm: np.ndarray     # (n_simplices,) index into perms
    classes: Optional[np.ndarray] = None      # per-node tag, set by classify_nodes
    active: Optional[np.ndarray] = None       # simplex ids touching no External node
    obstacle_unresolved: bool = False

    @property
    def n_nodes(self) -> int:
        return int(np.prod(self.shape))

    @property
    def n_simplices(self) -> int:
        return self.simplex_nodes.shape[0]

    @property
    def volume(self) -> float:
        """Volume of every Kuhn simplex: h^n / n!."""
        return self.h ** self.dim / math.factorial(self.dim)

    def node_coords(self, ids=None) -> np.ndarray:
        if ids is None:
            ids = np.arange(self.n_nodes)
        multi = np.unravel_index(np.asarray(ids), self.shape)
        return self.lo + self.h * np.stack(multi, axis=-1).astype(float)

    def node_multi_index(self, ids) -> np.ndarray:
        multi = np.unravel_index(np.asarray(ids), self.shape)
        return np.stack(multi, axis=-1)

    def active_simplices(self) -> np.ndarray:
        if self.active is not None:
            return self.active
        return np.arange(self.n_simplices)

    def barycenters(self, simplex_ids) -> np.ndarray:
        verts = self.node_coords(self.simplex_nodes[simplex_ids].ravel())
        verts = verts.reshape(len(simplex_ids), self.dim + 1, self.dim)
        return verts.mean(axis=1)


@dataclass(eq=False)
class ScalarField:
    """Nodal values on a mesh; NaN marks External nodes."""

    mesh: GridMesh
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.mesh.n_nodes,):
            raise ValueError("field length does not match node count")

    @classmethod
    def from_function(cls, mesh: GridMesh, f: Callable) -> "ScalarField":
        """f maps an (m, n) coordinate block to m values (or a point to a
        value); External nodes are masked to NaN when classes are set."""
        X = mesh.node_coords()
        try:
            vals = np.asarray(f(X), dtype=float)
            if vals.shape != (mesh.n_nodes,):
                raise TypeError
        except TypeError:
            vals = np.array([f(x) for x in X], dtype=float)
        if mesh.classes is not None:
            vals = vals.copy()
            vals[mesh.classes == EXTERNAL] = np.nan
        return cls(mesh, vals)

    @classmethod
    def constant(cls, mesh: GridMesh, c: float) -> "ScalarField":
        return cls(mesh, np.full(mesh.n_nodes, float(c)))

    def copy(self) -> "ScalarField":
        return ScalarField(self.mesh, self.values.copy())


def build_mesh(box: geo.Box, h: float) -> GridMesh:
    """Uniform tensor grid over ``box`` with Kuhn subdivision of each cell.

    ``h`` must divide every edge length to within 1e-9 relative.
    """
    lo, hi = box.lo, box.hi
    n = lo.size
    edges = hi - lo
    cells_f = edges / h
    cells = np.rint(cells_f).astype(int)
    if np.any(cells < 1) or np.any(np.abs(cells_f - cells) > 1e-9 * np.maximum(cells, 1)):
        raise ValueError("spacing %g does not divide the box edges %s" % (h, edges))
    shape = tuple(int(c) + 1 for c in cells)
    strides = np.ones(n, dtype=np.int64)
    for a in range(n - 2, -1, -1):
        strides[a] = strides[a + 1] * shape[a + 1]

    perms = np.array(sorted(itertools.permutations(range(n))), dtype=np.int64)
    nf = perms.shape[0]
    # node-id offsets of the Kuhn path vertices, per permutation
    path = np.zeros((nf, n + 1), dtype=np.int64)
    path[:, 1:] = np.cumsum(strides[perms], axis=1)

    # base node ids of all cells, lexicographic
    ranges = [np.arange(s - 1) for s in shape]
    grids = np.meshgrid(*ranges, indexing="ij")
    base = np.zeros(grids[0].shape, dtype=np.int64)
    for a in range(n):
        base += grids[a] * strides[a]
    base = base.ravel()

    simplex_nodes = (base[:, None, None] + path[None, :, :]).reshape(-1, n + 1)
    simplex_perm = np.tile(np.arange(nf, dtype=np.int64), base.size)
    return GridMesh(
        dim=n, lo=lo.copy(), hi=hi.copy(), h=float(h), shape=shape,
        perms=perms, simplex_nodes=simplex_nodes.astype(np.int64),
        simplex_perm=simplex_perm,
    )


def classify_nodes(
    mesh: GridMesh,
    domain: geo.Region,
    obstacle: Optional[geo.Region] = None,
    snap_tol: Optional[float] = None,
) -> GridMesh:
    """Tag every node as Free / OuterBoundary / Obstacle / External.

    Obstacle wins where the distance to the obstacle set is at most
    ``snap_tol`` (default h/2); the outer-boundary band is the set of nodes
    strictly within h of the domain's topological boundary.
    """
    if snap_tol is None:
        snap_tol = mesh.h / 2.0
    X = mesh.node_coords()
    classes = np.full(mesh.n_nodes, EXTERNAL, dtype=np.uint8)

    inside = geo.contains_batch(domain, X)
    bd = geo.boundary_distance_batch(domain, X)
    near_boundary = bd < mesh.h * (1.0 - 1e-9)
    classes[near_boundary] = OUTER
    classes[inside & ~near_boundary] = FREE

    unresolved = False
    if obstacle is not None:
        obst = geo.distance_batch(obstacle, X) <= snap_tol
        if not np.any(obst):
            unresolved = True
        elif not np.any(obst & (inside | near_boundary)):
            raise ValueError("obstacle lies entirely outside the domain")
        classes[obst] = OBSTACLE

    non_ext = classes[mesh.simplex_nodes] != EXTERNAL
    active = np.flatnonzero(np.all(non_ext, axis=1))
    return replace(mesh, classes=classes, active=active, obstacle_unresolved=unresolved)


def _perm_gradients(mesh: GridMesh, values: np.ndarray, simplex_ids: np.ndarray) -> np.ndarray:
    """Constant P1 gradients on the given simplices, shape (m, n)."""
    S = mesh.simplex_nodes[simplex_ids]
    P = mesh.perms[mesh.simplex_perm[simplex_ids]]
    d = np.diff(values[S], axis=1) / mesh.h
    g = np.empty_like(d)
    np.put_along_axis(g, P, d, axis=1)
    return g


def all_gradients(mesh: GridMesh, values: np.ndarray, simplex_ids=None) -> np.ndarray:
    if simplex_ids is None:
        simplex_ids = mesh.active_simplices()
    return _perm_gradients(mesh, values, np.asarray(simplex_ids))


def p1_gradient(mesh: GridMesh, field: ScalarField, simplex_id: int) -> np.ndarray:
    """Gradient of the affine interpolant on one simplex."""
    if field.mesh is not mesh and field.mesh.shape != mesh.shape:
        raise ValueError("field is not defined on this mesh")
    return _perm_gradients(mesh, field.values, np.array([simplex_id]))[0]


def dump_field(field: ScalarField, path) -> None:
    """Plain-text dump: one line per non-External node, lattice indices then
    value, lexicographic node order."""
    mesh = field.mesh
    ids = np.arange(mesh.n_nodes)
    if mesh.classes is not None:
        ids = ids[mesh.classes != EXTERNAL]
    multi = mesh.node_multi_index(ids)
    with open(path, "w") as fh:
        for m, v in zip(multi, field.values[ids]):
            fh.write(" ".join(str(int(i)) for i in m))
            fh.write(" %.17g\n" % v)
