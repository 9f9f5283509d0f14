"""Barrier families beta_eps = 1 - u_eps and their certification.

u_eps is the capacity potential of (D(z, eps, c), B(z, 1)); the field
1 - u_eps is a candidate for the eps-relaxed barrier conditions: it must be
a discrete supersolution, vanish at x0 (operationalized as a decaying probe
ladder rho in {4h, 8h, 16h}, since a finite mesh cannot test a limit) and
stay positive where d(x, x0) >= eps.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from . import geometry as geo
from . import mesh as msh
from . import solver
from .fluxop import FluxField

__all__ = ["BarrierCertificate", "build_barrier", "certify", "globalize"]

POSITIVITY_FLOOR_REL = 1e-12
DECAY_FACTOR = 0.5


@dataclass
class BarrierCertificate:
    x0: np.ndarray
    epsilon: float
    supersolution_margin: float
    residual_scale: float
    vanish_at_x0: Dict[float, float]   # probe radius -> max |field| within it
    positivity_margin: float
    passes: bool
    notes: str = ""

    def to_json(self) -> str:
        return json.dumps({
            "x0": list(self.x0),
            "epsilon": self.epsilon,
            "supersolution_margin": self.supersolution_margin,
            "residual_scale": self.residual_scale,
            "vanish_at_x0": {("%g" % r): v for r, v in self.vanish_at_x0.items()},
            "positivity_margin": self.positivity_margin,
            "passes": self.passes,
            "notes": self.notes,
        }, indent=2)


def build_barrier(x0, epsilon: float, codim: int, p: float, h: float,
                  z=None, domain_radius: float = 1.0,
                  metric=None, tol: float = 1e-9
                  ) -> Tuple[msh.ScalarField, solver.DirichletProblem, solver.SolveReport]:
    """beta_eps = 1 - u_eps with u_eps the potential of (D(z,eps,c), B(z,1)).

    The caller supplies the disk center z (default x0); x0 must lie on
    D(z, eps, codim).  codim = n gives a point obstacle.
    Returns (field, problem, solve report); the problem is the one whose
    free nodes the certification margins are computed over.
    """
    x0 = np.asarray(x0, dtype=float)
    n = x0.size
    z = x0.copy() if z is None else np.asarray(z, dtype=float)
    if codim >= n:
        obstacle: geo.Region = geo.PointSet(z)
        if np.linalg.norm(x0 - z) > 1e-9:
            raise ValueError("point obstacle requires x0 = z")
    else:
        obstacle = geo.CodimDisk(z, epsilon, codim)
        if not geo.contains(obstacle, x0, tol=1e-9):
            raise ValueError("x0 does not lie on the disk D(z, eps, c); "
                             "supply an interior-tangent center z")
    dom = geo.Ball(z, domain_radius)
    m = msh.build_mesh(geo.bounding_box(dom), h)
    m = msh.classify_nodes(m, dom, obstacle)
    if m.obstacle_unresolved:
        raise ValueError("disk classifies no obstacle node at h=%g" % h)
    data = np.zeros(m.n_nodes)
    data[m.classes == msh.OBSTACLE] = 1.0
    flux = FluxField(p, metric)
    problem = solver.DirichletProblem(m, flux, msh.ScalarField(m, data))
    report = solver.solve(problem, tol=tol)
    beta = 1.0 - report.solution.values
    return msh.ScalarField(m, beta), problem, report


def certify(field: msh.ScalarField, x0, epsilon: float, flux: FluxField,
            probes: Optional[List[float]] = None,
            margin_tol: float = 1e-6) -> BarrierCertificate:
    """Check the eps-relaxed barrier conditions on a nodal field.

    Conditions: discrete supersolution (min hat residual above
    -margin_tol * scale), vanish ladder vanish(4h) <= 0.5 * vanish(16h),
    positivity min over d(x, x0) >= eps + h strictly above a relative floor.
    """
    mesh = field.mesh
    x0 = np.asarray(x0, dtype=float)
    h = mesh.h
    if probes is None:
        probes = [4.0 * h, 8.0 * h, 16.0 * h]
    probes = sorted(probes)
    X = mesh.node_coords()
    dist = np.linalg.norm(X - x0, axis=1)
    valid = mesh.classes != msh.EXTERNAL
    vals = field.values

    vanish: Dict[float, float] = {}
    for rho in probes:
        sel = valid & (dist <= rho)
        vanish[rho] = float(np.max(np.abs(vals[sel]))) if np.any(sel) else np.nan

    far = valid & (dist >= epsilon + h)
    positivity = float(np.min(vals[far])) if np.any(far) else np.nan

    asm = solver.Assembler(mesh, flux)
    G = asm.raw_gradient(flux, np.nan_to_num(vals))
    free = np.flatnonzero(mesh.classes == msh.FREE)
    margin = float(np.min(G[free])) if free.size else 0.0

    fl = flux if flux.euclidean else flux.compute_ellipticity(X[valid])
    g = msh.all_gradients(mesh, np.nan_to_num(vals))
    gmax = float(np.max(np.linalg.norm(g, axis=1))) if g.size else 0.0
    scale = fl.beta_ell * gmax ** (flux.p - 1.0) * h ** (mesh.dim - 1)

    amp = float(np.max(np.abs(vals[valid])))
    decay_ok = vanish[probes[0]] <= DECAY_FACTOR * vanish[probes[-1]] + 1e-9 * amp
    pos_ok = np.isfinite(positivity) and positivity > POSITIVITY_FLOOR_REL * amp
    super_ok = margin >= -margin_tol * scale
    passes = bool(decay_ok and pos_ok and super_ok)
    notes = []
    if not super_ok:
        notes.append("supersolution margin %.3g below -%.1g*scale" % (margin, margin_tol))
    if not decay_ok:
        notes.append("vanish ladder does not decay: %s" %
                     {("%g" % r): ("%.4f" % v) for r, v in vanish.items()})
    if not pos_ok:
        notes.append("not strictly positive away from x0")
    return BarrierCertificate(x0, epsilon, margin, scale, vanish, positivity,
                              passes, "; ".join(notes))


def globalize(local_field: msh.ScalarField, x0, inner: geo.Ball,
              outer: geo.Ball) -> msh.ScalarField:
    """min{local, m} on the outer ball, extended by the constant m outside,
    with m the minimum of the local field on the annulus outer minus inner."""
    if not np.allclose(inner.center, outer.center):
        raise ValueError("inner and outer neighborhoods must be concentric")
    if inner.radius >= outer.radius:
        raise ValueError("need inner strictly inside outer")
    mesh = local_field.mesh
    X = mesh.node_coords()
    dist = np.linalg.norm(X - np.asarray(inner.center, float), axis=1)
    valid = mesh.classes != msh.EXTERNAL if mesh.classes is not None \
        else np.ones(mesh.n_nodes, bool)
    ann = valid & (dist >= inner.radius) & (dist <= outer.radius)
    if not np.any(ann):
        raise ValueError("annulus contains no node at this spacing")
    m = float(np.min(local_field.values[ann]))
    if m <= 0:
        raise ValueError("local barrier is not positive on the annulus (m=%g)" % m)
    out = np.where(dist <= outer.radius,
                   np.minimum(local_field.values, m), m)
    out[~valid] = np.nan
    return msh.ScalarField(mesh, out)
