"""The flux operator A(x, v): p-Laplace and metric-weighted variants.

The Euclidean kind is A(x, v) = |v|^{p-2} v.  The metric kind is the chart
representation of the p-Laplacian on a manifold with metric g_{ij}:

    A_j(x, v) = sqrt(det g) (g^{st} v_s v_t)^{(p-2)/2} g^{ij} v_i

Both are gradients (in v) of the energy densities |v|^p / p and
sqrt(det g) (g^{ij} v_i v_j)^{p/2} / p; the solver minimizes the
epsilon-regularized versions provided here as batched routines, while
``flux_eval`` / ``energy_density`` keep the exact formulas.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Tuple

import numpy as np

from .exprgrammar import compile_expr

__all__ = [
    "MetricField",
    "FluxField",
    "AxiomReport",
    "flux_eval",
    "energy_density",
    "check_axioms",
]


class MetricField:
    """Pointwise SPD metric tensor g_{ij}(x) with batch evaluation."""

    def __init__(self, batch_fn: Callable[[np.ndarray], np.ndarray], dim: int,
                 label: str = "custom"):
        self._batch = batch_fn
        self.dim = dim
        self.label = label

    @classmethod
    def identity(cls, dim: int) -> "MetricField":
        def fn(X):
            m = X.shape[0]
            return np.broadcast_to(np.eye(dim), (m, dim, dim)).copy()
        return cls(fn, dim, "identity")

    @classmethod
    def diagonal(cls, exprs: Sequence[str], dim: int) -> "MetricField":
        if len(exprs) != dim:
            raise ValueError("need one diagonal expression per axis")
        fns = [compile_expr(e, dim) for e in exprs]

        def fn(X):
            m = X.shape[0]
            g = np.zeros((m, dim, dim))
            for i, f in enumerate(fns):
                g[:, i, i] = f(X)
            return g
        return cls(fn, dim, "diagonal(%s)" % ", ".join(exprs))

    @classmethod
    def conformal(cls, expr: str, dim: int) -> "MetricField":
        f = compile_expr(expr, dim)

        def fn(X):
            return f(X)[:, None, None] * np.eye(dim)
        return cls(fn, dim, "conformal(%s)" % expr)

    def tensors(self, X: np.ndarray, validate: bool = True
                ) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Return (g, g_inverse, sqrt_det) at the rows of X.

        Symmetry is enforced exactly; with ``validate`` positive definiteness
        is checked via the smallest eigenvalue (disabled by check_axioms so a
        bad metric shows up as a failed report, not an exception).
        """
        X = np.atleast_2d(np.asarray(X, dtype=float))
        g = np.asarray(self._batch(X), dtype=float)
        if g.shape != (X.shape[0], self.dim, self.dim):
            raise ValueError("metric evaluation returned wrong shape %s" % (g.shape,))
        if np.max(np.abs(g - np.transpose(g, (0, 2, 1)))) > 0:
            raise ValueError("metric tensor is not symmetric")
        if validate:
            eig = np.linalg.eigvalsh(g)
            if np.min(eig) <= 0:
                raise ValueError("metric tensor is not positive definite "
                                 "(min eigenvalue %g)" % np.min(eig))
        with np.errstate(invalid="ignore"):
            sdet = np.sqrt(np.linalg.det(g))
        return g, np.linalg.inv(g), sdet

    def eigen_bounds(self, X: np.ndarray, validate: bool = True
                     ) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(lambda_min, lambda_max) of g^{ij} and sqrt(det g) at the rows of X."""
        g, ginv, sdet = self.tensors(X, validate=validate)
        eig = np.linalg.eigvalsh(ginv)
        return eig[:, 0], eig[:, -1], sdet


@dataclass(eq=False)
class FluxField:
    """Exponent p plus the flux kind; alpha/beta_ell are the two-sided
    ellipticity constants (1 for the Euclidean kind, metric-eigenvalue
    derived otherwise, via :meth:`compute_ellipticity`)."""

    p: float
    metric: Optional[MetricField] = None
    alpha: float = 1.0
    beta_ell: float = 1.0

    def __post_init__(self):
        if not self.p > 1:
            raise ValueError("exponent p must exceed 1")
        if self.alpha > self.beta_ell:
            raise ValueError("alpha must not exceed beta_ell")

    @property
    def euclidean(self) -> bool:
        return self.metric is None

    def compute_ellipticity(self, X: np.ndarray) -> "FluxField":
        """Ellipticity constants over the sample points X (e.g. mesh nodes):
        <A(x,v), v> >= alpha |v|^p and |A(x,v)| <= beta_ell |v|^{p-1}."""
        if self.euclidean:
            return FluxField(self.p, None, 1.0, 1.0)
        lmin, lmax, sdet = self.metric.eigen_bounds(X)
        p = self.p
        alpha = float(np.min(sdet * lmin ** (p / 2.0)))
        ext = lmax if p >= 2 else lmin
        beta = float(np.max(sdet * lmax * ext ** ((p - 2.0) / 2.0)))
        return FluxField(p, self.metric, alpha, beta)

    # --- batched simplex-level evaluation used by the solver -------------

    def metric_data(self, X: np.ndarray):
        """Per-point (g_inverse, sqrt_det), or None for the Euclidean kind."""
        if self.euclidean:
            return None
        _, ginv, sdet = self.metric.tensors(X)
        return ginv, sdet

    def density_batch(self, grads: np.ndarray, data, eps: float) -> np.ndarray:
        p = self.p
        if self.euclidean:
            s = np.einsum("mi,mi->m", grads, grads) + eps * eps
            return s ** (p / 2.0) / p
        ginv, sdet = data
        q = np.einsum("mi,mij,mj->m", grads, ginv, grads) + eps * eps
        return sdet * q ** (p / 2.0) / p

    def flux_batch(self, grads: np.ndarray, data, eps: float) -> np.ndarray:
        p = self.p
        if self.euclidean:
            s = np.einsum("mi,mi->m", grads, grads) + eps * eps
            w = _safe_pow(s, (p - 2.0) / 2.0)
            return w[:, None] * grads
        ginv, sdet = data
        Gg = np.einsum("mij,mj->mi", ginv, grads)
        q = np.einsum("mi,mi->m", grads, Gg) + eps * eps
        w = sdet * _safe_pow(q, (p - 2.0) / 2.0)
        return w[:, None] * Gg

    def hessian_batch(self, grads: np.ndarray, data, eps: float) -> np.ndarray:
        p = self.p
        n = grads.shape[1]
        if self.euclidean:
            s = np.einsum("mi,mi->m", grads, grads) + eps * eps
            w = _safe_pow(s, (p - 2.0) / 2.0)
            w2 = (p - 2.0) * _safe_pow(s, (p - 4.0) / 2.0)
            H = w[:, None, None] * np.eye(n)
            H = H + w2[:, None, None] * grads[:, :, None] * grads[:, None, :]
            return H
        ginv, sdet = data
        Gg = np.einsum("mij,mj->mi", ginv, grads)
        q = np.einsum("mi,mi->m", grads, Gg) + eps * eps
        w = sdet * _safe_pow(q, (p - 2.0) / 2.0)
        w2 = sdet * (p - 2.0) * _safe_pow(q, (p - 4.0) / 2.0)
        H = w[:, None, None] * ginv
        H = H + w2[:, None, None] * Gg[:, :, None] * Gg[:, None, :]
        return H


def _safe_pow(s: np.ndarray, e: float) -> np.ndarray:
    """s**e with the continuous-extension convention s=0 -> 0 for e<0."""
    if e >= 0:
        return s ** e
    out = np.zeros_like(s)
    nz = s > 0
    out[nz] = s[nz] ** e
    return out


def flux_eval(A: FluxField, x, v) -> np.ndarray:
    """Exact flux A(x, v).  For p < 2 the flux extends continuously by 0 at
    v = 0 and that convention is applied."""
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    if not np.all(np.isfinite(v)) or not np.all(np.isfinite(x)):
        raise ValueError("non-finite input to flux_eval")
    p = A.p
    if A.euclidean:
        nv = float(np.linalg.norm(v))
        if nv == 0.0:
            return np.zeros_like(v)
        return nv ** (p - 2.0) * v
    _, ginv, sdet = A.metric.tensors(x[None, :])
    ginv, sdet = ginv[0], float(sdet[0])
    q = float(v @ ginv @ v)
    if q == 0.0:
        return np.zeros_like(v)
    return sdet * q ** ((p - 2.0) / 2.0) * (ginv @ v)


def energy_density(A: FluxField, x, v) -> float:
    """The density <A(x,v), v>/p whose Euler-Lagrange equation is the weak
    A-harmonicity identity: |v|^p/p, resp. sqrt(det g)(g^{ij}v_i v_j)^{p/2}/p."""
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    p = A.p
    if A.euclidean:
        return float(np.linalg.norm(v) ** p / p)
    _, ginv, sdet = A.metric.tensors(x[None, :])
    q = float(v @ ginv[0] @ v)
    return float(sdet[0]) * q ** (p / 2.0) / p


@dataclass
class AxiomReport:
    """Worst-case numeric check of the four defining flux axioms."""

    homogeneity_violation: float
    monotonicity_margin: float
    alpha_violation: float
    beta_violation: float
    alpha: float
    beta_ell: float
    passed: bool


def check_axioms(A: FluxField, samples, rel_tol: float = 1e-10) -> AxiomReport:
    """samples: iterable of (x, v, w, lam) with v != w, lam != 0."""
    samples = list(samples)
    if not samples:
        raise ValueError("need at least one sample")
    xs = np.array([s[0] for s in samples], dtype=float)
    p = A.p
    if A.euclidean:
        alpha, beta = 1.0, 1.0
        def _flux(x, v):
            return flux_eval(A, x, v)
    else:
        lmin, lmax, sdet = A.metric.eigen_bounds(xs, validate=False)
        with np.errstate(invalid="ignore"):
            alpha = float(np.min(sdet * np.sign(lmin) * np.abs(lmin) ** (p / 2.0)))
            ext = lmax if p >= 2 else lmin
            beta = float(np.max(sdet * lmax * np.abs(ext) ** ((p - 2.0) / 2.0)))
        if not np.isfinite(alpha):
            alpha = -np.inf

        def _flux(x, v):
            v = np.asarray(v, dtype=float)
            _, ginv, sd = A.metric.tensors(np.asarray(x, float)[None, :], validate=False)
            q = float(v @ ginv[0] @ v)
            if q == 0.0:
                return np.zeros_like(v)
            with np.errstate(invalid="ignore"):
                return float(sd[0]) * np.sign(q) * abs(q) ** ((p - 2.0) / 2.0) * (ginv[0] @ v)

    hom = 0.0
    mono = np.inf
    a_viol = 0.0
    b_viol = 0.0
    for x, v, w, lam in samples:
        v = np.asarray(v, dtype=float)
        w = np.asarray(w, dtype=float)
        lam = float(lam)
        if lam == 0.0 or np.allclose(v, w):
            raise ValueError("samples must have lam != 0 and v != w")
        Av = _flux(x, v)
        Aw = _flux(x, w)
        # (2) homogeneity
        lhs = _flux(x, lam * v)
        if not (np.all(np.isfinite(Av)) and np.all(np.isfinite(Aw))
                and np.all(np.isfinite(lhs))):
            # a degenerate coefficient field (e.g. negative determinant)
            # is an axiom failure, not an evaluation error
            mono = -np.inf
            continue
        rhs = lam * abs(lam) ** (p - 2.0) * Av
        scale = np.linalg.norm(rhs) + 1e-300
        hom = max(hom, float(np.linalg.norm(lhs - rhs) / scale))
        # (3) strict monotonicity, normalized by |v - w|^p
        d = v - w
        m = float((Av - Aw) @ d) / (np.linalg.norm(d) ** p + 1e-300)
        mono = min(mono, m)
        # (4) two-sided ellipticity
        nv = np.linalg.norm(v)
        if nv > 0:
            low = alpha * nv ** p
            a_viol = max(a_viol, max(0.0, (low - float(Av @ v)) / (low + 1e-300)))
            up = beta * nv ** (p - 1.0)
            b_viol = max(b_viol, max(0.0, (np.linalg.norm(Av) - up) / (up + 1e-300)))
    passed = (hom <= rel_tol and mono > 0.0
              and a_viol <= rel_tol and b_viol <= rel_tol)
    return AxiomReport(hom, mono, a_viol, b_viol, alpha, beta, passed)
